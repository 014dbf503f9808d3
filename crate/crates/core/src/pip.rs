//! Progressive integer programming: repeatedly solve partial MILPs in which a
//! shrinking proportion `p` of the positive complementarity entries of the
//! current point is pinned, warm-started at that point.

use alloc::format;
use alloc::vec::Vec;

use crate::bb::{MilpEngine, MilpStatus};
use crate::clock::Clock;
use crate::math::ceil;
use crate::model::{
    check_feasible, complement_partition, evaluate_objective, maximal_partition, LpccInstance, PointTriple,
    DEFAULT_POSITIVITY_TOL,
};
use crate::reform::{build_full_milp, build_partial_milp, embed_triple, extract_triple};
use crate::{Error, Result};

/// Objective change below which a subproblem counts as "no improvement".
pub const IMPROVEMENT_TOL: f64 = 1e-9;
/// Feasibility tolerance for given starting triples.
pub const START_FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipConfig {
    pub p_max: f64,
    pub r_max: usize,
    pub p0: f64,
    pub alpha: f64,
    /// Seconds per subproblem; `None` picks 60 s below 900 pairs, else 600 s.
    pub sub_time_limit: Option<f64>,
    pub certify_final: bool,
    /// Time budget for the terminal certificate.
    pub certify_time_limit: f64,
    pub positivity_tol: f64,
}

impl Default for PipConfig {
    fn default() -> Self {
        Self {
            p_max: 0.9,
            r_max: 3,
            p0: 0.8,
            alpha: 0.1,
            sub_time_limit: None,
            certify_final: false,
            certify_time_limit: f64::INFINITY,
            positivity_tol: DEFAULT_POSITIVITY_TOL,
        }
    }
}

impl PipConfig {
    pub fn with_p_max(p_max: f64) -> Self {
        Self {
            p_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("{what} in {self:?}")));
        if !(self.p_max > 0.0 && self.p_max < 1.0) {
            return bad("p_max outside (0,1)");
        }
        if !(self.p0 > 1.0 - self.p_max && self.p0 < 1.0) {
            return bad("p0 outside (1-p_max, 1)");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha outside (0,1)");
        }
        if self.r_max == 0 {
            return bad("r_max is zero");
        }
        if self.sub_time_limit.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return bad("non-positive subproblem time limit");
        }
        Ok(())
    }

    /// Number of distinct `p` levels visited at most.
    pub fn levels(&self) -> usize {
        ceil((self.p0 - (1.0 - self.p_max)) / self.alpha - 1e-9) as usize + 1
    }

    /// Upper bound on the number of subproblems.
    pub fn iteration_bound(&self) -> usize {
        self.r_max * self.levels()
    }

    fn sub_limit(&self, m: usize) -> f64 {
        self.sub_time_limit
            .unwrap_or(if m < 900 { 60.0 } else { 600.0 })
    }
}

/// How to obtain the starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    GivenTriple(PointTriple),
    /// Incumbent of the full MILP after `budget` seconds.
    IncumbentFromFmip { budget: f64 },
    /// A possibly infeasible point used only to shape the first partition.
    InfeasibleSeed(PointTriple),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Initialized {
    pub triple: PointTriple,
    /// Whether `triple` is feasible and may warm-start the first subproblem.
    pub accepted: bool,
}

pub fn initialize<E: MilpEngine>(inst: &LpccInstance, mode: &InitMode, engine: &mut E) -> Result<Initialized> {
    inst.validate()?;
    match mode {
        InitMode::GivenTriple(t) => {
            let report = check_feasible(inst, t)?;
            if !report.is_feasible(START_FEAS_TOL) {
                return Err(Error::InvalidWarmStart(format!(
                    "starting triple violates the LPCC by {:.3e}",
                    report.max_violation()
                )));
            }
            Ok(Initialized {
                triple: t.clone(),
                accepted: true,
            })
        }
        InitMode::IncumbentFromFmip { budget } => {
            let model = build_full_milp(inst)?;
            let out = engine.solve(&model, None, *budget)?;
            match out.status {
                MilpStatus::Unbounded => Err(Error::Unbounded),
                MilpStatus::Infeasible => Err(Error::Infeasible),
                _ => {
                    let sol = out.incumbent.ok_or(Error::NoIncumbent)?;
                    Ok(Initialized {
                        triple: extract_triple(&model, &sol)?,
                        accepted: true,
                    })
                }
            }
        }
        InitMode::InfeasibleSeed(t) => {
            if t.x.len() != inst.n() || t.y.len() != inst.m() || t.z.len() != inst.m() {
                return Err(Error::Dimension("seed shape".into()));
            }
            Ok(Initialized {
                triple: t.clone(),
                accepted: false,
            })
        }
    }
}

/// One subproblem of a run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipIteration {
    pub iteration: usize,
    pub p: f64,
    pub r: usize,
    pub n_y_plus: usize,
    pub n_z_plus: usize,
    pub n_c: usize,
    pub status: MilpStatus,
    /// Objective after the subproblem (the kept point's value).
    pub objective: Option<f64>,
    pub warm_started: bool,
    pub nodes: usize,
    /// Seconds since the run started.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipTrace {
    pub iterations: Vec<PipIteration>,
    pub total_time: f64,
}

/// Outcome of the terminal certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Certificate {
    Certified,
    NotCertified,
    /// The engine stopped before proving optimality.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipResult {
    pub triple: PointTriple,
    pub objective: f64,
    pub trace: PipTrace,
    /// Set only when `certify_final` was requested.
    pub certificate: Option<Certificate>,
}

/// `p0 - k * alpha`, snapped to zero when within rounding noise.
fn level(cfg: &PipConfig, k: usize) -> f64 {
    let p = cfg.p0 - k as f64 * cfg.alpha;
    if p.abs() < 1e-12 {
        0.0
    } else {
        p
    }
}

/// Runs the method from `init`.
pub fn run_pip<E: MilpEngine, C: Clock>(
    inst: &LpccInstance,
    init: &Initialized,
    cfg: &PipConfig,
    engine: &mut E,
    clock: &C,
) -> Result<PipResult> {
    cfg.validate()?;
    inst.validate()?;
    let start = clock.now();
    let tol = cfg.positivity_tol;
    let sub_limit = cfg.sub_limit(inst.m());
    let floor_p = 1.0 - cfg.p_max - 1e-12;

    let mut current = init.triple.clone();
    let mut accepted = init.accepted;
    let mut current_obj = if accepted {
        Some(evaluate_objective(inst, &current)?)
    } else {
        None
    };
    let mut k = 0usize;
    let mut r = 1usize;
    let mut iterations = Vec::new();

    loop {
        let p = level(cfg, k);
        if p < floor_p {
            break;
        }
        let part = complement_partition(&current, p, tol);
        if accepted && !part.respects(&current, tol) {
            return Err(Error::Internal("partition pins a non-positive entry".into()));
        }
        let model = build_partial_milp(inst, &part)?;
        let warm = if accepted {
            let ws = embed_triple(&model, &current)?;
            Some(ws)
        } else {
            None
        };
        let out = engine.solve(&model, warm.as_ref(), sub_limit)?;
        let mut record = PipIteration {
            iteration: iterations.len() + 1,
            p,
            r,
            n_y_plus: part.m_y_plus.len(),
            n_z_plus: part.m_z_plus.len(),
            n_c: part.m_c.len(),
            status: out.status,
            objective: current_obj,
            warm_started: warm.is_some(),
            nodes: out.nodes_explored,
            time: clock.now() - start,
        };
        let step_down = match out.status {
            MilpStatus::Optimal | MilpStatus::FeasibleTimeLimit => {
                let sol = out
                    .incumbent
                    .as_ref()
                    .ok_or_else(|| Error::Internal("status with incumbent but none returned".into()))?;
                let next = extract_triple(&model, sol)?;
                let next_obj = evaluate_objective(inst, &next)?;
                let unchanged = match current_obj {
                    Some(v) => {
                        if next_obj > v + IMPROVEMENT_TOL * v.abs().max(1.0) {
                            return Err(Error::Internal(format!(
                                "warm-started subproblem worsened the objective: {v} -> {next_obj}"
                            )));
                        }
                        (v - next_obj).abs() <= IMPROVEMENT_TOL
                    }
                    None => false,
                };
                current = next;
                current_obj = Some(next_obj);
                accepted = true;
                record.objective = current_obj;
                unchanged || r >= cfg.r_max
            }
            MilpStatus::Infeasible | MilpStatus::NoIncumbentTimeLimit if !accepted => {
                // the seed's partition admits no feasible point: loosen it
                true
            }
            MilpStatus::Unbounded => return Err(Error::Unbounded),
            MilpStatus::Infeasible | MilpStatus::NoIncumbentTimeLimit => {
                return Err(Error::Internal(format!(
                    "warm-started subproblem returned {}",
                    out.status.as_str()
                )))
            }
        };
        iterations.push(record);
        if step_down {
            r = 1;
            k += 1;
        } else {
            r += 1;
        }
    }

    let objective = current_obj.ok_or(Error::NoIncumbent)?;
    debug_assert!(iterations.len() <= cfg.iteration_bound());
    let certificate = if cfg.certify_final {
        Some(certify_local_min(inst, &current, engine, cfg.certify_time_limit)?)
    } else {
        None
    };
    Ok(PipResult {
        triple: current,
        objective,
        trace: PipTrace {
            iterations,
            total_time: clock.now() - start,
        },
        certificate,
    })
}

/// Convenience wrapper: [`initialize`] then [`run_pip`].
pub fn run_pip_from<E: MilpEngine, C: Clock>(
    inst: &LpccInstance,
    mode: &InitMode,
    cfg: &PipConfig,
    engine: &mut E,
    clock: &C,
) -> Result<PipResult> {
    let init = initialize(inst, mode, engine)?;
    run_pip(inst, &init, cfg, engine, clock)
}

/// Pins every positive entry of `triple` and solves the remaining MILP. The
/// triple is a local minimizer of the LPCC when nothing better exists there.
pub fn certify_local_min<E: MilpEngine>(
    inst: &LpccInstance,
    triple: &PointTriple,
    engine: &mut E,
    time_limit: f64,
) -> Result<Certificate> {
    let report = check_feasible(inst, triple)?;
    if !report.is_feasible(START_FEAS_TOL) {
        return Err(Error::InvalidInstance(format!(
            "triple violates the LPCC by {:.3e}",
            report.max_violation()
        )));
    }
    let part = maximal_partition(triple, DEFAULT_POSITIVITY_TOL);
    let model = build_partial_milp(inst, &part)?;
    let value = evaluate_objective(inst, triple)?;
    let warm = embed_triple(&model, triple)?;
    let out = engine.solve(&model, Some(&warm), time_limit)?;
    let best = out.incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective);
    Ok(match out.status {
        MilpStatus::Optimal => {
            if best >= value - 1e-8 {
                Certificate::Certified
            } else {
                Certificate::NotCertified
            }
        }
        MilpStatus::Unbounded => Certificate::NotCertified,
        _ if best < value - 1e-8 => Certificate::NotCertified,
        _ => Certificate::Indeterminate,
    })
}
