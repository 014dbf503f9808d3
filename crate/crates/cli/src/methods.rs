//! Running one method on one instance.
//!
//! Method tags: `pip:<p_max>`, `fmip`, `fmip-w`, `oracle`, `stationary`.
//! Every method reports the LPCC objective of its point, so rows of one
//! instance are comparable. Times cover formulation and initialization.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use lpcc_core::bb::{BbConfig, BbEngine, MilpEngine};
use lpcc_core::clock::StdClock;
use lpcc_core::gen::Stqp;
use lpcc_core::lp::{phase1_feasible, LpModel, LpStatus, RowSense};
use lpcc_core::model::{check_feasible, evaluate_objective, PointTriple, DEFAULT_POSITIVITY_TOL};
use lpcc_core::oracle::enumerate_global;
use lpcc_core::pip::{run_pip_from, InitMode, PipConfig, START_FEAS_TOL};
use lpcc_core::qp::{stationary_point, QpInstance};
use lpcc_core::reform::{build_full_milp, embed_triple, extract_triple};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::instance::{Family, Instance};
use crate::records::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Pip(f64),
    Fmip,
    FmipWarm,
    Oracle,
    Stationary,
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fmip" => Ok(Method::Fmip),
            "fmip-w" => Ok(Method::FmipWarm),
            "oracle" => Ok(Method::Oracle),
            "stationary" => Ok(Method::Stationary),
            _ => {
                let p = s
                    .strip_prefix("pip:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| CliError::Config(format!("unknown method {s:?}")))?;
                PipConfig::with_p_max(p)
                    .validate()
                    .map_err(|e| CliError::Config(format!("{s}: {e}")))?;
                Ok(Method::Pip(p))
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Pip(p) => write!(f, "pip:{p}"),
            Method::Fmip => f.write_str("fmip"),
            Method::FmipWarm => f.write_str("fmip-w"),
            Method::Oracle => f.write_str("oracle"),
            Method::Stationary => f.write_str("stationary"),
        }
    }
}

/// Budgets and tolerance overrides shared by every cell of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Seconds for `fmip` / `fmip-w`.
    pub time_limit: f64,
    /// Seconds per PIP subproblem.
    pub sub_time_limit: f64,
    /// Seconds of full-MILP search used to find a PIP start when the
    /// instance has neither a start point nor a QP.
    pub init_budget: f64,
    pub rel_gap: f64,
    pub int_tol: f64,
    pub positivity_tol: f64,
    /// Solve a terminal local-optimality certificate after PIP.
    pub certify: bool,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            time_limit: 60.0,
            sub_time_limit: 60.0,
            init_budget: 10.0,
            rel_gap: 1e-6,
            int_tol: 1e-6,
            positivity_tol: DEFAULT_POSITIVITY_TOL,
            certify: false,
        }
    }
}

impl Budgets {
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |v: f64| v > 0.0;
        if !positive(self.time_limit) || !positive(self.sub_time_limit) || !positive(self.init_budget) {
            return Err(CliError::Config("time budgets must be positive".into()));
        }
        self.bb_config().validate()?;
        Ok(())
    }

    pub fn bb_config(&self) -> BbConfig {
        BbConfig {
            rel_gap: self.rel_gap,
            int_tol: self.int_tol,
            ..BbConfig::default()
        }
    }

    fn engine(&self) -> BbEngine<StdClock> {
        BbEngine::new(self.bb_config(), StdClock::default())
    }
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceLine {
    /// One PIP subproblem.
    Pip {
        iteration: usize,
        p: f64,
        r: usize,
        n_y_plus: usize,
        n_z_plus: usize,
        n_c: usize,
        status: String,
        objective: Option<f64>,
        warm_started: bool,
        nodes: usize,
        time: f64,
    },
    /// One incumbent improvement of a full MILP solve. `bound` is `null`
    /// when no bound was known yet.
    Incumbent { time: f64, objective: f64, bound: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub point: Option<PointTriple>,
    pub trace: Vec<TraceLine>,
}

/// A feasible point of the instance's QP, for starting the stationary solver.
fn qp_feasible_point(qp: &QpInstance, family: Family) -> Result<Vec<f64>, CliError> {
    if family == Family::Stqp || family == Family::Qap {
        // barycenter of the simplex / of the assignment polytope
        let n = qp.n();
        let share = match family {
            Family::Stqp => 1.0 / n as f64,
            _ => 1.0 / (n as f64).sqrt().round(),
        };
        return Ok(vec![share; n]);
    }
    let mut lp = LpModel::new(vec![0.0; qp.n()], vec![f64::NEG_INFINITY; qp.n()], vec![f64::INFINITY; qp.n()]);
    for i in 0..qp.m() {
        lp.add_row(qp.d_mat.row(i), RowSense::Ge, qp.d[i]);
    }
    let sol = phase1_feasible(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(lpcc_core::Error::Infeasible.into());
    }
    Ok(sol.x)
}

/// The stationary point of the instance QP as an LPCC point, with the
/// solver's convergence flag.
pub fn stationary_start(inst: &Instance) -> Result<(PointTriple, bool), CliError> {
    let qp = inst
        .file
        .qp
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{}: no QP attached, `stationary` needs one", inst.id())))?;
    let x0 = qp_feasible_point(qp, inst.file.family)?;
    let r = stationary_point(qp, &x0, 1e-9, 100_000)?;
    let point = if inst.file.family == Family::Stqp {
        Stqp::from_qp(qp)?.lpcc_point(&r.triple)?
    } else {
        r.triple.to_point()
    };
    Ok((point, r.converged))
}

/// The point PIP and `fmip-w` start from: the stored start, else the
/// stationary point of the attached QP. `None` when neither is available
/// or the point violates the LPCC (e.g. multipliers above the pair bound).
pub fn warm_start_point(inst: &Instance) -> Result<Option<PointTriple>, CliError> {
    let candidate = match (&inst.file.start, &inst.file.qp) {
        (Some(s), _) => s.clone(),
        (None, Some(_)) => stationary_start(inst)?.0,
        (None, None) => return Ok(None),
    };
    let ok = check_feasible(&inst.lpcc, &candidate)?.is_feasible(START_FEAS_TOL);
    Ok(ok.then_some(candidate))
}

fn record(inst: &Instance, method: Method, status: &str, objective: Option<f64>, start: Instant) -> RunRecord {
    RunRecord {
        instance: inst.id().to_string(),
        method: method.to_string(),
        status: status.to_string(),
        objective,
        time_s: start.elapsed().as_secs_f64(),
        nodes: None,
        gap: None,
        trace: None,
    }
}

/// Runs `method`; solver failures become an `error: ...` status rather than
/// an `Err`.
pub fn run_method(inst: &Instance, method: Method, budgets: &Budgets) -> RunOutcome {
    let start = Instant::now();
    match try_run(inst, method, budgets, start) {
        Ok(out) => out,
        Err(e) => RunOutcome {
            record: record(inst, method, &format!("error: {e}"), None, start),
            point: None,
            trace: Vec::new(),
        },
    }
}

fn try_run(inst: &Instance, method: Method, budgets: &Budgets, start: Instant) -> Result<RunOutcome, CliError> {
    let lpcc = &inst.lpcc;
    match method {
        Method::Stationary => {
            let (point, converged) = stationary_start(inst)?;
            let obj = evaluate_objective(lpcc, &point)?;
            let status = if converged { "Stationary" } else { "NotConverged" };
            Ok(RunOutcome {
                record: record(inst, method, status, Some(obj), start),
                point: Some(point),
                trace: Vec::new(),
            })
        }
        Method::Oracle => {
            let g = enumerate_global(lpcc, inst.file.oracle_scope.as_deref())?;
            let mut rec = record(inst, method, "Optimal", Some(g.objective), start);
            rec.gap = Some(0.0);
            Ok(RunOutcome {
                record: rec,
                point: Some(g.triple),
                trace: Vec::new(),
            })
        }
        Method::Fmip | Method::FmipWarm => {
            let model = build_full_milp(lpcc)?;
            let warm = if method == Method::FmipWarm {
                match warm_start_point(inst)? {
                    Some(p) => Some(embed_triple(&model, &p)?),
                    None => None,
                }
            } else {
                None
            };
            let out = budgets.engine().solve(&model, warm.as_ref(), budgets.time_limit)?;
            let point = match &out.incumbent {
                Some(sol) => Some(extract_triple(&model, sol)?),
                None => None,
            };
            let objective = match &point {
                Some(p) => Some(evaluate_objective(lpcc, p)?),
                None => None,
            };
            let mut rec = record(inst, method, out.status.as_str(), objective, start);
            rec.nodes = Some(out.nodes_explored);
            rec.gap = out.status.has_incumbent().then_some(out.gap);
            let trace = out
                .events
                .iter()
                .map(|e| TraceLine::Incumbent {
                    time: e.time,
                    objective: e.objective,
                    bound: e.bound.is_finite().then_some(e.bound),
                })
                .collect();
            Ok(RunOutcome {
                record: rec,
                point,
                trace,
            })
        }
        Method::Pip(p_max) => {
            let cfg = PipConfig {
                sub_time_limit: Some(budgets.sub_time_limit),
                certify_final: budgets.certify,
                certify_time_limit: budgets.sub_time_limit,
                positivity_tol: budgets.positivity_tol,
                ..PipConfig::with_p_max(p_max)
            };
            let mode = match warm_start_point(inst)? {
                Some(p) => InitMode::GivenTriple(p),
                None => InitMode::IncumbentFromFmip {
                    budget: budgets.init_budget,
                },
            };
            let mut engine = budgets.engine();
            let res = run_pip_from(lpcc, &mode, &cfg, &mut engine, &StdClock::default())?;
            let status = match res.certificate {
                None => "Completed".to_string(),
                Some(c) => format!("Completed/{c:?}"),
            };
            let mut rec = record(inst, method, &status, Some(res.objective), start);
            rec.nodes = Some(res.trace.iterations.iter().map(|it| it.nodes).sum());
            let trace = res
                .trace
                .iterations
                .iter()
                .map(|it| TraceLine::Pip {
                    iteration: it.iteration,
                    p: it.p,
                    r: it.r,
                    n_y_plus: it.n_y_plus,
                    n_z_plus: it.n_z_plus,
                    n_c: it.n_c,
                    status: it.status.as_str().to_string(),
                    objective: it.objective,
                    warm_started: it.warm_started,
                    nodes: it.nodes,
                    time: it.time,
                })
                .collect();
            Ok(RunOutcome {
                record: rec,
                point: Some(res.triple),
                trace,
            })
        }
    }
}
