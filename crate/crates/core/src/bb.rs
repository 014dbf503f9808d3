//! LP-based branch-and-bound for [`MilpModel`]s.
//!
//! Nodes are explored best-bound first; after each branching the child on
//! the rounding side of the branching variable is processed immediately
//! (plunging) until the dive ends. A warm start becomes the first incumbent.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::clock::Clock;
use crate::lp::{Basis, LpStatus, LpTolerances, Simplex};
use crate::reform::{MilpModel, ModelSolution, Role};
use crate::{Error, Result};

/// How the branching binary is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Branching {
    /// Most fractional binary, ties to the lowest column.
    MostFractional,
    /// Binary of the pair with the largest `min(y_i, z_i)` in the relaxation,
    /// falling back to most fractional.
    Complementarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NodeSelection {
    BestBoundPlunge,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BbConfig {
    /// Seconds; `f64::INFINITY` for no limit.
    pub time_limit: f64,
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub int_tol: f64,
    pub node_limit: Option<usize>,
    pub branching: Branching,
    pub node_selection: NodeSelection,
    /// Tolerance used when checking warm starts.
    pub feas_tol: f64,
}

impl Default for BbConfig {
    fn default() -> Self {
        Self {
            time_limit: f64::INFINITY,
            rel_gap: 1e-6,
            abs_gap: 1e-9,
            int_tol: 1e-6,
            node_limit: None,
            branching: Branching::MostFractional,
            node_selection: NodeSelection::BestBoundPlunge,
            feas_tol: 1e-6,
        }
    }
}

impl BbConfig {
    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = seconds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0;
        if !(positive(self.time_limit) && self.rel_gap >= 0.0 && self.abs_gap >= 0.0 && positive(self.int_tol)) {
            return Err(Error::InvalidConfig(format!("{self:?}")));
        }
        if self.node_limit == Some(0) {
            return Err(Error::InvalidConfig("node_limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MilpStatus {
    Optimal,
    FeasibleTimeLimit,
    Infeasible,
    Unbounded,
    NoIncumbentTimeLimit,
}

impl MilpStatus {
    pub fn has_incumbent(self) -> bool {
        matches!(self, MilpStatus::Optimal | MilpStatus::FeasibleTimeLimit)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MilpStatus::Optimal => "Optimal",
            MilpStatus::FeasibleTimeLimit => "FeasibleTimeLimit",
            MilpStatus::Infeasible => "Infeasible",
            MilpStatus::Unbounded => "Unbounded",
            MilpStatus::NoIncumbentTimeLimit => "NoIncumbentTimeLimit",
        }
    }
}

/// One record per incumbent improvement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IncumbentEvent {
    pub time: f64,
    pub objective: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: MilpStatus,
    pub incumbent: Option<ModelSolution>,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
    pub wall_time: f64,
    pub events: Vec<IncumbentEvent>,
}

/// Anything that can solve a MILP under a time limit.
pub trait MilpEngine {
    fn solve(&mut self, model: &MilpModel, warm_start: Option<&ModelSolution>, time_limit: f64) -> Result<SolveOutcome>;
}

/// The branch-and-bound engine with a fixed configuration and clock.
#[derive(Debug, Clone)]
pub struct BbEngine<C: Clock> {
    pub config: BbConfig,
    pub clock: C,
}

impl<C: Clock> BbEngine<C> {
    pub fn new(config: BbConfig, clock: C) -> Self {
        Self { config, clock }
    }
}

impl<C: Clock> MilpEngine for BbEngine<C> {
    fn solve(&mut self, model: &MilpModel, warm_start: Option<&ModelSolution>, time_limit: f64) -> Result<SolveOutcome> {
        let mut cfg = self.config;
        cfg.time_limit = cfg.time_limit.min(time_limit);
        solve_milp(model, warm_start, &cfg, &self.clock)
    }
}

/// True iff `candidate` satisfies rows, bounds and integrality within `tol`.
pub fn check_warm_start(model: &MilpModel, candidate: &ModelSolution, tol: f64) -> Result<bool> {
    Ok(model.max_violation(&candidate.values)? <= tol)
}

/// `(inc - bound) / max(|inc|, 1e-10)`, or infinity without an incumbent.
pub fn relative_gap(incumbent: Option<f64>, bound: f64) -> f64 {
    match incumbent {
        None => f64::INFINITY,
        Some(v) => ((v - bound) / v.abs().max(1e-10)).max(0.0),
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    /// Per binary: -1 free, 0 or 1 fixed.
    fix: Vec<i8>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one explored next.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a, C: Clock> {
    model: &'a MilpModel,
    cfg: &'a BbConfig,
    clock: &'a C,
    start: f64,
    lp: Simplex,
    binaries: Vec<usize>,
    /// For each binary, the `(y, z)` columns of its pair when known.
    pair_cols: Vec<Option<(usize, usize)>>,
    incumbent: Option<ModelSolution>,
    events: Vec<IncumbentEvent>,
    nodes: usize,
    seq: usize,
}

impl<'a, C: Clock> Search<'a, C> {
    fn elapsed(&self) -> f64 {
        self.clock.now() - self.start
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some(inc) => inc.objective - self.cfg.abs_gap.max(self.cfg.rel_gap * inc.objective.abs()),
        }
    }

    fn apply(&mut self, fix: &[i8]) {
        for (b, &f) in fix.iter().enumerate() {
            let j = self.binaries[b];
            let (lo, up) = match f {
                0 => (0.0, 0.0),
                1 => (1.0, 1.0),
                _ => (self.model.columns[j].lower, self.model.columns[j].upper),
            };
            if self.lp.bounds(j) != (lo, up) {
                self.lp.set_bounds(j, lo, up);
            }
        }
    }

    fn choose_branch(&self, x: &[f64]) -> Option<usize> {
        let tol = self.cfg.int_tol;
        let mut best = None;
        let mut best_score = -1.0;
        if self.cfg.branching == Branching::Complementarity {
            for (b, &j) in self.binaries.iter().enumerate() {
                let frac = (x[j] - libm::floor(x[j])).min(libm::ceil(x[j]) - x[j]);
                if frac <= tol {
                    continue;
                }
                if let Some((yc, zc)) = self.pair_cols[b] {
                    let score = x[yc].min(x[zc]);
                    if score > best_score {
                        best_score = score;
                        best = Some(b);
                    }
                }
            }
            if best.is_some() && best_score > tol {
                return best;
            }
            best = None;
            best_score = -1.0;
        }
        for (b, &j) in self.binaries.iter().enumerate() {
            let frac = (x[j] - libm::floor(x[j])).min(libm::ceil(x[j]) - x[j]);
            if frac > tol && frac > best_score {
                best_score = frac;
                best = Some(b);
            }
        }
        best
    }

    /// Rounds binaries, re-solves the LP with them fixed and clamps the
    /// result to the column bounds.
    fn polish(&mut self, x: &[f64], fix: &[i8]) -> Result<Option<ModelSolution>> {
        let mut rounded: Vec<i8> = fix.to_vec();
        for (b, &j) in self.binaries.iter().enumerate() {
            rounded[b] = if x[j] >= 0.5 { 1 } else { 0 };
        }
        let basis = self.lp.basis();
        self.apply(&rounded);
        let sol = self.lp.solve()?;
        let out = if sol.status == LpStatus::Optimal {
            let mut values = sol.x;
            for (v, c) in values.iter_mut().zip(&self.model.columns) {
                *v = v.clamp(c.lower, c.upper);
            }
            for (b, &j) in self.binaries.iter().enumerate() {
                values[j] = f64::from(rounded[b]);
            }
            let cand = self.model.solution(values);
            if self.model.max_violation(&cand.values)? <= self.cfg.feas_tol {
                Some(cand)
            } else {
                None
            }
        } else {
            None
        };
        self.apply(fix);
        self.lp.set_basis(&basis);
        Ok(out)
    }

    fn offer(&mut self, cand: ModelSolution, bound: f64) {
        let better = match &self.incumbent {
            None => true,
            Some(inc) => cand.objective < inc.objective - 1e-12 * inc.objective.abs().max(1.0),
        };
        if better {
            let bound = bound.min(cand.objective);
            self.events.push(IncumbentEvent {
                time: self.elapsed(),
                objective: cand.objective,
                bound,
            });
            self.incumbent = Some(cand);
        }
    }
}

/// Solves `model` by branch-and-bound.
pub fn solve_milp<C: Clock>(
    model: &MilpModel,
    warm_start: Option<&ModelSolution>,
    cfg: &BbConfig,
    clock: &C,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    model.validate()?;
    let start = clock.now();
    let binaries = model.binary_columns();
    let pair_cols = binaries
        .iter()
        .map(|&j| match model.columns[j].role {
            Role::W(i) | Role::WComplement(i) => {
                model.find_role(Role::Y(i)).zip(model.find_role(Role::Z(i)))
            }
            _ => None,
        })
        .collect();
    let mut search = Search {
        model,
        cfg,
        clock,
        start,
        lp: Simplex::new(&model.relaxation(), LpTolerances::default())?,
        binaries,
        pair_cols,
        incumbent: None,
        events: Vec::new(),
        nodes: 0,
        seq: 0,
    };

    if let Some(ws) = warm_start {
        if !check_warm_start(model, ws, cfg.feas_tol)? {
            return Err(Error::InvalidWarmStart(format!(
                "violation {:.3e} exceeds {:.1e}",
                model.max_violation(&ws.values)?,
                cfg.feas_tol
            )));
        }
        let cand = model.solution(ws.values.clone());
        search.offer(cand, f64::NEG_INFINITY);
    }

    let nb = search.binaries.len();
    let mut heap = BinaryHeap::new();
    let mut stack: Vec<Node> = Vec::new();
    let mut plunge: Option<Node> = Some(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        fix: vec![-1; nb],
        basis: None,
    });
    let mut stopped = false;
    let mut unbounded = false;

    loop {
        let node = match plunge.take() {
            Some(n) => n,
            None => match stack.pop().or_else(|| heap.pop()) {
                Some(n) => n,
                None => break,
            },
        };
        if node.bound >= search.cutoff() {
            continue;
        }
        let over_nodes = cfg.node_limit.is_some_and(|l| search.nodes >= l);
        if over_nodes || search.elapsed() >= cfg.time_limit {
            stack.push(node);
            stopped = true;
            break;
        }
        search.apply(&node.fix);
        if let Some(b) = &node.basis {
            search.lp.set_basis(b);
        }
        let sol = search.lp.solve()?;
        search.nodes += 1;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                unbounded = true;
                break;
            }
            LpStatus::Optimal => {}
        }
        let bound = sol.objective.max(node.bound);
        if bound >= search.cutoff() {
            continue;
        }
        match search.choose_branch(&sol.x) {
            None => {
                let global = heap
                    .iter()
                    .chain(&stack)
                    .map(|n| n.bound)
                    .fold(bound, f64::min);
                if let Some(cand) = search.polish(&sol.x, &node.fix)? {
                    search.offer(cand, global);
                }
            }
            Some(b) => {
                let j = search.binaries[b];
                let up_first = sol.x[j] >= 0.5;
                let mut children = Vec::with_capacity(2);
                for v in [0i8, 1] {
                    let mut fix = node.fix.clone();
                    fix[b] = v;
                    search.seq += 1;
                    children.push(Node {
                        bound,
                        depth: node.depth + 1,
                        seq: search.seq,
                        fix,
                        basis: Some(sol.basis.clone()),
                    });
                }
                let (first, second) = if up_first {
                    let up = children.pop().unwrap();
                    (up, children.pop().unwrap())
                } else {
                    let up = children.pop().unwrap();
                    (children.pop().unwrap(), up)
                };
                match cfg.node_selection {
                    NodeSelection::BestBoundPlunge => heap.push(second),
                    NodeSelection::DepthFirst => stack.push(second),
                }
                plunge = Some(first);
            }
        }
    }

    let wall_time = search.elapsed();
    let nodes_explored = search.nodes;
    let inc_obj = search.incumbent.as_ref().map(|s| s.objective);
    if unbounded {
        return Ok(SolveOutcome {
            status: MilpStatus::Unbounded,
            incumbent: search.incumbent,
            best_bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes_explored,
            wall_time,
            events: search.events,
        });
    }
    let open_bound = heap
        .iter()
        .chain(&stack)
        .map(|n| n.bound)
        .chain(plunge.iter().map(|n| n.bound))
        .fold(f64::INFINITY, f64::min);
    let (status, best_bound) = match (stopped, inc_obj) {
        (false, Some(v)) => (MilpStatus::Optimal, v.min(open_bound)),
        (false, None) => (MilpStatus::Infeasible, f64::INFINITY),
        (true, Some(v)) => {
            let b = v.min(open_bound);
            if relative_gap(Some(v), b) <= cfg.rel_gap || v - b <= cfg.abs_gap {
                (MilpStatus::Optimal, b)
            } else {
                (MilpStatus::FeasibleTimeLimit, b)
            }
        }
        (true, None) => (MilpStatus::NoIncumbentTimeLimit, open_bound),
    };
    let gap = relative_gap(inc_obj, best_bound);
    Ok(SolveOutcome {
        status,
        incumbent: search.incumbent,
        best_bound,
        gap,
        nodes_explored,
        wall_time,
        events: search.events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FrozenClock;
    use crate::lp::{solve_lp, RowSense};
    use crate::reform::VarKind;
    use alloc::string::ToString;

    fn knapsack() -> MilpModel {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11
        let mut m = MilpModel::new();
        for (name, cost) in [("a", -5.0), ("b", -4.0), ("c", -3.0)] {
            m.add_column(name.to_string(), 0.0, 1.0, VarKind::Binary, Role::Aux, cost);
        }
        m.add_row("r0".into(), vec![(0, 2.0), (1, 3.0), (2, 1.0)], RowSense::Le, 5.0);
        m.add_row("r1".into(), vec![(0, 4.0), (1, 1.0), (2, 2.0)], RowSense::Le, 11.0);
        m
    }

    #[test]
    fn small_knapsack() {
        let out = solve_milp(&knapsack(), None, &BbConfig::default(), &FrozenClock).unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.incumbent.unwrap().objective + 9.0).abs() < 1e-9);
        assert_eq!(out.gap, 0.0);
    }

    #[test]
    fn continuous_model_equals_lp() {
        let mut m = MilpModel::new();
        m.add_column("x".into(), 0.0, 10.0, VarKind::Continuous, Role::Aux, 1.0);
        m.add_row("r".into(), vec![(0, 1.0)], RowSense::Ge, 3.0);
        let out = solve_milp(&m, None, &BbConfig::default(), &FrozenClock).unwrap();
        let lp = solve_lp(&m.relaxation(), None).unwrap();
        assert_eq!(out.incumbent.unwrap().objective, lp.objective);
        assert_eq!(out.nodes_explored, 1);
    }

    #[test]
    fn infeasible_binaries() {
        let mut m = MilpModel::new();
        m.add_column("a".into(), 0.0, 1.0, VarKind::Binary, Role::Aux, 0.0);
        m.add_row("r".into(), vec![(0, 2.0)], RowSense::Eq, 1.0);
        let out = solve_milp(&m, None, &BbConfig::default(), &FrozenClock).unwrap();
        assert_eq!(out.status, MilpStatus::Infeasible);
    }

    #[test]
    fn warm_start_is_checked() {
        let m = knapsack();
        let bad = m.solution(vec![0.5, 0.0, 0.0]);
        assert!(!check_warm_start(&m, &bad, 1e-6).unwrap());
        assert!(matches!(
            solve_milp(&m, Some(&bad), &BbConfig::default(), &FrozenClock),
            Err(Error::InvalidWarmStart(_))
        ));
        let good = m.solution(vec![1.0, 0.0, 1.0]);
        let out = solve_milp(&m, Some(&good), &BbConfig::default(), &FrozenClock).unwrap();
        assert_eq!(out.events[0].objective, -8.0);
        assert!(out.incumbent.unwrap().objective <= -8.0);
    }

    #[test]
    fn node_limit_stops_with_incumbent_from_warm_start() {
        let m = knapsack();
        let good = m.solution(vec![1.0, 0.0, 1.0]);
        let cfg = BbConfig {
            node_limit: Some(1),
            ..BbConfig::default()
        };
        let out = solve_milp(&m, Some(&good), &cfg, &FrozenClock).unwrap();
        assert!(out.status.has_incumbent());
        assert!(out.best_bound <= out.incumbent.unwrap().objective + 1e-9);
    }

    #[test]
    fn config_is_validated() {
        let cfg = BbConfig {
            time_limit: 0.0,
            ..BbConfig::default()
        };
        assert!(solve_milp(&knapsack(), None, &cfg, &FrozenClock).is_err());
    }
}
