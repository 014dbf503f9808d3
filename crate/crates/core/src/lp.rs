//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a logical variable `r_i` so the working system is
//! `A x - r = 0` with `r_i` bounded by the row sense and right-hand side.
//! The basis inverse is kept explicitly (dense) and updated with eta
//! transformations; it is rebuilt from scratch every
//! [`LpTolerances::refactor_every`] pivots. Phase 1 minimizes the sum of
//! bound infeasibilities of the basic variables (composite costs recomputed
//! every iteration). Pricing is Devex with a Bland fallback once
//! [`LpTolerances::stall_limit`] consecutive degenerate pivots are seen.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::dot;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

/// `minimize objective·x  s.t.  matrix x (senses) rhs,  lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub objective: Vec<f64>,
    pub matrix: Matrix,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpModel {
    /// A model with no rows and the given bounds.
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            matrix: Matrix::zeros(0, n),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn add_row(&mut self, coeffs: &[f64], sense: RowSense, rhs: f64) {
        assert_eq!(coeffs.len(), self.matrix.cols, "row length");
        self.matrix.data.extend_from_slice(coeffs);
        self.matrix.rows += 1;
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_cols();
        let m = self.num_rows();
        if self.matrix.rows != m || self.matrix.cols != n || self.senses.len() != m {
            return Err(Error::Dimension(format!("LP with {m} rows and {n} columns")));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension("LP bound vectors".into()));
        }
        if !self.matrix.is_finite()
            || !self.objective.iter().all(|c| c.is_finite())
            || !self.rhs.iter().all(|b| b.is_finite())
        {
            return Err(Error::InvalidInstance("non-finite LP data".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::InvalidInstance(format!(
                    "column {j} bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpTolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub pivot: f64,
    pub refactor_every: usize,
    pub stall_limit: usize,
    /// `None` means `100 * (rows + cols) + 10_000`.
    pub max_iterations: Option<usize>,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            optimality: 1e-7,
            pivot: 1e-9,
            refactor_every: 100,
            stall_limit: 50,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Per-variable position relative to the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable (held at its current value, normally 0).
    Free,
}

/// Basis descriptor over structural columns followed by one logical per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub states: Vec<VarState>,
}

impl Basis {
    pub fn num_basic(&self) -> usize {
        self.states.iter().filter(|s| **s == VarState::Basic).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural values (meaningful when not `Infeasible`).
    pub x: Vec<f64>,
    /// Row duals `y = c_B B^-1`.
    pub duals: Vec<f64>,
    /// Structural reduced costs `c - A^T y`.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// `sum_j d_j x_j` over nonbasic variables, equal to `objective` at an
    /// optimal basis.
    pub dual_objective: f64,
    pub basis: Basis,
    pub iterations: usize,
}

const CONFIRM_REFACTOR_AFTER: usize = 25;

/// Devex weights above this reset the reference framework.
const DEVEX_RESET: f64 = 1e6;

/// Scale of the bound shifts used to break degenerate stalls.
const PERTURBATION: f64 = 1e-6;

/// Solves `model`, starting from `basis_hint` when it is a valid basis.
pub fn solve_lp(model: &LpModel, basis_hint: Option<&Basis>) -> Result<LpSolution> {
    let mut s = Simplex::new(model, LpTolerances::default())?;
    if let Some(b) = basis_hint {
        s.set_basis(b);
    }
    s.solve()
}

/// Finds any feasible point (the objective is ignored).
pub fn phase1_feasible(model: &LpModel) -> Result<LpSolution> {
    let mut s = Simplex::new(model, LpTolerances::default())?;
    s.solve_feasibility()
}

enum Pricing {
    Optimal,
    Enter { var: usize, dir: f64 },
}

enum Ratio {
    Unbounded,
    Flip { step: f64 },
    Pivot { pos: usize, step: f64, to_upper: bool },
}

/// Reusable simplex state. Bounds can be changed between solves and the last
/// basis is reused as the starting point.
#[derive(Debug, Clone)]
pub struct Simplex {
    n: usize,
    m: usize,
    /// Structural columns, column-major `m x n`.
    cols: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    binv: Vec<f64>,
    x: Vec<f64>,
    weights: Vec<f64>,
    tol: LpTolerances,
    since_refactor: usize,
    needs_refactor: bool,
    values_stale: bool,
    iterations: usize,
    /// Value of `iterations` when the current solve started.
    solve_start: usize,
    /// True bounds while the working bounds are perturbed.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
    perturbed_this_solve: bool,
}

impl Simplex {
    pub fn new(model: &LpModel, tol: LpTolerances) -> Result<Self> {
        model.validate()?;
        let n = model.num_cols();
        let m = model.num_rows();
        let mut cols = vec![0.0; n * m];
        for i in 0..m {
            for (j, &a) in model.matrix.row(i).iter().enumerate() {
                cols[j * m + i] = a;
            }
        }
        let mut cost = model.objective.clone();
        cost.resize(n + m, 0.0);
        let mut lower = model.lower.clone();
        let mut upper = model.upper.clone();
        for i in 0..m {
            let b = model.rhs[i];
            let (l, u) = match model.senses[i] {
                RowSense::Eq => (b, b),
                RowSense::Le => (f64::NEG_INFINITY, b),
                RowSense::Ge => (b, f64::INFINITY),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut s = Self {
            n,
            m,
            cols,
            cost,
            lower,
            upper,
            state: vec![VarState::AtLower; n + m],
            head: (n..n + m).collect(),
            binv: vec![0.0; m * m],
            x: vec![0.0; n + m],
            weights: vec![1.0; n + m],
            tol,
            since_refactor: 0,
            needs_refactor: true,
            values_stale: true,
            iterations: 0,
            solve_start: 0,
            saved_bounds: None,
            perturbed_this_solve: false,
        };
        s.slack_basis();
        Ok(s)
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    fn slack_basis(&mut self) {
        for j in 0..self.n {
            self.state[j] = self.nonbasic_state(j, VarState::AtLower);
        }
        for i in 0..self.m {
            self.state[self.n + i] = VarState::Basic;
        }
        self.head = (self.n..self.n + self.m).collect();
        self.place_nonbasic();
        self.needs_refactor = true;
    }

    /// Picks a legal nonbasic state close to `wanted` given the bounds.
    fn nonbasic_state(&self, j: usize, wanted: VarState) -> VarState {
        let (l, u) = (self.lower[j], self.upper[j]);
        match wanted {
            VarState::AtUpper if u.is_finite() => VarState::AtUpper,
            VarState::AtLower | VarState::AtUpper | VarState::Free | VarState::Basic => {
                if l.is_finite() {
                    VarState::AtLower
                } else if u.is_finite() {
                    VarState::AtUpper
                } else {
                    VarState::Free
                }
            }
        }
    }

    fn place_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            match self.state[j] {
                VarState::AtLower => self.x[j] = self.lower[j],
                VarState::AtUpper => self.x[j] = self.upper[j],
                VarState::Free => {
                    if !self.x[j].is_finite() {
                        self.x[j] = 0.0;
                    }
                }
                VarState::Basic => {}
            }
        }
    }

    /// Installs a basis. Invalid hints (wrong length or basic count) are
    /// ignored; singular ones are repaired with logicals at refactorization.
    pub fn set_basis(&mut self, basis: &Basis) -> bool {
        if basis.states.len() != self.n + self.m || basis.num_basic() != self.m {
            return false;
        }
        let same_basic_set = basis
            .states
            .iter()
            .zip(&self.state)
            .all(|(a, b)| (*a == VarState::Basic) == (*b == VarState::Basic));
        if same_basic_set {
            for (j, &st) in basis.states.iter().enumerate() {
                if st != VarState::Basic {
                    self.state[j] = self.nonbasic_state(j, st);
                }
            }
            self.place_nonbasic();
            self.values_stale = true;
            return true;
        }
        let mut head = Vec::with_capacity(self.m);
        for (j, &st) in basis.states.iter().enumerate() {
            if st == VarState::Basic {
                self.state[j] = VarState::Basic;
                head.push(j);
            } else {
                self.state[j] = self.nonbasic_state(j, st);
            }
        }
        self.head = head;
        self.place_nonbasic();
        self.needs_refactor = true;
        true
    }

    pub fn basis(&self) -> Basis {
        Basis {
            states: self.state.clone(),
        }
    }

    /// Changes the bounds of structural column `j`.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(j < self.n);
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.state[j] != VarState::Basic {
            self.state[j] = self.nonbasic_state(j, self.state[j]);
            if self.state[j] == VarState::Free {
                self.x[j] = 0.0;
            }
            self.place_nonbasic();
        }
        self.values_stale = true;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn set_objective(&mut self, objective: &[f64]) {
        assert_eq!(objective.len(), self.n);
        self.cost[..self.n].copy_from_slice(objective);
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// `v · a_j` for any variable (logicals have column `-e_i`).
    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            dot(self.col(j), v)
        } else {
            -v[j - self.n]
        }
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n {
            let a = self.col(j);
            for (r, o) in out.iter_mut().enumerate() {
                *o = dot(&self.binv[r * m..(r + 1) * m], a);
            }
        } else {
            let i = j - self.n;
            for (r, o) in out.iter_mut().enumerate() {
                *o = -self.binv[r * m + i];
            }
        }
        out
    }

    /// `w^T B^-1`.
    fn btran(&self, w: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (p, &wp) in w.iter().enumerate() {
            if wp != 0.0 {
                for (yi, b) in y.iter_mut().zip(&self.binv[p * m..(p + 1) * m]) {
                    *yi += wp * b;
                }
            }
        }
        y
    }

    fn dense_col(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            self.col(j).to_vec()
        } else {
            let mut v = vec![0.0; self.m];
            v[j - self.n] = -1.0;
            v
        }
    }

    /// Gauss-Jordan inverse of the basis matrix; `None` when singular.
    fn invert(&self) -> Option<Vec<f64>> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (p, &j) in self.head.iter().enumerate() {
            let c = self.dense_col(j);
            for i in 0..m {
                a[i * m + p] = c[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for p in 0..m {
            let mut best = p;
            let mut mag = 0.0;
            for i in p..m {
                let v = a[i * m + p].abs();
                if v > mag {
                    mag = v;
                    best = i;
                }
            }
            if mag < 1e-11 {
                return None;
            }
            if best != p {
                for c in 0..m {
                    a.swap(p * m + c, best * m + c);
                    inv.swap(p * m + c, best * m + c);
                }
            }
            let piv = a[p * m + p];
            for c in 0..m {
                a[p * m + c] /= piv;
                inv[p * m + c] /= piv;
            }
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = a[i * m + p];
                if f != 0.0 {
                    for c in 0..m {
                        a[i * m + c] -= f * a[p * m + c];
                        inv[i * m + c] -= f * inv[p * m + c];
                    }
                }
            }
        }
        Some(inv)
    }

    /// Replaces dependent basic columns by logicals of uncovered rows.
    fn repair_basis(&mut self) {
        let m = self.m;
        let mut used = vec![false; m];
        let mut pivots: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut kept = Vec::with_capacity(m);
        let mut dropped = Vec::new();
        for &j in &self.head {
            let mut v = self.dense_col(j);
            let scale = crate::math::max_abs(&v).max(1.0);
            for (r, pv) in &pivots {
                let f = v[*r] / pv[*r];
                if f != 0.0 {
                    for (a, b) in v.iter_mut().zip(pv) {
                        *a -= f * b;
                    }
                }
            }
            let mut best = None;
            let mut mag = 1e-9 * scale;
            for i in 0..m {
                if !used[i] && v[i].abs() > mag {
                    mag = v[i].abs();
                    best = Some(i);
                }
            }
            match best {
                Some(r) => {
                    used[r] = true;
                    pivots.push((r, v));
                    kept.push(j);
                }
                None => dropped.push(j),
            }
        }
        for j in dropped {
            self.state[j] = self.nonbasic_state(j, VarState::AtLower);
        }
        for i in 0..m {
            if !used[i] {
                let j = self.n + i;
                // the logical might already be basic only if its row was covered
                self.state[j] = VarState::Basic;
                kept.push(j);
            }
        }
        self.head = kept;
        self.place_nonbasic();
    }

    fn refactor(&mut self) -> Result<()> {
        let inv = match self.invert() {
            Some(inv) => inv,
            None => {
                self.repair_basis();
                self.invert()
                    .ok_or_else(|| Error::Numerical("basis singular after repair".into()))?
            }
        };
        self.binv = inv;
        self.since_refactor = 0;
        self.needs_refactor = false;
        self.compute_basic_values();
        Ok(())
    }

    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut v = vec![0.0; m];
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < self.n {
                for (vi, a) in v.iter_mut().zip(self.col(j)) {
                    *vi += a * xj;
                }
            } else {
                v[j - self.n] -= xj;
            }
        }
        for p in 0..m {
            let val = -dot(&self.binv[p * m..(p + 1) * m], &v);
            self.x[self.head[p]] = val;
        }
        self.values_stale = false;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.lower[j] - v).max(v - self.upper[j]).max(0.0)
    }

    fn basic_costs(&self, phase: u8) -> Vec<f64> {
        let ft = self.tol.feasibility;
        self.head
            .iter()
            .map(|&j| {
                if phase == 2 {
                    self.cost[j]
                } else if self.x[j] < self.lower[j] - ft {
                    -1.0
                } else if self.x[j] > self.upper[j] + ft {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn price(&self, phase: u8, y: &[f64], bland: bool) -> Pricing {
        let ot = self.tol.optimality;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if st == VarState::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let c = if phase == 2 { self.cost[j] } else { 0.0 };
            let d = c - self.col_dot(j, y);
            let dir = match st {
                VarState::AtLower if d < -ot => 1.0,
                VarState::AtUpper if d > ot => -1.0,
                VarState::Free if d.abs() > ot => -d.signum(),
                _ => continue,
            };
            if bland {
                return Pricing::Enter { var: j, dir };
            }
            let score = d * d / self.weights[j];
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        match best {
            Some((var, dir)) => Pricing::Enter { var, dir },
            None => Pricing::Optimal,
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase: u8, bland: bool) -> Ratio {
        let ft = self.tol.feasibility;
        let mut best: Option<(usize, f64, bool)> = None;
        let mut best_alpha = 0.0;
        for (p, &a) in alpha.iter().enumerate() {
            if a.abs() <= self.tol.pivot {
                continue;
            }
            let j = self.head[p];
            let rate = -dir * a;
            let (l, u, v) = (self.lower[j], self.upper[j], self.x[j]);
            let (limit, to_upper) = if rate < 0.0 {
                if phase == 1 && v > u + ft {
                    ((v - u) / -rate, true)
                } else if (phase == 1 && v < l - ft) || !l.is_finite() {
                    continue;
                } else {
                    ((v - l).max(0.0) / -rate, false)
                }
            } else if phase == 1 && v < l - ft {
                ((l - v) / rate, false)
            } else if (phase == 1 && v > u + ft) || !u.is_finite() {
                continue;
            } else {
                ((u - v).max(0.0) / rate, true)
            };
            let better = match best {
                None => true,
                Some((bp, bl, _)) => {
                    let tie = (limit - bl).abs() <= 1e-12 * bl.max(1.0);
                    if tie {
                        if bland {
                            j < self.head[bp]
                        } else {
                            a.abs() > best_alpha
                        }
                    } else {
                        limit < bl
                    }
                }
            };
            if better {
                best = Some((p, limit, to_upper));
                best_alpha = a.abs();
            }
        }
        let range = self.upper[q] - self.lower[q];
        match best {
            Some((_, limit, _)) if range.is_finite() && range <= limit => Ratio::Flip { step: range },
            Some((pos, step, to_upper)) => Ratio::Pivot { pos, step, to_upper },
            None if range.is_finite() => Ratio::Flip { step: range },
            None => Ratio::Unbounded,
        }
    }

    fn update_devex(&mut self, q: usize, pos: usize, alpha_q: f64) {
        let m = self.m;
        let rho: Vec<f64> = self.binv[pos * m..(pos + 1) * m].to_vec();
        let wq = self.weights[q];
        let mut overflow = false;
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic || j == q {
                continue;
            }
            let apj = self.col_dot(j, &rho);
            if apj != 0.0 {
                let ratio = apj / alpha_q;
                let cand = ratio * ratio * wq;
                if cand > self.weights[j] {
                    self.weights[j] = cand;
                    overflow |= !(cand <= DEVEX_RESET);
                }
            }
        }
        let leaving = self.head[pos];
        self.weights[leaving] = (wq / (alpha_q * alpha_q)).max(1.0);
        // weights that grow without bound starve pricing (d^2 / w -> 0), so
        // start a fresh reference framework
        if overflow || !(self.weights[leaving] <= DEVEX_RESET) {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    fn eta_update(&mut self, pos: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[pos];
        for c in 0..m {
            self.binv[pos * m + c] /= piv;
        }
        for r in 0..m {
            if r == pos || alpha[r] == 0.0 {
                continue;
            }
            let f = alpha[r];
            for c in 0..m {
                self.binv[r * m + c] -= f * self.binv[pos * m + c];
            }
        }
    }

    fn max_iterations(&self) -> usize {
        self.tol
            .max_iterations
            .unwrap_or(100 * (self.n + self.m) + 10_000)
    }

    /// Runs one phase to completion. Returns the terminal status:
    /// `Optimal` (phase optimal), `Infeasible` (phase 1 stuck) or `Unbounded`.
    fn run_phase(&mut self, phase: u8) -> Result<LpStatus> {
        let mut degenerate_run = 0usize;
        let max_iter = self.max_iterations();
        loop {
            if self.needs_refactor || self.since_refactor >= self.tol.refactor_every {
                self.refactor()?;
            } else if self.values_stale {
                self.compute_basic_values();
            }
            let cb = self.basic_costs(phase);
            if phase == 1 && cb.iter().all(|&c| c == 0.0) {
                return Ok(LpStatus::Optimal);
            }
            if degenerate_run >= self.tol.stall_limit && !self.perturbed_this_solve {
                self.perturb_bounds();
                degenerate_run = 0;
                continue;
            }
            let y = self.btran(&cb);
            let bland = degenerate_run >= self.tol.stall_limit;
            let (q, dir) = match self.price(phase, &y, bland) {
                Pricing::Optimal => {
                    return Ok(if phase == 1 {
                        LpStatus::Infeasible
                    } else {
                        LpStatus::Optimal
                    })
                }
                Pricing::Enter { var, dir } => (var, dir),
            };
            if self.iterations - self.solve_start >= max_iter {
                return Err(Error::Numerical(format!("iteration limit {max_iter} reached")));
            }
            self.iterations += 1;
            let alpha = self.ftran(q);
            match self.ratio_test(q, dir, &alpha, phase, bland) {
                Ratio::Unbounded => {
                    if phase == 1 {
                        return Err(Error::Numerical("unbounded phase-1 ray".into()));
                    }
                    return Ok(LpStatus::Unbounded);
                }
                Ratio::Flip { step } => {
                    self.shift(q, dir, step, &alpha);
                    self.state[q] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                    degenerate_run = 0;
                }
                Ratio::Pivot { pos, step, to_upper } => {
                    if step <= 1e-12 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.shift(q, dir, step, &alpha);
                    let leaving = self.head[pos];
                    let l = self.lower[leaving];
                    let u = self.upper[leaving];
                    if to_upper {
                        self.x[leaving] = u;
                        self.state[leaving] = VarState::AtUpper;
                    } else {
                        self.x[leaving] = l;
                        self.state[leaving] = VarState::AtLower;
                    }
                    if l == u {
                        self.state[leaving] = VarState::AtLower;
                    }
                    self.update_devex(q, pos, alpha[pos]);
                    self.eta_update(pos, &alpha);
                    self.head[pos] = q;
                    self.state[q] = VarState::Basic;
                    self.since_refactor += 1;
                }
            }
        }
    }

    fn shift(&mut self, q: usize, dir: f64, step: f64, alpha: &[f64]) {
        if step == 0.0 {
            return;
        }
        self.x[q] += dir * step;
        for (p, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.head[p];
                self.x[j] -= dir * a * step;
            }
        }
    }

    /// Widens every finite bound by a small, index-dependent amount so that
    /// ties in the ratio test disappear. Undone by `restore_bounds`.
    fn perturb_bounds(&mut self) {
        self.perturbed_this_solve = true;
        self.saved_bounds = Some((self.lower.clone(), self.upper.clone()));
        for j in 0..self.n + self.m {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == u {
                continue;
            }
            // golden-ratio fractions spread the shifts over [1, 2) * PERTURBATION
            let spread = 1.0 + (j as f64 * 0.618_033_988_749_895) % 1.0;
            if l.is_finite() {
                self.lower[j] = l - PERTURBATION * spread * (1.0 + l.abs());
            }
            if u.is_finite() {
                self.upper[j] = u + PERTURBATION * spread * (1.0 + u.abs());
            }
        }
        self.place_nonbasic();
        self.values_stale = true;
    }

    /// Reinstates the true bounds; true when they had been perturbed.
    fn restore_bounds(&mut self) -> bool {
        match self.saved_bounds.take() {
            Some((l, u)) => {
                self.lower = l;
                self.upper = u;
                self.place_nonbasic();
                self.values_stale = true;
                true
            }
            None => false,
        }
    }

    fn primal_infeasible(&self) -> bool {
        (0..self.n + self.m).any(|j| self.infeasibility(j) > self.tol.feasibility)
    }

    fn row_residual(&self) -> f64 {
        let mut r = vec![0.0; self.m];
        for j in 0..self.n {
            let xj = self.x[j];
            if xj != 0.0 {
                for (ri, a) in r.iter_mut().zip(self.col(j)) {
                    *ri += a * xj;
                }
            }
        }
        (0..self.m).fold(0.0f64, |worst, i| worst.max((r[i] - self.x[self.n + i]).abs()))
    }

    /// Runs phase 1 only.
    pub fn solve_feasibility(&mut self) -> Result<LpSolution> {
        let start = self.iterations;
        self.solve_start = start;
        self.perturbed_this_solve = false;
        self.refactor()?;
        let mut status = self.run_phase(1);
        if self.restore_bounds() && status.is_ok() {
            status = self.run_phase(1);
        }
        self.restore_bounds();
        let status = if status? == LpStatus::Optimal {
            LpStatus::Optimal
        } else {
            LpStatus::Infeasible
        };
        Ok(self.package(status, start, 1))
    }

    /// Phase 1 then phase 2 from the current basis.
    pub fn solve(&mut self) -> Result<LpSolution> {
        self.perturbed_this_solve = false;
        let out = self.solve_phases();
        // the working bounds must be the true ones between solves
        self.restore_bounds();
        out
    }

    fn solve_phases(&mut self) -> Result<LpSolution> {
        let start = self.iterations;
        self.solve_start = start;
        self.weights.iter_mut().for_each(|w| *w = 1.0);
        if self.needs_refactor {
            self.refactor()?;
        } else if self.values_stale {
            self.compute_basic_values();
        }
        for _attempt in 0..6 {
            if self.run_phase(1)? == LpStatus::Infeasible {
                // a relaxation of the true bounds was infeasible; recheck
                // with the true ones from this basis anyway
                if self.restore_bounds() {
                    continue;
                }
                // confirm before declaring infeasibility; a short run of eta
                // updates only needs recomputed basic values
                let rerun = if self.since_refactor >= CONFIRM_REFACTOR_AFTER {
                    self.refactor()?;
                    true
                } else if self.iterations > start {
                    self.compute_basic_values();
                    true
                } else {
                    // no pivots since the values were computed: a rerun is identical
                    false
                };
                if !rerun || self.run_phase(1)? == LpStatus::Infeasible {
                    return Ok(self.package(LpStatus::Infeasible, start, 1));
                }
            }
            let status = self.run_phase(2)?;
            if self.restore_bounds() {
                // clean up from the perturbed optimum on the true bounds
                continue;
            }
            if status == LpStatus::Unbounded {
                return Ok(self.package(LpStatus::Unbounded, start, 2));
            }
            self.compute_basic_values();
            if !self.primal_infeasible() && self.row_residual() <= 1e-6 {
                return Ok(self.package(LpStatus::Optimal, start, 2));
            }
            self.refactor()?;
        }
        Err(Error::Numerical("could not reach a stable optimal basis".into()))
    }

    fn package(&self, status: LpStatus, start: usize, phase: u8) -> LpSolution {
        let cb: Vec<f64> = if phase == 2 {
            self.head.iter().map(|&j| self.cost[j]).collect()
        } else {
            vec![0.0; self.m]
        };
        let duals = self.btran(&cb);
        let reduced_costs: Vec<f64> = (0..self.n).map(|j| self.cost[j] - self.col_dot(j, &duals)).collect();
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = dot(&self.cost[..self.n], &x);
        let mut dual_objective = 0.0;
        for j in 0..self.n + self.m {
            if self.state[j] != VarState::Basic {
                let c = if phase == 2 { self.cost[j] } else { 0.0 };
                let d = c - self.col_dot(j, &duals);
                dual_objective += d * self.x[j];
            }
        }
        LpSolution {
            status,
            x,
            duals,
            reduced_costs,
            objective,
            dual_objective,
            basis: self.basis(),
            iterations: self.iterations - start,
        }
    }
}
