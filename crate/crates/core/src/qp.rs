//! Quadratic programs `min c·x + ½ x'Qx  s.t.  Dx >= d` and their KKT
//! reformulation as an LPCC.
//!
//! In the KKT LPCC the `x` block is the QP variable, `y` the slack
//! `s = Dx - d` and `z` the multiplier `lambda`. The rows are
//! `Qx - D'lambda = -c` followed by `Dx - s = d`, and the objective
//! `c·x + d·lambda` equals `2 q(x)` at every feasible point.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bb::{MilpEngine, MilpStatus};
use crate::lp::{LpModel, LpStatus, LpTolerances, RowSense, Simplex};
use crate::math::dot;
use crate::model::{evaluate_objective, IndexPartition, LpccInstance, PointTriple};
use crate::pip::Certificate;
use crate::reform::{build_relaxed_restricted_kkt, embed_triple};
use crate::{Error, Matrix, Result};

/// Default threshold on the slack for treating a row as active.
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QpInstance {
    pub q: Matrix,
    pub c: Vec<f64>,
    pub d_mat: Matrix,
    pub d: Vec<f64>,
}

impl QpInstance {
    pub fn new(q: Matrix, c: Vec<f64>, d_mat: Matrix, d: Vec<f64>) -> Result<Self> {
        let qp = Self { q, c, d_mat, d };
        qp.validate()?;
        Ok(qp)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if (self.q.rows, self.q.cols) != (n, n) || (self.d_mat.rows, self.d_mat.cols) != (m, n) {
            return Err(Error::Dimension(format!("QP with n={n}, m={m}")));
        }
        if !self.q.is_finite() || !self.d_mat.is_finite() || !self.c.iter().chain(&self.d).all(|v| v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite QP data".into()));
        }
        if self.q.asymmetry() > 1e-12 * self.q.max_abs().max(1.0) {
            return Err(Error::InvalidInstance("Q is not symmetric".into()));
        }
        Ok(())
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.mul_vec(x);
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi += ci;
        }
        g
    }

    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.d_mat.mul_vec(x);
        for (si, di) in s.iter_mut().zip(&self.d) {
            *si -= di;
        }
        s
    }
}

/// `q(x) = c·x + ½ x'Qx`.
pub fn qp_objective(qp: &QpInstance, x: &[f64]) -> f64 {
    let qx = qp.q.mul_vec(x);
    dot(&qp.c, x) + 0.5 * dot(x, &qx)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktTriple {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl KktTriple {
    pub fn to_point(&self) -> PointTriple {
        PointTriple::new(self.x.clone(), self.s.clone(), self.lambda.clone())
    }

    pub fn from_point(pt: &PointTriple) -> Self {
        Self {
            x: pt.x.clone(),
            s: pt.y.clone(),
            lambda: pt.z.clone(),
        }
    }

    /// `max(|Qx + c - D'lambda|, |Dx - d - s|)`.
    pub fn kkt_residual(&self, qp: &QpInstance) -> f64 {
        let g = qp.gradient(&self.x);
        let dl = qp.d_mat.tr_mul_vec(&self.lambda);
        let stat = g.iter().zip(&dl).fold(0.0f64, |a, (g, l)| a.max((g - l).abs()));
        let slack = qp.slack(&self.x);
        let prim = slack.iter().zip(&self.s).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        stat.max(prim)
    }
}

/// KKT system of `qp` as an LPCC with every pair bounded by `big_m`.
pub fn qp_to_lpcc(qp: &QpInstance, big_m: f64) -> Result<LpccInstance> {
    qp.validate()?;
    let (n, m) = (qp.n(), qp.m());
    let mut a_x = Matrix::zeros(n + m, n);
    let mut b_y = Matrix::zeros(n + m, m);
    let mut c_z = Matrix::zeros(n + m, m);
    let mut rhs = Vec::with_capacity(n + m);
    for r in 0..n {
        a_x.row_mut(r).copy_from_slice(qp.q.row(r));
        for i in 0..m {
            c_z[(r, i)] = -qp.d_mat[(i, r)];
        }
        rhs.push(-qp.c[r]);
    }
    for i in 0..m {
        a_x.row_mut(n + i).copy_from_slice(qp.d_mat.row(i));
        b_y[(n + i, i)] = -1.0;
        rhs.push(qp.d[i]);
    }
    LpccInstance::new(qp.c.clone(), vec![0.0; m], qp.d.clone(), a_x, b_y, c_z, rhs, big_m)
}

/// LP minimizing `g·v` over `Dv >= d`.
fn feasible_region_lp(qp: &QpInstance) -> LpModel {
    let n = qp.n();
    let mut lp = LpModel::new(vec![0.0; n], vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]);
    for i in 0..qp.m() {
        lp.add_row(qp.d_mat.row(i), RowSense::Ge, qp.d[i]);
    }
    lp
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub triple: KktTriple,
    pub objective: f64,
    /// `max over feasible v of -grad q(x)·(v - x)` at the returned point.
    pub stationarity_gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Frank-Wolfe with away steps from the feasible point `x0`, followed by a
/// polish that solves the LP of the complementarity piece selected by the
/// final active set. The polished point is an exact KKT triple whenever the
/// active set is correct.
pub fn stationary_point(qp: &QpInstance, x0: &[f64], tol: f64, max_iter: usize) -> Result<StationaryResult> {
    qp.validate()?;
    let n = qp.n();
    if x0.len() != n {
        return Err(Error::Dimension("x0 length".into()));
    }
    if qp.slack(x0).iter().any(|&s| s < -1e-7) {
        return Err(Error::InvalidInstance("x0 is not feasible".into()));
    }
    let mut lmo = Simplex::new(&feasible_region_lp(qp), LpTolerances::default())?;
    let mut lmo_solve = |g: &[f64]| -> Result<Vec<f64>> {
        lmo.set_objective(g);
        let sol = lmo.solve()?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.x),
            LpStatus::Unbounded => Err(Error::InvalidInstance("feasible region is unbounded".into())),
            LpStatus::Infeasible => Err(Error::Infeasible),
        }
    };

    // active set: atoms with convex weights
    let mut atoms: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = x0.to_vec();
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        let g = qp.gradient(&x);
        let v = lmo_solve(&g)?;
        let fw_dir: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - b).collect();
        gap = -dot(&g, &fw_dir);
        if gap <= tol {
            break;
        }
        iterations += 1;
        let (away_idx, away_val) = atoms
            .iter()
            .enumerate()
            .map(|(k, a)| (k, dot(&g, a)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        let away_gap = away_val - dot(&g, &x);
        let (dir, gamma_max, fw_step) = if gap >= away_gap || atoms.len() == 1 {
            (fw_dir, 1.0, true)
        } else {
            let a = &atoms[away_idx];
            let w = weights[away_idx];
            let dir: Vec<f64> = x.iter().zip(a).map(|(xi, ai)| xi - ai).collect();
            (dir, w / (1.0 - w), false)
        };
        let slope = dot(&g, &dir);
        let curv = dot(&dir, &qp.q.mul_vec(&dir));
        let gamma = if curv > 0.0 {
            (-slope / curv).clamp(0.0, gamma_max)
        } else {
            gamma_max
        };
        if gamma <= 0.0 {
            break;
        }
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += gamma * di;
        }
        if fw_step {
            for w in weights.iter_mut() {
                *w *= 1.0 - gamma;
            }
            match atoms.iter().position(|a| a == &v) {
                Some(k) => weights[k] += gamma,
                None => {
                    atoms.push(v);
                    weights.push(gamma);
                }
            }
        } else {
            for w in weights.iter_mut() {
                *w *= 1.0 + gamma;
            }
            weights[away_idx] -= gamma;
        }
        let mut k = 0;
        while k < atoms.len() {
            if weights[k] <= 1e-12 {
                atoms.swap_remove(k);
                weights.swap_remove(k);
            } else {
                k += 1;
            }
        }
        if fw_step && gamma >= 1.0 {
            atoms = vec![x.clone()];
            weights = vec![1.0];
        }
    }
    let converged = gap <= tol;

    let triple = match polish_on_piece(qp, &x, DEFAULT_ACTIVE_TOL)? {
        Some(t) => t,
        None => match recover_multipliers(qp, &x, DEFAULT_ACTIVE_TOL) {
            Ok(t) => t,
            Err(_) => KktTriple {
                s: qp.slack(&x),
                lambda: vec![0.0; qp.m()],
                x: x.clone(),
            },
        },
    };
    let g = qp.gradient(&triple.x);
    let v = lmo_solve(&g)?;
    let final_gap = -dot(&g, &v) + dot(&g, &triple.x);
    Ok(StationaryResult {
        objective: qp_objective(qp, &triple.x),
        stationarity_gap: final_gap,
        converged: converged && final_gap <= tol.max(1e-9),
        triple,
        iterations,
    })
}

/// KKT point of minimal `c·x + d·lambda` on the piece where the rows active at
/// `x` have zero slack and the others zero multiplier. `None` when that piece
/// has no KKT point.
fn polish_on_piece(qp: &QpInstance, x: &[f64], active_tol: f64) -> Result<Option<KktTriple>> {
    let (n, m) = (qp.n(), qp.m());
    let slack = qp.slack(x);
    let active: Vec<bool> = slack.iter().map(|&s| s <= active_tol).collect();
    // columns: x (n, free), lambda (m)
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for &a in &active {
        lower.push(0.0);
        upper.push(if a { f64::INFINITY } else { 0.0 });
    }
    let mut objective = qp.c.clone();
    objective.extend_from_slice(&qp.d);
    let mut lp = LpModel::new(objective, lower, upper);
    for r in 0..n {
        let mut row = qp.q.row(r).to_vec();
        for i in 0..m {
            row.push(-qp.d_mat[(i, r)]);
        }
        lp.add_row(&row, RowSense::Eq, -qp.c[r]);
    }
    for i in 0..m {
        let mut row = qp.d_mat.row(i).to_vec();
        row.resize(row.len() + m, 0.0);
        let sense = if active[i] { RowSense::Eq } else { RowSense::Ge };
        lp.add_row(&row, sense, qp.d[i]);
    }
    let sol = Simplex::new(&lp, LpTolerances::default())?.solve()?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let xs = sol.x[..n].to_vec();
    let mut s = qp.slack(&xs);
    for (si, &a) in s.iter_mut().zip(&active) {
        if a || *si < 0.0 {
            *si = 0.0;
        }
    }
    let lambda = sol.x[n..].iter().map(|&l| l.max(0.0)).collect();
    Ok(Some(KktTriple { x: xs, s, lambda }))
}

/// Multipliers for a fixed `x`: `Qx + c = D_A' lambda_A`, `lambda_A >= 0` on
/// the rows with slack at most `active_tol`, zero elsewhere.
pub fn recover_multipliers(qp: &QpInstance, x: &[f64], active_tol: f64) -> Result<KktTriple> {
    qp.validate()?;
    let (n, m) = (qp.n(), qp.m());
    if x.len() != n {
        return Err(Error::Dimension("x length".into()));
    }
    let slack = qp.slack(x);
    if let Some(i) = slack.iter().position(|&s| s < -active_tol) {
        return Err(Error::InvalidInstance(format!("x violates row {i}")));
    }
    let active: Vec<usize> = (0..m).filter(|&i| slack[i] <= active_tol).collect();
    let g = qp.gradient(x);
    let mut lp = LpModel::new(
        vec![0.0; active.len()],
        vec![0.0; active.len()],
        vec![f64::INFINITY; active.len()],
    );
    for r in 0..n {
        let row: Vec<f64> = active.iter().map(|&i| qp.d_mat[(i, r)]).collect();
        lp.add_row(&row, RowSense::Eq, g[r]);
    }
    let sol = crate::lp::phase1_feasible(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotStationary(format!(
            "no nonnegative multipliers on {} active rows",
            active.len()
        )));
    }
    let mut lambda = vec![0.0; m];
    for (k, &i) in active.iter().enumerate() {
        lambda[i] = sol.x[k].max(0.0);
    }
    let s = slack.iter().map(|&v| v.max(0.0)).collect();
    Ok(KktTriple {
        x: x.to_vec(),
        s,
        lambda,
    })
}

/// Partition used when none is supplied: pairs with a positive multiplier go
/// to the free-multiplier set, everything else stays complementary.
pub fn default_certificate_partition(triple: &KktTriple, tol: f64) -> IndexPartition {
    let m = triple.lambda.len();
    let z_plus: Vec<usize> = (0..m).filter(|&i| triple.lambda[i] > tol).collect();
    let m_c = (0..m).filter(|&i| triple.lambda[i] <= tol).collect();
    IndexPartition {
        m_c,
        m_y_plus: Vec::new(),
        m_z_plus: z_plus,
    }
}

/// Solves the relaxed restricted-KKT model for `part` (in LPCC terms:
/// `m_y_plus` = positive slacks, `m_z_plus` = positive multipliers) and
/// certifies `triple` when its objective is within `1e-8` of the optimum.
pub fn qp_local_min_certificate<E: MilpEngine>(
    qp: &QpInstance,
    big_m: f64,
    triple: &KktTriple,
    part: Option<&IndexPartition>,
    engine: &mut E,
    time_limit: f64,
) -> Result<Certificate> {
    let lpcc = qp_to_lpcc(qp, big_m)?;
    let pt = triple.to_point();
    let default;
    let part = match part {
        Some(p) => p,
        None => {
            default = default_certificate_partition(triple, crate::model::DEFAULT_POSITIVITY_TOL);
            &default
        }
    };
    let tol = crate::model::DEFAULT_POSITIVITY_TOL;
    if !part.m_y_plus.iter().all(|&i| pt.y[i] > tol) || !part.m_z_plus.iter().all(|&i| pt.z[i] > tol) {
        return Err(Error::InvalidPartition("fixed sets must index positive entries".into()));
    }
    let model = build_relaxed_restricted_kkt(&lpcc, part)?;
    let value = evaluate_objective(&lpcc, &pt)?;
    let warm = embed_triple(&model, &pt)?;
    let warm = if model.max_violation(&warm.values)? <= 1e-6 {
        Some(warm)
    } else {
        None
    };
    let out = engine.solve(&model, warm.as_ref(), time_limit)?;
    Ok(match out.status {
        MilpStatus::Optimal => {
            let best = out.incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective);
            if value <= best + 1e-8 {
                Certificate::Certified
            } else {
                Certificate::NotCertified
            }
        }
        MilpStatus::Unbounded => Certificate::NotCertified,
        MilpStatus::FeasibleTimeLimit => {
            let best = out.incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective);
            if best < value - 1e-8 {
                Certificate::NotCertified
            } else {
                Certificate::Indeterminate
            }
        }
        MilpStatus::NoIncumbentTimeLimit => Certificate::Indeterminate,
        MilpStatus::Infeasible => {
            return Err(Error::Internal("relaxation excludes the triple it was built from".into()))
        }
    })
}
