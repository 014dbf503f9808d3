//! Standard quadratic programs `min c·x + ½ x'Qx` over `{x >= 0, sum x = 1}`.
//!
//! Random `Q`: symmetric, each off-diagonal entry uniform on `[-1, 1]` and
//! kept with probability `rho`, diagonal uniform on `[-1, 1]`; `c = 0`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::lp::RowSense;
use crate::model::PointTriple;
use crate::qp::{KktTriple, QpInstance};
use crate::reform::{MilpModel, Role, VarKind};
use crate::{Error, Matrix, Result};

use super::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stqp {
    pub q: Matrix,
    pub c: Vec<f64>,
}

impl Stqp {
    pub fn new(q: Matrix, c: Vec<f64>) -> Result<Self> {
        let s = Self { q, c };
        s.to_qp()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// The generic form: rows `x >= 0`, `sum x >= 1`, `-sum x >= -1`.
    pub fn to_qp(&self) -> Result<QpInstance> {
        let n = self.n();
        let mut d_mat = Matrix::zeros(n + 2, n);
        for j in 0..n {
            d_mat[(j, j)] = 1.0;
            d_mat[(n, j)] = 1.0;
            d_mat[(n + 1, j)] = -1.0;
        }
        let mut d = vec![0.0; n];
        d.push(1.0);
        d.push(-1.0);
        QpInstance::new(self.q.clone(), self.c.clone(), d_mat, d)
    }

    /// Recognizes the generic form produced by [`Stqp::to_qp`].
    pub fn from_qp(qp: &QpInstance) -> Result<Self> {
        let s = Self {
            q: qp.q.clone(),
            c: qp.c.clone(),
        };
        if s.to_qp()? != *qp {
            return Err(Error::InvalidInstance("QP feasible region is not the unit simplex".into()));
        }
        Ok(s)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let qx = self.q.mul_vec(x);
        crate::math::dot(&self.c, x) + 0.5 * crate::math::dot(x, &qx)
    }

    /// Maps a KKT triple of [`Stqp::to_qp`] to the LPCC of [`stqp_to_lpcc`]:
    /// `y = x`, `z` = multipliers of `x >= 0`, `mu` = net multiplier of the
    /// two simplex rows.
    pub fn lpcc_point(&self, t: &KktTriple) -> Result<PointTriple> {
        let n = self.n();
        if t.x.len() != n || t.lambda.len() != n + 2 {
            return Err(Error::Dimension(format!("triple does not match an StQP of size {n}")));
        }
        let mu = t.lambda[n] - t.lambda[n + 1];
        Ok(PointTriple::new(vec![mu], t.x.clone(), t.lambda[..n].to_vec()))
    }

    /// Uniform point of the simplex.
    pub fn barycenter(&self) -> Vec<f64> {
        vec![1.0 / self.n() as f64; self.n()]
    }
}

pub fn gen_stqp(n: usize, rho: f64, seed: u64) -> Result<Stqp> {
    if n < 2 || !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidConfig(format!("StQP needs n >= 2 and rho in (0,1), got n={n}, rho={rho}")));
    }
    let mut rng = rng(seed);
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        q[(i, i)] = rng.gen_range(-1.0..=1.0);
        for j in i + 1..n {
            let v: f64 = rng.gen_range(-1.0..=1.0);
            let keep = rng.gen_bool(rho);
            let v = if keep { v } else { 0.0 };
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    Ok(Stqp { q, c: vec![0.0; n] })
}

/// `2 n max |Q_ij|`, floored at 1 so an all-zero `Q` still gets a valid bound.
pub fn stqp_big_m(s: &Stqp) -> f64 {
    (2.0 * s.n() as f64 * s.q.max_abs()).max(1.0)
}

/// KKT LPCC of the StQP. The `x` block is the simplex multiplier `mu`, the
/// pairs are `(x_j, lambda_j)`. Rows: `Q x - lambda - mu 1 = -c` and
/// `sum x = 1`; objective `½(c·x + mu)`, equal to `q(x)` at KKT points.
/// Bounds: `x_j <= 1`, `lambda_j <= M` with `M` from [`stqp_big_m`].
pub fn stqp_to_lpcc(s: &Stqp) -> Result<crate::model::LpccInstance> {
    let n = s.n();
    let big_m = stqp_big_m(s);
    let mut a_x = Matrix::zeros(n + 1, 1);
    let mut b_y = Matrix::zeros(n + 1, n);
    let mut c_z = Matrix::zeros(n + 1, n);
    let mut rhs = Vec::with_capacity(n + 1);
    for r in 0..n {
        a_x[(r, 0)] = -1.0;
        b_y.row_mut(r).copy_from_slice(s.q.row(r));
        c_z[(r, r)] = -1.0;
        rhs.push(-s.c[r]);
    }
    for j in 0..n {
        b_y[(n, j)] = 1.0;
    }
    rhs.push(1.0);
    let cost_y = s.c.iter().map(|c| 0.5 * c).collect();
    crate::model::LpccInstance::new(vec![0.5], cost_y, vec![0.0; n], a_x, b_y, c_z, rhs, big_m)?
        .with_pair_bounds(vec![1.0f64.min(big_m); n], vec![big_m; n])
}

/// Direct MILP: `Qx - lambda - mu 1 = -c`, `0 <= lambda_j <= M z_j`,
/// `0 <= x_j <= 1 - z_j`, `sum x = 1`, `z` binary, objective `½(c·x + mu)`.
pub fn stqp_to_milp(s: &Stqp) -> Result<MilpModel> {
    let n = s.n();
    let big_m = stqp_big_m(s);
    let mut model = MilpModel::new();
    let mu = model.add_column("mu".into(), f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous, Role::X(0), 0.5);
    let x: Vec<usize> = (0..n)
        .map(|j| model.add_column(format!("x{j}"), 0.0, 1.0, VarKind::Continuous, Role::Y(j), 0.5 * s.c[j]))
        .collect();
    let lam: Vec<usize> = (0..n)
        .map(|j| model.add_column(format!("lambda{j}"), 0.0, big_m, VarKind::Continuous, Role::Z(j), 0.0))
        .collect();
    let z: Vec<usize> = (0..n)
        .map(|j| model.add_column(format!("z{j}"), 0.0, 1.0, VarKind::Binary, Role::WComplement(j), 0.0))
        .collect();
    for r in 0..n {
        let mut coeffs: Vec<(usize, f64)> = (0..n)
            .filter(|&j| s.q[(r, j)] != 0.0)
            .map(|j| (x[j], s.q[(r, j)]))
            .collect();
        coeffs.push((lam[r], -1.0));
        coeffs.push((mu, -1.0));
        model.add_row(format!("kkt{r}"), coeffs, RowSense::Eq, -s.c[r]);
    }
    model.add_row("simplex".into(), x.iter().map(|&j| (j, 1.0)).collect(), RowSense::Eq, 1.0);
    for j in 0..n {
        model.add_row(format!("lambig{j}"), vec![(lam[j], 1.0), (z[j], -big_m)], RowSense::Le, 0.0);
        model.add_row(format!("xbig{j}"), vec![(x[j], 1.0), (z[j], 1.0)], RowSense::Le, 1.0);
    }
    Ok(model)
}
