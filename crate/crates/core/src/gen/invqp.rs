//! Inverse convex QPs: find `(c, d, x)` closest in ℓ1 to targets
//! `(ĉ, d̂, x̂)` such that `x` solves `min c·x + ½ x'Qx  s.t.  Dx >= d`.
//!
//! Construction: `Q = G'G + 0.1 I` and `D` with entries uniform on `[-1, 1]`
//! dropped with probability `sparsity`. A reference KKT point is sampled
//! (`x̂` uniform on `[-1, 1]`, half of the rows active with multipliers in
//! `[0.1, 1]`, the others with slacks in `[0.1, 1]`), the matching `(ĉ, d̂)`
//! computed, and `(ĉ, d̂, x̂)` perturbed by uniform noise of the requested
//! scale. Every variable lives in the box `[-bound, bound]` (`s`, `lambda` in
//! `[0, bound]`), which also serves as the complementarity bound.
//!
//! LPCC layout: `x` block `(c, d, x, t+, t-)`, pairs `(s, lambda)`; rows
//! `Qx - D'lambda + c = 0`, `Dx - s - d = 0`, `(c, d, x) - t+ + t- = target`;
//! objective `sum(t+ + t-)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{LpccInstance, PointTriple};
use crate::{Error, Matrix, Result};

use super::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvQpTargets {
    pub hat_c: Vec<f64>,
    pub hat_d: Vec<f64>,
    pub hat_x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvQpOptions {
    /// Probability that an entry of `G` or `D` is zero.
    pub sparsity: f64,
    /// Scale of the uniform noise added to the targets; 0 keeps them
    /// consistent (optimal value 0).
    pub perturbation: f64,
    pub bound: f64,
}

impl Default for InvQpOptions {
    fn default() -> Self {
        Self {
            sparsity: 0.5,
            perturbation: 0.5,
            bound: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvQp {
    pub lpcc: LpccInstance,
    pub targets: InvQpTargets,
    pub q: Matrix,
    pub d_mat: Matrix,
    pub bound: f64,
}

impl InvQp {
    /// Number of QP variables.
    pub fn n(&self) -> usize {
        self.targets.hat_x.len()
    }

    /// Number of QP constraints (= complementarity pairs).
    pub fn m(&self) -> usize {
        self.targets.hat_d.len()
    }

    /// Offsets of `(c, d, x, t+, t-)` inside the LPCC `x` block.
    fn offsets(&self) -> [usize; 5] {
        let (n, m) = (self.n(), self.m());
        let dev = 2 * n + m;
        [0, n, n + m, dev, 2 * dev]
    }

    /// Feasible point: `x = x̂`, `lambda = 0`, `c = -Q x̂`,
    /// `s = max(D x̂ - d̂, 0)`, `d = D x̂ - s`.
    pub fn feasible_start(&self) -> PointTriple {
        let (n, m) = (self.n(), self.m());
        let t = &self.targets;
        let qx = self.q.mul_vec(&t.hat_x);
        let dx = self.d_mat.mul_vec(&t.hat_x);
        let c: Vec<f64> = qx.iter().map(|v| -v).collect();
        let s: Vec<f64> = (0..m).map(|i| (dx[i] - t.hat_d[i]).max(0.0)).collect();
        let d: Vec<f64> = (0..m).map(|i| dx[i] - s[i]).collect();
        self.assemble(&c, &d, &t.hat_x.clone(), s, vec![0.0; m], n)
    }

    fn assemble(&self, c: &[f64], d: &[f64], x: &[f64], s: Vec<f64>, lambda: Vec<f64>, n: usize) -> PointTriple {
        let t = &self.targets;
        let mut block = Vec::with_capacity(self.lpcc.n());
        block.extend_from_slice(c);
        block.extend_from_slice(d);
        block.extend_from_slice(x);
        let target: Vec<f64> = t.hat_c.iter().chain(&t.hat_d).chain(&t.hat_x).copied().collect();
        let cur: Vec<f64> = block.clone();
        let plus: Vec<f64> = cur.iter().zip(&target).map(|(a, b)| (a - b).max(0.0)).collect();
        let minus: Vec<f64> = cur.iter().zip(&target).map(|(a, b)| (b - a).max(0.0)).collect();
        block.extend(plus);
        block.extend(minus);
        debug_assert_eq!(block.len(), 3 * (2 * n + self.m()));
        PointTriple::new(block, s, lambda)
    }

    /// `(c, d, x)` read from an LPCC point.
    pub fn decision(&self, pt: &PointTriple) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let o = self.offsets();
        (
            pt.x[o[0]..o[1]].to_vec(),
            pt.x[o[1]..o[2]].to_vec(),
            pt.x[o[2]..o[3]].to_vec(),
        )
    }

    /// ℓ1 distance of `(c, d, x)` in `pt` to the targets.
    pub fn deviation(&self, pt: &PointTriple) -> f64 {
        let (c, d, x) = self.decision(pt);
        let t = &self.targets;
        c.iter()
            .chain(&d)
            .chain(&x)
            .zip(t.hat_c.iter().chain(&t.hat_d).chain(&t.hat_x))
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

pub fn gen_invqp(m: usize, n: usize, seed: u64, sparsity: f64) -> Result<InvQp> {
    gen_invqp_with(
        m,
        n,
        seed,
        &InvQpOptions {
            sparsity,
            ..InvQpOptions::default()
        },
    )
}

fn sparse_uniform<R: Rng>(rng: &mut R, rows: usize, cols: usize, sparsity: f64) -> Matrix {
    let mut a = Matrix::zeros(rows, cols);
    for v in a.data.iter_mut() {
        let x: f64 = rng.gen_range(-1.0..=1.0);
        let drop = rng.gen_bool(sparsity);
        *v = if drop { 0.0 } else { x };
    }
    a
}

pub fn gen_invqp_with(m: usize, n: usize, seed: u64, opts: &InvQpOptions) -> Result<InvQp> {
    if !(m > n && n >= 1) {
        return Err(Error::InvalidConfig(format!("inverse QP needs m > n >= 1, got m={m}, n={n}")));
    }
    if !(0.0..1.0).contains(&opts.sparsity) || !(opts.perturbation >= 0.0) || !(opts.bound > 0.0) {
        return Err(Error::InvalidConfig(format!("{opts:?}")));
    }
    let mut rng = rng(seed);
    let g = sparse_uniform(&mut rng, n, n, opts.sparsity);
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = (0..n).map(|k| g[(k, i)] * g[(k, j)]).sum();
        }
        q[(i, i)] += 0.1;
    }
    let d_mat = sparse_uniform(&mut rng, m, n, opts.sparsity);

    let hat_x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut lam = vec![0.0; m];
    let mut s = vec![0.0; m];
    for i in 0..m {
        if rng.gen_bool(0.5) {
            lam[i] = rng.gen_range(0.1..=1.0);
        } else {
            s[i] = rng.gen_range(0.1..=1.0);
        }
    }
    let qx = q.mul_vec(&hat_x);
    let dtl = d_mat.tr_mul_vec(&lam);
    let dx = d_mat.mul_vec(&hat_x);
    let mut hat_c: Vec<f64> = (0..n).map(|j| dtl[j] - qx[j]).collect();
    let mut hat_d: Vec<f64> = (0..m).map(|i| dx[i] - s[i]).collect();
    let mut hat_x = hat_x;
    if opts.perturbation > 0.0 {
        let p = opts.perturbation;
        for v in hat_c.iter_mut().chain(hat_d.iter_mut()).chain(hat_x.iter_mut()) {
            *v += rng.gen_range(-p..=p);
        }
    }

    let b = opts.bound;
    let dev = 2 * n + m;
    let nx = 3 * dev;
    let k = n + m + dev;
    let mut a_x = Matrix::zeros(k, nx);
    let mut b_y = Matrix::zeros(k, m);
    let mut c_z = Matrix::zeros(k, m);
    let mut rhs = vec![0.0; k];
    let (oc, od, ox, op) = (0, n, n + m, dev);
    // Qx - D'lambda + c = 0
    for r in 0..n {
        for j in 0..n {
            a_x[(r, ox + j)] = q[(r, j)];
        }
        a_x[(r, oc + r)] = 1.0;
        for i in 0..m {
            c_z[(r, i)] = -d_mat[(i, r)];
        }
    }
    // Dx - s - d = 0
    for i in 0..m {
        let r = n + i;
        for j in 0..n {
            a_x[(r, ox + j)] = d_mat[(i, j)];
        }
        a_x[(r, od + i)] = -1.0;
        b_y[(r, i)] = -1.0;
    }
    // (c, d, x) - t+ + t- = target
    let target: Vec<f64> = hat_c.iter().chain(&hat_d).chain(&hat_x).copied().collect();
    for e in 0..dev {
        let r = n + m + e;
        a_x[(r, e)] = 1.0;
        a_x[(r, op + e)] = -1.0;
        a_x[(r, op + dev + e)] = 1.0;
        rhs[r] = target[e];
    }
    let mut cost_x = vec![0.0; nx];
    for v in cost_x[op..].iter_mut() {
        *v = 1.0;
    }
    let mut lower = vec![-b; dev];
    lower.extend(vec![0.0; 2 * dev]);
    let mut upper = vec![b; dev];
    upper.extend(vec![2.0 * b; 2 * dev]);
    let lpcc = LpccInstance::new(cost_x, vec![0.0; m], vec![0.0; m], a_x, b_y, c_z, rhs, b)?
        .with_x_bounds(lower, upper)?;
    Ok(InvQp {
        lpcc,
        targets: InvQpTargets { hat_c, hat_d, hat_x },
        q,
        d_mat,
        bound: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, evaluate_objective};

    #[test]
    fn start_is_feasible_and_priced_by_deviation() {
        let inv = gen_invqp(6, 4, 3, 0.5).unwrap();
        let start = inv.feasible_start();
        let rep = check_feasible(&inv.lpcc, &start).unwrap();
        assert!(rep.is_feasible(1e-9), "{rep:?}");
        let obj = evaluate_objective(&inv.lpcc, &start).unwrap();
        assert!((obj - inv.deviation(&start)).abs() < 1e-9);
    }

    #[test]
    fn q_is_positive_definite_on_samples() {
        let inv = gen_invqp(5, 3, 11, 0.5).unwrap();
        for k in 0..20 {
            let v: Vec<f64> = (0..3).map(|j| ((k * 7 + j * 3) % 5) as f64 - 2.0).collect();
            let qv = inv.q.mul_vec(&v);
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            assert!(crate::math::dot(&v, &qv) >= 0.1 * norm2 - 1e-12);
        }
    }

    #[test]
    fn shape_checks() {
        assert!(gen_invqp(3, 3, 0, 0.5).is_err());
        let inv = gen_invqp(6, 4, 0, 0.5).unwrap();
        assert_eq!(inv.lpcc.m(), 6);
        assert_eq!(inv.lpcc.n(), 3 * (2 * 4 + 6));
    }
}
