//! Generic random LPCCs and random (mostly indefinite) QPs.
//!
//! A random LPCC is built around a planted feasible point: dense uniform
//! `A, B, C` on `[-1, 1]`, a point with `x` uniform in the box and each pair
//! having one side zero and the other uniform on `[0, big_m / 2]`, and
//! `b = Ax + By + Cz`. Every variable is boxed, so the LPCC is feasible and
//! bounded.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{LpccInstance, PointTriple};
use crate::qp::QpInstance;
use crate::{Error, Matrix, Result};

use super::rng;

/// Box on the `x` block of random LPCCs.
pub const RANDOM_X_BOX: f64 = 5.0;
/// Pair bound of random LPCCs.
pub const RANDOM_BIG_M: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomLpcc {
    pub lpcc: LpccInstance,
    /// The point used to build the right-hand side.
    pub planted: PointTriple,
}

fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let mut a = Matrix::zeros(rows, cols);
    for v in a.data.iter_mut() {
        *v = rng.gen_range(-1.0..=1.0);
    }
    a
}

/// `n` free variables, `m` pairs, `k` equality rows.
pub fn gen_random_lpcc(n: usize, m: usize, k: usize, seed: u64) -> Result<RandomLpcc> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidConfig(format!("random LPCC needs m, k >= 1, got m={m}, k={k}")));
    }
    let mut rng = rng(seed);
    let a_x = uniform_matrix(&mut rng, k, n);
    let b_y = uniform_matrix(&mut rng, k, m);
    let c_z = uniform_matrix(&mut rng, k, m);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-RANDOM_X_BOX..=RANDOM_X_BOX)).collect();
    let mut y = vec![0.0; m];
    let mut z = vec![0.0; m];
    for i in 0..m {
        let v = rng.gen_range(0.0..=RANDOM_BIG_M / 2.0);
        if rng.gen_bool(0.5) {
            y[i] = v;
        } else {
            z[i] = v;
        }
    }
    let cost_x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let cost_y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let cost_z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let ax = a_x.mul_vec(&x);
    let by = b_y.mul_vec(&y);
    let cz = c_z.mul_vec(&z);
    let rhs: Vec<f64> = (0..k).map(|r| ax[r] + by[r] + cz[r]).collect();
    let lpcc = LpccInstance::new(cost_x, cost_y, cost_z, a_x, b_y, c_z, rhs, RANDOM_BIG_M)?
        .with_x_bounds(vec![-RANDOM_X_BOX; n], vec![RANDOM_X_BOX; n])?;
    Ok(RandomLpcc {
        lpcc,
        planted: PointTriple::new(x, y, z),
    })
}

/// Symmetric `Q` uniform on `[-1, 1]`, `c` uniform, and `m` rows: the box
/// `0 <= x <= 1` first (`2n` rows) when `m >= 2n`, then random rows
/// `D_i x >= d_i` satisfied by the centre of the box. With `m < 2n` only the
/// first `m` random rows are used, and the region may be unbounded.
pub fn gen_random_qp(n: usize, m: usize, psd: bool, seed: u64) -> Result<QpInstance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(format!("random QP needs n, m >= 1, got n={n}, m={m}")));
    }
    let mut rng = rng(seed);
    let g = uniform_matrix(&mut rng, n, n);
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = if psd {
                (0..n).map(|k| g[(k, i)] * g[(k, j)]).sum()
            } else {
                0.5 * (g[(i, j)] + g[(j, i)])
            };
        }
    }
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut d_mat = Matrix::zeros(m, n);
    let mut d = vec![0.0; m];
    let mut row = 0;
    if m >= 2 * n {
        for j in 0..n {
            d_mat[(row, j)] = 1.0;
            d_mat[(row + 1, j)] = -1.0;
            d[row + 1] = -1.0;
            row += 2;
        }
    }
    let centre = vec![0.5; n];
    while row < m {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let slack: f64 = rng.gen_range(0.05..=0.5);
        d[row] = crate::math::dot(&a, &centre) - slack;
        d_mat.row_mut(row).copy_from_slice(&a);
        row += 1;
    }
    QpInstance::new(q, c, d_mat, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasible;

    #[test]
    fn planted_point_is_feasible() {
        for seed in 0..5 {
            let r = gen_random_lpcc(3, 6, 5, seed).unwrap();
            assert!(check_feasible(&r.lpcc, &r.planted).unwrap().is_feasible(1e-9));
        }
    }

    #[test]
    fn qp_box_rows_come_first() {
        let qp = gen_random_qp(2, 6, false, 1).unwrap();
        assert_eq!(qp.d_mat.row(0), &[1.0, 0.0]);
        assert_eq!(qp.d_mat.row(1), &[-1.0, 0.0]);
        assert_eq!(qp.d[1], -1.0);
        assert!(qp.slack(&[0.5, 0.5]).iter().all(|&s| s >= 0.0));
        assert_eq!(qp.q.asymmetry(), 0.0);
    }
}
