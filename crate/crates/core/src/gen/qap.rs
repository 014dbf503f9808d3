//! Quadratic assignment problems.
//!
//! The lift places facility `i` at location `k` in coordinate `i * n + k`.
//! With `S[(i n + k), (j n + l)] = F_ij D_kl` symmetrized and
//! `Q = S - alpha I`, `alpha` above the largest absolute row sum of `S`, the
//! concave QP `min ½ x'Qx` over doubly stochastic matrices has the
//! permutation matrices among its minimizers and
//! `½ x'Qx = qap_objective - alpha n / 2` at every permutation matrix.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::LpccInstance;
use crate::qp::{qp_to_lpcc, QpInstance};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QapData {
    pub n: usize,
    /// Flows between facilities.
    pub f: Matrix,
    /// Distances between locations.
    pub d: Matrix,
}

impl QapData {
    pub fn new(f: Matrix, d: Matrix) -> Result<Self> {
        let n = f.rows;
        if f.cols != n || d.rows != n || d.cols != n {
            return Err(Error::Dimension("QAP matrices must be square and of equal size".into()));
        }
        if !f.is_finite() || !d.is_finite() {
            return Err(Error::InvalidInstance("non-finite QAP data".into()));
        }
        Ok(Self { n, f, d })
    }
}

/// Reads the QAPLIB layout: `n`, then `n*n` entries of the first matrix, then
/// `n*n` entries of the second, all whitespace separated.
pub fn parse_qaplib(text: &str) -> Result<QapData> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let first = tokens.first().ok_or_else(|| Error::Parse("empty QAPLIB text".into()))?;
    let n: usize = first
        .parse()
        .map_err(|_| Error::Parse(format!("size token {first:?} is not an integer")))?;
    let expected = 1 + 2 * n * n;
    if tokens.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} tokens for n={n}, found {}",
            tokens.len()
        )));
    }
    let mut values = Vec::with_capacity(2 * n * n);
    for (k, t) in tokens[1..].iter().enumerate() {
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("token {} ({t:?}) is not numeric", k + 2)))?;
        values.push(v);
    }
    let d = values.split_off(n * n);
    QapData::new(Matrix::from_vec(n, n, values)?, Matrix::from_vec(n, n, d)?)
}

fn check_perm(n: usize, perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Dimension(format!("permutation of length {} for n={n}", perm.len())));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidInstance(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `sum_ij F_ij D_perm(i) perm(j)`, the QAPLIB cost of an assignment
/// (facility `i` at location `perm[i]`, zero-based).
pub fn qaplib_cost(qap: &QapData, perm: &[usize]) -> Result<f64> {
    check_perm(qap.n, perm)?;
    let mut total = 0.0;
    for i in 0..qap.n {
        for j in 0..qap.n {
            total += qap.f[(i, j)] * qap.d[(perm[i], perm[j])];
        }
    }
    Ok(total)
}

/// `½ sum_ijkl F_ij D_kl x_ik x_jl` at the permutation matrix of `perm`
/// (zero-based), i.e. half the QAPLIB cost.
pub fn qap_objective_of_permutation(qap: &QapData, perm: &[usize]) -> Result<f64> {
    Ok(0.5 * qaplib_cost(qap, perm)?)
}

/// The concave QP lift together with its shift.
#[derive(Debug, Clone, PartialEq)]
pub struct QapLift {
    pub qp: QpInstance,
    pub alpha: f64,
    pub n: usize,
}

impl QapLift {
    /// Number of assignment coordinates (`n^2`); the first `n^2` rows of the
    /// QP are `x >= 0`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    /// QAP objective recovered from a QP value at a permutation matrix.
    pub fn unshift(&self, qp_value: f64) -> f64 {
        qp_value + self.alpha * self.n as f64 / 2.0
    }

    pub fn permutation_matrix(&self, perm: &[usize]) -> Result<Vec<f64>> {
        check_perm(self.n, perm)?;
        let mut x = vec![0.0; self.dim()];
        for (i, &k) in perm.iter().enumerate() {
            x[i * self.n + k] = 1.0;
        }
        Ok(x)
    }
}

/// Builds the lift. Rows: `x >= 0` (`n^2` rows), then for every location and
/// every facility the assignment equality as a `>=` / `<=` pair.
pub fn qap_to_qp(qap: &QapData, margin: f64) -> Result<QapLift> {
    if !(margin > 0.0) {
        return Err(Error::InvalidConfig(format!("margin must be positive, got {margin}")));
    }
    let n = qap.n;
    let nn = n * n;
    let mut s = Matrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    s[(i * n + k, j * n + l)] = qap.f[(i, j)] * qap.d[(k, l)];
                }
            }
        }
    }
    let mut q = Matrix::zeros(nn, nn);
    for a in 0..nn {
        for b in 0..nn {
            q[(a, b)] = 0.5 * (s[(a, b)] + s[(b, a)]);
        }
    }
    let alpha = (0..nn)
        .map(|a| q.row(a).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        + margin;
    for a in 0..nn {
        q[(a, a)] -= alpha;
    }
    let m = nn + 4 * n;
    let mut d_mat = Matrix::zeros(m, nn);
    let mut d = vec![0.0; m];
    for a in 0..nn {
        d_mat[(a, a)] = 1.0;
    }
    let mut row = nn;
    // each location k receives one facility
    for k in 0..n {
        for i in 0..n {
            d_mat[(row, i * n + k)] = 1.0;
            d_mat[(row + 1, i * n + k)] = -1.0;
        }
        d[row] = 1.0;
        d[row + 1] = -1.0;
        row += 2;
    }
    // each facility i goes to one location
    for i in 0..n {
        for k in 0..n {
            d_mat[(row, i * n + k)] = 1.0;
            d_mat[(row + 1, i * n + k)] = -1.0;
        }
        d[row] = 1.0;
        d[row + 1] = -1.0;
        row += 2;
    }
    Ok(QapLift {
        qp: QpInstance::new(q, vec![0.0; nn], d_mat, d)?,
        alpha,
        n,
    })
}

/// KKT LPCC of the lift with pair bound `2 n^2 max |Q_ij|`.
pub fn qap_to_lpcc(lift: &QapLift) -> Result<LpccInstance> {
    let big_m = (2.0 * lift.dim() as f64 * lift.qp.q.max_abs()).max(1.0);
    qp_to_lpcc(&lift.qp, big_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> QapData {
        parse_qaplib("2 0 1 1 0 0 3 3 0").unwrap()
    }

    #[test]
    fn parse_small() {
        let q = two();
        assert_eq!(q.n, 2);
        assert_eq!(q.f.data, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(q.d.data, vec![0.0, 3.0, 3.0, 0.0]);
        assert_eq!(parse_qaplib("2\n0 1\n1 0\n\n0 3\n3 0\n\n").unwrap(), q);
    }

    #[test]
    fn parse_errors_name_the_count() {
        let err = parse_qaplib("2 0 1 1 0 0 3 3").unwrap_err();
        assert!(format!("{err}").contains("expected 9"));
        assert!(parse_qaplib("2 0 1 1 0 0 3 3 x").is_err());
        assert!(parse_qaplib("").is_err());
    }

    #[test]
    fn permutation_objective() {
        assert_eq!(qap_objective_of_permutation(&two(), &[0, 1]).unwrap(), 3.0);
        assert!(qap_objective_of_permutation(&two(), &[0, 0]).is_err());
    }

    #[test]
    fn shift_identity_on_small_lift() {
        let lift = qap_to_qp(&two(), 1.0).unwrap();
        for perm in [[0usize, 1], [1, 0]] {
            let x = lift.permutation_matrix(&perm).unwrap();
            let half = crate::qp::qp_objective(&lift.qp, &x);
            let expected = qap_objective_of_permutation(&two(), &perm).unwrap();
            assert!((lift.unshift(half) - expected).abs() < 1e-12);
        }
    }
}
