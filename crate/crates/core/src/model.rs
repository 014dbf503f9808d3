//! LPCC problem data, feasibility checks and the index partitions that drive
//! the partial reformulations.
//!
//! An instance is
//!
//! ```text
//! minimize    cost_x·x + cost_y·y + cost_z·z
//! subject to  A x + B y + C z = rhs
//!             x_lower <= x <= x_upper
//!             0 <= y <= y_upper,  0 <= z <= z_upper,  y ⊥ z
//! ```
//!
//! where every entry of `y_upper`/`z_upper` is at most `big_m`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, floor};
use crate::{Error, Matrix, Result};

/// Default positivity threshold used to decide `y_i > 0`.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-8;

/// Slack added before flooring `p * count` so that `0.7 * 10` counts as 7.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpccInstance {
    pub cost_x: Vec<f64>,
    pub cost_y: Vec<f64>,
    pub cost_z: Vec<f64>,
    /// `k x n` block multiplying `x`.
    pub a_x: Matrix,
    /// `k x m` block multiplying `y`.
    pub b_y: Matrix,
    /// `k x m` block multiplying `z`.
    pub c_z: Matrix,
    pub rhs: Vec<f64>,
    pub big_m: f64,
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub y_upper: Vec<f64>,
    pub z_upper: Vec<f64>,
}

impl LpccInstance {
    /// Builds an instance with free `x` and every pair bounded by `big_m`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cost_x: Vec<f64>,
        cost_y: Vec<f64>,
        cost_z: Vec<f64>,
        a_x: Matrix,
        b_y: Matrix,
        c_z: Matrix,
        rhs: Vec<f64>,
        big_m: f64,
    ) -> Result<Self> {
        let n = cost_x.len();
        let m = cost_y.len();
        let inst = Self {
            x_lower: vec![f64::NEG_INFINITY; n],
            x_upper: vec![f64::INFINITY; n],
            y_upper: vec![big_m; m],
            z_upper: vec![big_m; m],
            cost_x,
            cost_y,
            cost_z,
            a_x,
            b_y,
            c_z,
            rhs,
            big_m,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_x_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        self.x_lower = lower;
        self.x_upper = upper;
        self.validate()?;
        Ok(self)
    }

    /// Tightens the per-pair bounds. Entries must stay within `(0, big_m]`.
    pub fn with_pair_bounds(mut self, y_upper: Vec<f64>, z_upper: Vec<f64>) -> Result<Self> {
        self.y_upper = y_upper;
        self.z_upper = z_upper;
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.cost_x.len()
    }

    pub fn m(&self) -> usize {
        self.cost_y.len()
    }

    pub fn k(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, k) = (self.n(), self.m(), self.k());
        let dim = |what: &str| Err(Error::Dimension(format!("{what} (n={n}, m={m}, k={k})")));
        if self.cost_z.len() != m {
            return dim("cost_z length");
        }
        if (self.a_x.rows, self.a_x.cols) != (k, n) {
            return dim("A block shape");
        }
        if (self.b_y.rows, self.b_y.cols) != (k, m) || (self.c_z.rows, self.c_z.cols) != (k, m) {
            return dim("B/C block shape");
        }
        if self.x_lower.len() != n || self.x_upper.len() != n {
            return dim("x bound length");
        }
        if self.y_upper.len() != m || self.z_upper.len() != m {
            return dim("pair bound length");
        }
        if !(self.big_m > 0.0 && self.big_m.is_finite()) {
            return Err(Error::InvalidInstance(format!("big_m must be positive, got {}", self.big_m)));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.cost_x)
            && finite(&self.cost_y)
            && finite(&self.cost_z)
            && finite(&self.rhs)
            && self.a_x.is_finite()
            && self.b_y.is_finite()
            && self.c_z.is_finite())
        {
            return Err(Error::InvalidInstance("non-finite data".into()));
        }
        for j in 0..n {
            let (l, u) = (self.x_lower[j], self.x_upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidInstance(format!("bad bounds on x{j}: [{l}, {u}]")));
            }
        }
        for i in 0..m {
            for bound in [self.y_upper[i], self.z_upper[i]] {
                if !(bound > 0.0 && bound <= self.big_m) {
                    return Err(Error::InvalidInstance(format!(
                        "pair {i} bound {bound} outside (0, big_m]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_point(&self, pt: &PointTriple) -> Result<()> {
        if pt.x.len() != self.n() || pt.y.len() != self.m() || pt.z.len() != self.m() {
            return Err(Error::Dimension(format!(
                "point ({}, {}, {}) against instance (n={}, m={})",
                pt.x.len(),
                pt.y.len(),
                pt.z.len(),
                self.n(),
                self.m()
            )));
        }
        Ok(())
    }

    /// `A x + B y + C z - rhs`.
    pub fn residual(&self, pt: &PointTriple) -> Result<Vec<f64>> {
        self.check_point(pt)?;
        Ok((0..self.k())
            .map(|r| {
                dot(self.a_x.row(r), &pt.x) + dot(self.b_y.row(r), &pt.y) + dot(self.c_z.row(r), &pt.z)
                    - self.rhs[r]
            })
            .collect())
    }
}

/// Objective value `cost_x·x + cost_y·y + cost_z·z`.
pub fn evaluate_objective(inst: &LpccInstance, pt: &PointTriple) -> Result<f64> {
    inst.check_point(pt)?;
    Ok(dot(&inst.cost_x, &pt.x) + dot(&inst.cost_y, &pt.y) + dot(&inst.cost_z, &pt.z))
}

/// A candidate `(x, y, z)`; feasibility is checked, never assumed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointTriple {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl PointTriple {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        Self { x, y, z }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; m], vec![0.0; m])
    }

    /// Largest componentwise distance to `other`.
    pub fn distance_inf(&self, other: &PointTriple) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        d(&self.x, &other.x).max(d(&self.y, &other.y)).max(d(&self.z, &other.z))
    }
}

/// Constraint residuals of a triple. All fields are nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeasibilityReport {
    /// `max |Ax + By + Cz - b|`.
    pub eq_residual: f64,
    /// `max(0, -min(y, z))`.
    pub nonneg_violation: f64,
    /// `max_i min(y_i, z_i)`, floored at 0.
    pub comp_violation: f64,
    /// Largest excess over the pair bounds and the `x` box.
    pub bound_violation: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }

    pub fn max_violation(&self) -> f64 {
        self.eq_residual
            .max(self.nonneg_violation)
            .max(self.comp_violation)
            .max(self.bound_violation)
    }
}

pub fn check_feasible(inst: &LpccInstance, pt: &PointTriple) -> Result<FeasibilityReport> {
    let residual = inst.residual(pt)?;
    let eq_residual = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let nonneg_violation = pt
        .y
        .iter()
        .chain(&pt.z)
        .fold(0.0f64, |m, &v| m.max(-v));
    let comp_violation = pt
        .y
        .iter()
        .zip(&pt.z)
        .fold(0.0f64, |m, (&y, &z)| m.max(y.min(z)));
    let mut bound_violation = 0.0f64;
    for i in 0..inst.m() {
        bound_violation = bound_violation
            .max(pt.y[i] - inst.y_upper[i])
            .max(pt.z[i] - inst.z_upper[i]);
    }
    for j in 0..inst.n() {
        bound_violation = bound_violation
            .max(inst.x_lower[j] - pt.x[j])
            .max(pt.x[j] - inst.x_upper[j]);
    }
    Ok(FeasibilityReport {
        eq_residual,
        nonneg_violation,
        comp_violation,
        bound_violation,
    })
}

/// The sets `(M_c, M_y+, M_z+)`: pairs left to the binaries, pairs pinned to
/// `z = 0` (y positive) and pairs pinned to `y = 0` (z positive).
///
/// Indices are zero-based and kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndexPartition {
    pub m_c: Vec<usize>,
    pub m_y_plus: Vec<usize>,
    pub m_z_plus: Vec<usize>,
}

impl IndexPartition {
    /// Checks that the three sets are disjoint and cover `0..m`.
    pub fn new(m: usize, mut m_c: Vec<usize>, mut m_y_plus: Vec<usize>, mut m_z_plus: Vec<usize>) -> Result<Self> {
        m_c.sort_unstable();
        m_y_plus.sort_unstable();
        m_z_plus.sort_unstable();
        let part = Self {
            m_c,
            m_y_plus,
            m_z_plus,
        };
        part.check_cover(m)?;
        Ok(part)
    }

    /// Every pair complementary, nothing fixed.
    pub fn all_free(m: usize) -> Self {
        Self {
            m_c: (0..m).collect(),
            m_y_plus: Vec::new(),
            m_z_plus: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.m_c.len() + self.m_y_plus.len() + self.m_z_plus.len()
    }

    pub fn check_cover(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m];
        for &i in self.m_c.iter().chain(&self.m_y_plus).chain(&self.m_z_plus) {
            if i >= m {
                return Err(Error::InvalidPartition(format!("index {i} out of range 0..{m}")));
            }
            if seen[i] {
                return Err(Error::InvalidPartition(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {missing} not covered")));
        }
        Ok(())
    }

    /// Whether the fixed sets only contain pairs whose fixed side is positive
    /// in `pt` (beyond `tol`).
    pub fn respects(&self, pt: &PointTriple, tol: f64) -> bool {
        self.m_y_plus.iter().all(|&i| pt.y[i] > tol) && self.m_z_plus.iter().all(|&i| pt.z[i] > tol)
    }

    pub fn is_fixed(&self) -> bool {
        self.m_c.is_empty()
    }
}

/// Indices of the `floor(p * |{i: v_i > tol}|)` largest positive entries,
/// ties broken by lowest index.
fn largest_positive(v: &[f64], p: f64, tol: f64) -> Vec<usize> {
    let mut positive: Vec<usize> = (0..v.len()).filter(|&i| v[i] > tol).collect();
    let count = floor(p * positive.len() as f64 + FLOOR_SLACK) as usize;
    // stable sort keeps lower indices first among equal values
    positive.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(core::cmp::Ordering::Equal));
    positive.truncate(count.min(positive.len()));
    positive.sort_unstable();
    positive
}

/// Builds the partition for fixing proportion `p`: the largest `p`-fraction
/// of the positive `y` entries go to `M_y+`, likewise for `z`, the rest to
/// `M_c`.
///
/// Pairs with both sides above `tol` (only possible for infeasible seeds) are
/// never fixed.
pub fn complement_partition(pt: &PointTriple, p: f64, tol: f64) -> IndexPartition {
    let m = pt.y.len();
    let p = p.clamp(0.0, 1.0);
    let mut y_plus = largest_positive(&pt.y, p, tol);
    let mut z_plus = largest_positive(&pt.z, p, tol);
    let both: Vec<usize> = y_plus.iter().copied().filter(|i| z_plus.binary_search(i).is_ok()).collect();
    if !both.is_empty() {
        y_plus.retain(|i| both.binary_search(i).is_err());
        z_plus.retain(|i| both.binary_search(i).is_err());
    }
    let mut fixed = vec![false; m];
    for &i in y_plus.iter().chain(&z_plus) {
        fixed[i] = true;
    }
    IndexPartition {
        m_c: (0..m).filter(|&i| !fixed[i]).collect(),
        m_y_plus: y_plus,
        m_z_plus: z_plus,
    }
}

/// Partition with the largest legal fixed sets: `M_y+ = {y_i > tol}` and
/// `M_z+ = {z_i > tol}`.
pub fn maximal_partition(pt: &PointTriple, tol: f64) -> IndexPartition {
    complement_partition(pt, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_pair() -> LpccInstance {
        // x + y - z = 1, y,z in [0, 10]
        LpccInstance::new(
            vec![1.0],
            vec![2.0],
            vec![3.0],
            Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            Matrix::from_vec(1, 1, vec![-1.0]).unwrap(),
            vec![1.0],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_triple_has_zero_objective() {
        let inst = one_pair();
        assert_eq!(evaluate_objective(&inst, &PointTriple::zeros(1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn constructed_feasible_point_has_zero_residuals() {
        let inst = one_pair();
        let pt = PointTriple::new(vec![0.5], vec![0.5], vec![0.0]);
        let rep = check_feasible(&inst, &pt).unwrap();
        assert_eq!(rep, FeasibilityReport::default());
        assert!(rep.is_feasible(0.0));
    }

    #[test]
    fn both_sides_positive_is_a_complementarity_violation() {
        let inst = one_pair();
        let pt = PointTriple::new(vec![1.0], vec![1.0], vec![1.0]);
        let rep = check_feasible(&inst, &pt).unwrap();
        assert_eq!(rep.comp_violation, 1.0);
        assert_eq!(rep.eq_residual, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let inst = one_pair();
        let pt = PointTriple::zeros(2, 1);
        assert!(matches!(evaluate_objective(&inst, &pt), Err(Error::Dimension(_))));
        assert!(matches!(check_feasible(&inst, &pt), Err(Error::Dimension(_))));
    }

    #[test]
    fn invalid_instances_are_rejected() {
        let err = LpccInstance::new(
            vec![1.0],
            vec![1.0],
            vec![1.0],
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            vec![0.0],
            0.0,
        );
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
        let err = LpccInstance::new(
            vec![1.0],
            vec![1.0],
            vec![1.0],
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 1),
            vec![0.0],
            1.0,
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    fn sample() -> PointTriple {
        PointTriple::new(vec![], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 3.0])
    }

    #[test]
    fn half_fixing_floors_counts() {
        let part = complement_partition(&sample(), 0.5, 1e-8);
        assert_eq!(part.m_y_plus, vec![0]);
        assert!(part.m_z_plus.is_empty());
        assert_eq!(part.m_c, vec![1, 2]);
    }

    #[test]
    fn zero_fixing_leaves_everything_free() {
        let part = complement_partition(&sample(), 0.0, 1e-8);
        assert_eq!(part, IndexPartition::all_free(3));
    }

    #[test]
    fn full_fixing_pins_every_positive() {
        let part = complement_partition(&sample(), 1.0, 1e-8);
        assert_eq!(part.m_y_plus, vec![0, 1]);
        assert_eq!(part.m_z_plus, vec![2]);
        assert!(part.m_c.is_empty());
    }

    #[test]
    fn ties_prefer_lower_index() {
        let pt = PointTriple::new(vec![], vec![1.0, 1.0, 1.0, 1.0], vec![0.0; 4]);
        let part = complement_partition(&pt, 0.5, 1e-8);
        assert_eq!(part.m_y_plus, vec![0, 1]);
    }

    #[test]
    fn decimal_proportions_do_not_lose_a_unit() {
        let pt = PointTriple::new(vec![], vec![1.0; 10], vec![0.0; 10]);
        let p = 0.8 - 0.1; // 0.7000000000000001 or 0.6999999999999998 depending on rounding
        assert_eq!(complement_partition(&pt, p, 1e-8).m_y_plus.len(), 7);
        let p = 0.8 - 0.1 - 0.1 - 0.1 - 0.1 - 0.1;
        assert_eq!(complement_partition(&pt, p, 1e-8).m_y_plus.len(), 3);
    }

    #[test]
    fn both_positive_pairs_stay_free() {
        let pt = PointTriple::new(vec![], vec![1.0, 2.0], vec![1.0, 0.0]);
        let part = complement_partition(&pt, 1.0, 1e-8);
        assert_eq!(part.m_y_plus, vec![1]);
        assert!(part.m_z_plus.is_empty());
        assert_eq!(part.m_c, vec![0]);
    }

    #[test]
    fn partition_cover_is_validated() {
        assert!(IndexPartition::new(3, vec![0], vec![1], vec![2]).is_ok());
        assert!(matches!(
            IndexPartition::new(3, vec![0], vec![1], vec![1]),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            IndexPartition::new(3, vec![0], vec![1], vec![]),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            IndexPartition::new(2, vec![0, 1, 2], vec![], vec![]),
            Err(Error::InvalidPartition(_))
        ));
    }
}
