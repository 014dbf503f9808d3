//! Exhaustive reference solvers for small LPCCs.
//!
//! `enumerate_global` solves one LP per complementarity pattern, visiting the
//! patterns in Gray-code order so consecutive LPs differ in two column bounds
//! and the previous basis stays a good start. `verify_local_min` solves the
//! LPs of the pieces that contain a given point.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{LpModel, LpStatus, LpTolerances, RowSense, Simplex};
use crate::model::{evaluate_objective, check_feasible, LpccInstance, PointTriple};
use crate::{Error, Matrix, Result};

/// Largest number of enumerated pairs for [`enumerate_global`].
pub const MAX_SCOPE: usize = 20;
/// Largest number of degenerate pairs for [`verify_local_min`].
pub const MAX_DEGENERATE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOptimum {
    pub objective: f64,
    pub triple: PointTriple,
    /// For each scoped pair (in scope order), `true` when `y = 0` was imposed.
    pub pattern: Vec<bool>,
    pub lps_solved: usize,
}

/// The LP over `(x, y, z)` with the instance rows and bounds, no
/// complementarity.
pub fn lpcc_relaxation(inst: &LpccInstance) -> LpModel {
    let (n, m, k) = (inst.n(), inst.m(), inst.k());
    let cols = n + 2 * m;
    let mut matrix = Matrix::zeros(k, cols);
    for r in 0..k {
        let row = matrix.row_mut(r);
        row[..n].copy_from_slice(inst.a_x.row(r));
        row[n..n + m].copy_from_slice(inst.b_y.row(r));
        row[n + m..].copy_from_slice(inst.c_z.row(r));
    }
    let mut objective = inst.cost_x.clone();
    objective.extend_from_slice(&inst.cost_y);
    objective.extend_from_slice(&inst.cost_z);
    let mut lower = inst.x_lower.clone();
    lower.resize(lower.len() + 2 * m, 0.0);
    let mut upper = inst.x_upper.clone();
    upper.extend_from_slice(&inst.y_upper);
    upper.extend_from_slice(&inst.z_upper);
    LpModel {
        objective,
        matrix,
        senses: vec![RowSense::Eq; k],
        rhs: inst.rhs.clone(),
        lower,
        upper,
    }
}

fn split(inst: &LpccInstance, v: &[f64]) -> PointTriple {
    let (n, m) = (inst.n(), inst.m());
    PointTriple::new(v[..n].to_vec(), v[n..n + m].to_vec(), v[n + m..].to_vec())
}

/// Pins pair `i` to `y = 0` (`zero_y`) or `z = 0`.
fn pin(lp: &mut Simplex, inst: &LpccInstance, i: usize, zero_y: bool) {
    let (n, m) = (inst.n(), inst.m());
    if zero_y {
        lp.set_bounds(n + i, 0.0, 0.0);
        lp.set_bounds(n + m + i, 0.0, inst.z_upper[i]);
    } else {
        lp.set_bounds(n + i, 0.0, inst.y_upper[i]);
        lp.set_bounds(n + m + i, 0.0, 0.0);
    }
}

/// Global optimum over all complementarity patterns of the pairs in `scope`
/// (all pairs when `None`). Pairs outside the scope keep both sides
/// nonnegative with no complementarity.
///
/// Returns `Error::Infeasible` when every pattern LP is infeasible and
/// `Error::Unbounded` when some pattern LP is unbounded.
pub fn enumerate_global(inst: &LpccInstance, scope: Option<&[usize]>) -> Result<GlobalOptimum> {
    inst.validate()?;
    let m = inst.m();
    let all: Vec<usize> = (0..m).collect();
    let scope = scope.unwrap_or(&all);
    if scope.len() > MAX_SCOPE {
        return Err(Error::ScopeTooLarge {
            count: scope.len(),
            limit: MAX_SCOPE,
        });
    }
    if let Some(&bad) = scope.iter().find(|&&i| i >= m) {
        return Err(Error::Dimension(format!("scope index {bad} with m={m}")));
    }
    let mut lp = Simplex::new(&lpcc_relaxation(inst), LpTolerances::default())?;
    let mut pattern = vec![false; scope.len()];
    for (s, &i) in scope.iter().enumerate() {
        pin(&mut lp, inst, i, pattern[s]);
    }
    let mut best: Option<GlobalOptimum> = None;
    let total: u64 = 1 << scope.len();
    for step in 0..total {
        if step > 0 {
            // Gray code: flip the lowest set bit position of `step`
            let s = step.trailing_zeros() as usize;
            pattern[s] = !pattern[s];
            pin(&mut lp, inst, scope[s], pattern[s]);
        }
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => return Err(Error::Unbounded),
            LpStatus::Optimal => {
                if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
                    best = Some(GlobalOptimum {
                        objective: sol.objective,
                        triple: split(inst, &sol.x),
                        pattern: pattern.clone(),
                        lps_solved: 0,
                    });
                }
            }
        }
    }
    let mut best = best.ok_or(Error::Infeasible)?;
    best.lps_solved = total as usize;
    Ok(best)
}

/// Whether `triple` is a local minimizer: no LP over a complementarity piece
/// containing it has a value below `objective(triple) - tol`.
///
/// Pairs with both sides at most `tol` are degenerate and contribute both
/// pieces.
pub fn verify_local_min(inst: &LpccInstance, triple: &PointTriple, tol: f64) -> Result<bool> {
    let report = check_feasible(inst, triple)?;
    let scale = 1.0f64.max(triple.x.iter().chain(&triple.y).chain(&triple.z).fold(0.0, |a, v| a.max(v.abs())));
    if !report.is_feasible(1e-6 * scale) {
        return Err(Error::InvalidInstance(format!(
            "triple is not feasible (violation {:.3e})",
            report.max_violation()
        )));
    }
    let m = inst.m();
    let mut degenerate = Vec::new();
    let mut lp = Simplex::new(&lpcc_relaxation(inst), LpTolerances::default())?;
    for i in 0..m {
        let (y, z) = (triple.y[i], triple.z[i]);
        if y > tol && z > tol {
            return Err(Error::InvalidInstance(format!("pair {i} has both sides positive")));
        }
        if y > tol {
            pin(&mut lp, inst, i, false);
        } else if z > tol {
            pin(&mut lp, inst, i, true);
        } else {
            degenerate.push(i);
        }
    }
    if degenerate.len() > MAX_DEGENERATE {
        return Err(Error::ScopeTooLarge {
            count: degenerate.len(),
            limit: MAX_DEGENERATE,
        });
    }
    let obj = evaluate_objective(inst, triple)?;
    let threshold = obj - tol * obj.abs().max(1.0);
    let mut pattern = vec![false; degenerate.len()];
    for (s, &i) in degenerate.iter().enumerate() {
        pin(&mut lp, inst, i, pattern[s]);
    }
    let total: u64 = 1 << degenerate.len();
    for step in 0..total {
        if step > 0 {
            let s = step.trailing_zeros() as usize;
            pattern[s] = !pattern[s];
            pin(&mut lp, inst, degenerate[s], pattern[s]);
        }
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Unbounded => return Ok(false),
            LpStatus::Optimal if sol.objective < threshold => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}
