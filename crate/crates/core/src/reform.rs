//! Mixed-binary models built from an LPCC.
//!
//! All builders share one column layout: `x` block, then `y`, then `z`, then
//! one binary per complementarity pair left to the search. Fixed pairs keep
//! their columns with zero bounds on the pinned side.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::lp::{LpModel, RowSense};
use crate::model::{IndexPartition, LpccInstance, PointTriple, DEFAULT_POSITIVITY_TOL};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum VarKind {
    Continuous,
    Binary,
}

/// What an LPCC quantity a model column stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Role {
    X(usize),
    Y(usize),
    Z(usize),
    /// Indicator with `w = 1` allowing `y_i > 0` and `w = 0` allowing `z_i > 0`.
    W(usize),
    /// Indicator with the opposite orientation: `w = 1` allows `z_i > 0`.
    WComplement(usize),
    Aux,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constraint {
    pub name: String,
    /// Sparse `(column, coefficient)` entries.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Minimization model over continuous and binary columns.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MilpModel {
    pub columns: Vec<Column>,
    pub rows: Vec<Constraint>,
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self {
            columns: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn add_column(&mut self, name: String, lower: f64, upper: f64, kind: VarKind, role: Role, cost: f64) -> usize {
        self.columns.push(Column {
            name,
            lower,
            upper,
            kind,
            role,
        });
        self.objective.push(cost);
        self.columns.len() - 1
    }

    pub fn add_row(&mut self, name: String, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) {
        self.rows.push(Constraint {
            name,
            coeffs,
            sense,
            rhs,
        });
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn binary_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].kind == VarKind::Binary)
            .collect()
    }

    pub fn num_binaries(&self) -> usize {
        self.columns.iter().filter(|c| c.kind == VarKind::Binary).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.columns.len() {
            return Err(Error::Dimension("objective length".into()));
        }
        for c in &self.columns {
            if c.lower.is_nan() || c.upper.is_nan() || c.lower > c.upper {
                return Err(Error::InvalidInstance(format!("column {} bounds", c.name)));
            }
            if c.kind == VarKind::Binary && (c.lower < 0.0 || c.upper > 1.0) {
                return Err(Error::InvalidInstance(format!("binary {} outside [0,1]", c.name)));
            }
        }
        for r in &self.rows {
            if r.coeffs.iter().any(|&(j, a)| j >= self.columns.len() || !a.is_finite()) || !r.rhs.is_finite() {
                return Err(Error::InvalidInstance(format!("row {}", r.name)));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        crate::math::dot(&self.objective, values)
    }

    pub fn solution(&self, values: Vec<f64>) -> ModelSolution {
        let objective = self.evaluate(&values);
        ModelSolution { values, objective }
    }

    /// Largest violation of rows, bounds and integrality.
    pub fn max_violation(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "solution has {} values, model {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        let mut worst = 0.0f64;
        for (c, &v) in self.columns.iter().zip(values) {
            worst = worst.max(c.lower - v).max(v - c.upper);
            if c.kind == VarKind::Binary {
                worst = worst.max(v.min(1.0 - v).max(0.0));
            }
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * values[j]).sum();
            let viol = match r.sense {
                RowSense::Eq => (lhs - r.rhs).abs(),
                RowSense::Le => lhs - r.rhs,
                RowSense::Ge => r.rhs - lhs,
            };
            worst = worst.max(viol);
        }
        if worst.is_nan() {
            return Ok(f64::INFINITY);
        }
        Ok(worst)
    }

    /// Continuous relaxation as a dense LP.
    pub fn relaxation(&self) -> LpModel {
        let n = self.columns.len();
        let mut matrix = Matrix::zeros(self.rows.len(), n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                matrix[(i, j)] += a;
            }
        }
        LpModel {
            objective: self.objective.clone(),
            matrix,
            senses: self.rows.iter().map(|r| r.sense).collect(),
            rhs: self.rows.iter().map(|r| r.rhs).collect(),
            lower: self.columns.iter().map(|c| c.lower).collect(),
            upper: self.columns.iter().map(|c| c.upper).collect(),
        }
    }

    pub fn find_role(&self, role: Role) -> Option<usize> {
        self.columns.iter().position(|c| c.role == role)
    }

    /// Writes the model in CPLEX LP text format. Columns and rows keep their
    /// model names; numbers use the shortest representation that round-trips.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ columns: x#, y#, z# for the LPCC blocks, w# for indicators");
        let _ = writeln!(out, "Minimize");
        let _ = write!(out, " obj:");
        let terms: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        self.write_terms(&mut out, &terms);
        let _ = writeln!(out);
        let _ = writeln!(out, "Subject To");
        for r in &self.rows {
            let _ = write!(out, " {}:", r.name);
            self.write_terms(&mut out, &r.coeffs);
            let op = match r.sense {
                RowSense::Eq => "=",
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", r.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for c in &self.columns {
            match (c.lower.is_finite(), c.upper.is_finite()) {
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", c.lower, c.name, c.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", c.name, c.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", c.name, c.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {} free", c.name);
                }
            }
        }
        let bins: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| c.kind == VarKind::Binary)
            .map(|c| c.name.as_str())
            .collect();
        if !bins.is_empty() {
            let _ = writeln!(out, "Binaries");
            for b in bins {
                let _ = writeln!(out, " {b}");
            }
        }
        let _ = writeln!(out, "End");
        out
    }

    fn write_terms(&self, out: &mut String, terms: &[(usize, f64)]) {
        if terms.is_empty() {
            let _ = write!(out, " 0 {}", self.columns.first().map(|c| c.name.as_str()).unwrap_or("x0"));
            return;
        }
        for &(j, a) in terms {
            let name = &self.columns[j].name;
            if a < 0.0 {
                let _ = write!(out, " - {} {name}", -a);
            } else {
                let _ = write!(out, " + {a} {name}");
            }
        }
    }
}

impl Default for MilpModel {
    fn default() -> Self {
        Self::new()
    }
}

/// How each pair is treated by a builder.
#[derive(Clone, Copy, PartialEq)]
enum PairMode {
    Binary,
    /// `y_i` may be positive, `z_i = 0`.
    YSide,
    /// `z_i` may be positive, `y_i = 0`.
    ZSide,
    /// `y_i = 0` and `z_i` unrestricted in sign.
    ZFree,
    /// Both nonnegative, no complementarity.
    Relaxed,
}

fn build(inst: &LpccInstance, modes: &[PairMode]) -> Result<MilpModel> {
    inst.validate()?;
    let (n, m, k) = (inst.n(), inst.m(), inst.k());
    let mut model = MilpModel::new();
    for j in 0..n {
        model.add_column(
            format!("x{j}"),
            inst.x_lower[j],
            inst.x_upper[j],
            VarKind::Continuous,
            Role::X(j),
            inst.cost_x[j],
        );
    }
    for i in 0..m {
        let up = if modes[i] == PairMode::ZSide || modes[i] == PairMode::ZFree {
            0.0
        } else {
            inst.y_upper[i]
        };
        model.add_column(format!("y{i}"), 0.0, up, VarKind::Continuous, Role::Y(i), inst.cost_y[i]);
    }
    for i in 0..m {
        let (lo, up) = match modes[i] {
            PairMode::YSide => (0.0, 0.0),
            PairMode::ZFree => (f64::NEG_INFINITY, f64::INFINITY),
            _ => (0.0, inst.z_upper[i]),
        };
        model.add_column(format!("z{i}"), lo, up, VarKind::Continuous, Role::Z(i), inst.cost_z[i]);
    }
    for r in 0..k {
        let mut coeffs = Vec::new();
        for (j, &a) in inst.a_x.row(r).iter().enumerate() {
            if a != 0.0 {
                coeffs.push((j, a));
            }
        }
        for (i, &b) in inst.b_y.row(r).iter().enumerate() {
            if b != 0.0 {
                coeffs.push((n + i, b));
            }
        }
        for (i, &c) in inst.c_z.row(r).iter().enumerate() {
            if c != 0.0 {
                coeffs.push((n + m + i, c));
            }
        }
        model.add_row(format!("eq{r}"), coeffs, RowSense::Eq, inst.rhs[r]);
    }
    for i in 0..m {
        if modes[i] != PairMode::Binary {
            continue;
        }
        let w = model.add_column(format!("w{i}"), 0.0, 1.0, VarKind::Binary, Role::W(i), 0.0);
        model.add_row(
            format!("ybig{i}"),
            vec![(n + i, 1.0), (w, -inst.y_upper[i])],
            RowSense::Le,
            0.0,
        );
        model.add_row(
            format!("zbig{i}"),
            vec![(n + m + i, 1.0), (w, inst.z_upper[i])],
            RowSense::Le,
            inst.z_upper[i],
        );
    }
    Ok(model)
}

/// Big-M reformulation with one indicator per pair.
pub fn build_full_milp(inst: &LpccInstance) -> Result<MilpModel> {
    build(inst, &vec![PairMode::Binary; inst.m()])
}

/// Indicators only on `part.m_c`; `M_y+` pairs get `z = 0`, `M_z+` pairs `y = 0`.
pub fn build_partial_milp(inst: &LpccInstance, part: &IndexPartition) -> Result<MilpModel> {
    part.check_cover(inst.m())?;
    let mut modes = vec![PairMode::Binary; inst.m()];
    for &i in &part.m_y_plus {
        modes[i] = PairMode::YSide;
    }
    for &i in &part.m_z_plus {
        modes[i] = PairMode::ZSide;
    }
    build(inst, &modes)
}

/// Checks that `inst` has the shape produced by [`crate::qp::qp_to_lpcc`]:
/// `n` free `x` columns, `m` pairs `(s, lambda)` and `n + m` rows.
fn check_kkt_shape(inst: &LpccInstance) -> Result<()> {
    if inst.k() != inst.n() + inst.m() {
        return Err(Error::Dimension(format!(
            "KKT system needs n + m = {} rows, found {}",
            inst.n() + inst.m(),
            inst.k()
        )));
    }
    Ok(())
}

/// Restricted KKT model. In the partition, `m_y_plus` holds the pairs with
/// positive slack (`lambda = 0`) and `m_z_plus` the pairs with positive
/// multiplier (`s = 0`).
pub fn build_restricted_kkt_milp(qp_lpcc: &LpccInstance, part: &IndexPartition) -> Result<MilpModel> {
    check_kkt_shape(qp_lpcc)?;
    build_partial_milp(qp_lpcc, part)
}

/// Relaxation of the restricted KKT model: on `m_z_plus` the slack is zero
/// and the multiplier is free; on `m_y_plus` both stay nonnegative without
/// complementarity.
pub fn build_relaxed_restricted_kkt(qp_lpcc: &LpccInstance, part: &IndexPartition) -> Result<MilpModel> {
    check_kkt_shape(qp_lpcc)?;
    part.check_cover(qp_lpcc.m())?;
    let mut modes = vec![PairMode::Binary; qp_lpcc.m()];
    for &i in &part.m_y_plus {
        modes[i] = PairMode::Relaxed;
    }
    for &i in &part.m_z_plus {
        modes[i] = PairMode::ZFree;
    }
    build(qp_lpcc, &modes)
}

/// Reads `(x, y, z)` back from a model solution using the role tags.
pub fn extract_triple(model: &MilpModel, sol: &ModelSolution) -> Result<PointTriple> {
    if sol.values.len() != model.num_cols() {
        return Err(Error::Dimension(format!(
            "solution has {} values, model {} columns",
            sol.values.len(),
            model.num_cols()
        )));
    }
    let (mut n, mut m) = (0, 0);
    for c in &model.columns {
        match c.role {
            Role::X(j) => n = n.max(j + 1),
            Role::Y(i) | Role::Z(i) => m = m.max(i + 1),
            _ => {}
        }
    }
    let mut pt = PointTriple::zeros(n, m);
    let mut seen = vec![false; n + 2 * m];
    for (c, &v) in model.columns.iter().zip(&sol.values) {
        match c.role {
            Role::X(j) => {
                pt.x[j] = v;
                seen[j] = true;
            }
            Role::Y(i) => {
                pt.y[i] = v;
                seen[n + i] = true;
            }
            Role::Z(i) => {
                pt.z[i] = v;
                seen[n + m + i] = true;
            }
            _ => {}
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Internal(format!("model has no column for LPCC entry {missing}")));
    }
    Ok(pt)
}

/// Places a triple into the model's columns. Indicators are set so the
/// big-M rows hold; a pair with both sides at zero gets indicator 0.
pub fn embed_triple(model: &MilpModel, pt: &PointTriple) -> Result<ModelSolution> {
    let mut values = vec![0.0; model.num_cols()];
    let get = |v: &[f64], i: usize| -> Result<f64> {
        v.get(i)
            .copied()
            .ok_or_else(|| Error::Dimension(format!("triple lacks entry {i}")))
    };
    for (j, c) in model.columns.iter().enumerate() {
        values[j] = match c.role {
            Role::X(k) => get(&pt.x, k)?,
            Role::Y(i) => get(&pt.y, i)?,
            Role::Z(i) => get(&pt.z, i)?,
            Role::W(i) => f64::from(u8::from(get(&pt.y, i)? > DEFAULT_POSITIVITY_TOL)),
            Role::WComplement(i) => f64::from(u8::from(get(&pt.z, i)? > DEFAULT_POSITIVITY_TOL)),
            Role::Aux => 0.0,
        };
    }
    Ok(model.solution(values))
}
