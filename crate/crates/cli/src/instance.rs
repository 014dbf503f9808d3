//! JSON instance files.
//!
//! Layout (all matrices dense row-major as `{"rows", "cols", "data"}`):
//!
//! ```text
//! {
//!   "id": "stqp-n20-rho0.5-s3",
//!   "family": "stqp" | "qap" | "invqp" | "random" | "qp" | "lpcc",
//!   "metadata": { "seed": 3, "scheme": "1", "params": { ... } },
//!   "lpcc": {
//!     "cost_x": [..], "cost_y": [..], "cost_z": [..],
//!     "a_x": M, "b_y": M, "c_z": M, "rhs": [..], "big_m": 10.0,
//!     "x_lower": [..], "x_upper": [..], "y_upper": [..], "z_upper": [..]
//!   },
//!   "qp": { "q": M, "c": [..], "d_mat": M, "d": [..] },        optional
//!   "start": { "x": [..], "y": [..], "z": [..] },              optional
//!   "oracle_scope": [..],                                      optional
//!   "qap_shift": { "alpha": .., "n": .. }                      optional
//! }
//! ```
//!
//! Infinite bounds are written as `null` (`-inf` in `x_lower`, `+inf` in the
//! upper-bound arrays). `qp` holds the QP whose KKT system the LPCC encodes,
//! when there is one; `stationary` runs on it.

use std::collections::BTreeMap;
use std::path::Path;

use lpcc_core::gen::{
    gen_invqp_with, gen_random_lpcc, gen_random_qp, gen_stqp, qap_to_lpcc, qap_to_qp, stqp_to_lpcc, InvQpOptions,
    QapData, SCHEME_VERSION,
};
use lpcc_core::model::{LpccInstance, PointTriple};
use lpcc_core::qp::{qp_to_lpcc, QpInstance};
use lpcc_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Stqp,
    Qap,
    Invqp,
    Random,
    Qp,
    Lpcc,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Stqp => "stqp",
            Family::Qap => "qap",
            Family::Invqp => "invqp",
            Family::Random => "random",
            Family::Qp => "qp",
            Family::Lpcc => "lpcc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: Option<u64>,
    pub scheme: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpccFile {
    pub cost_x: Vec<f64>,
    pub cost_y: Vec<f64>,
    pub cost_z: Vec<f64>,
    pub a_x: Matrix,
    pub b_y: Matrix,
    pub c_z: Matrix,
    pub rhs: Vec<f64>,
    pub big_m: f64,
    pub x_lower: Vec<Option<f64>>,
    pub x_upper: Vec<Option<f64>>,
    pub y_upper: Vec<Option<f64>>,
    pub z_upper: Vec<Option<f64>>,
}

fn to_file(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&b| b.is_finite().then_some(b)).collect()
}

fn from_file(v: &[Option<f64>], missing: f64) -> Vec<f64> {
    v.iter().map(|b| b.unwrap_or(missing)).collect()
}

impl LpccFile {
    pub fn from_instance(inst: &LpccInstance) -> Self {
        Self {
            cost_x: inst.cost_x.clone(),
            cost_y: inst.cost_y.clone(),
            cost_z: inst.cost_z.clone(),
            a_x: inst.a_x.clone(),
            b_y: inst.b_y.clone(),
            c_z: inst.c_z.clone(),
            rhs: inst.rhs.clone(),
            big_m: inst.big_m,
            x_lower: to_file(&inst.x_lower),
            x_upper: to_file(&inst.x_upper),
            y_upper: to_file(&inst.y_upper),
            z_upper: to_file(&inst.z_upper),
        }
    }

    pub fn to_instance(&self) -> Result<LpccInstance, CliError> {
        let inst = LpccInstance::new(
            self.cost_x.clone(),
            self.cost_y.clone(),
            self.cost_z.clone(),
            self.a_x.clone(),
            self.b_y.clone(),
            self.c_z.clone(),
            self.rhs.clone(),
            self.big_m,
        )?
        .with_x_bounds(from_file(&self.x_lower, f64::NEG_INFINITY), from_file(&self.x_upper, f64::INFINITY))?
        .with_pair_bounds(from_file(&self.y_upper, f64::INFINITY), from_file(&self.z_upper, f64::INFINITY))?;
        Ok(inst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QapShift {
    pub alpha: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub id: String,
    pub family: Family,
    pub metadata: Metadata,
    pub lpcc: LpccFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qp: Option<QpInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<PointTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_scope: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qap_shift: Option<QapShift>,
}

/// An instance file with its LPCC decoded and validated.
#[derive(Debug, Clone)]
pub struct Instance {
    pub file: InstanceFile,
    pub lpcc: LpccInstance,
}

impl Instance {
    pub fn from_file(file: InstanceFile) -> Result<Self, CliError> {
        let lpcc = file.lpcc.to_instance()?;
        if let Some(qp) = &file.qp {
            qp.validate()?;
        }
        if let Some(s) = &file.start {
            if s.x.len() != lpcc.n() || s.y.len() != lpcc.m() || s.z.len() != lpcc.m() {
                return Err(CliError::Format(format!("{}: start point has the wrong shape", file.id)));
            }
        }
        Ok(Self { file, lpcc })
    }

    fn build(
        id: String,
        family: Family,
        seed: Option<u64>,
        params: BTreeMap<String, f64>,
        lpcc: LpccInstance,
    ) -> Self {
        let file = InstanceFile {
            id,
            family,
            metadata: Metadata {
                seed,
                scheme: SCHEME_VERSION.to_string(),
                params,
            },
            lpcc: LpccFile::from_instance(&lpcc),
            qp: None,
            start: None,
            oracle_scope: None,
            qap_shift: None,
        };
        Self { file, lpcc }
    }

    pub fn id(&self) -> &str {
        &self.file.id
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: InstanceFile =
            serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("instance files always serialize")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| CliError::io(path, e))
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn stqp_instance(n: usize, rho: f64, seed: u64) -> Result<Instance, CliError> {
    let s = gen_stqp(n, rho, seed)?;
    let lpcc = stqp_to_lpcc(&s)?;
    let mut inst = Instance::build(
        format!("stqp-n{n}-rho{rho}-s{seed}"),
        Family::Stqp,
        Some(seed),
        params(&[("n", n as f64), ("rho", rho)]),
        lpcc,
    );
    inst.file.qp = Some(s.to_qp()?);
    Ok(inst)
}

pub fn invqp_instance(m: usize, n: usize, seed: u64, opts: &InvQpOptions) -> Result<Instance, CliError> {
    let inv = gen_invqp_with(m, n, seed, opts)?;
    let mut inst = Instance::build(
        format!("invqp-m{m}-n{n}-s{seed}"),
        Family::Invqp,
        Some(seed),
        params(&[
            ("m", m as f64),
            ("n", n as f64),
            ("sparsity", opts.sparsity),
            ("perturbation", opts.perturbation),
            ("bound", opts.bound),
        ]),
        inv.lpcc.clone(),
    );
    inst.file.start = Some(inv.feasible_start());
    Ok(inst)
}

pub fn random_instance(n: usize, m: usize, k: usize, seed: u64) -> Result<Instance, CliError> {
    let r = gen_random_lpcc(n, m, k, seed)?;
    let mut inst = Instance::build(
        format!("random-n{n}-m{m}-k{k}-s{seed}"),
        Family::Random,
        Some(seed),
        params(&[("n", n as f64), ("m", m as f64), ("k", k as f64)]),
        r.lpcc,
    );
    inst.file.start = Some(r.planted);
    Ok(inst)
}

pub fn qp_instance(n: usize, m: usize, psd: bool, big_m: f64, seed: u64) -> Result<Instance, CliError> {
    let qp = gen_random_qp(n, m, psd, seed)?;
    let lpcc = qp_to_lpcc(&qp, big_m)?;
    let mut inst = Instance::build(
        format!("qp-n{n}-m{m}{}-s{seed}", if psd { "-psd" } else { "" }),
        Family::Qp,
        Some(seed),
        params(&[("n", n as f64), ("m", m as f64), ("psd", psd as u8 as f64), ("big_m", big_m)]),
        lpcc,
    );
    inst.file.qp = Some(qp);
    Ok(inst)
}

/// Wraps a given QP as an instance with KKT multiplier bound `big_m`.
pub fn qp_instance_from(id: &str, qp: QpInstance, big_m: f64) -> Result<Instance, CliError> {
    let lpcc = qp_to_lpcc(&qp, big_m)?;
    let mut inst = Instance::build(id.to_string(), Family::Qp, None, params(&[("big_m", big_m)]), lpcc);
    inst.file.qp = Some(qp);
    Ok(inst)
}

pub fn qap_instance(name: &str, qap: &QapData, margin: f64) -> Result<Instance, CliError> {
    let lift = qap_to_qp(qap, margin)?;
    let lpcc = qap_to_lpcc(&lift)?;
    let mut inst = Instance::build(
        format!("qap-{name}"),
        Family::Qap,
        None,
        params(&[("n", qap.n as f64), ("margin", margin)]),
        lpcc,
    );
    inst.file.oracle_scope = Some((0..lift.dim()).collect());
    inst.file.qap_shift = Some(QapShift {
        alpha: lift.alpha,
        n: qap.n,
    });
    inst.file.qp = Some(lift.qp);
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_bounds_survive_a_round_trip() {
        let inst = qp_instance(2, 4, false, 10.0, 1).unwrap();
        assert!(inst.lpcc.x_lower.iter().all(|b| *b == f64::NEG_INFINITY));
        let json = inst.to_json();
        assert!(json.contains("null"));
        let back: InstanceFile = serde_json::from_str(&json).unwrap();
        let back = Instance::from_file(back).unwrap();
        assert_eq!(back.lpcc, inst.lpcc);
        assert_eq!(back.file, inst.file);
    }
}
