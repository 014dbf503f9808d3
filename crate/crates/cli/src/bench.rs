//! Benchmark sweeps driven by a TOML file.
//!
//! ```toml
//! methods = ["stationary", "pip:0.9", "fmip"]
//! instances = ["inst/a.json"]          # optional, relative to this file
//!
//! [budgets]                            # optional, see `Budgets`
//! time_limit = 60.0
//! sub_time_limit = 10.0
//!
//! [[generate]]                         # optional, repeatable
//! family = "stqp"                      # stqp | invqp | random | qp | qap
//! seeds = [1, 2, 3]
//! n = [20]
//! rho = [0.5, 0.75]
//! ```
//!
//! Size keys per family: `stqp`: `n`, `rho`; `invqp`: `m`, `n`, plus scalar
//! `sparsity`, `perturbation`; `random`: `n`, `m`, `k`; `qp`: `n`, `m`, plus
//! scalar `psd`, `big_m`; `qap`: `files` (QAPLIB paths) and scalar `margin`.
//! Every combination of the listed sizes and seeds becomes one instance.
//!
//! Output directory layout: `records.csv`, `summary.tsv`, `instances/` (the
//! generated instance files) and `traces/` (one JSONL file per cell).

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use lpcc_core::gen::{parse_qaplib, InvQpOptions};
use serde::Deserialize;

use crate::error::CliError;
use crate::instance::{invqp_instance, qap_instance, qp_instance, random_instance, stqp_instance, Instance};
use crate::methods::{run_method, Budgets, Method, RunOutcome};
use crate::records::{RecordWriter, RunRecord};
use crate::report::render_summary;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub family: String,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub rho: Vec<f64>,
    pub sparsity: Option<f64>,
    pub perturbation: Option<f64>,
    pub psd: Option<bool>,
    pub big_m: Option<f64>,
    #[serde(default)]
    pub files: Vec<PathBuf>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub generate: Vec<GenerateSpec>,
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.budgets.validate()?;
        cfg.methods()?;
        Ok(cfg)
    }

    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    /// Loads listed instance files (relative to `base`) and generates the
    /// requested families.
    pub fn instances(&self, base: &Path) -> Result<Vec<Instance>, CliError> {
        let mut out = Vec::new();
        for p in &self.instances {
            out.push(Instance::read(&base.join(p))?);
        }
        for spec in &self.generate {
            out.extend(generate(spec, base)?);
        }
        Ok(out)
    }
}

fn need<T: Clone>(v: &[T], key: &str, family: &str) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("family {family} needs a non-empty `{key}` list")));
    }
    Ok(v.to_vec())
}

pub fn generate(spec: &GenerateSpec, base: &Path) -> Result<Vec<Instance>, CliError> {
    let fam = spec.family.as_str();
    let mut out = Vec::new();
    match fam {
        "stqp" => {
            for n in need(&spec.n, "n", fam)? {
                for rho in need(&spec.rho, "rho", fam)? {
                    for &s in &need(&spec.seeds, "seeds", fam)? {
                        out.push(stqp_instance(n, rho, s)?);
                    }
                }
            }
        }
        "invqp" => {
            let defaults = InvQpOptions::default();
            let opts = InvQpOptions {
                sparsity: spec.sparsity.unwrap_or(defaults.sparsity),
                perturbation: spec.perturbation.unwrap_or(defaults.perturbation),
                ..defaults
            };
            for m in need(&spec.m, "m", fam)? {
                for n in need(&spec.n, "n", fam)? {
                    for &s in &need(&spec.seeds, "seeds", fam)? {
                        out.push(invqp_instance(m, n, s, &opts)?);
                    }
                }
            }
        }
        "random" => {
            for n in need(&spec.n, "n", fam)? {
                for m in need(&spec.m, "m", fam)? {
                    for k in need(&spec.k, "k", fam)? {
                        for &s in &need(&spec.seeds, "seeds", fam)? {
                            out.push(random_instance(n, m, k, s)?);
                        }
                    }
                }
            }
        }
        "qp" => {
            for n in need(&spec.n, "n", fam)? {
                for m in need(&spec.m, "m", fam)? {
                    for &s in &need(&spec.seeds, "seeds", fam)? {
                        out.push(qp_instance(n, m, spec.psd.unwrap_or(false), spec.big_m.unwrap_or(100.0), s)?);
                    }
                }
            }
        }
        "qap" => {
            for f in need(&spec.files, "files", fam)? {
                let path = base.join(&f);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                let qap = parse_qaplib(&text)?;
                let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                out.push(qap_instance(&name, &qap, spec.margin.unwrap_or(1.0))?);
            }
        }
        other => return Err(CliError::Config(format!("unknown family {other:?}"))),
    }
    Ok(out)
}

/// File-name-safe form of an identifier.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes the trace of `outcome` under `out_dir/traces` and records its
/// relative path in the outcome's record.
pub fn store_trace(out_dir: &Path, outcome: &mut RunOutcome) -> Result<(), CliError> {
    if outcome.trace.is_empty() {
        return Ok(());
    }
    let rel = format!(
        "traces/{}__{}.jsonl",
        slug(&outcome.record.instance),
        slug(&outcome.record.method)
    );
    let path = out_dir.join(&rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = String::new();
    for line in &outcome.trace {
        text.push_str(&serde_json::to_string(line).expect("trace lines serialize"));
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    outcome.record.trace = Some(rel);
    Ok(())
}

/// Runs every (instance, method) cell and writes the output directory.
/// Cell failures are recorded as status rows.
pub fn run_bench(cfg: &BenchConfig, base: &Path, out_dir: &Path) -> Result<Vec<RunRecord>, CliError> {
    let methods = cfg.methods()?;
    let instances = cfg.instances(base)?;
    let inst_dir = out_dir.join("instances");
    std::fs::create_dir_all(&inst_dir).map_err(|e| CliError::io(&inst_dir, e))?;
    for inst in &instances {
        inst.write(&inst_dir.join(format!("{}.json", slug(inst.id()))))?;
    }
    let csv_path = out_dir.join("records.csv");
    let file = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let mut writer = RecordWriter::new(file)?;
    let mut records = Vec::new();
    for inst in &instances {
        for &m in &methods {
            let mut outcome = run_method(inst, m, &cfg.budgets);
            store_trace(out_dir, &mut outcome)?;
            writer.append(&outcome.record)?;
            records.push(outcome.record);
        }
    }
    write_summary(out_dir, &records)?;
    Ok(records)
}

pub fn write_summary(out_dir: &Path, records: &[RunRecord]) -> Result<(), CliError> {
    let path = out_dir.join("summary.tsv");
    let mut f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    f.write_all(render_summary(records).as_bytes())
        .map_err(|e| CliError::io(&path, e))
}
