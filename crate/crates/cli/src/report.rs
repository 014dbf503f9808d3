//! Summary tables computed from run records.
//!
//! Per instance, objectives are standardized over the methods that produced
//! one: `std_obj = (obj - min) / (max - min) * 100`, so the best method gets
//! 0 and the worst 100. `obj_imp` measures how much of the gap between the
//! `stationary` baseline and the best objective a method closes.
//!
//! The report is a pure function of the records, so regenerating it from a
//! stored CSV reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::records::{format_float, RunRecord};

/// Method whose objective plays the role of the local NLP solution in
/// `obj_imp`.
pub const BASELINE_METHOD: &str = "stationary";

/// `(obj - min) / (max - min) * 100`; 0 when the range is empty.
pub fn standardized_obj(obj: f64, min_obj: f64, max_obj: f64) -> f64 {
    if max_obj > min_obj {
        (obj - min_obj) / (max_obj - min_obj) * 100.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjImp {
    pub percent: f64,
    /// The baseline already attains the best objective; the percentage is
    /// 100 when the method is at least as good as the baseline, else 0.
    pub degenerate: bool,
}

/// `(baseline - method) / (baseline - min) * 100`.
pub fn obj_imp(baseline_obj: f64, method_obj: f64, min_obj: f64) -> ObjImp {
    if baseline_obj > min_obj {
        ObjImp {
            percent: (baseline_obj - method_obj) / (baseline_obj - min_obj) * 100.0,
            degenerate: false,
        }
    } else {
        ObjImp {
            percent: if method_obj <= baseline_obj { 100.0 } else { 0.0 },
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub instance: String,
    pub method: String,
    pub status: String,
    pub objective: Option<f64>,
    pub time_s: f64,
    pub std_obj: Option<f64>,
    pub obj_imp: Option<ObjImp>,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut range: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let mut baseline: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records {
        if let Some(v) = r.objective {
            let e = range.entry(&r.instance).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
            if r.method == BASELINE_METHOD {
                baseline.insert(&r.instance, v);
            }
        }
    }
    records
        .iter()
        .map(|r| {
            let (lo, hi) = range.get(r.instance.as_str()).copied().unwrap_or((0.0, 0.0));
            let base = baseline.get(r.instance.as_str()).copied();
            SummaryRow {
                instance: r.instance.clone(),
                method: r.method.clone(),
                status: r.status.clone(),
                objective: r.objective,
                time_s: r.time_s,
                std_obj: r.objective.map(|v| standardized_obj(v, lo, hi)),
                obj_imp: match (base, r.objective) {
                    (Some(b), Some(v)) => Some(obj_imp(b, v, lo)),
                    _ => None,
                },
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn imp(v: Option<ObjImp>) -> String {
    match v {
        None => String::new(),
        Some(o) if o.degenerate => format!("{}*", format_float(o.percent)),
        Some(o) => format_float(o.percent),
    }
}

/// Tab-separated report: one row per record, then per-method means.
/// Degenerate `obj_imp` values carry a trailing `*`.
pub fn render_summary(records: &[RunRecord]) -> String {
    let rows = summarize(records);
    let mut out = String::from("instance\tmethod\tstatus\tobjective\ttime_s\tstd_obj\tobj_imp\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.instance,
            r.method,
            r.status,
            opt(r.objective),
            format_float(r.time_s),
            opt(r.std_obj),
            imp(r.obj_imp)
        );
    }
    out.push_str("\nmethod\truns\tsolved\tmean_std_obj\tmean_obj_imp\tmean_time_s\n");
    let mut order: Vec<&str> = Vec::new();
    for r in &rows {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    for m in order {
        let mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.method == m).collect();
        let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        let std_mean = mean(mine.iter().filter_map(|r| r.std_obj).collect());
        let imp_mean = mean(mine.iter().filter_map(|r| r.obj_imp.map(|o| o.percent)).collect());
        let time_mean = mean(mine.iter().map(|r| r.time_s).collect());
        let _ = writeln!(
            out,
            "{m}\t{}\t{}\t{}\t{}\t{}",
            mine.len(),
            mine.iter().filter(|r| r.objective.is_some()).count(),
            opt(std_mean),
            opt(imp_mean),
            opt(time_mean)
        );
    }
    out
}
