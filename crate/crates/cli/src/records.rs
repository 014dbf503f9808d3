//! Run records and their CSV form.
//!
//! Columns, in order: `instance, method, status, objective, time_s, nodes,
//! gap, trace`. Floats carry 12 significant digits; missing values are empty
//! fields.

use std::io::{Read, Write};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 8] = ["instance", "method", "status", "objective", "time_s", "nodes", "gap", "trace"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub method: String,
    pub status: String,
    /// Absent when the run produced no feasible point.
    pub objective: Option<f64>,
    pub time_s: f64,
    pub nodes: Option<usize>,
    pub gap: Option<f64>,
    /// Path of the trace file, relative to the output directory.
    pub trace: Option<String>,
}

/// `v` rounded to 12 significant digits, printed in the shortest form that
/// reads back as the rounded value.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn parse_float(field: &str, what: &str) -> Result<Option<f64>, CliError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::Format(format!("{what}: {field:?} is not a number")))
}

impl RunRecord {
    fn fields(&self) -> [String; 8] {
        [
            self.instance.clone(),
            self.method.clone(),
            self.status.clone(),
            self.objective.map(format_float).unwrap_or_default(),
            format_float(self.time_s),
            self.nodes.map(|n| n.to_string()).unwrap_or_default(),
            self.gap.map(format_float).unwrap_or_default(),
            self.trace.clone().unwrap_or_default(),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> Result<Self, CliError> {
        if row.len() != CSV_HEADER.len() {
            return Err(CliError::Format(format!("expected {} columns, found {}", CSV_HEADER.len(), row.len())));
        }
        let nodes = match &row[5] {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|_| CliError::Format(format!("nodes: {s:?} is not an integer")))?,
            ),
        };
        Ok(Self {
            instance: row[0].to_string(),
            method: row[1].to_string(),
            status: row[2].to_string(),
            objective: parse_float(&row[3], "objective")?,
            time_s: parse_float(&row[4], "time_s")?.unwrap_or(0.0),
            nodes,
            gap: parse_float(&row[6], "gap")?,
            trace: (!row[7].is_empty()).then(|| row[7].to_string()),
        })
    }
}

/// Appends records to a CSV stream; the header goes out on creation.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(CSV_HEADER)?;
        inner.flush().map_err(csv::Error::from)?;
        Ok(Self { inner })
    }

    pub fn append(&mut self, rec: &RunRecord) -> Result<(), CliError> {
        self.inner.write_record(rec.fields())?;
        self.inner.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<(), CliError> {
    let mut w = RecordWriter::new(out)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>, CliError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::Format(format!("unexpected CSV header {header:?}")));
    }
    reader
        .records()
        .map(|row| RunRecord::from_fields(&row?))
        .collect()
}
