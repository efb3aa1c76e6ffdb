//! CSV and JSON writers for experiment outputs.
//!
//! CSV uses LF line endings and locale-free float formatting; every row
//! carries the manifest hash.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::manifest::ExperimentManifest;
use crate::recovery::PhaseRow;
use crate::rip::{RipReport, ScalingRow, TailEstimate};

pub trait CsvRecord {
    const HEADER: &'static [&'static str];

    fn fields(&self) -> Vec<String>;
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
fn num(v: f64) -> String {
    format!("{v:?}")
}

impl CsvRecord for ScalingRow {
    const HEADER: &'static [&'static str] = &[
        "m",
        "n",
        "b",
        "s",
        "trials",
        "mean_value",
        "std_value",
        "bound_proxy",
        "method",
        "in_theorem_regime",
        "degenerate",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.n.to_string(),
            self.b.to_string(),
            self.s.to_string(),
            self.trials.to_string(),
            num(self.mean_value),
            num(self.std_value),
            num(self.bound_proxy),
            self.method.as_str().to_string(),
            self.in_theorem_regime.to_string(),
            self.degenerate.to_string(),
        ]
    }
}

impl CsvRecord for PhaseRow {
    const HEADER: &'static [&'static str] =
        &["s", "trials", "successes", "rate", "mean_iterations", "mean_residual", "solver"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.s.to_string(),
            self.trials.to_string(),
            self.successes.to_string(),
            num(self.rate),
            num(self.mean_iterations),
            num(self.mean_residual),
            self.solver.clone(),
        ]
    }
}

impl CsvRecord for TailEstimate {
    const HEADER: &'static [&'static str] =
        &["m", "n", "b", "s", "delta", "trials", "exceedances", "probability", "method"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.n.to_string(),
            self.b.to_string(),
            self.s.to_string(),
            num(self.delta),
            self.trials.to_string(),
            self.exceedances.to_string(),
            num(self.probability),
            self.method.as_str().to_string(),
        ]
    }
}

impl CsvRecord for RipReport {
    const HEADER: &'static [&'static str] =
        &["s", "value", "method", "supports_evaluated", "extremal_support", "in_theorem_regime"];

    fn fields(&self) -> Vec<String> {
        let support: Vec<String> = self.extremal_support.iter().map(|i| i.to_string()).collect();
        vec![
            self.s.to_string(),
            num(self.value),
            self.method.as_str().to_string(),
            self.supports_evaluated.to_string(),
            support.join(" "),
            self.in_theorem_regime.to_string(),
        ]
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Rows of `T` followed by a `manifest_hash` column.
pub fn rows_to_csv<T: CsvRecord>(rows: &[T], manifest_hash: &str) -> Result<String> {
    let mut w = writer();
    let mut header: Vec<&str> = T::HEADER.to_vec();
    header.push("manifest_hash");
    w.write_record(&header)?;
    for r in rows {
        let mut f = r.fields();
        f.push(manifest_hash.to_string());
        w.write_record(&f)?;
    }
    finish(w)
}

/// Dense matrix dump: a `# manifest_hash=` comment line, then one row per
/// matrix row.
pub fn dense_to_csv(matrix: &DMatrix<f64>, manifest_hash: &str) -> Result<String> {
    let mut w = writer();
    for i in 0..matrix.nrows() {
        w.write_record(matrix.row(i).iter().map(|v| num(*v)))?;
    }
    Ok(format!("# manifest_hash={manifest_hash}\n{}", finish(w)?))
}

/// Serializes `value` with the manifest attached: objects gain a `manifest`
/// key, anything else is wrapped as `{"result": ..., "manifest": ...}`.
pub fn json_with_manifest<T: Serialize>(value: &T, manifest: &ExperimentManifest) -> Result<String> {
    let man = serde_json::to_value(manifest)?;
    let out = match serde_json::to_value(value)? {
        Value::Object(mut map) => {
            map.insert("manifest".into(), man);
            Value::Object(map)
        }
        other => serde_json::json!({ "result": other, "manifest": man }),
    };
    let mut s = serde_json::to_string_pretty(&out)?;
    s.push('\n');
    Ok(s)
}
