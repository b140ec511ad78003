use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use dunkl_core::verify::{RowStatus, SweepReport};

/// Shortest round-trip decimal, switching to exponent form outside
/// [1e-4, 1e15).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn nums(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(|&x| num(x))
}

pub fn coord_names(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn status_name(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Ok => "ok",
        RowStatus::Violation => "violation",
        RowStatus::Rejected => "rejected",
        RowStatus::Failed => "failed",
    }
}

/// One row per sample: the report's columns, then status and note.
pub fn write_sweep(path: &Path, rep: &SweepReport) -> Result<()> {
    let mut header = rep.columns.clone();
    header.push("status".into());
    header.push("note".into());
    let rows = rep.rows.iter().map(|r| {
        let mut v: Vec<String> = nums(&r.values).collect();
        v.push(status_name(r.status).into());
        v.push(r.note.clone());
        v
    });
    write_csv(path, &header, rows)
}

/// Reads a numeric CSV with a header row.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.parse::<f64>().with_context(|| {
                    format!(
                        "{}: row {}, column {}: not a number: {s:?}",
                        path.display(),
                        i + 1,
                        k + 1
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("{}: missing column {name:?}", path.display()))
}
