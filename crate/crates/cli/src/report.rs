//! Flat report rows, their CSV form and the merge behind `report`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracvar::asymptotics::{SweepReport, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

/// One record of one experiment. Column order is part of the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub schema_version: u32,
    pub experiment: String,
    pub case: String,
    pub quantity: String,
    pub parameter: f64,
    pub computed: f64,
    pub reference: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub within: bool,
}

pub const COLUMNS: [&str; 10] = [
    "schema_version",
    "experiment",
    "case",
    "quantity",
    "parameter",
    "computed",
    "reference",
    "residual",
    "tolerance",
    "within",
];

pub fn rows_of(report: &SweepReport) -> Vec<Row> {
    report
        .records
        .iter()
        .map(|r| Row {
            schema_version: report.schema_version,
            experiment: report.experiment.clone(),
            case: r.case.clone(),
            quantity: r.quantity.clone(),
            parameter: r.parameter,
            computed: r.computed,
            reference: r.reference,
            residual: r.residual,
            tolerance: r.tolerance,
            within: r.within(),
        })
        .collect()
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

fn check_version(found: u32, path: &Path) -> Result<(), CliError> {
    if found != SCHEMA_VERSION {
        return Err(CliError::Schema(format!(
            "{}: schema version {found}, expected {SCHEMA_VERSION}",
            path.display()
        )));
    }
    Ok(())
}

/// Reads a JSON sweep report or a CSV of rows.
pub fn read_rows(path: &Path) -> Result<Vec<Row>, CliError> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Schema(format!("{}: not a JSON report: {e}", path.display())))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| CliError::Schema(format!("{}: missing schema_version", path.display())))?;
        check_version(u32::try_from(version).unwrap_or(u32::MAX), path)?;
        let report: SweepReport = serde_json::from_value(value)
            .map_err(|e| CliError::Schema(format!("{}: malformed report: {e}", path.display())))?;
        return Ok(rows_of(&report));
    }
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(CliError::Schema(format!("{}: unexpected CSV columns", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rd.deserialize::<Row>() {
        let mut row = rec.map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        check_version(row.schema_version, path)?;
        row.within = row.residual <= row.tolerance;
        rows.push(row);
    }
    Ok(rows)
}

/// Human-readable table with a closing count line.
pub fn table(rows: &[Row]) -> String {
    let body: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            [
                r.schema_version.to_string(),
                r.experiment.clone(),
                r.case.clone(),
                r.quantity.clone(),
                format!("{}", r.parameter),
                format!("{:.6e}", r.computed),
                format!("{:.6e}", r.reference),
                format!("{:.3e}", r.residual),
                format!("{:.3e}", r.tolerance),
                if r.within { "yes" } else { "NO" }.to_string(),
            ]
        })
        .collect();
    let mut width: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for cells in &body {
        for (w, c) in width.iter_mut().zip(cells) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&mut out, &COLUMNS);
    for cells in &body {
        let refs: Vec<&str> = cells.iter().map(String::as_str).collect();
        line(&mut out, &refs);
    }
    let outside = rows.iter().filter(|r| !r.within).count();
    let _ = writeln!(out, "{} rows, {} outside tolerance", rows.len(), outside);
    out
}

/// Merges the inputs in order into `out/summary.csv` and `out/summary.txt`.
pub fn merge(inputs: &[PathBuf], out: &Path) -> Result<(Vec<Row>, String), CliError> {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_rows(p)?);
    }
    std::fs::create_dir_all(out)?;
    write_csv(&out.join("summary.csv"), &rows)?;
    let text = table(&rows);
    std::fs::write(out.join("summary.txt"), &text)?;
    Ok((rows, text))
}
