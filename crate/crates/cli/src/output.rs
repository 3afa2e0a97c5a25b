//! CSV emission.

use std::fmt::Write as _;
use std::path::Path;

use unitexp::result::SimulationResult;

use crate::CliError;

/// Comment-prefixed preamble lines followed by the deterministic body.
pub fn render_csv(result: &SimulationResult<f64>, preamble: &[String]) -> String {
    let mut out = String::new();
    for line in preamble {
        for part in line.lines() {
            let _ = writeln!(out, "# {part}");
        }
    }
    out.push_str(&render_body(result));
    out
}

/// Header `tau,<column>,...` and one row per node, 12 significant digits.
pub fn render_body(result: &SimulationResult<f64>) -> String {
    let mut out = String::from("tau");
    for col in result.columns() {
        out.push(',');
        out.push_str(&col.label);
    }
    out.push('\n');
    for (k, tau) in result.tau().iter().enumerate() {
        let _ = write!(out, "{tau:.11e}");
        for col in result.columns() {
            let _ = write!(out, ",{:.11e}", col.values[k]);
        }
        out.push('\n');
    }
    out
}

/// Lines of `text` that are not part of the preamble.
pub fn csv_body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

pub fn write_csv(result: &SimulationResult<f64>, preamble: &[String], path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, render_csv(result, preamble)).map_err(|e| CliError::io(path, e))
}

/// Parses a CSV written by [`write_csv`] into column labels and rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Config("missing CSV header".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            let row = l
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|e| CliError::Config(format!("bad CSV value {v:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != header.len() {
                return Err(CliError::Config(format!("row has {} fields, header {}", row.len(), header.len())));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}
