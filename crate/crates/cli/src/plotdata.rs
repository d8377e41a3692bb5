//! Plain-text plot data: one block per series, each line `eps log10_eps value`.
//!
//! ```text
//! # filterstab plot data
//! # columns: eps log10_eps value
//!
//! # series gamma_hat
//! 0.0001 -4.0 -0.8314811907633408
//! ```
//!
//! Series absent on every row are left out; rows where a series is absent
//! are skipped within its block.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;
use crate::sweep::SweepRow;

const HEADER: &str = "# filterstab plot data\n# columns: eps log10_eps value\n";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    /// `(eps, log10 eps, value)` triples.
    pub points: Vec<(f64, f64, f64)>,
}

pub fn render_plotdata(rows: &[SweepRow]) -> String {
    let mut out = String::from(HEADER);
    for (name, get) in SweepRow::series() {
        if rows.iter().all(|r| get(r).is_none()) {
            continue;
        }
        let _ = write!(out, "\n# series {name}\n");
        for row in rows {
            if let Some(v) = get(row) {
                let _ = writeln!(out, "{:?} {:?} {v:?}", row.eps, row.eps.log10());
            }
        }
    }
    out
}

pub fn emit_plotdata(rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Config("plot data needs at least one row".into()));
    }
    std::fs::write(path, render_plotdata(rows)).map_err(CliError::io(path))
}

/// Reads back the output of [`render_plotdata`].
pub fn parse_plotdata(text: &str) -> Result<Vec<PlotSeries>, String> {
    let mut series: Vec<PlotSeries> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(name) = line.strip_prefix("# series ") {
            series.push(PlotSeries { name: name.to_owned(), points: Vec::new() });
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let current = series.last_mut().ok_or_else(|| format!("line {}: data before any series", lineno + 1))?;
        let vals = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let [eps, log_eps, value] = vals[..] else {
            return Err(format!("line {}: expected 3 columns, got {}", lineno + 1, vals.len()));
        };
        current.points.push((eps, log_eps, value));
    }
    Ok(series)
}
