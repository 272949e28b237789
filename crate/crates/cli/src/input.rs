//! Reading a signal from CSV.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// Smallest accepted series.
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Abscissae when the file had an `x,y` pair.
    pub x: Option<Vec<f64>>,
    pub y: Vec<f64>,
    pub header: Vec<String>,
}

/// Parses a headed CSV with one numeric column, or two (`x,y`).
pub fn read_series(path: &Path) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.len() > 2 {
        bail!("{}: expected one column or an x,y pair, found {} columns", path.display(), header.len());
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            bail!("{}:{line}: expected {} fields, found {}", path.display(), header.len(), record.len());
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .with_context(|| format!("{}:{line}: '{s}' is not a number", path.display()))?;
            if !v.is_finite() {
                bail!("{}:{line}: '{s}' is not finite", path.display());
            }
            Ok(v)
        };
        if header.len() == 2 {
            x.push(parse(&record[0])?);
            y.push(parse(&record[1])?);
        } else {
            y.push(parse(&record[0])?);
        }
    }
    if y.len() < MIN_POINTS {
        bail!("{}: {} data points; at least {MIN_POINTS} are required", path.display(), y.len());
    }
    Ok(Series {
        x: (header.len() == 2).then_some(x),
        y,
        header,
    })
}
