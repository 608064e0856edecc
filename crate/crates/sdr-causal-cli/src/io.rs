//! CSV reading/writing and atomic file output.
//!
//! The CSV dialect is deliberately small: comma separated, `#` starts a
//! comment line, and a header row is auto-detected (first data line that
//! does not parse as numbers). Errors cite the file and line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Numeric CSV contents, column-major. A detected header row is skipped.
pub struct NumericCsv {
    pub columns: Vec<Vec<f64>>,
}

pub fn read_numeric_csv(path: &Path) -> Result<NumericCsv, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut saw_header = false;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if !saw_data {
                    columns = vec![Vec::new(); values.len()];
                    saw_data = true;
                }
                if values.len() != columns.len() {
                    return Err(CliError::usage(format!(
                        "{} line {line_no}: expected {} columns, found {}",
                        path.display(),
                        columns.len(),
                        values.len()
                    )));
                }
                for (col, v) in columns.iter_mut().zip(values) {
                    col.push(v);
                }
            }
            Err(_) => {
                if !saw_data && !saw_header {
                    saw_header = true;
                } else {
                    let bad = cells
                        .iter()
                        .find(|c| c.parse::<f64>().is_err())
                        .copied()
                        .unwrap_or("");
                    return Err(CliError::usage(format!(
                        "{} line {line_no}: non-numeric cell '{bad}'",
                        path.display()
                    )));
                }
            }
        }
    }
    if !saw_data {
        return Err(CliError::usage(format!(
            "{}: no numeric rows found",
            path.display()
        )));
    }
    Ok(NumericCsv { columns })
}

/// Writes through a temp file in the target directory, then renames, so a
/// crash never leaves a half-written output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| CliError::usage(format!("cannot create temp file for {}: {e}", path.display())))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::usage(format!("cannot persist {}: {e}", path.display())))?;
    Ok(())
}

/// Two-column pair CSV with the `x,y` header.
pub fn pair_csv(x: &[f64], y: &[f64]) -> String {
    let mut out = String::from("x,y\n");
    for (a, b) in x.iter().zip(y) {
        out.push_str(&format!("{a},{b}\n"));
    }
    out
}

/// Spectrum CSV with the `nu,value` header.
pub fn spectrum_csv(spectrum: &sdr_causal::Spectrum) -> String {
    let mut out = String::from("nu,value\n");
    let grid = spectrum.grid();
    for (k, v) in spectrum.values().iter().enumerate() {
        out.push_str(&format!("{},{v}\n", grid.nu(k)));
    }
    out
}

/// Single-column series CSV with an `x` header.
pub fn series_csv(samples: &[f64]) -> String {
    let mut out = String::from("x\n");
    for v in samples {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Parses a spectrum written by [`spectrum_csv`] (nu column ignored beyond a
/// sanity check on length).
pub fn read_spectrum_csv(path: &Path) -> Result<sdr_causal::Spectrum, CliError> {
    let csv = read_numeric_csv(path)?;
    if csv.columns.len() < 2 {
        return Err(CliError::usage(format!(
            "{}: expected nu,value columns",
            path.display()
        )));
    }
    let values = csv.columns[1].clone();
    let grid = sdr_causal::FrequencyGrid::new(values.len())?;
    Ok(sdr_causal::Spectrum::new(grid, values)?)
}
