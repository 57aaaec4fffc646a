use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::validation::{ResidualSweep, ValidationReport};
use crate::error::{Error, Result};

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated mirror with a `#` header, for gnuplot.
fn write_dat(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", header.join(" "))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `residual_sweep.csv`, `.dat` and `residual_report.json` in `dir`.
pub fn write_residual_outputs(dir: &Path, sweep: &ResidualSweep) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rows: Vec<_> = sweep.runs.iter().flat_map(|r| r.rows.iter().copied()).collect();
    let csv = dir.join("residual_sweep.csv");
    write_csv(&csv, &rows)?;
    let dat = dir.join("residual_sweep.dat");
    write_dat(
        &dat,
        &["alpha", "epsilon", "t", "l2"],
        rows.iter().map(|r| vec![r.alpha, r.epsilon, r.t, r.l2]),
    )?;
    let json = dir.join("residual_report.json");
    write_json(&json, sweep)?;
    Ok(vec![csv, dat, json])
}

/// `validation.csv`, `error_energy.csv`, their `.dat` mirrors and `report.json`.
pub fn write_validation_outputs(dir: &Path, report: &ValidationReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rows: Vec<_> = report.runs.iter().flat_map(|r| r.rows.iter().copied()).collect();
    let energy: Vec<_> = report.runs.iter().flat_map(|r| r.energy.iter().copied()).collect();
    let csv = dir.join("validation.csv");
    write_csv(&csv, &rows)?;
    let dat = dir.join("validation.dat");
    write_dat(
        &dat,
        &["alpha", "epsilon", "t", "mu_l2", "nu_l2"],
        rows.iter().map(|r| vec![r.alpha, r.epsilon, r.t, r.mu_l2, r.nu_l2]),
    )?;
    let ecsv = dir.join("error_energy.csv");
    write_csv(&ecsv, &energy)?;
    let edat = dir.join("error_energy.dat");
    write_dat(
        &edat,
        &["alpha", "epsilon", "t", "h", "eta_l2", "xi_l2", "lower", "upper"],
        energy
            .iter()
            .map(|r| vec![r.alpha, r.epsilon, r.t, r.h, r.eta_l2, r.xi_l2, r.lower, r.upper]),
    )?;
    let json = dir.join("report.json");
    write_json(&json, report)?;
    Ok(vec![csv, dat, ecsv, edat, json])
}
