//! CSV and JSON files consumed by the plotting scripts.
//!
//! | file            | columns                                                        |
//! |-----------------|----------------------------------------------------------------|
//! | results         | `replicate,estimator,estimate,n,rho,seed`                      |
//! | diagnostics     | `replicate,estimator,n,component,eigenvalue,beta,residual`     |
//! | mse             | `estimator,n,rho,target,mse,bias,variance,replicates`          |
//! | slopes          | `estimator,slope,intercept,points`                             |
//! | histogram       | `bin_lo,bin_hi,count`                                          |
//! | sensitivity     | `alpha,lo,hi`                                                  |
//!
//! Run metadata and histogram overlays are JSON sidecars.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::OutputPaths;
use super::run::{DiagnosticRow, ResultRow, ResultTable, RunMetadata};
use crate::error::{Error, Result};

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

/// Write rows with a header derived from the row type; an empty slice still gets a header when `header` is given.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

pub const RESULT_COLUMNS: [&str; 6] = ["replicate", "estimator", "estimate", "n", "rho", "seed"];
pub const DIAGNOSTIC_COLUMNS: [&str; 7] = ["replicate", "estimator", "n", "component", "eigenvalue", "beta", "residual"];
pub const MSE_COLUMNS: [&str; 8] = ["estimator", "n", "rho", "target", "mse", "bias", "variance", "replicates"];
pub const SLOPE_COLUMNS: [&str; 4] = ["estimator", "slope", "intercept", "points"];
pub const HISTOGRAM_COLUMNS: [&str; 3] = ["bin_lo", "bin_hi", "count"];
pub const SENSITIVITY_COLUMNS: [&str; 3] = ["alpha", "lo", "hi"];

/// Results CSV, diagnostics CSV (only when non-empty) and metadata JSON.
pub fn write_table(table: &ResultTable, paths: &OutputPaths) -> Result<()> {
    write_csv(&paths.results, &table.rows, &RESULT_COLUMNS)?;
    if !table.diagnostics.is_empty() {
        write_csv(&paths.diagnostics, &table.diagnostics, &DIAGNOSTIC_COLUMNS)?;
    }
    write_json(&paths.metadata, &table.metadata)
}

pub fn read_table(results: &Path, metadata: &Path, diagnostics: Option<&Path>) -> Result<ResultTable> {
    let rows: Vec<ResultRow> = read_csv(results)?;
    let metadata: RunMetadata = read_json(metadata)?;
    let diagnostics: Vec<DiagnosticRow> = match diagnostics {
        Some(p) => read_csv(p)?,
        None => Vec::new(),
    };
    Ok(ResultTable {
        rows,
        diagnostics,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::harness::config::RunConfig;
    use crate::harness::run::run_replications;

    #[test]
    fn table_round_trips_exactly() {
        let mut c = RunConfig::for_preset("appendix_a_1", vec![120], 3, 9);
        c.estimators = vec![EstimatorKind::HtDir, EstimatorKind::PcInd];
        c.theory.outer = 200;
        let table = run_replications(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = OutputPaths::default().under(dir.path());
        write_table(&table, &paths).unwrap();
        let header = std::fs::read_to_string(&paths.results).unwrap();
        assert!(header.starts_with("replicate,estimator,estimate,n,rho,seed\n"));
        let back = read_table(&paths.results, &paths.metadata, Some(&paths.diagnostics)).unwrap();
        assert_eq!(back, table);
    }
}
