//! File emission. Floats are written with 17 significant digits so that
//! every value survives a text round trip.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column label for coordinate `k` of agent `i`, both 0-based.
pub fn coord_label(i: usize, k: usize) -> String {
    format!("x_{}_{}", i + 1, k + 1)
}

pub fn coord_labels(agents: usize, n: usize) -> Vec<String> {
    (0..agents)
        .flat_map(|i| (0..n).map(move |k| coord_label(i, k)))
        .collect()
}

fn target(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = target(dir, name)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

pub fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf> {
    let path = target(dir, name)?;
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}
