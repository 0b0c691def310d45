//! File formats: CSV curves and grids with 12 significant digits, JSON
//! matrix dumps, and the run manifest.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::characterize::WignerGrid;
use crate::error::{Error, Result};
use crate::focklab::{DensityMatrix, C64};
use crate::imprint::MomentCurve;

/// Twelve significant digits in scientific notation.
pub fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt12))?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column curve `x,value`.
pub fn write_curve(path: &Path, xs: &[f64], values: &[f64]) -> Result<()> {
    if xs.len() != values.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} values", xs.len(), values.len())));
    }
    write_rows(path, &["x", "value"], xs.iter().zip(values).map(|(&x, &v)| vec![x, v]))
}

/// Arbitrary named columns of equal length.
pub fn write_table(path: &Path, header: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(Error::DimensionMismatch("header and column count differ".into()));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("columns of unequal length".into()));
    }
    write_rows(path, header, (0..n).map(|i| columns.iter().map(|c| c[i]).collect()))
}

/// Columns keyed by an integer index such as the photon number.
pub fn write_indexed(path: &Path, header: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    if header.len() != columns.len() + 1 {
        return Err(Error::DimensionMismatch("header must name the index and every column".into()));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("columns of unequal length".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for i in 0..n {
        let mut row = vec![i.to_string()];
        row.extend(columns.iter().map(|c| fmt12(c[i])));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Wigner grid as long-format `x,p,value`, `x` outermost.
pub fn write_wigner(path: &Path, w: &WignerGrid) -> Result<()> {
    let rows = w
        .xs
        .iter()
        .enumerate()
        .flat_map(|(i, &x)| w.ps.iter().enumerate().map(move |(j, &p)| vec![x, p, w.values[(i, j)]]));
    write_rows(path, &["x", "p", "value"], rows)
}

pub fn write_moment_curve(path: &Path, curve: &MomentCurve) -> Result<()> {
    write_rows(
        path,
        &["alpha", "mean_x", "mean_p", "weight"],
        curve.points().iter().map(|p| vec![p.alpha, p.mean_x, p.mean_p, p.weight]),
    )
}

/// Row-major complex matrix with `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub dims: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDump {
    pub fn from_matrix(dims: &[usize], m: &DMatrix<C64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| [m[(r, c)].re, m[(r, c)].im]))
            .collect();
        Self {
            dims: dims.to_vec(),
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            C64::new(re, im)
        }))
    }
}

/// Reads a whole file, naming the path in any error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| with_path(e, path))
}

pub(crate) fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &MatrixDump::from_matrix(rho.dims(), rho.matrix()))
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    let dump: MatrixDump = serde_json::from_str(&read_text(path)?)?;
    DensityMatrix::new(dump.dims.clone(), dump.to_matrix()?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Record of one CLI run, written after every other output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, params: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    /// Checks that every listed output exists under `dir`, then writes
    /// `manifest.json` there.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        for out in &self.outputs {
            let p = dir.join(out);
            if !p.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("listed output {} was not written", p.display()),
                )));
            }
        }
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }

    /// Equality ignoring the wall-clock field.
    pub fn same_run(&self, other: &Self) -> bool {
        Self {
            wall_clock_secs: 0.0,
            ..self.clone()
        } == Self {
            wall_clock_secs: 0.0,
            ..other.clone()
        }
    }
}
