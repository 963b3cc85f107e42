//! File formats.
//!
//! Matrices are headerless CSV with one row per line; dimensions are inferred
//! and a leading `#` line is rejected. Values are written with the shortest
//! representation that parses back to the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{validate_gso, Gso, GsoError, NormMode};
use crate::signal::{SignalError, SignalTensor, TensorMeta};
use crate::solver::SolveReport;
use crate::Matrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Gso { path: PathBuf, source: GsoError },
    #[error("{path}: {source}")]
    Signal { path: PathBuf, source: SignalError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::Format { path: path.to_path_buf(), msg: msg.into() }
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| m[(i, j)].to_string())).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii output")
}

/// Parses the matrix format. `path` is only used in error messages.
pub fn matrix_from_csv(text: &str, path: &Path) -> Result<Matrix, IoError> {
    if text.trim_start().starts_with('#') {
        return Err(format_err(path, "comment lines are not allowed"));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, format!("line {}: {e}", line + 1)))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| format_err(path, format!("line {}: bad number {f:?}", line + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format_err(path, format!("line {}: {} fields, expected {}", line + 1, row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(format_err(path, "empty matrix"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Matrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), IoError> {
    fs::write(path, matrix_to_csv(m)).map_err(io_err(path))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    matrix_from_csv(&text, path)
}

/// `<stem>.<norm_mode>.gso.csv`
pub fn gso_filename(stem: &str, mode: NormMode) -> String {
    format!("{stem}.{}.gso.csv", mode.as_str())
}

/// Recovers the normalization mode from a name following [`gso_filename`].
pub fn norm_mode_from_filename(path: &Path) -> Option<NormMode> {
    let name = path.file_name()?.to_str()?;
    let rest = name.strip_suffix(".gso.csv")?;
    rest.rsplit('.').next()?.parse().ok()
}

pub fn write_gso(dir: &Path, stem: &str, g: &Gso) -> Result<PathBuf, IoError> {
    let path = dir.join(gso_filename(stem, g.norm_mode()));
    write_matrix(&path, g.weights())?;
    Ok(path)
}

/// Reads and validates a GSO; the mode comes from the filename unless given.
pub fn read_gso(path: &Path, mode: Option<NormMode>) -> Result<Gso, IoError> {
    let mode = mode
        .or_else(|| norm_mode_from_filename(path))
        .ok_or_else(|| format_err(path, "cannot infer normalization mode from file name"))?;
    let m = read_matrix(path)?;
    validate_gso(m, mode).map_err(|source| IoError::Gso { path: path.to_path_buf(), source })
}

fn slab_name(r: usize) -> String {
    format!("slab_{r:06}.csv")
}

/// Writes `meta.json` and one CSV per slab into `dir`.
pub fn write_tensor(dir: &Path, t: &SignalTensor) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (r, slab) in t.slabs().iter().enumerate() {
        write_matrix(&dir.join(slab_name(r)), slab)?;
    }
    let meta = dir.join("meta.json");
    let json = serde_json::to_string_pretty(t.meta()).expect("metadata serializes");
    fs::write(&meta, json).map_err(io_err(&meta))
}

pub fn read_tensor(dir: &Path) -> Result<SignalTensor, IoError> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: TensorMeta = serde_json::from_str(&text).map_err(|e| format_err(&meta_path, e.to_string()))?;
    let slabs = (0..meta.r)
        .map(|r| {
            let path = dir.join(slab_name(r));
            let m = read_matrix(&path)?;
            if m.shape() != (meta.p, meta.q) {
                return Err(format_err(&path, format!("slab is {:?}, metadata says {:?}", m.shape(), (meta.p, meta.q))));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SignalTensor::new(slabs, meta.generator, meta.seed).map_err(|source| IoError::Signal { path: dir.to_path_buf(), source })
}

pub fn write_report(path: &Path, rep: &SolveReport) -> Result<(), IoError> {
    fs::write(path, rep.to_json()).map_err(io_err(path))
}
