//! CSV matrix and label file formats used by the CLI.
//!
//! Matrices are one feature per row, comma-separated finite decimals. An
//! optional first header row is auto-detected (any non-numeric token).
//! Label files hold one integer or string class per line; strings map to
//! dense ids in first-appearance order.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_matrix(path: &Path) -> Result<DataMatrix> {
    let text = read_to_string(path)?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    }

    let first_tokens: Vec<&str> = lines[0].1.split(',').map(str::trim).collect();
    let has_header = first_tokens.iter().any(|t| t.parse::<f64>().is_err());
    let header: Option<Vec<String>> = if has_header {
        Some(first_tokens.iter().map(|s| s.to_string()).collect())
    } else {
        None
    };
    let data_lines = if has_header { &lines[1..] } else { &lines[..] };
    if data_lines.is_empty() {
        return Err(Error::Parse { line: lines[0].0, message: "no data rows after header".into() });
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(data_lines.len());
    let mut width = 0usize;
    for (line_no, line) in data_lines {
        let mut row = Vec::new();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                line: *line_no,
                message: format!("invalid number {:?}", tok.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: *line_no, message: format!("non-finite value {v}") });
            }
            row.push(v);
        }
        if width == 0 {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::Parse {
                line: *line_no,
                message: format!("ragged row: expected {width} values, found {}", row.len()),
            });
        }
        rows.push(row);
    }

    let d = rows.len();
    let values = DMatrix::from_fn(d, width, |i, j| rows[i][j]);
    // Header names label samples, not features; they are consumed only for
    // detection and column-count checking.
    if let Some(h) = &header {
        if h.len() != width {
            return Err(Error::Parse {
                line: lines[0].0,
                message: format!("header has {} columns, data has {width}", h.len()),
            });
        }
    }
    DataMatrix::new(values)
}

/// Loads one class per line; string classes map to dense ids in
/// first-appearance order.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read_to_string(path)?;
    let mut labels = Vec::new();
    let mut name_ids: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let tok = raw.trim();
        if tok.is_empty() {
            continue;
        }
        if let Ok(v) = tok.parse::<i64>() {
            if v < 0 {
                return Err(Error::Parse { line: i + 1, message: format!("negative label {v}") });
            }
            labels.push(v as usize);
        } else {
            let id = match name_ids.iter().position(|n| n == tok) {
                Some(p) => p,
                None => {
                    name_ids.push(tok.to_string());
                    name_ids.len() - 1
                }
            };
            labels.push(id);
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse { line: 1, message: "empty label file".into() });
    }
    Ok(labels)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

/// Rounds to 12 significant digits via the shortest round-trip through text.
pub fn sig12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap()
}

pub fn save_matrix(path: &Path, x: &DataMatrix) -> Result<()> {
    let mut f = create(path)?;
    let vals = x.values();
    for i in 0..x.n_features() {
        let row: Vec<String> = (0..x.n_samples()).map(|j| format!("{:.11e}", vals[(i, j)])).collect();
        writeln!(f, "{}", row.join(",")).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut f = create(path)?;
    for l in labels {
        writeln!(f, "{l}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Weights TSV `feature_index<TAB>weight`, sorted by weight descending with
/// ties toward the lower index, so `head -n k` yields the k best features.
pub fn save_weights(path: &Path, weights: &[f64]) -> Result<()> {
    let mut f = create(path)?;
    for i in crate::eval::rank_order(weights) {
        writeln!(f, "{i}\t{:.11e}", weights[i]).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Reads a weights TSV back as a dense vector.
pub fn load_weights(path: &Path) -> Result<Vec<f64>> {
    let text = read_to_string(path)?;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let idx: usize = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| parse_err("missing feature index".into()))?;
        let w: f64 = parts
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| parse_err("missing weight".into()))?;
        if !w.is_finite() {
            return Err(parse_err(format!("non-finite weight {w}")));
        }
        entries.push((idx, w));
    }
    if entries.is_empty() {
        return Err(Error::Parse { line: 1, message: "empty weights file".into() });
    }
    let d = entries.iter().map(|(i, _)| i + 1).max().unwrap();
    let mut weights = vec![0.0; d];
    for (i, w) in entries {
        weights[i] = w;
    }
    Ok(weights)
}

pub fn save_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = create(path)?;
    let text = serde_json::to_string_pretty(value).expect("json serialization");
    writeln!(f, "{text}").map_err(|e| io_err(path, e))
}
