use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Prior;
use crate::error::{Error, Result};

/// Run metadata written next to the trace CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub sampler: String,
    pub model: String,
    /// Tuning values by name, e.g. `m`, `epsilon`, `d`, `n_pool`.
    pub tuning: BTreeMap<String, f64>,
    pub seed: u64,
    pub stream: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub wall_time_s: f64,
    pub mean_iteration_s: f64,
    pub prior: Option<Prior>,
    pub warnings: Vec<String>,
    /// Sampler-specific diagnostics.
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Stored iterations of an outer sampler. Each row holds θ followed by any
/// auxiliary columns (inclusion indicators and hyperparameters).
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    columns: Vec<String>,
    theta_dim: usize,
    iters: Vec<usize>,
    values: Vec<f64>,
    pub meta: TraceMeta,
}

pub fn theta_columns(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("theta_{i}")).collect()
}

impl Trace {
    pub fn new(columns: Vec<String>, theta_dim: usize, meta: TraceMeta) -> Self {
        assert!(theta_dim <= columns.len());
        Trace {
            columns,
            theta_dim,
            iters: Vec::new(),
            values: Vec::new(),
            meta,
        }
    }

    /// Trace over θ only.
    pub fn for_theta(p: usize, meta: TraceMeta) -> Self {
        Trace::new(theta_columns(p), p, meta)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    pub fn len(&self) -> usize {
        self.iters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iters.is_empty()
    }

    pub fn push(&mut self, iter: usize, row: &[f64]) {
        assert_eq!(row.len(), self.width());
        self.iters.push(iter);
        self.values.extend_from_slice(row);
    }

    pub fn iter_index(&self, i: usize) -> usize {
        self.iters[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.row(i)[..self.theta_dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width().max(1))
    }

    /// θ rows with iteration index past the burn-in.
    pub fn retained_thetas(&self) -> Vec<&[f64]> {
        (0..self.len())
            .filter(|&i| self.iters[i] > self.meta.burn_in)
            .map(|i| self.theta(i))
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Retained values of column `j`.
    pub fn retained_column(&self, j: usize) -> Vec<f64> {
        (0..self.len())
            .filter(|&i| self.iters[i] > self.meta.burn_in)
            .map(|i| self.row(i)[j])
            .collect()
    }

    pub fn retained_theta_mean(&self) -> Vec<f64> {
        let rows = self.retained_thetas();
        let mut mean = vec![0.0; self.theta_dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        let n = rows.len().max(1) as f64;
        mean.iter().map(|m| m / n).collect()
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("iter");
        for c in &self.columns {
            h.push(',');
            h.push_str(c);
        }
        h.push('\n');
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        for i in 0..self.len() {
            out.push_str(&format_row(self.iters[i], self.row(i)));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_meta(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.meta)
            .map_err(|e| Error::Unsupported(format!("metadata serialization failed: {e}")))?;
        write_atomic(path, json.as_bytes())
    }

    /// Parse a trace CSV. θ columns are those named `theta_*`.
    pub fn parse_csv(text: &str, path: &Path) -> Result<Trace> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty trace file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"iter") {
            return Err(Error::parse(path, 1, "header must start with `iter`"));
        }
        let columns: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
        let theta_dim = columns.iter().take_while(|c| c.starts_with("theta_")).count();
        if theta_dim == 0 {
            return Err(Error::parse(path, 1, "no theta_* columns in header"));
        }
        let mut trace = Trace::new(columns, theta_dim, TraceMeta::default());
        let mut row = Vec::with_capacity(trace.width());
        for (lineno, line) in lines {
            let mut fields = line.split(',');
            let iter = fields
                .next()
                .and_then(|t| t.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::parse(path, lineno + 1, "invalid iteration index"))?;
            row.clear();
            for f in fields {
                row.push(f.trim().parse::<f64>().map_err(|_| {
                    Error::parse(path, lineno + 1, format!("invalid number {:?}", f.trim()))
                })?);
            }
            if row.len() != trace.width() {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected {} values, found {}", trace.width(), row.len()),
                ));
            }
            trace.push(iter, &row);
        }
        trace.meta.iterations = trace.iters.last().copied().unwrap_or(0);
        Ok(trace)
    }

    /// Read a trace CSV and, when present, its `.meta.json` sidecar.
    pub fn read(path: &Path) -> Result<Trace> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut trace = Trace::parse_csv(&text, path)?;
        let sidecar = meta_path(path);
        if sidecar.exists() {
            let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            trace.meta = serde_json::from_str(&text)
                .map_err(|e| Error::parse(&sidecar, e.line(), e.to_string()))?;
        }
        Ok(trace)
    }
}

/// Sidecar path for a trace CSV: `trace.csv` → `trace.meta.json`.
pub fn meta_path(trace_csv: &Path) -> std::path::PathBuf {
    trace_csv.with_extension("meta.json")
}

/// One CSV row, floats in shortest round-trip form.
pub fn format_row(iter: usize, row: &[f64]) -> String {
    let mut s = iter.to_string();
    for v in row {
        let _ = write!(s, ",{v}");
    }
    s.push('\n');
    s
}

/// Write via a temporary file and rename so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
