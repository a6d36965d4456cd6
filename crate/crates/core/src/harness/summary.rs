use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::{mean, quantile, sorted, variance};
use crate::outer::trace::write_atomic;
use crate::outer::Trace;

/// Grid points per axis of the density estimate.
pub const DENSITY_GRID: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSummary {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl CoordinateSummary {
    pub fn of(column: &str, xs: &[f64]) -> Self {
        let s = sorted(xs);
        CoordinateSummary {
            column: column.to_string(),
            mean: mean(xs),
            sd: if xs.len() > 1 { variance(xs).sqrt() } else { 0.0 },
            q025: quantile(&s, 0.025),
            q50: quantile(&s, 0.5),
            q975: quantile(&s, 0.975),
        }
    }
}

/// Density on a regular `DENSITY_GRID`² grid, row-major with x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityGrid {
    /// Long-format CSV `theta_1,theta_2,density`.
    pub fn to_csv(&self, names: (&str, &str)) -> String {
        let mut out = format!("{},{},density\n", names.0, names.1);
        for (j, y) in self.y.iter().enumerate() {
            for (i, x) in self.x.iter().enumerate() {
                let _ = writeln!(out, "{x},{y},{}", self.density[j * self.x.len() + i]);
            }
        }
        out
    }
}

fn bandwidth(xs: &[f64]) -> f64 {
    // Scott's rule for two dimensions.
    let sd = if xs.len() > 1 { variance(xs).sqrt() } else { 0.0 };
    let h = sd * (xs.len() as f64).powf(-1.0 / 6.0);
    if h > 0.0 {
        h
    } else {
        1e-3 * mean(xs).abs().max(1.0)
    }
}

fn axis(xs: &[f64], h: f64, n: usize) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

/// Convolve every grid line with a Gaussian of `sigma_cells` grid steps.
/// `index(line, i)` maps to the flat position of point i on a line.
fn smooth_axis(values: &[f64], n: usize, sigma_cells: f64, index: impl Fn(usize, usize) -> usize) -> Vec<f64> {
    let reach = (4.0 * sigma_cells).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * reach)
        .map(|k| (-0.5 * ((k as f64 - reach as f64) / sigma_cells).powi(2)).exp())
        .collect();
    let mut out = vec![0.0; values.len()];
    for line in 0..n {
        for i in 0..n {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            out[index(line, i)] = (lo..=hi).map(|j| kernel[j + reach - i] * values[index(line, j)]).sum();
        }
    }
    out
}

/// Gaussian kernel density estimate with linear binning onto the grid
/// followed by separable convolution.
pub fn kde_2d(xs: &[f64], ys: &[f64]) -> DensityGrid {
    let n = DENSITY_GRID;
    let (hx, hy) = (bandwidth(xs), bandwidth(ys));
    let (gx, gy) = (axis(xs, hx, n), axis(ys, hy, n));
    let (dx, dy) = (gx[1] - gx[0], gy[1] - gy[0]);
    let mut bins = vec![0.0; n * n];
    for (&x, &y) in xs.iter().zip(ys) {
        let fx = ((x - gx[0]) / dx).clamp(0.0, (n - 1) as f64);
        let fy = ((y - gy[0]) / dy).clamp(0.0, (n - 1) as f64);
        let (ix, iy) = ((fx as usize).min(n - 2), (fy as usize).min(n - 2));
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        bins[iy * n + ix] += (1.0 - tx) * (1.0 - ty);
        bins[iy * n + ix + 1] += tx * (1.0 - ty);
        bins[(iy + 1) * n + ix] += (1.0 - tx) * ty;
        bins[(iy + 1) * n + ix + 1] += tx * ty;
    }
    let tmp = smooth_axis(&bins, n, hx / dx, |row, i| row * n + i);
    let mut density = smooth_axis(&tmp, n, hy / dy, |col, j| j * n + col);
    let total: f64 = density.iter().sum::<f64>() * dx * dy;
    if total > 0.0 {
        for d in &mut density {
            *d /= total;
        }
    }
    DensityGrid { x: gx, y: gy, density }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub coordinates: Vec<CoordinateSummary>,
    pub samples: usize,
    pub density: Option<DensityGrid>,
}

impl PosteriorSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("column,mean,sd,q025,q50,q975\n");
        for c in &self.coordinates {
            let _ = writeln!(out, "{},{},{},{},{},{}", c.column, c.mean, c.sd, c.q025, c.q50, c.q975);
        }
        out
    }
}

/// Per-column summaries of the retained rows of `trace`, plus a density grid
/// when θ is two-dimensional.
pub fn summarize_trace(trace: &Trace) -> PosteriorSummary {
    let coordinates: Vec<CoordinateSummary> = trace
        .columns()
        .iter()
        .enumerate()
        .map(|(j, name)| CoordinateSummary::of(name, &trace.retained_column(j)))
        .collect();
    let density = (trace.theta_dim() == 2 && !trace.retained_column(0).is_empty())
        .then(|| kde_2d(&trace.retained_column(0), &trace.retained_column(1)));
    PosteriorSummary {
        coordinates,
        samples: trace.retained_column(0).len(),
        density,
    }
}

/// Summarize the trace at `trace_path` into `out_dir` as `summary.csv` and,
/// for two-dimensional θ, `density.csv`. Returns the files written.
pub fn posterior_summary(trace_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let trace = Trace::read(trace_path)?;
    let summary = summarize_trace(&trace);
    let mut written = Vec::new();
    let path = out_dir.join("summary.csv");
    write_atomic(&path, summary.to_csv().as_bytes())?;
    written.push(path);
    if let Some(d) = &summary.density {
        let path = out_dir.join("density.csv");
        let names = (trace.columns()[0].as_str(), trace.columns()[1].as_str());
        write_atomic(&path, d.to_csv(names).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
