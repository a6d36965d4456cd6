//! Approximate curvature diagnostic (ACD).
//!
//! Under the target posterior the Bartlett identity gives
//! E[vech(u uᵀ + H)] = 0 with u the posterior score and H its Hessian. For an
//! exponential family u(θ) = S(x) − E_θ[S] + ∇log p(θ) and
//! H(θ) = −Cov_θ[S] + ∇²log p(θ); the moments are replaced by
//! self-normalized importance sampling over a pool simulated at θ̂.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::emulation::{build_pool, snis_moments, AuxStatPool, PoolGenerator};
use crate::error::{check_dim, Error, Result};
use crate::models::ExpFamily;
use crate::numeric::{pinv_symmetric, quantile, sorted};
use crate::outer::Prior;
use crate::rng::{derive_stream, RngStream};

/// Default cap on r = p(p+1)/2.
pub const DEFAULT_R_CAP: usize = 400;

/// How the samples under assessment were generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Iid,
    Markov,
}

/// Number of curvature components for parameter dimension p.
pub fn vech_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Half-vectorization, column-major lower triangle: (11, 21, .., p1, 22, ..).
pub fn vech(m: &[f64], p: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(vech_len(p));
    for j in 0..p {
        for i in j..p {
            out.push(m[i * p + j]);
        }
    }
    out
}

/// Score u(θ) and Hessian H(θ) (row-major) of the log posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTerms {
    pub u: Vec<f64>,
    pub h: Vec<f64>,
    pub ess: f64,
}

/// Score and Hessian from given moments of S under f(·|θ).
pub fn score_terms_from_moments(
    data_stats: &[f64],
    prior: &Prior,
    theta: &[f64],
    mean: &[f64],
    cov: &[f64],
) -> ScoreTerms {
    let p = theta.len();
    let g = prior.grad_log_density(theta);
    let hd = prior.hessian_diag();
    let u = (0..p).map(|k| data_stats[k] - mean[k] + g[k]).collect();
    let mut h: Vec<f64> = cov.iter().map(|v| -v).collect();
    for k in 0..p {
        h[k * p + k] += hd[k];
    }
    ScoreTerms { u, h, ess: f64::NAN }
}

/// u(θ) and H(θ) with the moments of S estimated from `pool`.
pub fn score_terms(data_stats: &[f64], prior: &Prior, theta: &[f64], pool: &AuxStatPool) -> Result<ScoreTerms> {
    check_dim(pool.dim(), theta.len())?;
    check_dim(pool.dim(), data_stats.len())?;
    let m = snis_moments(pool, theta)?;
    let mut t = score_terms_from_moments(data_stats, prior, theta, &m.mean, &m.cov);
    t.ess = m.ess;
    Ok(t)
}

/// d(θ) = vech(u uᵀ + H).
pub fn curvature_vector(terms: &ScoreTerms) -> Vec<f64> {
    let p = terms.u.len();
    let mut m = terms.h.clone();
    for a in 0..p {
        for b in 0..p {
            m[a * p + b] += terms.u[a] * terms.u[b];
        }
    }
    vech(&m, p)
}

/// Per-sample curvature vectors d(θ⁽ⁱ⁾), an n × r matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSeries {
    pub r: usize,
    pub values: Vec<f64>,
    pub kind: SeriesKind,
    pub min_ess: f64,
}

impl CurvatureSeries {
    pub fn n(&self) -> usize {
        self.values.len() / self.r.max(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.r..(i + 1) * self.r]
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut m = vec![0.0; self.r];
        for row in self.values.chunks_exact(self.r) {
            for (a, v) in m.iter_mut().zip(row) {
                *a += v;
            }
        }
        m.iter().map(|v| v / n).collect()
    }
}

/// Curvature vectors for each θ in `thetas`. Runs of identical consecutive
/// samples, common in Metropolis chains, are evaluated once.
pub fn curvature_series(
    thetas: &[&[f64]],
    data_stats: &[f64],
    prior: &Prior,
    pool: &AuxStatPool,
    kind: SeriesKind,
) -> Result<CurvatureSeries> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("cannot assess an empty trace".into()));
    }
    let p = pool.dim();
    let r = vech_len(p);
    let mut values = Vec::with_capacity(thetas.len() * r);
    let mut min_ess = f64::INFINITY;
    let mut last: Option<(&[f64], Vec<f64>)> = None;
    for &th in thetas {
        check_dim(p, th.len())?;
        let d = match &last {
            Some((prev, d)) if *prev == th => d.clone(),
            _ => {
                let t = score_terms(data_stats, prior, th, pool)?;
                min_ess = min_ess.min(t.ess);
                curvature_vector(&t)
            }
        };
        values.extend_from_slice(&d);
        last = Some((th, d));
    }
    Ok(CurvatureSeries {
        r,
        values,
        kind,
        min_ess,
    })
}

/// Batch-means estimate of the asymptotic covariance of √n·(series mean),
/// from ⌊n/b⌋ non-overlapping batches of length b (default ⌊√n⌋).
pub fn batch_means_cov(values: &[f64], r: usize, batch: Option<usize>) -> Result<Vec<f64>> {
    let n = values.len() / r.max(1);
    let b = batch.unwrap_or(((n as f64).sqrt().floor() as usize).max(1));
    if b == 0 || n < 2 * b {
        return Err(Error::SeriesTooShort { n, batch: b });
    }
    let a = n / b;
    let mut means = vec![0.0; a * r];
    for k in 0..a {
        for i in k * b..(k + 1) * b {
            for c in 0..r {
                means[k * r + c] += values[i * r + c] / b as f64;
            }
        }
    }
    let mut grand = vec![0.0; r];
    for k in 0..a {
        for c in 0..r {
            grand[c] += means[k * r + c] / a as f64;
        }
    }
    let mut cov = vec![0.0; r * r];
    for k in 0..a {
        for x in 0..r {
            let dx = means[k * r + x] - grand[x];
            for y in 0..r {
                cov[x * r + y] += dx * (means[k * r + y] - grand[y]);
            }
        }
    }
    let scale = b as f64 / (a as f64 - 1.0);
    Ok(cov.iter().map(|v| v * scale).collect())
}

/// (1/n) Σ d dᵀ, the covariance estimate for independent samples.
pub fn iid_cov(values: &[f64], r: usize) -> Vec<f64> {
    let n = values.len() / r.max(1);
    let mut cov = vec![0.0; r * r];
    for row in values.chunks_exact(r) {
        for x in 0..r {
            for y in 0..r {
                cov[x * r + y] += row[x] * row[y];
            }
        }
    }
    cov.iter().map(|v| v / n as f64).collect()
}

/// n d̄ᵀ V̂⁻¹ d̄, and whether a pseudo-inverse was needed.
pub fn acd_statistic(series: &CurvatureSeries, batch: Option<usize>) -> Result<(f64, bool)> {
    let r = series.r;
    let v = match series.kind {
        SeriesKind::Iid => iid_cov(&series.values, r),
        SeriesKind::Markov => batch_means_cov(&series.values, r, batch)?,
    };
    let vm = DMatrix::from_row_slice(r, r, &v);
    let dbar = DVector::from_vec(series.mean());
    let (inv, pinv) = match vm.clone().cholesky() {
        Some(c) => (c.inverse(), false),
        None => {
            let (inv, _) = pinv_symmetric(&vm);
            (inv, true)
        }
    };
    let q = (dbar.transpose() * inv * &dbar)[(0, 0)];
    Ok((series.n() as f64 * q, pinv))
}

/// χ²(r) 0.99 quantile.
pub fn acd_threshold(r: usize) -> f64 {
    ChiSquared::new(r as f64)
        .map(|c| c.inverse_cdf(0.99))
        .unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcdSettings {
    /// Pool size N.
    pub pool_size: usize,
    /// Replications R.
    pub replications: usize,
    pub generator: PoolGenerator,
    pub kind: SeriesKind,
    /// Batch size; `None` for ⌊√n⌋.
    pub batch: Option<usize>,
    pub r_cap: usize,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcdReport {
    pub statistics: Vec<f64>,
    pub mean: f64,
    /// 2.5% and 97.5% percentiles over replications.
    pub lo: f64,
    pub hi: f64,
    pub threshold: f64,
    pub pass: bool,
    pub r: usize,
    pub n: usize,
    pub pool_size: usize,
    pub replications: usize,
    pub reference: Vec<f64>,
    pub min_ess: f64,
    pub pseudo_inverse: bool,
    pub kind: SeriesKind,
    pub seed: u64,
    pub stream: u64,
}

impl AcdReport {
    /// Summarize replicated statistics against the χ²(r) 0.99 threshold.
    pub fn from_statistics(statistics: Vec<f64>, r: usize) -> Self {
        let s = sorted(&statistics);
        let mean = statistics.iter().sum::<f64>() / statistics.len().max(1) as f64;
        let threshold = acd_threshold(r);
        AcdReport {
            mean,
            lo: quantile(&s, 0.025),
            hi: quantile(&s, 0.975),
            threshold,
            pass: mean < threshold,
            r,
            n: 0,
            pool_size: 0,
            replications: statistics.len(),
            statistics,
            reference: Vec::new(),
            min_ess: f64::NAN,
            pseudo_inverse: false,
            kind: SeriesKind::Markov,
            seed: 0,
            stream: 0,
        }
    }
}

/// ACD of `thetas` (retained samples). Each replication simulates a fresh
/// pool of `pool_size` draws at the sample mean θ̂, starting its inner chain
/// at the data, on its own stream.
pub fn acd<M: ExpFamily>(
    thetas: &[&[f64]],
    model: &M,
    data: &M::State,
    prior: &Prior,
    settings: &AcdSettings,
) -> Result<AcdReport> {
    let p = model.dim();
    let r = vech_len(p);
    if r > settings.r_cap {
        return Err(Error::DiagnosticImpractical { r, cap: settings.r_cap });
    }
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("cannot assess an empty trace".into()));
    }
    if settings.replications == 0 {
        return Err(Error::InvalidParameter("ACD needs at least one replication".into()));
    }
    let mut reference = vec![0.0; p];
    for th in thetas {
        check_dim(p, th.len())?;
        for k in 0..p {
            reference[k] += th[k] / thetas.len() as f64;
        }
    }
    let data_stats = model.suffstats(data);
    let results: Vec<Result<(f64, bool, f64)>> = (0..settings.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::new(settings.seed, derive_stream(settings.stream, rep as u64));
            let pool = build_pool(model, &reference, settings.pool_size, settings.generator, data, &mut rng)?;
            let series = curvature_series(thetas, &data_stats, prior, &pool, settings.kind)?;
            let (stat, pinv) = acd_statistic(&series, settings.batch)?;
            Ok((stat, pinv, series.min_ess))
        })
        .collect();
    let mut stats = Vec::with_capacity(results.len());
    let (mut pinv, mut min_ess) = (false, f64::INFINITY);
    for res in results {
        let (s, pi, e) = res?;
        stats.push(s);
        pinv |= pi;
        min_ess = min_ess.min(e);
    }
    if pinv {
        log::warn!("curvature covariance was singular; used a pseudo-inverse");
    }
    let mut report = AcdReport::from_statistics(stats, r);
    report.n = thetas.len();
    report.pool_size = settings.pool_size;
    report.reference = reference;
    report.min_ess = min_ess;
    report.pseudo_inverse = pinv;
    report.kind = settings.kind;
    report.seed = settings.seed;
    report.stream = settings.stream;
    Ok(report)
}
