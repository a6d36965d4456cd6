use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::cholesky_jittered;
use crate::rng::RngStream;

/// Gaussian random-walk proposal. During the adaptation window the covariance
/// is periodically reset to (2.38²/p)·(empirical covariance + εI); after the
/// window it is frozen.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Proposal {
    dim: usize,
    cov: Vec<f64>,
    chol: Vec<f64>,
    floor: Vec<f64>,
    adapt_until: usize,
    interval: usize,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Proposal {
    /// Diagonal proposal with the given standard deviations and no adaptation.
    pub fn fixed(sd: &[f64]) -> Result<Self> {
        Proposal::adaptive(sd, 0)
    }

    /// Diagonal initial proposal, adapted over the first `adapt_until` iterations.
    pub fn adaptive(sd: &[f64], adapt_until: usize) -> Result<Self> {
        if sd.is_empty() || sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "proposal standard deviations must be positive and finite, got {sd:?}"
            )));
        }
        let p = sd.len();
        let mut cov = vec![0.0; p * p];
        for i in 0..p {
            cov[i * p + i] = sd[i] * sd[i];
        }
        let mut out = Proposal {
            dim: p,
            chol: Vec::new(),
            cov,
            floor: sd.iter().map(|s| 1e-8 * s * s).collect(),
            adapt_until,
            interval: 100,
            count: 0,
            mean: vec![0.0; p],
            m2: vec![0.0; p * p],
        };
        out.refactor()?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major covariance.
    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    pub fn is_frozen(&self, iteration: usize) -> bool {
        iteration >= self.adapt_until
    }

    fn refactor(&mut self) -> Result<()> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.cov);
        let (c, _) = cholesky_jittered(&m, 1e-6).ok_or(Error::NotPositiveDefinite { jitter: 1e-6 })?;
        let l = c.l();
        self.chol = (0..self.dim * self.dim)
            .map(|k| l[(k / self.dim, k % self.dim)])
            .collect();
        Ok(())
    }

    pub fn propose(&self, theta: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let p = self.dim;
        let z: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        (0..p)
            .map(|i| theta[i] + (0..=i).map(|j| self.chol[i * p + j] * z[j]).sum::<f64>())
            .collect()
    }

    /// Record the state after `iteration` (0-based). Updates the covariance on
    /// adaptation boundaries while inside the window.
    pub fn observe(&mut self, iteration: usize, theta: &[f64]) -> Result<()> {
        check_dim(self.dim, theta.len())?;
        if iteration >= self.adapt_until {
            return Ok(());
        }
        let p = self.dim;
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = (0..p).map(|i| theta[i] - self.mean[i]).collect();
        for i in 0..p {
            self.mean[i] += delta[i] / n;
        }
        for i in 0..p {
            for j in 0..p {
                self.m2[i * p + j] += delta[i] * (theta[j] - self.mean[j]);
            }
        }
        let boundary = (iteration + 1) % self.interval == 0 || iteration + 1 == self.adapt_until;
        if boundary && self.count >= (2 * p).max(20) {
            let scale = 2.38 * 2.38 / p as f64;
            let mut cov = vec![0.0; p * p];
            for i in 0..p {
                for j in 0..p {
                    cov[i * p + j] = scale * self.m2[i * p + j] / (n - 1.0);
                }
                cov[i * p + i] += scale * self.floor[i];
            }
            let previous = std::mem::replace(&mut self.cov, cov);
            if self.refactor().is_err() {
                self.cov = previous;
                self.refactor()?;
            }
        }
        Ok(())
    }
}
