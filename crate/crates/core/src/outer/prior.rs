use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_dim, Error, Result};
use crate::rng::RngStream;

/// Product prior over θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    IndependentNormal { mean: Vec<f64>, sd: Vec<f64> },
}

impl Prior {
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let p = Prior::UniformBox { lower, upper };
        p.validate()?;
        Ok(p)
    }

    pub fn normal(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        let p = Prior::IndependentNormal { mean, sd };
        p.validate()?;
        Ok(p)
    }

    /// Uniform(0, 3) on the Potts interaction.
    pub fn potts_default() -> Self {
        Prior::UniformBox {
            lower: vec![0.0],
            upper: vec![3.0],
        }
    }

    /// Normal(0, 10²I) on the two graph-model parameters.
    pub fn ergm_default() -> Self {
        Prior::IndependentNormal {
            mean: vec![0.0; 2],
            sd: vec![10.0; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::UniformBox { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(Error::InvalidParameter("prior has dimension 0".into()));
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !(l.is_finite() && u.is_finite() && l < u) {
                        return Err(Error::InvalidParameter(format!(
                            "uniform prior bounds for coordinate {} must satisfy lower < upper, got [{l}, {u}]",
                            i + 1
                        )));
                    }
                }
            }
            Prior::IndependentNormal { mean, sd } => {
                check_dim(mean.len(), sd.len())?;
                if mean.is_empty() {
                    return Err(Error::InvalidParameter("prior has dimension 0".into()));
                }
                for (i, (m, s)) in mean.iter().zip(sd).enumerate() {
                    if !(m.is_finite() && s.is_finite() && *s > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "normal prior for coordinate {} needs finite mean and positive sd, got ({m}, {s})",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::UniformBox { lower, .. } => lower.len(),
            Prior::IndependentNormal { mean, .. } => mean.len(),
        }
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        match self {
            Prior::UniformBox { lower, upper } => theta
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(t, (l, u))| t > l && t < u),
            Prior::IndependentNormal { .. } => theta.iter().all(|t| t.is_finite()),
        }
    }

    /// log p(θ), `-inf` outside the support.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if !self.in_support(theta) {
            return f64::NEG_INFINITY;
        }
        match self {
            Prior::UniformBox { lower, upper } => {
                -lower.iter().zip(upper).map(|(l, u)| (u - l).ln()).sum::<f64>()
            }
            Prior::IndependentNormal { mean, sd } => theta
                .iter()
                .zip(mean.iter().zip(sd))
                .map(|(t, (m, s))| {
                    let z = (t - m) / s;
                    -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                })
                .sum(),
        }
    }

    /// ∇ log p(θ); zero on the interior of a uniform box.
    pub fn grad_log_density(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, .. } => vec![0.0; lower.len()],
            Prior::IndependentNormal { mean, sd } => theta
                .iter()
                .zip(mean.iter().zip(sd))
                .map(|(t, (m, s))| -(t - m) / (s * s))
                .collect(),
        }
    }

    /// Diagonal of ∇² log p(θ); the off-diagonal terms of a product prior are zero.
    pub fn hessian_diag(&self) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, .. } => vec![0.0; lower.len()],
            Prior::IndependentNormal { sd, .. } => sd.iter().map(|s| -1.0 / (s * s)).collect(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
            Prior::IndependentNormal { mean, .. } => mean.clone(),
        }
    }

    pub fn sd(&self) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) / 12f64.sqrt())
                .collect(),
            Prior::IndependentNormal { sd, .. } => sd.clone(),
        }
    }

    /// Marginal CDF of coordinate `i`.
    pub fn marginal_cdf(&self, i: usize, x: f64) -> f64 {
        match self {
            Prior::UniformBox { lower, upper } => ((x - lower[i]) / (upper[i] - lower[i])).clamp(0.0, 1.0),
            Prior::IndependentNormal { mean, sd } => Normal::new(mean[i], sd[i])
                .map(|n| n.cdf(x))
                .unwrap_or(f64::NAN),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match self {
            Prior::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.uniform())
                .collect(),
            Prior::IndependentNormal { mean, sd } => mean
                .iter()
                .zip(sd)
                .map(|(m, s)| m + s * rng.normal())
                .collect(),
        }
    }
}
