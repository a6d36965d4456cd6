use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{cholesky_jittered, logistic};

const MAX_JITTER: f64 = 1e-6;
const RESTARTS: [f64; 5] = [1.0, 0.3, 3.0, 0.1, 0.03];
const LOG_LENGTH_LO: f64 = -6.907755278982137; // ln 1e-3
const LOG_LENGTH_SPAN: f64 = 13.815510557964274; // ln 1e6
const LOG_SIGNAL_LO: f64 = -20.0;
const LOG_SIGNAL_SPAN: f64 = 30.0;

/// Polynomial mean function fitted by least squares before the GP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanBasis {
    Constant,
    Linear,
    Quadratic,
}

impl MeanBasis {
    fn size(self, p: usize) -> usize {
        match self {
            MeanBasis::Constant => 1,
            MeanBasis::Linear => 1 + p,
            MeanBasis::Quadratic => 1 + p + p * (p + 1) / 2,
        }
    }

    /// Richest basis leaving at least two residual degrees of freedom.
    pub fn for_points(d: usize, p: usize) -> Self {
        if d >= MeanBasis::Quadratic.size(p) + 2 {
            MeanBasis::Quadratic
        } else if d >= MeanBasis::Linear.size(p) + 2 {
            MeanBasis::Linear
        } else {
            MeanBasis::Constant
        }
    }

    fn eval(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        if self == MeanBasis::Constant {
            return;
        }
        out.extend_from_slice(x);
        if self == MeanBasis::Quadratic {
            for a in 0..x.len() {
                for b in 0..=a {
                    out.push(x[a] * x[b]);
                }
            }
        }
    }
}

/// Everything needed to rebuild a fitted emulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSnapshot {
    pub particles: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub noise: Vec<f64>,
    pub basis: MeanBasis,
    pub beta: Vec<f64>,
    pub signal_var: f64,
    pub length_scales: Vec<f64>,
    pub jitter: f64,
    pub neg_log_marginal: f64,
}

/// Gaussian-process regression with an anisotropic squared-exponential
/// kernel, fixed per-point noise, and a least-squares polynomial mean.
#[derive(Clone, Debug)]
pub struct GpSurrogate {
    snap: GpSnapshot,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
}

fn se_kernel(a: &[f64], b: &[f64], signal_var: f64, ls: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let z = (a[k] - b[k]) / ls[k];
        s += z * z;
    }
    signal_var * (-0.5 * s).exp()
}

fn gram(x: &[Vec<f64>], noise: &[f64], signal_var: f64, ls: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    DMatrix::from_fn(d, d, |i, j| {
        se_kernel(&x[i], &x[j], signal_var, ls) + if i == j { noise[i] } else { 0.0 }
    })
}

struct Objective<'a> {
    x: &'a [Vec<f64>],
    resid: &'a DVector<f64>,
    noise: &'a [f64],
    log_signal_ref: f64,
    log_range: Vec<f64>,
}

impl Objective<'_> {
    fn unpack(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let signal = (self.log_signal_ref + LOG_SIGNAL_LO + LOG_SIGNAL_SPAN * logistic(z[0])).exp();
        let ls = z[1..]
            .iter()
            .zip(&self.log_range)
            .map(|(zk, lr)| (lr + LOG_LENGTH_LO + LOG_LENGTH_SPAN * logistic(*zk)).exp())
            .collect();
        (signal, ls)
    }

    fn pack(&self, signal: f64, ls_multiplier: f64) -> Vec<f64> {
        let logit = |u: f64| (u / (1.0 - u)).ln();
        let u0 = (signal.ln() - self.log_signal_ref - LOG_SIGNAL_LO) / LOG_SIGNAL_SPAN;
        let uk = (ls_multiplier.ln() - LOG_LENGTH_LO) / LOG_LENGTH_SPAN;
        let mut z = vec![logit(u0.clamp(1e-6, 1.0 - 1e-6))];
        z.extend(std::iter::repeat(logit(uk)).take(self.log_range.len()));
        z
    }

    fn nlml(&self, signal: f64, ls: &[f64]) -> f64 {
        let k = gram(self.x, self.noise, signal, ls);
        let Some((c, _)) = cholesky_jittered(&k, MAX_JITTER) else {
            return f64::MAX;
        };
        let alpha = c.solve(self.resid);
        let logdet: f64 = c.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        0.5 * self.resid.dot(&alpha) + 0.5 * logdet
            + 0.5 * self.x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, z: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let (s, ls) = self.unpack(z);
        Ok(self.nlml(s, &ls))
    }
}

impl GpSurrogate {
    /// Fit by maximizing the marginal likelihood over the signal variance and
    /// length scales from five starting points. Length scales are confined to
    /// [1e-3, 1e3] times the input range of each coordinate.
    pub fn fit(particles: &[Vec<f64>], values: &[f64], noise: &[f64]) -> Result<Self> {
        let d = particles.len();
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "a GP fit needs at least 2 training points, got {d}"
            )));
        }
        check_dim(d, values.len())?;
        check_dim(d, noise.len())?;
        let p = particles[0].len();
        for x in particles {
            check_dim(p, x.len())?;
        }
        if noise.iter().any(|v| !(*v >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("GP targets must be finite and noise non-negative".into()));
        }

        let basis = MeanBasis::for_points(d, p);
        let beta = least_squares(particles, values, basis);
        let resid = residuals(particles, values, basis, &beta);

        let log_range = (0..p)
            .map(|k| {
                let (lo, hi) = particles
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[k]), hi.max(x[k])));
                if hi > lo {
                    (hi - lo).ln()
                } else {
                    0.0
                }
            })
            .collect();
        let scale = values.iter().map(|v| v * v).sum::<f64>() / d as f64;
        let resid_var = resid.iter().map(|v| v * v).sum::<f64>() / d as f64;
        let signal_ref = resid_var.max(1e-12 * (1.0 + scale));
        let obj = Objective {
            x: particles,
            resid: &resid,
            noise,
            log_signal_ref: signal_ref.ln(),
            log_range,
        };

        let mut best: Option<(f64, Vec<f64>)> = None;
        for mult in RESTARTS {
            let z0 = obj.pack(signal_ref, mult);
            let mut simplex = vec![z0.clone()];
            for i in 0..z0.len() {
                let mut v = z0.clone();
                v[i] += 1.0;
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(1e-9)
                .map_err(|e| Error::Unsupported(format!("optimizer setup failed: {e}")))?;
            let res = Executor::new(
                Objective {
                    x: obj.x,
                    resid: obj.resid,
                    noise: obj.noise,
                    log_signal_ref: obj.log_signal_ref,
                    log_range: obj.log_range.clone(),
                },
                solver,
            )
            .configure(|s| s.max_iters(400 * (p as u64 + 1)))
            .run()
            .map_err(|e| Error::Unsupported(format!("hyperparameter optimization failed: {e}")))?;
            let cost = res.state().get_best_cost();
            if let Some(z) = res.state().get_best_param() {
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, z.clone()));
                }
            }
        }
        let (cost, z) = best.ok_or(Error::NotPositiveDefinite { jitter: MAX_JITTER })?;
        if cost >= f64::MAX {
            return Err(Error::NotPositiveDefinite { jitter: MAX_JITTER });
        }
        let (signal_var, length_scales) = obj.unpack(&z);
        GpSurrogate::from_snapshot(GpSnapshot {
            particles: particles.to_vec(),
            values: values.to_vec(),
            noise: noise.to_vec(),
            basis,
            beta,
            signal_var,
            length_scales,
            jitter: 0.0,
            neg_log_marginal: cost,
        })
    }

    /// Rebuild the cached factorization from stored hyperparameters.
    pub fn from_snapshot(mut snap: GpSnapshot) -> Result<Self> {
        let resid = residuals(&snap.particles, &snap.values, snap.basis, &snap.beta);
        let k = gram(&snap.particles, &snap.noise, snap.signal_var, &snap.length_scales);
        let (c, jitter) =
            cholesky_jittered(&k, MAX_JITTER).ok_or(Error::NotPositiveDefinite { jitter: MAX_JITTER })?;
        snap.jitter = jitter;
        let alpha = c.solve(&resid);
        Ok(GpSurrogate {
            snap,
            chol: c.l(),
            alpha,
        })
    }

    pub fn snapshot(&self) -> &GpSnapshot {
        &self.snap
    }

    fn kstar(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.snap.particles.len(),
            self.snap
                .particles
                .iter()
                .map(|xi| se_kernel(x, xi, self.snap.signal_var, &self.snap.length_scales)),
        )
    }

    fn prior_mean(&self, x: &[f64]) -> f64 {
        let mut b = Vec::new();
        self.snap.basis.eval(x, &mut b);
        b.iter().zip(&self.snap.beta).map(|(u, v)| u * v).sum()
    }

    /// Posterior mean at `x`.
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.prior_mean(x) + self.kstar(x).dot(&self.alpha)
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let ks = self.kstar(x);
        let v = self
            .chol
            .solve_lower_triangular(&ks)
            .unwrap_or_else(|| DVector::zeros(ks.len()));
        let var = (self.snap.signal_var - v.dot(&v)).max(0.0);
        (self.prior_mean(x) + ks.dot(&self.alpha), var)
    }
}

fn least_squares(x: &[Vec<f64>], y: &[f64], basis: MeanBasis) -> Vec<f64> {
    let q = basis.size(x[0].len());
    let mut b = Vec::new();
    let mut design = DMatrix::zeros(x.len(), q);
    for (i, xi) in x.iter().enumerate() {
        basis.eval(xi, &mut b);
        for j in 0..q {
            design[(i, j)] = b[j];
        }
    }
    let yv = DVector::from_column_slice(y);
    design
        .svd(true, true)
        .solve(&yv, 1e-12)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|_| {
            let mut beta = vec![0.0; q];
            beta[0] = y.iter().sum::<f64>() / y.len() as f64;
            beta
        })
}

fn residuals(x: &[Vec<f64>], y: &[f64], basis: MeanBasis, beta: &[f64]) -> DVector<f64> {
    let mut b = Vec::new();
    DVector::from_iterator(
        x.len(),
        x.iter().zip(y).map(|(xi, yi)| {
            basis.eval(xi, &mut b);
            yi - b.iter().zip(beta).map(|(u, v)| u * v).sum::<f64>()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_noise_free_points() {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.4]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (2.0 * x[0]).sin() + 0.3 * x[0] * x[0]).collect();
        let gp = GpSurrogate::fit(&xs, &ys, &[0.0; 8]).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((gp.mean(x) - y).abs() <= 1e-6 * y.abs().max(1.0), "{} vs {y}", gp.mean(x));
        }
    }

    #[test]
    fn constant_targets_stay_constant() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let gp = GpSurrogate::fit(&xs, &[2.5; 6], &[0.0; 6]).unwrap();
        for x in [[0.3, 0.2], [10.0, -4.0], [2.0, 1.0]] {
            assert!((gp.mean(&x) - 2.5).abs() < 1e-6);
        }
    }

    #[test]
    fn snapshot_roundtrip() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let ys = [0.0, 1.0, 0.5, -0.2, 0.1];
        let gp = GpSurrogate::fit(&xs, &ys, &[1e-3; 5]).unwrap();
        let json = serde_json::to_string(gp.snapshot()).unwrap();
        let back = GpSurrogate::from_snapshot(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.mean(&[1.7]), gp.mean(&[1.7]));
    }

    #[test]
    fn needs_two_points() {
        assert!(GpSurrogate::fit(&[vec![0.0]], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn basis_selection() {
        assert_eq!(MeanBasis::for_points(2, 1), MeanBasis::Constant);
        assert_eq!(MeanBasis::for_points(4, 1), MeanBasis::Linear);
        assert_eq!(MeanBasis::for_points(5, 1), MeanBasis::Quadratic);
        assert_eq!(MeanBasis::for_points(8, 2), MeanBasis::Quadratic);
    }
}
