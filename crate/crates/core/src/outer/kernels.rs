use serde::{Deserialize, Serialize};

use super::{Prior, Proposal};
use crate::error::{check_dim, Error, Result};
use crate::inner::ExactSampler;
use crate::models::{ExpFamily, InnerKind};
use crate::numeric::dot;
use crate::rng::RngStream;

/// Acceptance rule for a proposed move θ → θ*.
pub trait Kernel: Send {
    fn label(&self) -> String;

    /// Log acceptance ratio, or `None` when the move is rejected outright.
    fn log_ratio(&mut self, theta: &[f64], proposed: &[f64], rng: &mut RngStream)
        -> Result<Option<f64>>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub theta: Vec<f64>,
    pub accepted: bool,
    pub log_ratio: f64,
}

/// One Metropolis-Hastings step with a symmetric random-walk proposal.
pub fn mh_step<K: Kernel + ?Sized>(
    kernel: &mut K,
    theta: &[f64],
    proposal: &Proposal,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    let proposed = proposal.propose(theta, rng);
    let log_ratio = kernel.log_ratio(theta, &proposed, rng)?.unwrap_or(f64::NEG_INFINITY);
    let accepted = log_ratio >= 0.0 || (log_ratio > f64::NEG_INFINITY && rng.uniform().ln() < log_ratio);
    Ok(StepOutcome {
        theta: if accepted { proposed } else { theta.to_vec() },
        accepted,
        log_ratio,
    })
}

/// log of the exchange acceptance ratio:
/// log p(θ*) − log p(θ) + (θ* − θ)ᵀS(x) + (θ − θ*)ᵀS(x*).
pub fn exchange_log_ratio(
    prior: &Prior,
    data_stats: &[f64],
    theta: &[f64],
    proposed: &[f64],
    aux_stats: &[f64],
) -> f64 {
    let lp = prior.log_density(proposed);
    if lp == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut r = lp - prior.log_density(theta);
    for k in 0..theta.len() {
        let diff = proposed[k] - theta[k];
        r += diff * (data_stats[k] - aux_stats[k]);
    }
    r
}

/// Exchange algorithm with exact auxiliary draws from an enumerated model.
pub struct ExchangeKernel<'a, M: ExpFamily + Clone> {
    pub sampler: &'a ExactSampler<M>,
    pub prior: &'a Prior,
    pub data_stats: &'a [f64],
}

impl<M: ExpFamily + Clone> Kernel for ExchangeKernel<'_, M> {
    fn label(&self) -> String {
        "exchange".into()
    }

    fn log_ratio(&mut self, theta: &[f64], proposed: &[f64], rng: &mut RngStream) -> Result<Option<f64>> {
        if !self.prior.in_support(proposed) {
            return Ok(None);
        }
        let aux = self.sampler.sample_stats(proposed, rng);
        Ok(Some(exchange_log_ratio(self.prior, self.data_stats, theta, proposed, &aux)))
    }
}

/// Double Metropolis-Hastings: the exact draw is replaced by `cycles` inner
/// cycles at θ* started from the data.
pub struct DmhKernel<'a, M: ExpFamily> {
    pub model: &'a M,
    pub data: &'a M::State,
    pub data_stats: &'a [f64],
    pub prior: &'a Prior,
    pub inner: InnerKind,
    pub cycles: usize,
    work: M::State,
}

impl<'a, M: ExpFamily> DmhKernel<'a, M> {
    pub fn new(
        model: &'a M,
        data: &'a M::State,
        data_stats: &'a [f64],
        prior: &'a Prior,
        inner: InnerKind,
        cycles: usize,
    ) -> Result<Self> {
        if cycles == 0 {
            return Err(Error::InvalidParameter("DMH needs at least one inner cycle".into()));
        }
        model.validate(data)?;
        check_dim(model.dim(), data_stats.len())?;
        Ok(DmhKernel {
            model,
            data,
            data_stats,
            prior,
            inner,
            cycles,
            work: data.clone(),
        })
    }
}

impl<M: ExpFamily> Kernel for DmhKernel<'_, M> {
    fn label(&self) -> String {
        "dmh".into()
    }

    fn log_ratio(&mut self, theta: &[f64], proposed: &[f64], rng: &mut RngStream) -> Result<Option<f64>> {
        if !self.prior.in_support(proposed) {
            return Ok(None);
        }
        self.work.clone_from(self.data);
        self.model.run_cycles(self.inner, self.cycles, &mut self.work, proposed, rng)?;
        let aux = self.model.suffstats(&self.work);
        Ok(Some(exchange_log_ratio(self.prior, self.data_stats, theta, proposed, &aux)))
    }
}

/// Weighted L1 distance between summaries: Σ_k |a_k − b_k| / scale_k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Distance {
    pub scale: Vec<f64>,
}

impl L1Distance {
    pub fn unscaled(p: usize) -> Self {
        L1Distance { scale: vec![1.0; p] }
    }

    /// Standardize each coordinate by its standard deviation across `stats`.
    pub fn standardized(stats: &[Vec<f64>]) -> Result<Self> {
        let p = stats.first().map(Vec::len).unwrap_or(0);
        if stats.len() < 2 || p == 0 {
            return Err(Error::InvalidParameter(
                "standardizing the distance needs at least two summary vectors".into(),
            ));
        }
        let scale = (0..p)
            .map(|k| {
                let col: Vec<f64> = stats.iter().map(|s| s[k]).collect();
                let sd = crate::numeric::variance(&col).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(L1Distance { scale })
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.scale)
            .map(|((x, y), s)| (x - y).abs() / s)
            .sum()
    }
}

/// ABC-MCMC: accept with the prior ratio only when the simulated summary lies
/// within ε of the data summary.
pub struct AbcKernel<'a, M: ExpFamily> {
    pub model: &'a M,
    pub data: &'a M::State,
    pub data_stats: &'a [f64],
    pub prior: &'a Prior,
    pub inner: InnerKind,
    pub cycles: usize,
    pub epsilon: f64,
    pub distance: L1Distance,
    work: M::State,
}

impl<'a, M: ExpFamily> AbcKernel<'a, M> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &'a M,
        data: &'a M::State,
        data_stats: &'a [f64],
        prior: &'a Prior,
        inner: InnerKind,
        cycles: usize,
        epsilon: f64,
        distance: L1Distance,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("ABC threshold must be >= 0, got {epsilon}")));
        }
        check_dim(model.dim(), distance.scale.len())?;
        model.validate(data)?;
        Ok(AbcKernel {
            model,
            data,
            data_stats,
            prior,
            inner,
            cycles,
            epsilon,
            distance,
            work: data.clone(),
        })
    }
}

impl<M: ExpFamily> Kernel for AbcKernel<'_, M> {
    fn label(&self) -> String {
        "abc".into()
    }

    fn log_ratio(&mut self, theta: &[f64], proposed: &[f64], rng: &mut RngStream) -> Result<Option<f64>> {
        if !self.prior.in_support(proposed) {
            return Ok(None);
        }
        let ratio = self.prior.log_density(proposed) - self.prior.log_density(theta);
        if self.epsilon == f64::INFINITY {
            return Ok(Some(ratio));
        }
        self.work.clone_from(self.data);
        self.model.run_cycles(self.inner, self.cycles, &mut self.work, proposed, rng)?;
        let aux = self.model.suffstats(&self.work);
        if self.distance.distance(self.data_stats, &aux) < self.epsilon {
            Ok(Some(ratio))
        } else {
            Ok(None)
        }
    }
}

pub fn exchange_step<M: ExpFamily + Clone>(
    theta: &[f64],
    data_stats: &[f64],
    prior: &Prior,
    proposal: &Proposal,
    sampler: &ExactSampler<M>,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    let mut k = ExchangeKernel {
        sampler,
        prior,
        data_stats,
    };
    mh_step(&mut k, theta, proposal, rng)
}

#[allow(clippy::too_many_arguments)]
pub fn dmh_step<M: ExpFamily>(
    theta: &[f64],
    model: &M,
    data: &M::State,
    prior: &Prior,
    proposal: &Proposal,
    inner: InnerKind,
    cycles: usize,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    let s = model.suffstats(data);
    let mut k = DmhKernel::new(model, data, &s, prior, inner, cycles)?;
    mh_step(&mut k, theta, proposal, rng)
}

#[allow(clippy::too_many_arguments)]
pub fn abc_mcmc_step<M: ExpFamily>(
    theta: &[f64],
    model: &M,
    data: &M::State,
    prior: &Prior,
    proposal: &Proposal,
    epsilon: f64,
    distance: L1Distance,
    inner: InnerKind,
    cycles: usize,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    let s = model.suffstats(data);
    let mut k = AbcKernel::new(model, data, &s, prior, inner, cycles, epsilon, distance)?;
    mh_step(&mut k, theta, proposal, rng)
}

/// Kernel targeting p(θ)·exp(ℓ(θ)) for a known surrogate log-likelihood ℓ.
pub struct SurrogateKernel<'a, F: Fn(&[f64]) -> f64 + Send> {
    pub prior: &'a Prior,
    pub loglik: F,
    pub label: &'static str,
}

impl<F: Fn(&[f64]) -> f64 + Send> Kernel for SurrogateKernel<'_, F> {
    fn label(&self) -> String {
        self.label.into()
    }

    fn log_ratio(&mut self, theta: &[f64], proposed: &[f64], _rng: &mut RngStream) -> Result<Option<f64>> {
        if !self.prior.in_support(proposed) {
            return Ok(None);
        }
        Ok(Some(
            self.prior.log_density(proposed) - self.prior.log_density(theta)
                + (self.loglik)(proposed)
                - (self.loglik)(theta),
        ))
    }
}

/// θᵀS(x) with the dimension checked.
pub fn data_term(theta: &[f64], data_stats: &[f64]) -> Result<f64> {
    check_dim(data_stats.len(), theta.len())?;
    Ok(dot(theta, data_stats))
}
