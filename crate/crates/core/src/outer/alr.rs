use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::ChainSampler;
use super::trace::{theta_columns, TraceMeta};
use super::{Prior, Proposal};
use crate::emulation::{central_particle, snis_log_ratio, telescoping_order, AuxStatPool};
use crate::error::{check_dim, Error, Result};
use crate::models::{ExpFamily, InnerKind};
use crate::numeric::dot;
use crate::rng::{derive_stream, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlrSettings {
    pub inner: InnerKind,
    /// Inner cycles per particle per outer iteration.
    pub cycles_per_iteration: usize,
    /// Cycles discarded at each particle before pooling.
    pub warmup_cycles: usize,
    /// Draws pooled at each particle before the first outer iteration.
    pub initial_draws: usize,
    pub pool_capacity: usize,
    /// Re-telescope the particle estimates every this many iterations.
    pub refresh_every: usize,
    pub proposal_sd: Vec<f64>,
    pub adapt_until: usize,
}

impl AlrSettings {
    pub fn new(inner: InnerKind, proposal_sd: Vec<f64>, adapt_until: usize) -> Self {
        AlrSettings {
            inner,
            cycles_per_iteration: 1,
            warmup_cycles: 100,
            initial_draws: 100,
            pool_capacity: 100_000,
            refresh_every: 100,
            proposal_sd,
            adapt_until,
        }
    }
}

struct Particle<S> {
    theta: Vec<f64>,
    state: S,
    pool: AuxStatPool,
    rng: RngStream,
}

/// Adaptive normalizing-function approximation.
///
/// Every particle runs a persistent inner chain whose statistics accumulate
/// in its pool. log c(θ) is estimated relative to the central particle by
/// telescoping importance-sampling ratios along nearest-particle hops and a
/// final hop from the particle nearest θ.
pub struct AlrSampler<'a, M: ExpFamily> {
    model: &'a M,
    data_stats: Vec<f64>,
    prior: &'a Prior,
    particles: Vec<Particle<M::State>>,
    order: Vec<(usize, Option<usize>)>,
    log_c: Vec<f64>,
    far: f64,
    proposal: Proposal,
    settings: AlrSettings,
    extrapolations: u64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl<'a, M: ExpFamily> AlrSampler<'a, M> {
    pub fn new(
        model: &'a M,
        data: &M::State,
        prior: &'a Prior,
        particles: &[Vec<f64>],
        settings: AlrSettings,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if particles.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "ALR needs at least 2 particles, got {}",
                particles.len()
            )));
        }
        for th in particles {
            check_dim(model.dim(), th.len())?;
            model.check_theta(th)?;
        }
        model.validate(data)?;
        let base = RngStream::new(seed, derive_stream(stream, 7));
        let mut ps: Vec<Particle<M::State>> = particles
            .iter()
            .enumerate()
            .map(|(j, th)| Particle {
                theta: th.clone(),
                state: data.clone(),
                pool: AuxStatPool::with_capacity(th.clone(), settings.pool_capacity),
                rng: base.child(j as u64),
            })
            .collect();
        let (warm, init) = (settings.warmup_cycles, settings.initial_draws);
        let inner = settings.inner;
        ps.par_iter_mut().try_for_each(|p| -> Result<()> {
            model.run_cycles(inner, warm, &mut p.state, &p.theta, &mut p.rng)?;
            for _ in 0..init.max(1) {
                model.run_cycles(inner, 1, &mut p.state, &p.theta, &mut p.rng)?;
                let s = model.suffstats(&p.state);
                p.pool.push(&s, &mut p.rng)?;
            }
            Ok(())
        })?;
        let order = telescoping_order(particles, central_particle(particles));
        let far = 2.0
            * order
                .iter()
                .filter_map(|&(j, s)| s.map(|s| dist(&particles[j], &particles[s])))
                .fold(0.0, f64::max);
        let mut out = AlrSampler {
            model,
            data_stats: model.suffstats(data).0,
            prior,
            particles: ps,
            order,
            log_c: vec![0.0; particles.len()],
            far,
            proposal: Proposal::adaptive(&settings.proposal_sd, settings.adapt_until)?,
            settings,
            extrapolations: 0,
        };
        out.refresh()?;
        Ok(out)
    }

    /// Re-telescope the particle estimates from the current pools.
    pub fn refresh(&mut self) -> Result<()> {
        for &(j, src) in &self.order {
            if let Some(s) = src {
                let (lr, _) = snis_log_ratio(&self.particles[s].pool, &self.particles[j].theta)?;
                self.log_c[j] = self.log_c[s] + lr;
            }
        }
        Ok(())
    }

    /// Current log ĉ at each particle, relative to the central particle.
    pub fn particle_log_c(&self) -> &[f64] {
        &self.log_c
    }

    pub fn pooled_draws(&self) -> u64 {
        self.particles.iter().map(|p| p.pool.len()).sum()
    }

    pub fn extrapolations(&self) -> u64 {
        self.extrapolations
    }

    /// Advance every particle's inner chain and pool its statistics.
    pub fn grow_pools(&mut self) -> Result<()> {
        let (model, inner, cycles) = (self.model, self.settings.inner, self.settings.cycles_per_iteration);
        self.particles.par_iter_mut().try_for_each(|p| -> Result<()> {
            model.run_cycles(inner, cycles, &mut p.state, &p.theta, &mut p.rng)?;
            let s = model.suffstats(&p.state);
            p.pool.push(&s, &mut p.rng)
        })
    }

    /// log ĉ(θ) relative to the central particle, and the index of the
    /// particle used for the final hop.
    pub fn log_c_hat(&self, theta: &[f64]) -> Result<(f64, usize)> {
        let j = (0..self.particles.len())
            .min_by(|&a, &b| {
                dist(theta, &self.particles[a].theta).total_cmp(&dist(theta, &self.particles[b].theta))
            })
            .unwrap_or(0);
        let (lr, _) = snis_log_ratio(&self.particles[j].pool, theta)?;
        Ok((self.log_c[j] + lr, j))
    }
}

impl<M: ExpFamily> ChainSampler for AlrSampler<'_, M> {
    fn label(&self) -> String {
        "alr".into()
    }

    fn columns(&self) -> Vec<String> {
        theta_columns(self.proposal.dim())
    }

    fn theta_dim(&self) -> usize {
        self.proposal.dim()
    }

    fn step(&mut self, state: &mut [f64], iteration: usize, rng: &mut RngStream) -> Result<bool> {
        self.grow_pools()?;
        if self.settings.refresh_every > 0 && (iteration + 1) % self.settings.refresh_every == 0 {
            self.refresh()?;
        }
        let proposed = self.proposal.propose(state, rng);
        let mut accepted = false;
        if self.prior.in_support(&proposed) {
            let (lc_new, j) = self.log_c_hat(&proposed)?;
            if dist(&proposed, &self.particles[j].theta) > self.far {
                self.extrapolations += 1;
            }
            let (lc_old, _) = self.log_c_hat(state)?;
            let diff: Vec<f64> = proposed.iter().zip(state.iter()).map(|(a, b)| a - b).collect();
            let log_ratio = self.prior.log_density(&proposed) - self.prior.log_density(state)
                + dot(&diff, &self.data_stats)
                - (lc_new - lc_old);
            accepted = log_ratio >= 0.0 || rng.uniform().ln() < log_ratio;
        }
        if accepted {
            state.copy_from_slice(&proposed);
        }
        self.proposal.observe(iteration, state)?;
        Ok(accepted)
    }

    fn finish(&self, meta: &mut TraceMeta) {
        meta.tuning.insert("d".into(), self.particles.len() as f64);
        meta.extra.insert("extrapolations".into(), self.extrapolations.into());
        meta.extra.insert("pooled_draws".into(), self.pooled_draws().into());
        if self.extrapolations > 0 {
            meta.warnings.push(format!(
                "{} proposals fell far outside the particle set and used nearest-particle extrapolation",
                self.extrapolations
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Enumeration, PottsLattice, PottsModel, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn needs_two_particles() {
        let m = PottsModel::new(2, 2, 2).unwrap();
        let x = PottsLattice::uniform(2, 2, 2, 1).unwrap();
        let prior = Prior::potts_default();
        let s = AlrSettings::new(InnerKind::GibbsSweep, vec![0.3], 0);
        assert!(AlrSampler::new(&m, &x, &prior, &[vec![1.0]], s, 0, 0).is_err());
    }

    #[test]
    fn reference_contribution_is_zero() {
        let m = PottsModel::new(2, 2, 2).unwrap();
        let x = PottsLattice::uniform(2, 2, 2, 1).unwrap();
        let prior = Prior::potts_default();
        let s = AlrSettings::new(InnerKind::GibbsSweep, vec![0.3], 0);
        let alr = AlrSampler::new(&m, &x, &prior, &[vec![0.5], vec![1.0], vec![1.5]], s, 0, 0).unwrap();
        let (lc, j) = alr.log_c_hat(&[1.0]).unwrap();
        assert_eq!(j, 1);
        assert_eq!(lc, alr.particle_log_c()[1]);
        assert_eq!(alr.particle_log_c()[1], 0.0);
    }

    #[test]
    fn coincident_particles_converge() {
        let m = PottsModel::new(2, 2, 2).unwrap();
        let x = PottsLattice::uniform(2, 2, 2, 1).unwrap();
        let prior = Prior::potts_default();
        let s = AlrSettings::new(InnerKind::GibbsSweep, vec![0.3], 0);
        let mut alr = AlrSampler::new(&m, &x, &prior, &vec![vec![0.8]; 4], s, 5, 0).unwrap();
        while alr.pooled_draws() < 10_000 {
            alr.grow_pools().unwrap();
        }
        let e = Enumeration::new(&m, DEFAULT_ENUMERATION_CAP).unwrap();
        let truth = e.log_normalizer(&[1.1]).unwrap() - e.log_normalizer(&[0.8]).unwrap();
        let (est, _) = alr.log_c_hat(&[1.1]).unwrap();
        assert!((est - truth).abs() < 0.05, "{est} vs {truth}");
    }
}
