//! Simulation from f(·|θ) at fixed θ: the auxiliary-draw engine behind every
//! outer sampler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Enumeration, ExpFamily, InnerKind, ModelKind, PottsLattice, PottsModel};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerSamplerConfig {
    pub kind: InnerKind,
    /// Number of cycles m.
    pub cycles: usize,
    pub seed: u64,
}

impl InnerSamplerConfig {
    pub fn new(kind: InnerKind, cycles: usize, seed: u64) -> Self {
        InnerSamplerConfig { kind, cycles, seed }
    }

    pub fn validate_for(&self, model: ModelKind) -> Result<()> {
        match (self.kind, model) {
            (InnerKind::SwendsenWang, ModelKind::Potts) => Ok(()),
            (InnerKind::SwendsenWang, other) => Err(Error::Config(format!(
                "Swendsen-Wang is only valid for the Potts model, not {other}"
            ))),
            (InnerKind::EdgeToggle, ModelKind::Ergm) => Ok(()),
            (InnerKind::EdgeToggle, other) => Err(Error::Config(format!(
                "edge-toggle updates are only valid for the graph model, not {other}"
            ))),
            (InnerKind::GibbsSweep, _) => Ok(()),
        }
    }
}

/// One systematic Gibbs sweep.
pub fn gibbs_cycle<M: ExpFamily>(
    model: &M,
    state: &mut M::State,
    theta: &[f64],
    rng: &mut RngStream,
) -> Result<()> {
    model.check_theta(theta)?;
    model.gibbs_sweep(state, theta, rng);
    Ok(())
}

/// One Swendsen-Wang cycle on a Potts lattice.
pub fn swendsen_wang_cycle(
    lattice: &mut PottsLattice,
    theta: f64,
    rng: &mut RngStream,
) -> Result<()> {
    PottsModel::for_lattice(lattice).swendsen_wang_cycle(lattice, theta, rng)
}

/// Run `config.cycles` cycles from `init` using a stream seeded from
/// `config.seed`; returns the final state.
pub fn simulate<M: ExpFamily>(
    model: &M,
    theta: &[f64],
    config: &InnerSamplerConfig,
    init: &M::State,
) -> Result<M::State> {
    let mut rng = RngStream::new(config.seed, 0);
    simulate_with(model, theta, config.kind, config.cycles, init, &mut rng)
}

/// As [`simulate`], drawing from a caller-supplied stream.
pub fn simulate_with<M: ExpFamily>(
    model: &M,
    theta: &[f64],
    kind: InnerKind,
    cycles: usize,
    init: &M::State,
    rng: &mut RngStream,
) -> Result<M::State> {
    model.check_theta(theta)?;
    model.validate(init)?;
    let mut state = init.clone();
    model.run_cycles(kind, cycles, &mut state, theta, rng)?;
    Ok(state)
}

/// Exact sampler over an enumerated state space.
#[derive(Clone, Debug)]
pub struct ExactSampler<M: ExpFamily> {
    enumeration: Enumeration<M>,
}

impl<M: ExpFamily + Clone> ExactSampler<M> {
    pub fn new(model: &M, cap: u64) -> Result<Self> {
        match Enumeration::new(model, cap) {
            Ok(enumeration) => Ok(ExactSampler { enumeration }),
            Err(Error::Intractable { states, cap }) => Err(Error::ExactSamplingUnavailable(
                format!("state space of {states} exceeds the enumeration cap {cap}"),
            )),
            Err(e) => Err(e),
        }
    }

    pub fn enumeration(&self) -> &Enumeration<M> {
        &self.enumeration
    }

    pub fn sample(&self, theta: &[f64], rng: &mut RngStream) -> M::State {
        self.enumeration.sample(theta, rng)
    }

    pub fn sample_stats(&self, theta: &[f64], rng: &mut RngStream) -> Vec<f64> {
        self.enumeration.sample_stats(theta, rng).to_vec()
    }
}

/// One exact draw from f(·|θ). Builds the enumeration on every call; hold an
/// [`ExactSampler`] for repeated draws.
pub fn exact_sample<M: ExpFamily + Clone>(
    model: &M,
    theta: &[f64],
    cap: u64,
    rng: &mut RngStream,
) -> Result<M::State> {
    model.check_theta(theta)?;
    Ok(ExactSampler::new(model, cap)?.sample(theta, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ErgmModel, ErgmState, UndirectedGraph, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn zero_cycles_is_identity() {
        let m = PottsModel::new(3, 3, 3).unwrap();
        let x = PottsLattice::uniform(3, 3, 3, 2).unwrap();
        let cfg = InnerSamplerConfig::new(InnerKind::SwendsenWang, 0, 5);
        assert_eq!(simulate(&m, &[1.0], &cfg, &x).unwrap(), x);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = PottsModel::new(6, 6, 4).unwrap();
        let x = PottsLattice::uniform(6, 6, 4, 1).unwrap();
        for kind in [InnerKind::GibbsSweep, InnerKind::SwendsenWang] {
            let cfg = InnerSamplerConfig::new(kind, 25, 99);
            assert_eq!(
                simulate(&m, &[0.9], &cfg, &x).unwrap(),
                simulate(&m, &[0.9], &cfg, &x).unwrap()
            );
        }
    }

    #[test]
    fn swendsen_wang_only_for_potts() {
        let cfg = InnerSamplerConfig::new(InnerKind::SwendsenWang, 1, 0);
        assert!(cfg.validate_for(ModelKind::Ergm).is_err());
        assert!(cfg.validate_for(ModelKind::Potts).is_ok());
        let m = ErgmModel::new(4).unwrap();
        let x = ErgmState::new(UndirectedGraph::empty(4));
        assert!(simulate(&m, &[0.0, 0.0], &cfg, &x).is_err());
    }

    #[test]
    fn exact_sampling_refuses_large_lattice() {
        let m = PottsModel::new(30, 30, 4).unwrap();
        let mut rng = RngStream::new(0, 0);
        let err = exact_sample(&m, &[1.0], DEFAULT_ENUMERATION_CAP, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ExactSamplingUnavailable(_)));
    }
}
