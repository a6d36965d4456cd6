//! Exponential-family models f(x | θ) = exp(θᵀS(x)) / c(θ) with intractable
//! c(θ): the Potts lattice, the edges + GWESP random graph model, and the
//! Ising network model for binary item responses.

mod enumerate;
pub mod ergm;
pub mod io;
pub mod isingnet;
pub mod potts;

use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::dot;
use crate::rng::RngStream;

pub use enumerate::{enumerate_log_normalizer, Enumeration, DEFAULT_ENUMERATION_CAP};
pub use ergm::{ErgmModel, ErgmState, UndirectedGraph, GWESP_DECAY};
pub use isingnet::{IsingNetModel, ItemResponseMatrix};
pub use potts::{PottsLattice, PottsModel};

/// Vector of jointly sufficient statistics S(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuffStat(pub Vec<f64>);

/// Model parameter θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta(pub Vec<f64>);

macro_rules! vec_newtype {
    ($t:ident) => {
        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                $t(v)
            }
        }

        impl From<&[f64]> for $t {
            fn from(v: &[f64]) -> Self {
                $t(v.to_vec())
            }
        }
    };
}

vec_newtype!(SuffStat);
vec_newtype!(Theta);

impl SuffStat {
    pub fn zeros(dim: usize) -> Self {
        SuffStat(vec![0.0; dim])
    }

    pub fn add_assign(&mut self, other: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += b;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Potts,
    Ergm,
    IsingNet,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Potts => "potts",
            ModelKind::Ergm => "ergm",
            ModelKind::IsingNet => "isingnet",
        })
    }
}

/// Transition kernel used for one inner "cycle" at fixed θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    /// Systematic-scan single-site (or single-dyad) heat bath.
    GibbsSweep,
    /// Swendsen-Wang cluster update (Potts only).
    SwendsenWang,
    /// Metropolis toggles of uniformly chosen dyads, C(n,2) per cycle (ERGM only).
    EdgeToggle,
}

impl fmt::Display for InnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerKind::GibbsSweep => "gibbs",
            InnerKind::SwendsenWang => "swendsen_wang",
            InnerKind::EdgeToggle => "edge_toggle",
        })
    }
}

/// An exponential-family model with discrete state space.
///
/// States are addressed site by site: a Potts cell, an ERGM dyad in
/// lexicographic (i < j) order, or an item-response cell in row-major order.
/// Site values are `1..=K` for Potts and `0..=1` otherwise.
pub trait ExpFamily: Send + Sync {
    type State: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn kind(&self) -> ModelKind;

    /// Parameter dimension p.
    fn dim(&self) -> usize;

    fn suffstats(&self, state: &Self::State) -> SuffStat;

    fn validate(&self, state: &Self::State) -> Result<()>;

    fn num_sites(&self) -> usize;

    /// Smallest and largest admissible site value.
    fn value_range(&self) -> (u8, u8);

    fn site_value(&self, state: &Self::State, site: usize) -> u8;

    /// S(x') - S(x) where x' is x with `site` set to `value`.
    fn change_stat(&self, state: &Self::State, site: usize, value: u8) -> Result<SuffStat>;

    fn set_site(&self, state: &mut Self::State, site: usize, value: u8) -> Result<()>;

    /// One systematic sweep of heat-bath updates over every site.
    fn gibbs_sweep(&self, state: &mut Self::State, theta: &[f64], rng: &mut RngStream);

    /// One inner cycle of the requested kind.
    fn inner_cycle(
        &self,
        kind: InnerKind,
        state: &mut Self::State,
        theta: &[f64],
        rng: &mut RngStream,
    ) -> Result<()> {
        match kind {
            InnerKind::GibbsSweep => {
                self.gibbs_sweep(state, theta, rng);
                Ok(())
            }
            other => Err(Error::Unsupported(format!(
                "inner sampler {other} is not available for the {} model",
                self.kind()
            ))),
        }
    }

    /// Run `cycles` inner cycles in place.
    fn run_cycles(
        &self,
        kind: InnerKind,
        cycles: usize,
        state: &mut Self::State,
        theta: &[f64],
        rng: &mut RngStream,
    ) -> Result<()> {
        for _ in 0..cycles {
            self.inner_cycle(kind, state, theta, rng)?;
        }
        Ok(())
    }

    /// Number of states, or `None` when it does not fit in a u64.
    fn state_space_size(&self) -> Option<u64>;

    /// Human-readable state-space size, used in error messages.
    fn state_space_description(&self) -> String;

    /// The `index`-th state in enumeration order.
    fn state_at(&self, index: u64) -> Self::State;

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_dim(self.dim(), theta.len())
    }

    /// Unnormalized log-density θᵀS(x).
    fn log_h(&self, state: &Self::State, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(dot(theta, &self.suffstats(state)))
    }
}

/// Number of unordered pairs C(n, 2).
pub(crate) fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}
