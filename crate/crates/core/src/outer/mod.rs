//! Posterior samplers over θ: the Metropolis-Hastings core with exchange,
//! DMH and ABC acceptance rules, ALR, and spike-and-slab DMH.

pub mod alr;
pub mod chain;
pub mod kernels;
pub mod prior;
pub mod proposal;
pub mod spike_slab;
pub mod trace;

pub use alr::{AlrSampler, AlrSettings};
pub use chain::{run_chain, ChainSampler, ChainSettings, MhSampler, Persistence};
pub use kernels::{
    abc_mcmc_step, dmh_step, exchange_log_ratio, exchange_step, mh_step, AbcKernel, DmhKernel,
    ExchangeKernel, Kernel, L1Distance, StepOutcome, SurrogateKernel,
};
pub use prior::Prior;
pub use proposal::Proposal;
pub use spike_slab::{SpikeSlabSampler, SpikeSlabSettings, SpikeSlabState};
pub use trace::{Trace, TraceMeta};
