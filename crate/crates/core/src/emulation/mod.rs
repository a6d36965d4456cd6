//! Importance-sampling estimates of normalizing-function ratios and the
//! Gaussian-process likelihood emulator.

pub mod gp;
pub mod likem;
pub mod particles;
pub mod pool;

pub use gp::{GpSnapshot, GpSurrogate, MeanBasis};
pub use likem::{likem_run, select_particles, EmulatorSnapshot, LikemOutput, LikemSettings};
pub use particles::{
    central_particle, estimate_loglik_at_particles, farthest_point_thinning, telescoping_order,
    ParticleEstimateSettings, ParticleEstimates, DEFAULT_ESS_FLOOR,
};
pub use pool::{build_pool, snis_log_ratio, snis_moments, AuxStatPool, PoolGenerator, SnisMoments};
