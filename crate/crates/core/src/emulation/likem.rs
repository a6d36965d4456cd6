use serde::{Deserialize, Serialize};

use super::gp::{GpSnapshot, GpSurrogate};
use super::particles::{
    estimate_loglik_at_particles, farthest_point_thinning, ParticleEstimateSettings, ParticleEstimates,
};
use super::pool::PoolGenerator;
use crate::error::{Error, Result};
use crate::models::{ExpFamily, InnerKind};
use crate::outer::{
    run_chain, ChainSettings, DmhKernel, MhSampler, Persistence, Prior, Proposal, SurrogateKernel, Trace,
    TraceMeta,
};
use crate::rng::{derive_stream, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikemSettings {
    /// Number of particles d.
    pub particles: usize,
    /// Auxiliary draws per hop source, N.
    pub pool_size: usize,
    pub pool_generator: PoolGenerator,
    pub ess_floor: f64,
    pub inner: InnerKind,
    /// Inner cycles of the DMH pre-run.
    pub prerun_cycles: usize,
    pub prerun_iterations: usize,
    pub proposal_sd: Vec<f64>,
}

/// Emulator state persisted next to the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmulatorSnapshot {
    pub estimates: ParticleEstimates,
    pub gp: GpSnapshot,
}

pub struct LikemOutput {
    pub trace: Trace,
    pub emulator: EmulatorSnapshot,
}

/// Particles from a short DMH pre-run, thinned to `d` space-filling points.
pub fn select_particles<M: ExpFamily>(
    model: &M,
    data: &M::State,
    prior: &Prior,
    init: &[f64],
    settings: &LikemSettings,
    seed: u64,
    stream: u64,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let stats = model.suffstats(data);
    let kernel = DmhKernel::new(model, data, &stats, prior, settings.inner, settings.prerun_cycles)?;
    let mut pre = MhSampler {
        kernel,
        proposal: Proposal::adaptive(&settings.proposal_sd, settings.prerun_iterations / 2)?,
    };
    let chain = ChainSettings {
        iterations: settings.prerun_iterations,
        burn_in: settings.prerun_iterations / 2,
        thin: 1,
        seed,
        stream,
    };
    let trace = run_chain(&mut pre, init, &chain, TraceMeta::default(), None)?;
    let points: Vec<Vec<f64>> = trace.retained_thetas().into_iter().map(<[f64]>::to_vec).collect();
    if points.is_empty() {
        return Err(Error::InvalidParameter(
            "DMH pre-run retained no samples; increase prerun_iterations".into(),
        ));
    }
    Ok((farthest_point_thinning(&points, settings.particles), trace.meta.acceptance_rate))
}

/// LikeEm: DMH pre-run → particle selection → importance-sampled
/// log-likelihood at the particles → GP fit → MH on the GP posterior mean.
pub fn likem_run<M: ExpFamily>(
    model: &M,
    data: &M::State,
    prior: &Prior,
    init: &[f64],
    settings: &LikemSettings,
    chain: &ChainSettings,
    persist: Option<&Persistence>,
) -> Result<LikemOutput> {
    if settings.particles < 2 {
        return Err(Error::InvalidParameter("LikeEm needs at least 2 particles".into()));
    }
    let stats = model.suffstats(data);
    let (particles, prerun_acceptance) = select_particles(
        model,
        data,
        prior,
        init,
        settings,
        chain.seed,
        derive_stream(chain.stream, 1),
    )?;
    let mut warnings = Vec::new();
    if particles.len() < settings.particles {
        warnings.push(format!(
            "pre-run visited only {} distinct points; using that many particles instead of {}",
            particles.len(),
            settings.particles
        ));
    }
    if particles.len() < 2 {
        return Err(Error::InvalidParameter(
            "DMH pre-run never moved; cannot place 2 distinct particles".into(),
        ));
    }
    let est = estimate_loglik_at_particles(
        &particles,
        model,
        data,
        &stats,
        &ParticleEstimateSettings {
            pool_size: settings.pool_size,
            generator: settings.pool_generator,
            ess_floor: settings.ess_floor,
        },
        &RngStream::new(chain.seed, derive_stream(chain.stream, 2)),
    )?;
    let gp = GpSurrogate::fit(&particles, &est.values, &est.noise_var)?;

    let mut sampler = MhSampler {
        kernel: SurrogateKernel {
            prior,
            loglik: |th: &[f64]| gp.mean(th),
            label: "likem",
        },
        proposal: Proposal::adaptive(&settings.proposal_sd, chain.burn_in)?,
    };
    let mut meta = TraceMeta {
        sampler: "likem".into(),
        model: model.kind().to_string(),
        prior: Some(prior.clone()),
        warnings,
        ..Default::default()
    };
    meta.tuning.insert("d".into(), particles.len() as f64);
    meta.tuning.insert("n_pool".into(), settings.pool_size as f64);
    meta.extra.insert("prerun_acceptance".into(), prerun_acceptance.into());
    meta.extra.insert("min_hop_ess".into(), est.min_ess.into());
    meta.extra.insert("gp_basis".into(), serde_json::to_value(gp.snapshot().basis).unwrap_or_default());
    meta.extra.insert("gp_signal_var".into(), gp.snapshot().signal_var.into());
    meta.extra.insert(
        "gp_length_scales".into(),
        serde_json::to_value(&gp.snapshot().length_scales).unwrap_or_default(),
    );
    let trace = run_chain(&mut sampler, init, chain, meta, persist)?;
    Ok(LikemOutput {
        trace,
        emulator: EmulatorSnapshot {
            estimates: est,
            gp: gp.snapshot().clone(),
        },
    })
}
