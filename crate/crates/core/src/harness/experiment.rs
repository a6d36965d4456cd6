use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SamplerKind, SimulateConfig};
use super::summary::posterior_summary;
use crate::diagnostics::{acd, AcdReport, AcdSettings, SeriesKind};
use crate::emulation::{likem_run, select_particles, LikemSettings, PoolGenerator};
use crate::error::{Error, Result};
use crate::inner::ExactSampler;
use crate::models::io::{
    read_edge_list, read_lattice, read_responses, write_edge_list, write_lattice, write_responses,
};
use crate::models::{
    ErgmModel, ErgmState, ExpFamily, InnerKind, IsingNetModel, ItemResponseMatrix, ModelKind, PottsLattice,
    PottsModel, UndirectedGraph,
};
use crate::outer::kernels::{AbcKernel, DmhKernel, ExchangeKernel, L1Distance};
use crate::outer::trace::{meta_path, write_atomic};
use crate::outer::{
    run_chain, AlrSampler, AlrSettings, ChainSampler, ChainSettings, MhSampler, Persistence, Prior, Proposal,
    SpikeSlabSampler, SpikeSlabSettings, SpikeSlabState, Trace, TraceMeta,
};
use crate::rng::{derive_stream, RngStream};

/// Stream family of grid entries; entry `i` runs on `derive_stream(ENTRY_STREAMS, i)`.
const ENTRY_STREAMS: u64 = 0x5eed;

/// An observed dataset with its model.
#[derive(Clone, Debug)]
pub enum Dataset {
    Potts { model: PottsModel, data: PottsLattice },
    Ergm { model: ErgmModel, data: ErgmState },
    IsingNet { model: IsingNetModel, data: ItemResponseMatrix },
}

macro_rules! with_dataset {
    ($ds:expr, |$m:ident, $x:ident| $body:expr) => {
        match $ds {
            Dataset::Potts { model: $m, data: $x } => $body,
            Dataset::Ergm { model: $m, data: $x } => $body,
            Dataset::IsingNet { model: $m, data: $x } => $body,
        }
    };
}

impl Dataset {
    pub fn load(kind: ModelKind, path: &Path, colors: Option<u8>) -> Result<Self> {
        Ok(match kind {
            ModelKind::Potts => {
                let data = read_lattice(path, colors)?;
                Dataset::Potts {
                    model: PottsModel::for_lattice(&data),
                    data,
                }
            }
            ModelKind::Ergm => {
                let g = read_edge_list(path)?;
                Dataset::Ergm {
                    model: ErgmModel::new(g.nodes())?,
                    data: ErgmState::new(g),
                }
            }
            ModelKind::IsingNet => {
                let data = read_responses(path)?;
                Dataset::IsingNet {
                    model: IsingNetModel::for_data(&data),
                    data,
                }
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        with_dataset!(self, |m, _x| m.kind())
    }

    pub fn dim(&self) -> usize {
        with_dataset!(self, |m, _x| m.dim())
    }

    pub fn suffstats(&self) -> Vec<f64> {
        with_dataset!(self, |m, x| m.suffstats(x).0)
    }
}

/// Prior used when the config gives none.
pub fn default_prior(kind: ModelKind, dim: usize) -> Prior {
    match kind {
        ModelKind::Potts => Prior::potts_default(),
        ModelKind::Ergm => Prior::ergm_default(),
        ModelKind::IsingNet => Prior::IndependentNormal {
            mean: vec![0.0; dim],
            sd: vec![10.0; dim],
        },
    }
}

fn default_proposal_sd(kind: ModelKind, dim: usize) -> Vec<f64> {
    vec![
        match kind {
            ModelKind::Potts => 0.05,
            ModelKind::Ergm => 0.2,
            ModelKind::IsingNet => 0.1,
        };
        dim
    ]
}

/// Resolved per-run settings shared by every grid entry.
struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    prior: Prior,
    init: Vec<f64>,
    proposal_sd: Vec<f64>,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a ExperimentConfig, ds: &Dataset) -> Result<Self> {
        let p = ds.dim();
        let prior = cfg.prior.clone().unwrap_or_else(|| default_prior(ds.kind(), p));
        if cfg.kind() != SamplerKind::SpikeSlab && prior.dim() != p {
            return Err(Error::Config(format!(
                "prior: dimension {} does not match the model dimension {p}",
                prior.dim()
            )));
        }
        let init = match &cfg.sampler.init {
            Some(v) => v.clone(),
            None if cfg.kind() == SamplerKind::SpikeSlab => vec![0.0; p],
            None => prior.mean(),
        };
        if init.len() != p {
            return Err(Error::Config(format!("sampler.init: expected {p} values, got {}", init.len())));
        }
        if cfg.kind() != SamplerKind::SpikeSlab && !prior.in_support(&init) {
            return Err(Error::Config("sampler.init: outside the prior support".into()));
        }
        let proposal_sd = cfg
            .sampler
            .proposal_sd
            .clone()
            .unwrap_or_else(|| default_proposal_sd(ds.kind(), p));
        if proposal_sd.len() != p {
            return Err(Error::Config(format!(
                "sampler.proposal_sd: expected {p} values, got {}",
                proposal_sd.len()
            )));
        }
        Ok(Plan {
            cfg,
            prior,
            init,
            proposal_sd,
        })
    }

    fn chain(&self, index: usize) -> ChainSettings {
        ChainSettings {
            iterations: self.cfg.chain.iterations,
            burn_in: self.cfg.burn_in(),
            thin: self.cfg.chain.thin,
            seed: self.cfg.seed,
            stream: derive_stream(ENTRY_STREAMS, index as u64),
        }
    }

    fn acd_settings(&self, chain: &ChainSettings) -> AcdSettings {
        let a = &self.cfg.acd;
        AcdSettings {
            pool_size: a.pool_size,
            replications: a.replications,
            generator: PoolGenerator {
                inner: a.inner.unwrap_or(self.cfg.inner()),
                burn_in: a.burn_in,
                spacing: a.spacing,
            },
            kind: SeriesKind::Markov,
            batch: a.batch,
            r_cap: a.cap,
            seed: chain.seed,
            stream: derive_stream(chain.stream, 0xacd),
        }
    }

    fn likem_settings(&self, particles: usize) -> LikemSettings {
        let s = &self.cfg.sampler;
        LikemSettings {
            particles,
            pool_size: s.pool_size.unwrap_or(500),
            pool_generator: PoolGenerator {
                inner: self.cfg.inner(),
                burn_in: s.pool_burn_in.unwrap_or(100),
                spacing: s.pool_spacing.unwrap_or(1),
            },
            ess_floor: s.ess_floor.unwrap_or(crate::emulation::particles::DEFAULT_ESS_FLOOR),
            inner: self.cfg.inner(),
            prerun_cycles: s.prerun_cycles.unwrap_or(90),
            prerun_iterations: s.prerun_iterations.unwrap_or(2000),
            proposal_sd: self.proposal_sd.clone(),
        }
    }
}

fn tuning_meta(plan: &Plan, model: &impl ExpFamily, value: f64) -> TraceMeta {
    let mut meta = TraceMeta {
        model: model.kind().to_string(),
        prior: (plan.cfg.kind() != SamplerKind::SpikeSlab).then(|| plan.prior.clone()),
        ..Default::default()
    };
    if plan.cfg.kind() != SamplerKind::Exchange {
        meta.tuning.insert(plan.cfg.kind().tuning_name().into(), value);
    }
    meta.extra.insert("inner".into(), plan.cfg.inner().to_string().into());
    meta
}

/// Pilot draws at θ used to standardize the ABC distance coordinate-wise.
fn pilot_distance<M: ExpFamily>(
    model: &M,
    data: &M::State,
    theta: &[f64],
    inner: InnerKind,
    cycles: usize,
    draws: usize,
    rng: &mut RngStream,
) -> Result<L1Distance> {
    let mut state = data.clone();
    let mut stats = Vec::with_capacity(draws);
    for _ in 0..draws {
        model.run_cycles(inner, cycles, &mut state, theta, rng)?;
        stats.push(model.suffstats(&state).0);
    }
    L1Distance::standardized(&stats)
}

fn run_sampler<S: ChainSampler + ?Sized>(
    sampler: &mut S,
    init: &[f64],
    chain: &ChainSettings,
    meta: TraceMeta,
    persist: &Persistence,
) -> Result<Trace> {
    run_chain(sampler, init, chain, meta, Some(persist))
}

/// Run the chain for one grid value; returns the trace.
fn run_entry_chain<M: ExpFamily + Clone>(
    plan: &Plan,
    model: &M,
    data: &M::State,
    value: f64,
    chain: &ChainSettings,
    persist: &Persistence,
) -> Result<Trace> {
    let cfg = plan.cfg;
    let stats = model.suffstats(data);
    let prior = &plan.prior;
    let inner = cfg.inner();
    let mut meta = tuning_meta(plan, model, value);
    let proposal = Proposal::adaptive(&plan.proposal_sd, chain.burn_in)?;
    match cfg.kind() {
        SamplerKind::Exchange => {
            let exact = ExactSampler::new(model, cfg.enumeration_cap())?;
            let mut s = MhSampler {
                kernel: ExchangeKernel {
                    sampler: &exact,
                    prior,
                    data_stats: &stats,
                },
                proposal,
            };
            run_sampler(&mut s, &plan.init, chain, meta, persist)
        }
        SamplerKind::Dmh => {
            let kernel = DmhKernel::new(model, data, &stats, prior, inner, value as usize)?;
            let mut s = MhSampler { kernel, proposal };
            run_sampler(&mut s, &plan.init, chain, meta, persist)
        }
        SamplerKind::Abc => {
            let cycles = cfg.sampler.cycles.unwrap_or(100);
            let distance = if model.dim() == 1 {
                L1Distance::unscaled(1)
            } else {
                let mut rng = RngStream::new(chain.seed, derive_stream(chain.stream, 3));
                let draws = cfg.sampler.pilot_draws.unwrap_or(200);
                pilot_distance(model, data, &plan.init, inner, cycles, draws, &mut rng)?
            };
            if value == 0.0 {
                let w = "epsilon = 0: no simulated summary can match, so every proposal is rejected";
                log::warn!("{w}");
                meta.warnings.push(w.into());
            }
            meta.extra.insert(
                "distance_scale".into(),
                serde_json::to_value(&distance.scale).unwrap_or_default(),
            );
            let kernel = AbcKernel::new(model, data, &stats, prior, inner, cycles, value, distance)?;
            let mut s = MhSampler { kernel, proposal };
            run_sampler(&mut s, &plan.init, chain, meta, persist)
        }
        SamplerKind::Alr => {
            let d = value as usize;
            let ls = plan.likem_settings(d);
            let (particles, pre_acc) = select_particles(
                model,
                data,
                prior,
                &plan.init,
                &ls,
                chain.seed,
                derive_stream(chain.stream, 1),
            )?;
            if particles.len() < d {
                meta.warnings.push(format!(
                    "pre-run visited only {} distinct points; using that many particles",
                    particles.len()
                ));
            }
            meta.extra.insert("prerun_acceptance".into(), pre_acc.into());
            let s = &cfg.sampler;
            let mut settings = AlrSettings::new(inner, plan.proposal_sd.clone(), chain.burn_in);
            settings.warmup_cycles = s.warmup_cycles.unwrap_or(settings.warmup_cycles);
            settings.initial_draws = s.initial_draws.unwrap_or(settings.initial_draws);
            settings.pool_capacity = s.pool_capacity.unwrap_or(settings.pool_capacity);
            settings.refresh_every = s.refresh_every.unwrap_or(settings.refresh_every);
            let mut alr = AlrSampler::new(model, data, prior, &particles, settings, chain.seed, chain.stream)?;
            run_sampler(&mut alr, &plan.init, chain, meta, persist)
        }
        SamplerKind::Likem => {
            let out = likem_run(model, data, prior, &plan.init, &plan.likem_settings(value as usize), chain, Some(persist))?;
            let json = serde_json::to_vec_pretty(&out.emulator)
                .map_err(|e| Error::Unsupported(format!("emulator serialization: {e}")))?;
            write_atomic(&persist.dir.join("emulator.json"), &json)?;
            let mut trace = out.trace;
            trace.meta.tuning.insert("d".into(), value);
            trace.write_meta(&meta_path(&persist.trace_path()))?;
            Ok(trace)
        }
        SamplerKind::SpikeSlab => {
            let mut settings = SpikeSlabSettings::new(inner, value as usize, model.dim(), chain.burn_in);
            settings.proposal_sd = plan.proposal_sd.clone();
            settings.precision_step = cfg.sampler.precision_step.unwrap_or(settings.precision_step);
            settings.slab_step = cfg.sampler.slab_step.unwrap_or(settings.slab_step);
            let mut s = SpikeSlabSampler::new(model, data, settings)?;
            let mut st = SpikeSlabState::initial(model.dim());
            st.theta = plan.init.clone();
            run_sampler(&mut s, &st.to_row(), chain, meta, persist)
        }
    }
}

/// Outcome of one grid entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub index: usize,
    pub tuning: String,
    pub value: f64,
    pub dir: PathBuf,
    pub wall_time_s: f64,
    pub acceptance_rate: f64,
    pub acd: Option<AcdReport>,
    /// `ok`, `acd_skipped: ...`, `acd_failed: ...` or `failed: ...`.
    pub status: String,
}

impl EntrySummary {
    pub fn chain_ok(&self) -> bool {
        !self.status.starts_with("failed")
    }
}

fn entry_dir(out: &Path, index: usize, kind: SamplerKind, value: f64) -> PathBuf {
    if value.is_nan() {
        out.join(format!("{index:02}_{}", kind.label()))
    } else {
        out.join(format!("{index:02}_{}_{}={value}", kind.label(), kind.tuning_name()))
    }
}

fn run_entry<M: ExpFamily + Clone>(
    plan: &Plan,
    model: &M,
    data: &M::State,
    index: usize,
    value: f64,
    out: &Path,
    resume: bool,
) -> EntrySummary {
    let cfg = plan.cfg;
    let kind = cfg.kind();
    let dir = entry_dir(out, index, kind, value);
    let mut summary = EntrySummary {
        index,
        tuning: kind.tuning_name().into(),
        value,
        dir: dir.clone(),
        wall_time_s: f64::NAN,
        acceptance_rate: f64::NAN,
        acd: None,
        status: "ok".into(),
    };
    let chain = plan.chain(index);
    let persist = Persistence {
        dir: dir.clone(),
        checkpoint_every: cfg.chain.checkpoint_every,
        resume,
    };
    log::info!("entry {index}: {} {}={value} starting", kind.label(), kind.tuning_name());
    let clock = Instant::now();
    let trace = match catch_unwind(AssertUnwindSafe(|| run_entry_chain(plan, model, data, value, &chain, &persist))) {
        Ok(Ok(t)) => t,
        Ok(Err(e)) => {
            summary.status = format!("failed: {e}");
            return summary;
        }
        Err(_) => {
            summary.status = "failed: worker panicked".into();
            return summary;
        }
    };
    summary.wall_time_s = clock.elapsed().as_secs_f64();
    summary.acceptance_rate = trace.meta.acceptance_rate;
    if let Err(e) = posterior_summary(&persist.trace_path(), &dir) {
        log::warn!("entry {index}: posterior summary failed: {e}");
    }
    if !cfg.acd.enabled {
        summary.status = "acd_skipped: disabled".into();
    } else if kind == SamplerKind::SpikeSlab {
        summary.status = "acd_skipped: hierarchical prior".into();
    } else {
        let thetas = trace.retained_thetas();
        let res = catch_unwind(AssertUnwindSafe(|| {
            acd(&thetas, model, data, &plan.prior, &plan.acd_settings(&chain))
        }));
        match res {
            Ok(Ok(report)) => {
                let json = serde_json::to_vec_pretty(&report).unwrap_or_default();
                if let Err(e) = write_atomic(&dir.join("acd.json"), &json) {
                    summary.status = format!("acd_failed: {e}");
                }
                summary.acd = Some(report);
            }
            Ok(Err(e @ Error::DiagnosticImpractical { .. })) => summary.status = format!("acd_skipped: {e}"),
            Ok(Err(e)) => summary.status = format!("acd_failed: {e}"),
            Err(_) => summary.status = "acd_failed: worker panicked".into(),
        }
    }
    log::info!("entry {index}: {} in {:.1}s", summary.status, summary.wall_time_s);
    summary
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
    Failed,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub entries: Vec<EntrySummary>,
    pub status: RunStatus,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
    /// Overrides the config's worker count.
    pub workers: Option<usize>,
    /// Continue chains from their checkpoints.
    pub resume: bool,
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Summary table, one row per grid entry.
pub fn summary_csv(entries: &[EntrySummary]) -> String {
    let mut out = String::from("tuning,value,mean,lo,hi,pass,threshold,wall_time_s,acceptance_rate,status\n");
    for e in entries {
        let (mean, lo, hi, pass, thr) = match &e.acd {
            Some(a) => (a.mean, a.lo, a.hi, a.pass.to_string(), a.threshold),
            None => (f64::NAN, f64::NAN, f64::NAN, String::new(), f64::NAN),
        };
        let status = e.status.replace(['"', '\n'], " ");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},\"{}\"",
            e.tuning,
            fmt_opt(e.value),
            fmt_opt(mean),
            fmt_opt(lo),
            fmt_opt(hi),
            pass,
            fmt_opt(thr),
            fmt_opt(e.wall_time_s),
            fmt_opt(e.acceptance_rate),
            status
        );
    }
    out
}

/// Run every grid entry of `cfg` as an independent chain, assess each with
/// ACD, and write `summary.csv` once all entries are done.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let grid = cfg.grid();
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::Config("out: no output directory given".into()))?;
    let ds = Dataset::load(cfg.model.kind, &cfg.model.data, cfg.model.colors)?;
    let plan = Plan::new(cfg, &ds)?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let out = out.canonicalize().map_err(|e| Error::io(&out, e))?;

    let mut stored = cfg.clone();
    stored.model.data = cfg.model.data.canonicalize().map_err(|e| Error::io(&cfg.model.data, e))?;
    stored.out = Some(out.clone());
    write_atomic(&out.join("config.toml"), stored.to_toml()?.as_bytes())?;

    let workers = opts
        .workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start workers: {e}")))?;
    let entries: Vec<EntrySummary> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &v)| with_dataset!(&ds, |m, x| run_entry(&plan, m, x, i, v, &out, opts.resume)))
            .collect()
    });
    write_atomic(&out.join("summary.csv"), summary_csv(&entries).as_bytes())?;
    let ok = entries.iter().filter(|e| e.chain_ok()).count();
    let status = if ok == entries.len() {
        RunStatus::Complete
    } else if ok == 0 {
        RunStatus::Failed
    } else {
        RunStatus::Partial
    };
    Ok(ExperimentOutcome {
        dir: out,
        entries,
        status,
    })
}

/// ACD of an existing trace under the model, data and prior of `cfg`.
pub fn acd_for_trace(cfg: &ExperimentConfig, trace_path: &Path, seed: Option<u64>) -> Result<AcdReport> {
    let ds = Dataset::load(cfg.model.kind, &cfg.model.data, cfg.model.colors)?;
    let plan = Plan::new(cfg, &ds)?;
    let trace = Trace::read(trace_path)?;
    let chain = ChainSettings {
        seed: seed.unwrap_or(trace.meta.seed),
        stream: trace.meta.stream,
        ..plan.chain(0)
    };
    let thetas = trace.retained_thetas();
    with_dataset!(&ds, |m, x| acd(&thetas, m, x, &plan.prior, &plan.acd_settings(&chain)))
}

/// Uniformly random starting state.
fn random_state<M: ExpFamily>(model: &M, mut state: M::State, rng: &mut RngStream) -> Result<M::State> {
    let (lo, hi) = model.value_range();
    for site in 0..model.num_sites() {
        let v = lo + rng.below((hi - lo) as usize + 1) as u8;
        model.set_site(&mut state, site, v)?;
    }
    Ok(state)
}

fn need(v: Option<usize>, field: &str) -> Result<usize> {
    v.ok_or_else(|| Error::Config(format!("{field}: required for this model")))
}

/// Simulate a dataset from f(·|θ) with `cfg.cycles` inner cycles from a
/// random start and write it to `out` in the model's data format. Returns
/// the sufficient statistics of the simulated data.
pub fn simulate_dataset(cfg: &SimulateConfig, out: &Path) -> Result<Vec<f64>> {
    let mut rng = RngStream::new(cfg.seed, 0);
    match cfg.model {
        ModelKind::Potts => {
            let (r, c) = (need(cfg.rows, "rows")?, need(cfg.cols, "cols")?);
            let k = cfg.colors.ok_or_else(|| Error::Config("colors: required for this model".into()))?;
            let m = PottsModel::new(r, c, k)?;
            let init = random_state(&m, PottsLattice::uniform(r, c, k, 1)?, &mut rng)?;
            let x = simulate_state(&m, cfg, init, InnerKind::SwendsenWang, &mut rng)?;
            write_lattice(out, &x)?;
            Ok(m.suffstats(&x).0)
        }
        ModelKind::Ergm => {
            let n = need(cfg.nodes, "nodes")?;
            let m = ErgmModel::new(n)?;
            let init = random_state(&m, ErgmState::new(UndirectedGraph::empty(n)), &mut rng)?;
            let x = simulate_state(&m, cfg, init, InnerKind::GibbsSweep, &mut rng)?;
            write_edge_list(out, x.graph())?;
            Ok(m.suffstats(&x).0)
        }
        ModelKind::IsingNet => {
            let (n, p) = (need(cfg.respondents, "respondents")?, need(cfg.items, "items")?);
            let m = IsingNetModel::new(n, p)?;
            let init = random_state(&m, ItemResponseMatrix::zeros(n, p), &mut rng)?;
            let x = simulate_state(&m, cfg, init, InnerKind::GibbsSweep, &mut rng)?;
            write_responses(out, &x)?;
            Ok(m.suffstats(&x).0)
        }
    }
}

fn simulate_state<M: ExpFamily>(
    model: &M,
    cfg: &SimulateConfig,
    mut state: M::State,
    default: InnerKind,
    rng: &mut RngStream,
) -> Result<M::State> {
    let inner = cfg.inner.unwrap_or(default);
    crate::inner::InnerSamplerConfig::new(inner, cfg.cycles, cfg.seed).validate_for(model.kind())?;
    model.check_theta(&cfg.theta)?;
    model.run_cycles(inner, cfg.cycles, &mut state, &cfg.theta, rng)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_has_plot_columns() {
        let e = EntrySummary {
            index: 0,
            tuning: "m".into(),
            value: 3.0,
            dir: PathBuf::new(),
            wall_time_s: 1.5,
            acceptance_rate: 0.3,
            acd: Some(AcdReport::from_statistics(vec![1.0, 2.0, 3.0], 3)),
            status: "ok".into(),
        };
        let csv = summary_csv(&[e]);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("tuning,value,mean,lo,hi,pass"));
        assert!(lines.next().unwrap().starts_with("m,3,2,"));
    }

    #[test]
    fn simulate_small_potts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimulateConfig {
            seed: 3,
            model: ModelKind::Potts,
            rows: Some(2),
            cols: Some(2),
            colors: Some(2),
            nodes: None,
            respondents: None,
            items: None,
            theta: vec![1.0],
            cycles: 10,
            inner: None,
            out: None,
        };
        let path = dir.path().join("x.txt");
        let s = simulate_dataset(&cfg, &path).unwrap();
        let x = read_lattice(&path, Some(2)).unwrap();
        assert_eq!(PottsModel::for_lattice(&x).suffstats(&x).0, s);
        let again = dir.path().join("y.txt");
        simulate_dataset(&cfg, &again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }
}
