use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::kernels::{mh_step, Kernel};
use super::trace::{format_row, meta_path, write_atomic, Trace, TraceMeta};
use super::Proposal;
use crate::error::{Error, Result};
use crate::rng::{RngPosition, RngStream};

/// A sampler that advances a full state row (θ plus any auxiliary
/// coordinates) one iteration at a time.
pub trait ChainSampler {
    fn label(&self) -> String;

    /// Column names of a state row, θ first.
    fn columns(&self) -> Vec<String>;

    fn theta_dim(&self) -> usize;

    /// Advance `state` by iteration `iteration` (0-based). Returns whether the
    /// θ proposal was accepted.
    fn step(&mut self, state: &mut [f64], iteration: usize, rng: &mut RngStream) -> Result<bool>;

    /// Serializable internal state for checkpoints; `None` when unsupported.
    fn snapshot(&self) -> Option<serde_json::Value> {
        None
    }

    fn restore(&mut self, _snapshot: serde_json::Value) -> Result<()> {
        Err(Error::Unsupported(format!("{} cannot resume from a checkpoint", self.label())))
    }

    /// Add sampler-specific diagnostics to the metadata.
    fn finish(&self, _meta: &mut TraceMeta) {}
}

/// Random-walk Metropolis-Hastings over θ with a pluggable acceptance rule.
pub struct MhSampler<K: Kernel> {
    pub kernel: K,
    pub proposal: Proposal,
}

impl<K: Kernel> ChainSampler for MhSampler<K> {
    fn label(&self) -> String {
        self.kernel.label()
    }

    fn columns(&self) -> Vec<String> {
        super::trace::theta_columns(self.proposal.dim())
    }

    fn theta_dim(&self) -> usize {
        self.proposal.dim()
    }

    fn step(&mut self, state: &mut [f64], iteration: usize, rng: &mut RngStream) -> Result<bool> {
        let out = mh_step(&mut self.kernel, state, &self.proposal, rng)?;
        state.copy_from_slice(&out.theta);
        self.proposal.observe(iteration, state)?;
        Ok(out.accepted)
    }

    fn snapshot(&self) -> Option<serde_json::Value> {
        serde_json::to_value(&self.proposal).ok()
    }

    fn restore(&mut self, snapshot: serde_json::Value) -> Result<()> {
        self.proposal = serde_json::from_value(snapshot)
            .map_err(|e| Error::Unsupported(format!("corrupt proposal checkpoint: {e}")))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burn_in: usize,
    /// Store every `thin`-th iteration.
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
}

impl ChainSettings {
    /// Burn-in of 10% and no thinning.
    pub fn new(iterations: usize, seed: u64) -> Self {
        ChainSettings {
            iterations,
            burn_in: iterations / 10,
            thin: 1,
            seed,
            stream: 0,
        }
    }
}

/// Incremental on-disk persistence for a chain.
#[derive(Clone, Debug)]
pub struct Persistence {
    pub dir: PathBuf,
    /// Checkpoint every this many iterations; 0 disables checkpoints.
    pub checkpoint_every: usize,
    pub resume: bool,
}

impl Persistence {
    pub fn trace_path(&self) -> PathBuf {
        self.dir.join("trace.csv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.dir.join("checkpoint.json")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    iteration: usize,
    state: Vec<f64>,
    rng: RngPosition,
    accepted: u64,
    bytes: u64,
    sampler: serde_json::Value,
}

struct TraceWriter {
    out: BufWriter<File>,
    bytes: u64,
}

impl TraceWriter {
    fn io(iteration: usize, e: std::io::Error) -> Error {
        Error::TraceIo { iteration: iteration as u64, source: e }
    }

    fn create(path: &Path, header: &str) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(header.as_bytes()).map_err(|e| Self::io(0, e))?;
        Ok(TraceWriter {
            out,
            bytes: header.len() as u64,
        })
    }

    fn reopen(path: &Path, bytes: u64) -> Result<Self> {
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        file.set_len(bytes).map_err(|e| Error::io(path, e))?;
        drop(file);
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(TraceWriter {
            out: BufWriter::new(file),
            bytes,
        })
    }

    fn write_row(&mut self, iteration: usize, line: &str) -> Result<()> {
        self.out
            .write_all(line.as_bytes())
            .map_err(|e| Self::io(iteration, e))?;
        self.bytes += line.len() as u64;
        Ok(())
    }

    fn flush(&mut self, iteration: usize) -> Result<()> {
        self.out.flush().map_err(|e| Self::io(iteration, e))?;
        self.out.get_ref().sync_data().map_err(|e| Self::io(iteration, e))
    }
}

/// Drive `sampler` for `settings.iterations` iterations from `init`.
///
/// With persistence the trace is appended to `trace.csv` as it grows, a
/// checkpoint is written periodically, and `resume` continues from the last
/// checkpoint so that the final CSV is byte-identical to an uninterrupted run.
pub fn run_chain<S: ChainSampler + ?Sized>(
    sampler: &mut S,
    init: &[f64],
    settings: &ChainSettings,
    meta: TraceMeta,
    persist: Option<&Persistence>,
) -> Result<Trace> {
    if init.len() != sampler.columns().len() {
        return Err(Error::DimensionMismatch {
            expected: sampler.columns().len(),
            got: init.len(),
        });
    }
    let thin = settings.thin.max(1);
    let mut trace = Trace::new(sampler.columns(), sampler.theta_dim(), meta);
    trace.meta.sampler = if trace.meta.sampler.is_empty() {
        sampler.label()
    } else {
        trace.meta.sampler.clone()
    };
    trace.meta.iterations = settings.iterations;
    trace.meta.burn_in = settings.burn_in;
    trace.meta.thin = thin;
    trace.meta.seed = settings.seed;
    trace.meta.stream = settings.stream;

    let mut rng = RngStream::new(settings.seed, settings.stream);
    let mut state = init.to_vec();
    let mut start = 0;
    let mut accepted = 0u64;
    let mut writer = None;

    if let Some(p) = persist {
        let csv = p.trace_path();
        let cp_path = p.checkpoint_path();
        if p.resume && cp_path.exists() {
            let text = fs::read_to_string(&cp_path).map_err(|e| Error::io(&cp_path, e))?;
            let cp: Checkpoint = serde_json::from_str(&text)
                .map_err(|e| Error::parse(&cp_path, e.line(), e.to_string()))?;
            let body = fs::read(&csv).map_err(|e| Error::io(&csv, e))?;
            let kept = body
                .get(..cp.bytes as usize)
                .ok_or_else(|| Error::parse(&csv, 0, "trace shorter than its checkpoint"))?;
            let prior = Trace::parse_csv(&String::from_utf8_lossy(kept), &csv)?;
            for i in 0..prior.len() {
                trace.push(prior.iter_index(i), prior.row(i));
            }
            sampler.restore(cp.sampler)?;
            rng = RngStream::restore(cp.rng);
            state = cp.state;
            start = cp.iteration;
            accepted = cp.accepted;
            writer = Some(TraceWriter::reopen(&csv, cp.bytes)?);
        } else {
            writer = Some(TraceWriter::create(&csv, &trace.csv_header())?);
        }
    }

    let clock = Instant::now();
    for t in start..settings.iterations {
        if sampler.step(&mut state, t, &mut rng)? {
            accepted += 1;
        }
        if (t + 1) % thin == 0 {
            trace.push(t + 1, &state);
            if let Some(w) = writer.as_mut() {
                w.write_row(t + 1, &format_row(t + 1, &state))?;
            }
        }
        if let (Some(w), Some(p)) = (writer.as_mut(), persist) {
            if p.checkpoint_every > 0 && (t + 1) % p.checkpoint_every == 0 {
                if let Some(snapshot) = sampler.snapshot() {
                    w.flush(t + 1)?;
                    let cp = Checkpoint {
                        iteration: t + 1,
                        state: state.clone(),
                        rng: rng.position(),
                        accepted,
                        bytes: w.bytes,
                        sampler: snapshot,
                    };
                    let json = serde_json::to_vec(&cp)
                        .map_err(|e| Error::Unsupported(format!("checkpoint serialization: {e}")))?;
                    write_atomic(&p.checkpoint_path(), &json)?;
                }
            }
        }
    }
    let wall = clock.elapsed().as_secs_f64();

    trace.meta.accepted = accepted;
    trace.meta.acceptance_rate = if settings.iterations > 0 {
        accepted as f64 / settings.iterations as f64
    } else {
        0.0
    };
    trace.meta.wall_time_s += wall;
    let run = settings.iterations.saturating_sub(start);
    trace.meta.mean_iteration_s = if run > 0 { wall / run as f64 } else { 0.0 };
    sampler.finish(&mut trace.meta);

    if let (Some(mut w), Some(p)) = (writer, persist) {
        w.flush(settings.iterations)?;
        trace.write_meta(&meta_path(&p.trace_path()))?;
        let cp = p.checkpoint_path();
        if cp.exists() {
            fs::remove_file(&cp).map_err(|e| Error::io(&cp, e))?;
        }
    }
    Ok(trace)
}
