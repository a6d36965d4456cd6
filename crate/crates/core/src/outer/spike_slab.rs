use serde::{Deserialize, Serialize};

use super::chain::ChainSampler;
use super::trace::TraceMeta;
use super::Proposal;
use crate::error::{check_dim, Error, Result};
use crate::models::{ExpFamily, InnerKind};
use crate::rng::RngStream;

/// Bounds on the spike precision 1/σ².
pub const PRECISION_BOUNDS: (f64, f64) = (4.0, 100.0);
/// Rate of the exponential (Gamma shape 1) prior on Y = ω − 1.
pub const SLAB_RATE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeSlabSettings {
    pub inner: InnerKind,
    /// Inner cycles per DMH proposal, m.
    pub cycles: usize,
    pub proposal_sd: Vec<f64>,
    pub adapt_until: usize,
    /// Random-walk step on log(1/σ²).
    pub precision_step: f64,
    /// Random-walk step on log Y.
    pub slab_step: f64,
    /// When false the θ update ignores the data (prior-only run).
    pub use_likelihood: bool,
}

impl SpikeSlabSettings {
    pub fn new(inner: InnerKind, cycles: usize, p: usize, adapt_until: usize) -> Self {
        SpikeSlabSettings {
            inner,
            cycles,
            proposal_sd: vec![0.1; p],
            adapt_until,
            precision_step: 0.3,
            slab_step: 0.5,
            use_likelihood: true,
        }
    }
}

/// Hierarchical state row: θ, λ, σ², ω.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeSlabState {
    pub theta: Vec<f64>,
    pub lambda: Vec<bool>,
    pub sigma2: f64,
    pub omega: f64,
}

impl SpikeSlabState {
    /// θ = 0, every λ = 1, 1/σ² = 25, ω = 101.
    pub fn initial(p: usize) -> Self {
        SpikeSlabState {
            theta: vec![0.0; p],
            lambda: vec![true; p],
            sigma2: 1.0 / 25.0,
            omega: 101.0,
        }
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.theta.clone();
        row.extend(self.lambda.iter().map(|&l| if l { 1.0 } else { 0.0 }));
        row.push(self.sigma2);
        row.push(self.omega);
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() < 4 || (row.len() - 2) % 2 != 0 {
            return Err(Error::InvalidState(format!("spike-slab row of length {} is malformed", row.len())));
        }
        let p = (row.len() - 2) / 2;
        Ok(SpikeSlabState {
            theta: row[..p].to_vec(),
            lambda: row[p..2 * p].iter().map(|&v| v > 0.5).collect(),
            sigma2: row[2 * p],
            omega: row[2 * p + 1],
        })
    }

    pub fn check(&self) -> Result<()> {
        let tau = 1.0 / self.sigma2;
        if !(tau > PRECISION_BOUNDS.0 && tau < PRECISION_BOUNDS.1) || !(self.omega > 1.0) {
            return Err(Error::InvalidState(format!(
                "hierarchy violated: 1/sigma2 = {tau}, omega = {}",
                self.omega
            )));
        }
        Ok(())
    }

    fn var(&self, i: usize) -> f64 {
        if self.lambda[i] {
            self.omega * self.omega * self.sigma2
        } else {
            self.sigma2
        }
    }
}

pub fn spike_slab_columns(p: usize) -> Vec<String> {
    let mut c: Vec<String> = (1..=p).map(|i| format!("theta_{i}")).collect();
    c.extend((1..=p).map(|i| format!("lambda_{i}")));
    c.push("sigma2".into());
    c.push("omega".into());
    c
}

fn log_normal0(x: f64, var: f64) -> f64 {
    -0.5 * x * x / var - 0.5 * var.ln()
}

/// Reflect `x` into [lo, hi].
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut y = (x - lo).rem_euclid(2.0 * w);
    if y > w {
        y = 2.0 * w - y;
    }
    lo + y
}

/// Spike-and-slab DMH: block updates of θ (DMH), each λ_i (exact
/// Bernoulli), 1/σ² and ω (random walks on log scales).
pub struct SpikeSlabSampler<'a, M: ExpFamily> {
    model: &'a M,
    data: &'a M::State,
    data_stats: Vec<f64>,
    settings: SpikeSlabSettings,
    proposal: Proposal,
    work: M::State,
    lambda_sum: Vec<f64>,
    updates: u64,
}

impl<'a, M: ExpFamily> SpikeSlabSampler<'a, M> {
    pub fn new(model: &'a M, data: &'a M::State, settings: SpikeSlabSettings) -> Result<Self> {
        model.validate(data)?;
        check_dim(model.dim(), settings.proposal_sd.len())?;
        if settings.cycles == 0 {
            return Err(Error::InvalidParameter("spike-slab DMH needs at least one inner cycle".into()));
        }
        Ok(SpikeSlabSampler {
            model,
            data,
            data_stats: model.suffstats(data).0,
            proposal: Proposal::adaptive(&settings.proposal_sd, settings.adapt_until)?,
            settings,
            work: data.clone(),
            lambda_sum: vec![0.0; model.dim()],
            updates: 0,
        })
    }

    /// Posterior inclusion probabilities averaged over the exact λ
    /// conditionals of every update so far.
    pub fn rao_blackwell_inclusion(&self) -> Vec<f64> {
        self.lambda_sum
            .iter()
            .map(|s| s / self.updates.max(1) as f64)
            .collect()
    }

    fn update_theta(&mut self, st: &mut SpikeSlabState, iteration: usize, rng: &mut RngStream) -> Result<bool> {
        let p = st.theta.len();
        let proposed = self.proposal.propose(&st.theta, rng);
        let mut lr = 0.0;
        for i in 0..p {
            let v = st.var(i);
            lr += log_normal0(proposed[i], v) - log_normal0(st.theta[i], v);
        }
        if self.settings.use_likelihood {
            self.work.clone_from(self.data);
            self.model
                .run_cycles(self.settings.inner, self.settings.cycles, &mut self.work, &proposed, rng)?;
            let aux = self.model.suffstats(&self.work);
            for k in 0..aux.len() {
                lr += (proposed[k] - st.theta[k]) * (self.data_stats[k] - aux[k]);
            }
        }
        let accepted = lr >= 0.0 || rng.uniform().ln() < lr;
        if accepted {
            st.theta = proposed;
        }
        self.proposal.observe(iteration, &st.theta)?;
        Ok(accepted)
    }

    fn update_lambda(&mut self, st: &mut SpikeSlabState, rng: &mut RngStream) {
        let slab = st.omega * st.omega * st.sigma2;
        for i in 0..st.theta.len() {
            let a = log_normal0(st.theta[i], slab);
            let b = log_normal0(st.theta[i], st.sigma2);
            let prob = 1.0 / (1.0 + (b - a).exp());
            self.lambda_sum[i] += prob;
            st.lambda[i] = rng.uniform() < prob;
        }
        self.updates += 1;
    }

    fn update_precision(&self, st: &mut SpikeSlabState, rng: &mut RngStream) {
        let log_target = |tau: f64| -> f64 {
            let mut lt = tau.ln();
            for i in 0..st.theta.len() {
                let c = if st.lambda[i] { st.omega * st.omega } else { 1.0 };
                lt += 0.5 * tau.ln() - 0.5 * tau * st.theta[i] * st.theta[i] / c;
            }
            lt
        };
        let (lo, hi) = (PRECISION_BOUNDS.0.ln(), PRECISION_BOUNDS.1.ln());
        let tau = 1.0 / st.sigma2;
        let prop = reflect(tau.ln() + self.settings.precision_step * rng.normal(), lo, hi).exp();
        if prop > PRECISION_BOUNDS.0 && prop < PRECISION_BOUNDS.1 {
            let lr = log_target(prop) - log_target(tau);
            if lr >= 0.0 || rng.uniform().ln() < lr {
                st.sigma2 = 1.0 / prop;
            }
        }
    }

    fn update_slab(&self, st: &mut SpikeSlabState, rng: &mut RngStream) {
        let log_target = |y: f64| -> f64 {
            let omega = 1.0 + y;
            let mut lt = y.ln() - SLAB_RATE * y;
            for i in 0..st.theta.len() {
                if st.lambda[i] {
                    lt += log_normal0(st.theta[i], omega * omega * st.sigma2);
                }
            }
            lt
        };
        let y = st.omega - 1.0;
        let prop = (y.ln() + self.settings.slab_step * rng.normal()).exp();
        if prop > 0.0 && prop.is_finite() {
            let lr = log_target(prop) - log_target(y);
            if lr >= 0.0 || rng.uniform().ln() < lr {
                st.omega = 1.0 + prop;
            }
        }
    }
}

impl<M: ExpFamily> ChainSampler for SpikeSlabSampler<'_, M> {
    fn label(&self) -> String {
        "spike_slab_dmh".into()
    }

    fn columns(&self) -> Vec<String> {
        spike_slab_columns(self.model.dim())
    }

    fn theta_dim(&self) -> usize {
        self.model.dim()
    }

    fn step(&mut self, state: &mut [f64], iteration: usize, rng: &mut RngStream) -> Result<bool> {
        let mut st = SpikeSlabState::from_row(state)?;
        let accepted = self.update_theta(&mut st, iteration, rng)?;
        self.update_lambda(&mut st, rng);
        self.update_precision(&mut st, rng);
        self.update_slab(&mut st, rng);
        st.check()?;
        state.copy_from_slice(&st.to_row());
        Ok(accepted)
    }

    fn snapshot(&self) -> Option<serde_json::Value> {
        Some(serde_json::json!({
            "proposal": self.proposal,
            "lambda_sum": self.lambda_sum,
            "updates": self.updates,
        }))
    }

    fn restore(&mut self, snapshot: serde_json::Value) -> Result<()> {
        let bad = |e: serde_json::Error| Error::Unsupported(format!("corrupt spike-slab checkpoint: {e}"));
        self.proposal = serde_json::from_value(snapshot["proposal"].clone()).map_err(bad)?;
        self.lambda_sum = serde_json::from_value(snapshot["lambda_sum"].clone()).map_err(bad)?;
        self.updates = serde_json::from_value(snapshot["updates"].clone()).map_err(bad)?;
        Ok(())
    }

    fn finish(&self, meta: &mut TraceMeta) {
        meta.tuning.insert("m".into(), self.settings.cycles as f64);
        meta.extra.insert(
            "inclusion_rao_blackwell".into(),
            serde_json::to_value(self.rao_blackwell_inclusion()).unwrap_or_default(),
        );
    }
}
