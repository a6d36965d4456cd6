use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::models::{ExpFamily, InnerKind};
use crate::rng::RngStream;

/// How a pool's draws were generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolGenerator {
    pub inner: InnerKind,
    /// Inner cycles discarded before the first stored draw.
    pub burn_in: usize,
    /// Inner cycles between stored draws.
    pub spacing: usize,
}

/// Sufficient statistics simulated at a reference parameter θ̂.
///
/// Draws are stored compressed as distinct statistic rows with
/// multiplicities. With a capacity, the pool keeps a uniform reservoir of
/// that many draws from everything pushed so far.
#[derive(Clone, Debug)]
pub struct AuxStatPool {
    reference: Vec<f64>,
    dim: usize,
    rows: Vec<f64>,
    counts: Vec<u64>,
    retained: u64,
    seen: u64,
    index: HashMap<Box<[u64]>, u32>,
    capacity: Option<usize>,
    slots: Vec<u32>,
    key: Vec<u64>,
    pub generator: Option<PoolGenerator>,
}

impl AuxStatPool {
    pub fn new(reference: Vec<f64>) -> Self {
        let dim = reference.len();
        AuxStatPool {
            reference,
            dim,
            rows: Vec::new(),
            counts: Vec::new(),
            retained: 0,
            seen: 0,
            index: HashMap::new(),
            capacity: None,
            slots: Vec::new(),
            key: Vec::with_capacity(dim),
            generator: None,
        }
    }

    /// Pool holding at most `capacity` draws by reservoir sampling.
    pub fn with_capacity(reference: Vec<f64>, capacity: usize) -> Self {
        let mut pool = AuxStatPool::new(reference);
        pool.capacity = Some(capacity.max(1));
        pool
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws currently represented, N.
    pub fn len(&self) -> u64 {
        self.retained
    }

    pub fn is_empty(&self) -> bool {
        self.retained == 0
    }

    /// Draws ever pushed, including those evicted from a reservoir.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn distinct(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Distinct rows with their multiplicities.
    pub fn entries(&self) -> impl Iterator<Item = (&[f64], u64)> {
        self.rows
            .chunks_exact(self.dim.max(1))
            .zip(self.counts.iter().copied())
            .filter(|(_, c)| *c > 0)
    }

    fn intern(&mut self, stats: &[f64]) -> u32 {
        self.key.clear();
        self.key.extend(stats.iter().map(|v| v.to_bits()));
        if let Some(&id) = self.index.get(self.key.as_slice()) {
            return id;
        }
        let id = self.counts.len() as u32;
        self.rows.extend_from_slice(stats);
        self.counts.push(0);
        self.index.insert(self.key.clone().into_boxed_slice(), id);
        id
    }

    pub fn push(&mut self, stats: &[f64], rng: &mut RngStream) -> Result<()> {
        check_dim(self.dim, stats.len())?;
        self.seen += 1;
        match self.capacity {
            Some(cap) if self.slots.len() >= cap => {
                let j = (rng.uniform() * self.seen as f64) as u64;
                if (j as usize) < cap {
                    let id = self.intern(stats);
                    let old = std::mem::replace(&mut self.slots[j as usize], id);
                    self.counts[old as usize] -= 1;
                    self.counts[id as usize] += 1;
                }
            }
            Some(_) => {
                let id = self.intern(stats);
                self.slots.push(id);
                self.counts[id as usize] += 1;
                self.retained += 1;
            }
            None => {
                let id = self.intern(stats);
                self.counts[id as usize] += 1;
                self.retained += 1;
            }
        }
        Ok(())
    }

    /// Push a draw known to come without reservoir bookkeeping (no capacity).
    pub fn push_unbounded(&mut self, stats: &[f64]) -> Result<()> {
        if self.capacity.is_some() {
            return Err(Error::Unsupported("bounded pools need an RNG for pushes".into()));
        }
        check_dim(self.dim, stats.len())?;
        self.seen += 1;
        let id = self.intern(stats);
        self.counts[id as usize] += 1;
        self.retained += 1;
        Ok(())
    }

    /// Plain mean of the stored statistics.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (row, c) in self.entries() {
            for (a, v) in m.iter_mut().zip(row) {
                *a += c as f64 * v;
            }
        }
        m.iter().map(|v| v / self.retained.max(1) as f64).collect()
    }
}

/// Self-normalized importance-sampling moments of S at θ from a pool at θ̂.
#[derive(Clone, Debug, PartialEq)]
pub struct SnisMoments {
    /// Estimate of log c(θ) − log c(θ̂).
    pub log_ratio: f64,
    pub mean: Vec<f64>,
    /// Row-major p×p covariance.
    pub cov: Vec<f64>,
    /// (Σw)² / Σw² over individual draws.
    pub ess: f64,
}

/// Weights w ∝ exp((θ − θ̂)ᵀS) with a max shift; returns (log mean weight,
/// normalized per-row weights, ESS).
fn snis_weights(pool: &AuxStatPool, theta: &[f64], weights: &mut Vec<f64>) -> Result<(f64, f64)> {
    check_dim(pool.dim, theta.len())?;
    if pool.is_empty() {
        return Err(Error::InvalidState("auxiliary pool is empty".into()));
    }
    let delta: Vec<f64> = theta.iter().zip(&pool.reference).map(|(a, b)| a - b).collect();
    let p = pool.dim;
    weights.clear();
    let mut max = f64::NEG_INFINITY;
    for (row, &c) in pool.rows.chunks_exact(p.max(1)).zip(&pool.counts) {
        let a = if c == 0 {
            f64::NEG_INFINITY
        } else {
            delta.iter().zip(row).map(|(d, s)| d * s).sum::<f64>()
        };
        max = max.max(a);
        weights.push(a);
    }
    if !max.is_finite() {
        let distance = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
        return Err(Error::WeightUnderflow { distance });
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (w, &c) in weights.iter_mut().zip(&pool.counts) {
        let e = (*w - max).exp();
        let cf = c as f64;
        sum += cf * e;
        sum_sq += cf * e * e;
        *w = cf * e;
    }
    let log_ratio = max + (sum / pool.retained as f64).ln();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok((log_ratio, sum * sum / sum_sq))
}

/// Log-ratio, mean, covariance and ESS by self-normalized importance sampling.
///
/// One pass finds the largest log weight, a second accumulates weighted
/// first and second moments of the rows centered at the first row.
pub fn snis_moments(pool: &AuxStatPool, theta: &[f64]) -> Result<SnisMoments> {
    check_dim(pool.dim, theta.len())?;
    if pool.is_empty() {
        return Err(Error::InvalidState("auxiliary pool is empty".into()));
    }
    let p = pool.dim;
    let delta: Vec<f64> = theta.iter().zip(&pool.reference).map(|(a, b)| a - b).collect();
    let rows = pool.rows.chunks_exact(p.max(1));
    let mut max = f64::NEG_INFINITY;
    for (row, &c) in rows.clone().zip(&pool.counts) {
        if c > 0 {
            max = max.max(delta.iter().zip(row).map(|(d, s)| d * s).sum::<f64>());
        }
    }
    if !max.is_finite() {
        let distance = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
        return Err(Error::WeightUnderflow { distance });
    }
    let center = &pool.rows[..p];
    let acc = match p {
        1 => accumulate_fixed::<1>(pool, &delta, max),
        2 => accumulate_fixed::<2>(pool, &delta, max),
        3 => accumulate_fixed::<3>(pool, &delta, max),
        _ => accumulate(pool, &delta, max),
    };
    let Accumulated { sum, sum_sq, s1, s2 } = acc;
    let log_ratio = max + (sum / pool.retained as f64).ln();
    let m1: Vec<f64> = s1.iter().map(|v| v / sum).collect();
    let mut cov = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..=a {
            let mut v = s2[a * p + b] / sum - m1[a] * m1[b];
            if a == b {
                v = v.max(0.0);
            }
            cov[a * p + b] = v;
            cov[b * p + a] = v;
        }
    }
    Ok(SnisMoments {
        log_ratio,
        mean: m1.iter().zip(center).map(|(m, c)| m + c).collect(),
        cov,
        ess: sum * sum / sum_sq,
    })
}

/// Weighted sums over the pool rows centered at the first row.
struct Accumulated {
    sum: f64,
    sum_sq: f64,
    s1: Vec<f64>,
    /// Lower triangle of Σ w y yᵀ, row-major p×p.
    s2: Vec<f64>,
}

fn accumulate(pool: &AuxStatPool, delta: &[f64], max: f64) -> Accumulated {
    let p = pool.dim;
    let center = &pool.rows[..p];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut s1 = vec![0.0; p];
    let mut s2 = vec![0.0; p * p];
    let mut y = vec![0.0; p];
    for (row, &c) in pool.rows.chunks_exact(p).zip(&pool.counts) {
        if c == 0 {
            continue;
        }
        let a: f64 = delta.iter().zip(row).map(|(d, s)| d * s).sum();
        let e = (a - max).exp();
        if e == 0.0 {
            continue;
        }
        let w = c as f64 * e;
        sum += w;
        sum_sq += w * e;
        for k in 0..p {
            y[k] = row[k] - center[k];
            s1[k] += w * y[k];
        }
        for a in 0..p {
            let wa = w * y[a];
            for b in 0..=a {
                s2[a * p + b] += wa * y[b];
            }
        }
    }
    Accumulated { sum, sum_sq, s1, s2 }
}

/// [`accumulate`] with the dimension known at compile time.
fn accumulate_fixed<const P: usize>(pool: &AuxStatPool, delta: &[f64], max: f64) -> Accumulated {
    let d: [f64; P] = delta.try_into().expect("dimension checked by caller");
    let center: [f64; P] = pool.rows[..P].try_into().expect("pool is non-empty");
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut s1 = [0.0; P];
    let mut s2 = [[0.0; P]; P];
    for (row, &c) in pool.rows.chunks_exact(P).zip(&pool.counts) {
        if c == 0 {
            continue;
        }
        let row: &[f64; P] = row.try_into().expect("chunk has length P");
        let mut a = 0.0;
        for k in 0..P {
            a += d[k] * row[k];
        }
        let e = (a - max).exp();
        if e == 0.0 {
            continue;
        }
        let w = c as f64 * e;
        sum += w;
        sum_sq += w * e;
        let mut y = [0.0; P];
        for k in 0..P {
            y[k] = row[k] - center[k];
            s1[k] += w * y[k];
        }
        for a in 0..P {
            let wa = w * y[a];
            for b in 0..=a {
                s2[a][b] += wa * y[b];
            }
        }
    }
    Accumulated {
        sum,
        sum_sq,
        s1: s1.to_vec(),
        s2: s2.iter().flatten().copied().collect(),
    }
}

/// Only the log-ratio and ESS, skipping the moment passes.
pub fn snis_log_ratio(pool: &AuxStatPool, theta: &[f64]) -> Result<(f64, f64)> {
    let mut w = Vec::new();
    snis_weights(pool, theta, &mut w)
}

/// Simulate a pool of `n` statistics at `theta`: `generator.burn_in` cycles
/// from `init`, then one stored draw every `generator.spacing` cycles.
pub fn build_pool<M: ExpFamily>(
    model: &M,
    theta: &[f64],
    n: usize,
    generator: PoolGenerator,
    init: &M::State,
    rng: &mut RngStream,
) -> Result<AuxStatPool> {
    if n == 0 {
        return Err(Error::InvalidParameter("pool size N must be at least 1".into()));
    }
    model.check_theta(theta)?;
    model.validate(init)?;
    let mut state = init.clone();
    model.run_cycles(generator.inner, generator.burn_in, &mut state, theta, rng)?;
    let mut pool = AuxStatPool::new(theta.to_vec());
    pool.generator = Some(generator);
    for _ in 0..n {
        model.run_cycles(generator.inner, generator.spacing.max(1), &mut state, theta, rng)?;
        pool.push_unbounded(&model.suffstats(&state))?;
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_point_is_exact() {
        let mut pool = AuxStatPool::new(vec![0.5]);
        for s in [0.0, 2.0, 2.0, 4.0] {
            pool.push_unbounded(&[s]).unwrap();
        }
        let m = snis_moments(&pool, &[0.5]).unwrap();
        assert_eq!(m.log_ratio, 0.0);
        assert_eq!(m.ess, 4.0);
        assert_eq!(m.mean, vec![2.0]);
        assert_eq!(m.cov, vec![2.0]);
        assert_eq!(pool.distinct(), 3);
    }

    #[test]
    fn reservoir_respects_capacity() {
        let mut rng = RngStream::new(0, 0);
        let mut pool = AuxStatPool::with_capacity(vec![0.0], 100);
        for i in 0..10_000 {
            pool.push(&[(i % 7) as f64], &mut rng).unwrap();
        }
        assert_eq!(pool.len(), 100);
        assert_eq!(pool.seen(), 10_000);
        assert_eq!(pool.entries().map(|(_, c)| c).sum::<u64>(), 100);
    }

    #[test]
    fn reservoir_is_uniform_over_history() {
        let mut rng = RngStream::new(1, 0);
        let mut pool = AuxStatPool::with_capacity(vec![0.0], 1000);
        for i in 0..20_000 {
            pool.push(&[if i < 10_000 { 0.0 } else { 1.0 }], &mut rng).unwrap();
        }
        let m = pool.mean()[0];
        assert!((m - 0.5).abs() < 0.05, "{m}");
    }

    #[test]
    fn infinite_theta_underflows() {
        let mut pool = AuxStatPool::new(vec![0.0]);
        pool.push_unbounded(&[1.0]).unwrap();
        pool.push_unbounded(&[-1.0]).unwrap();
        assert!(matches!(
            snis_moments(&pool, &[f64::INFINITY]),
            Err(Error::WeightUnderflow { .. })
        ));
    }
}
