//! Exact enumeration of small state spaces: log c(θ), the full distribution
//! f(·|θ), its moments, and exact draws by inverse CDF.
//!
//! States are grouped by their sufficient statistic, since f(x|θ) depends on
//! x only through S(x). Repeated evaluations at new θ then cost one pass over
//! the distinct statistic values instead of the whole space.

use std::collections::HashMap;

use super::{ExpFamily, SuffStat};
use crate::error::{Error, Result};
use crate::numeric::{dot, log_sum_exp};
use crate::rng::RngStream;

/// Default cap on enumerated state-space size, 2^20.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Clone, Debug)]
struct StatClass {
    stats: Vec<f64>,
    members: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Enumeration<M: ExpFamily> {
    model: M,
    classes: Vec<StatClass>,
    class_of: Vec<u32>,
}

impl<M: ExpFamily + Clone> Enumeration<M> {
    pub fn new(model: &M, cap: u64) -> Result<Self> {
        let size = match model.state_space_size() {
            Some(s) if s <= cap => s,
            _ => {
                return Err(Error::Intractable {
                    states: model.state_space_description(),
                    cap,
                })
            }
        };
        let mut lookup: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut classes: Vec<StatClass> = Vec::new();
        let mut class_of = Vec::with_capacity(size as usize);
        for index in 0..size {
            let s = model.suffstats(&model.state_at(index));
            let key: Vec<u64> = s.iter().map(|v| v.to_bits()).collect();
            let c = *lookup.entry(key).or_insert_with(|| {
                classes.push(StatClass {
                    stats: s.0.clone(),
                    members: Vec::new(),
                });
                (classes.len() - 1) as u32
            });
            classes[c as usize].members.push(index);
            class_of.push(c);
        }
        Ok(Enumeration {
            model: model.clone(),
            classes,
            class_of,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn num_states(&self) -> u64 {
        self.class_of.len() as u64
    }

    /// Distinct sufficient-statistic values with their multiplicities.
    pub fn statistic_classes(&self) -> impl Iterator<Item = (&[f64], u64)> {
        self.classes
            .iter()
            .map(|c| (c.stats.as_slice(), c.members.len() as u64))
    }

    fn class_log_weights(&self, theta: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| (c.members.len() as f64).ln() + dot(theta, &c.stats))
            .collect()
    }

    pub fn log_normalizer(&self, theta: &[f64]) -> Result<f64> {
        self.model.check_theta(theta)?;
        Ok(log_sum_exp(&self.class_log_weights(theta)))
    }

    /// f(x|θ) for every state, indexed in enumeration order.
    pub fn state_probabilities(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let lw = self.class_log_weights(theta);
        let lz = self.log_normalizer(theta)?;
        let per_state: Vec<f64> = self
            .classes
            .iter()
            .zip(&lw)
            .map(|(c, w)| (w - (c.members.len() as f64).ln() - lz).exp())
            .collect();
        Ok(self.class_of.iter().map(|&c| per_state[c as usize]).collect())
    }

    /// E_θ[S] and Cov_θ[S] under the exact distribution.
    pub fn moments(&self, theta: &[f64]) -> Result<(SuffStat, Vec<Vec<f64>>)> {
        let lw = self.class_log_weights(theta);
        let lz = self.log_normalizer(theta)?;
        let p = self.model.dim();
        let mut mean = vec![0.0; p];
        let mut second = vec![vec![0.0; p]; p];
        for (c, w) in self.classes.iter().zip(&lw) {
            let prob = (w - lz).exp();
            for a in 0..p {
                mean[a] += prob * c.stats[a];
                for b in 0..p {
                    second[a][b] += prob * c.stats[a] * c.stats[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..p {
                second[a][b] -= mean[a] * mean[b];
            }
        }
        Ok((SuffStat(mean), second))
    }

    /// Exact draw from f(·|θ) by inverse CDF over the statistic classes,
    /// then uniformly within the class.
    pub fn sample(&self, theta: &[f64], rng: &mut RngStream) -> M::State {
        let lw = self.class_log_weights(theta);
        let lz = log_sum_exp(&lw);
        let mut u = rng.uniform();
        let mut chosen = self.classes.len() - 1;
        for (i, w) in lw.iter().enumerate() {
            u -= (w - lz).exp();
            if u <= 0.0 {
                chosen = i;
                break;
            }
        }
        let members = &self.classes[chosen].members;
        self.model.state_at(members[rng.below(members.len())])
    }

    /// Exact draw of the sufficient statistic only.
    pub fn sample_stats(&self, theta: &[f64], rng: &mut RngStream) -> &[f64] {
        let lw = self.class_log_weights(theta);
        let lz = log_sum_exp(&lw);
        let mut u = rng.uniform();
        for (i, w) in lw.iter().enumerate() {
            u -= (w - lz).exp();
            if u <= 0.0 {
                return &self.classes[i].stats;
            }
        }
        &self.classes[self.classes.len() - 1].stats
    }
}

/// Exact log c(θ) by full enumeration, refusing state spaces above `cap`.
pub fn enumerate_log_normalizer<M: ExpFamily + Clone>(
    model: &M,
    theta: &[f64],
    cap: u64,
) -> Result<f64> {
    model.check_theta(theta)?;
    Enumeration::new(model, cap)?.log_normalizer(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ErgmModel, IsingNetModel, PottsModel};

    #[test]
    fn potts_2x2_theta_zero() {
        let m = PottsModel::new(2, 2, 2).unwrap();
        let lz = enumerate_log_normalizer(&m, &[0.0], DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((lz - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn potts_2x2_theta_one() {
        let m = PottsModel::new(2, 2, 2).unwrap();
        let lz = enumerate_log_normalizer(&m, &[1.0], DEFAULT_ENUMERATION_CAP).unwrap();
        let e = std::f64::consts::E;
        let expected = (2.0 * e.powi(4) + 12.0 * e.powi(2) + 2.0).ln();
        assert!((lz - expected).abs() < 1e-12);
        let e = Enumeration::new(&m, DEFAULT_ENUMERATION_CAP).unwrap();
        let mut classes: Vec<(f64, u64)> = e.statistic_classes().map(|(s, c)| (s[0], c)).collect();
        classes.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(classes, vec![(0.0, 2), (2.0, 12), (4.0, 2)]);
    }

    #[test]
    fn ergm_three_nodes_theta_zero() {
        let m = ErgmModel::new(3).unwrap();
        let lz = enumerate_log_normalizer(&m, &[0.0, 0.0], DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((lz - 8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn isingnet_theta_zero() {
        let m = IsingNetModel::new(2, 3).unwrap();
        let lz = enumerate_log_normalizer(&m, &[0.0; 6], DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((lz - 64f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_spaces() {
        let m = PottsModel::new(30, 30, 4).unwrap();
        let err = enumerate_log_normalizer(&m, &[1.0], DEFAULT_ENUMERATION_CAP).unwrap_err();
        assert!(matches!(err, Error::Intractable { .. }));
        let m = ErgmModel::new(7).unwrap();
        assert!(Enumeration::new(&m, DEFAULT_ENUMERATION_CAP).is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = ErgmModel::new(4).unwrap();
        let e = Enumeration::new(&m, DEFAULT_ENUMERATION_CAP).unwrap();
        let p = e.state_probabilities(&[-0.3, 0.4]).unwrap();
        assert_eq!(p.len(), 64);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
