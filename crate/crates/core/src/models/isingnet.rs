//! Ising network model for an n × p binary item-response matrix:
//! S(x) = (column sums, pairwise co-occurrence counts for j < k).

use serde::{Deserialize, Serialize};

use super::{pairs, ExpFamily, ModelKind, SuffStat};
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItemResponseMatrix {
    n: usize,
    p: usize,
    entries: Vec<u8>,
}

impl ItemResponseMatrix {
    pub fn new(n: usize, p: usize, entries: Vec<u8>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidState("response matrix must be nonempty".into()));
        }
        if entries.len() != n * p {
            return Err(Error::InvalidState(format!(
                "expected {} entries for {n}x{p}, got {}",
                n * p,
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|&v| v > 1) {
            return Err(Error::InvalidState(format!(
                "entry ({}, {}) is not binary",
                i / p,
                i % p
            )));
        }
        Ok(ItemResponseMatrix { n, p, entries })
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        ItemResponseMatrix {
            n,
            p,
            entries: vec![0; n * p],
        }
    }

    pub fn respondents(&self) -> usize {
        self.n
    }

    pub fn items(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.p + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.p..(i + 1) * self.p]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsingNetModel {
    pub n: usize,
    pub p: usize,
}

impl IsingNetModel {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidParameter(format!("invalid Ising network size {n}x{p}")));
        }
        Ok(IsingNetModel { n, p })
    }

    pub fn for_data(data: &ItemResponseMatrix) -> Self {
        IsingNetModel {
            n: data.n,
            p: data.p,
        }
    }

    /// Position of γ_{jk} (j < k) in the parameter vector.
    pub fn pair_index(&self, j: usize, k: usize) -> usize {
        let (j, k) = if j < k { (j, k) } else { (k, j) };
        self.p + j * (2 * self.p - j - 1) / 2 + (k - j - 1)
    }

    /// (j, k) for interaction index `idx` (counting from the first γ).
    pub fn pair_of(&self, idx: usize) -> (usize, usize) {
        let mut rem = idx;
        for j in 0..self.p {
            let row = self.p - j - 1;
            if rem < row {
                return (j, j + 1 + rem);
            }
            rem -= row;
        }
        panic!("interaction index {idx} out of range");
    }

    /// Log-odds of x_ij = 1 given the rest of row i.
    #[inline]
    fn cell_logit(&self, row: &[u8], j: usize, theta: &[f64]) -> f64 {
        let mut eta = theta[j];
        for (k, &xk) in row.iter().enumerate() {
            if k != j && xk == 1 {
                eta += theta[self.pair_index(j, k)];
            }
        }
        eta
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n * self.p {
            return Err(Error::InvalidIndex {
                index: site,
                limit: self.n * self.p,
            });
        }
        Ok(())
    }
}

impl ExpFamily for IsingNetModel {
    type State = ItemResponseMatrix;

    fn kind(&self) -> ModelKind {
        ModelKind::IsingNet
    }

    fn dim(&self) -> usize {
        self.p + pairs(self.p)
    }

    fn suffstats(&self, x: &ItemResponseMatrix) -> SuffStat {
        let p = self.p;
        let mut s = vec![0.0; self.dim()];
        for i in 0..x.n {
            let row = x.row(i);
            for j in 0..p {
                if row[j] == 1 {
                    s[j] += 1.0;
                    let mut idx = self.pair_index(j, j + 1);
                    for &xk in &row[j + 1..] {
                        if xk == 1 {
                            s[idx] += 1.0;
                        }
                        idx += 1;
                    }
                }
            }
        }
        SuffStat(s)
    }

    fn validate(&self, x: &ItemResponseMatrix) -> Result<()> {
        if x.n != self.n || x.p != self.p {
            return Err(Error::InvalidState(format!(
                "data is {}x{}, model expects {}x{}",
                x.n, x.p, self.n, self.p
            )));
        }
        Ok(())
    }

    fn num_sites(&self) -> usize {
        self.n * self.p
    }

    fn value_range(&self) -> (u8, u8) {
        (0, 1)
    }

    fn site_value(&self, x: &ItemResponseMatrix, site: usize) -> u8 {
        x.entries[site]
    }

    fn change_stat(&self, x: &ItemResponseMatrix, site: usize, value: u8) -> Result<SuffStat> {
        self.check_site(site)?;
        if value > 1 {
            return Err(Error::InvalidParameter(format!("response {value} not binary")));
        }
        let mut d = SuffStat::zeros(self.dim());
        let old = x.entries[site];
        if old == value {
            return Ok(d);
        }
        let sign = value as f64 - old as f64;
        let (i, j) = (site / self.p, site % self.p);
        d[j] = sign;
        for (k, &xk) in x.row(i).iter().enumerate() {
            if k != j && xk == 1 {
                d[self.pair_index(j, k)] = sign;
            }
        }
        Ok(d)
    }

    fn set_site(&self, x: &mut ItemResponseMatrix, site: usize, value: u8) -> Result<()> {
        self.check_site(site)?;
        if value > 1 {
            return Err(Error::InvalidParameter(format!("response {value} not binary")));
        }
        x.entries[site] = value;
        Ok(())
    }

    fn gibbs_sweep(&self, x: &mut ItemResponseMatrix, theta: &[f64], rng: &mut RngStream) {
        let p = self.p;
        for i in 0..self.n {
            for j in 0..p {
                let eta = self.cell_logit(&x.entries[i * p..(i + 1) * p], j, theta);
                x.entries[i * p + j] = (rng.uniform() < logistic(eta)) as u8;
            }
        }
    }

    fn state_space_size(&self) -> Option<u64> {
        let bits = self.n * self.p;
        if bits < 64 {
            Some(1u64 << bits)
        } else {
            None
        }
    }

    fn state_space_description(&self) -> String {
        format!("2^{} response matrices", self.n * self.p)
    }

    fn state_at(&self, index: u64) -> ItemResponseMatrix {
        let entries = (0..self.n * self.p).map(|b| ((index >> b) & 1) as u8).collect();
        ItemResponseMatrix {
            n: self.n,
            p: self.p,
            entries,
        }
    }
}
