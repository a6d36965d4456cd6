//! K-color Potts model on an r × s lattice with free boundary and
//! 4-neighborhood. S(x) is the number of like-colored adjacent pairs.

use serde::{Deserialize, Serialize};

use super::{ExpFamily, InnerKind, ModelKind, SuffStat};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PottsLattice {
    rows: usize,
    cols: usize,
    colors: u8,
    cells: Vec<u8>,
}

impl PottsLattice {
    /// Build a lattice from row-major 1-based colors.
    pub fn new(rows: usize, cols: usize, colors: u8, cells: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidState("lattice must have positive dimensions".into()));
        }
        if colors == 0 {
            return Err(Error::InvalidState("number of colors must be positive".into()));
        }
        if cells.len() != rows * cols {
            return Err(Error::InvalidState(format!(
                "expected {} cells for a {rows}x{cols} lattice, got {}",
                rows * cols,
                cells.len()
            )));
        }
        if let Some((i, &c)) = cells.iter().enumerate().find(|(_, &c)| c < 1 || c > colors) {
            return Err(Error::InvalidState(format!(
                "cell {i} has color {c}, outside 1..={colors}"
            )));
        }
        Ok(PottsLattice {
            rows,
            cols,
            colors,
            cells,
        })
    }

    pub fn uniform(rows: usize, cols: usize, colors: u8, color: u8) -> Result<Self> {
        PottsLattice::new(rows, cols, colors, vec![color; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn colors(&self) -> u8 {
        self.colors
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.cells[r * self.cols + c]
    }

    /// Count of adjacent like-colored pairs.
    pub fn matching_pairs(&self) -> u32 {
        let (rows, cols) = (self.rows, self.cols);
        let mut count = 0u32;
        for r in 0..rows {
            let row = &self.cells[r * cols..(r + 1) * cols];
            for c in 0..cols {
                if c + 1 < cols && row[c] == row[c + 1] {
                    count += 1;
                }
                if r + 1 < rows && row[c] == self.cells[(r + 1) * cols + c] {
                    count += 1;
                }
            }
        }
        count
    }

    /// Total number of neighbor pairs, 2rs - r - s.
    pub fn edge_count(&self) -> u32 {
        (self.rows * (self.cols - 1) + self.cols * (self.rows - 1)) as u32
    }

    #[inline]
    pub(crate) fn for_each_neighbor(&self, site: usize, mut f: impl FnMut(usize)) {
        let (r, c) = (site / self.cols, site % self.cols);
        if r > 0 {
            f(site - self.cols);
        }
        if r + 1 < self.rows {
            f(site + self.cols);
        }
        if c > 0 {
            f(site - 1);
        }
        if c + 1 < self.cols {
            f(site + 1);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PottsModel {
    pub rows: usize,
    pub cols: usize,
    pub colors: u8,
}

impl PottsModel {
    pub fn new(rows: usize, cols: usize, colors: u8) -> Result<Self> {
        if rows == 0 || cols == 0 || colors == 0 {
            return Err(Error::InvalidParameter(format!(
                "invalid Potts structure {rows}x{cols} with {colors} colors"
            )));
        }
        Ok(PottsModel { rows, cols, colors })
    }

    pub fn for_lattice(lattice: &PottsLattice) -> Self {
        PottsModel {
            rows: lattice.rows,
            cols: lattice.cols,
            colors: lattice.colors,
        }
    }

    /// Swendsen-Wang cycle: bonds between like-colored neighbors open with
    /// probability 1 - e^{-θ}; every resulting cluster gets a uniform color.
    pub fn swendsen_wang_cycle(
        &self,
        lattice: &mut PottsLattice,
        theta: f64,
        rng: &mut RngStream,
    ) -> Result<()> {
        if !(theta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Swendsen-Wang requires theta >= 0, got {theta}"
            )));
        }
        let mut work = SwWorkspace::new(lattice.cells.len());
        work.cycle(lattice, theta, rng);
        Ok(())
    }
}

/// Reusable buffers for repeated Swendsen-Wang cycles on one lattice size.
pub(crate) struct SwWorkspace {
    parent: Vec<u32>,
    label: Vec<u8>,
}

impl SwWorkspace {
    pub(crate) fn new(sites: usize) -> Self {
        SwWorkspace {
            parent: vec![0; sites],
            label: vec![0; sites],
        }
    }

    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            let gp = parent[parent[i as usize] as usize];
            parent[i as usize] = gp;
            i = gp;
        }
        i
    }

    fn union(parent: &mut [u32], a: usize, b: usize) {
        let ra = Self::find(parent, a as u32);
        let rb = Self::find(parent, b as u32);
        if ra != rb {
            // attach the larger root index under the smaller: roots then
            // appear in raster order, which keeps relabeling deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi as usize] = lo;
        }
    }

    pub(crate) fn cycle(&mut self, lattice: &mut PottsLattice, theta: f64, rng: &mut RngStream) {
        let n = lattice.cells.len();
        let (rows, cols) = (lattice.rows, lattice.cols);
        let bond_p = 1.0 - (-theta).exp();
        for (i, p) in self.parent.iter_mut().enumerate().take(n) {
            *p = i as u32;
        }
        if bond_p > 0.0 {
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    let ci = lattice.cells[i];
                    if c + 1 < cols && lattice.cells[i + 1] == ci && rng.uniform() < bond_p {
                        Self::union(&mut self.parent, i, i + 1);
                    }
                    if r + 1 < rows && lattice.cells[i + cols] == ci && rng.uniform() < bond_p {
                        Self::union(&mut self.parent, i, i + cols);
                    }
                }
            }
        }
        let k = lattice.colors as usize;
        for i in 0..n {
            let root = Self::find(&mut self.parent, i as u32) as usize;
            if root == i {
                self.label[i] = 1 + rng.below(k) as u8;
            }
            lattice.cells[i] = self.label[root];
        }
    }
}

impl ExpFamily for PottsModel {
    type State = PottsLattice;

    fn kind(&self) -> ModelKind {
        ModelKind::Potts
    }

    fn dim(&self) -> usize {
        1
    }

    fn suffstats(&self, state: &PottsLattice) -> SuffStat {
        SuffStat(vec![state.matching_pairs() as f64])
    }

    fn validate(&self, state: &PottsLattice) -> Result<()> {
        if state.rows != self.rows || state.cols != self.cols || state.colors != self.colors {
            return Err(Error::InvalidState(format!(
                "lattice {}x{} with {} colors does not match model {}x{} with {} colors",
                state.rows, state.cols, state.colors, self.rows, self.cols, self.colors
            )));
        }
        Ok(())
    }

    fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    fn value_range(&self) -> (u8, u8) {
        (1, self.colors)
    }

    fn site_value(&self, state: &PottsLattice, site: usize) -> u8 {
        state.cells[site]
    }

    fn change_stat(&self, state: &PottsLattice, site: usize, value: u8) -> Result<SuffStat> {
        if site >= self.num_sites() {
            return Err(Error::InvalidIndex {
                index: site,
                limit: self.num_sites(),
            });
        }
        if value < 1 || value > self.colors {
            return Err(Error::InvalidParameter(format!(
                "color {value} outside 1..={}",
                self.colors
            )));
        }
        let old = state.cells[site];
        let mut delta = 0i32;
        state.for_each_neighbor(site, |j| {
            let cj = state.cells[j];
            delta += (cj == value) as i32 - (cj == old) as i32;
        });
        Ok(SuffStat(vec![delta as f64]))
    }

    fn set_site(&self, state: &mut PottsLattice, site: usize, value: u8) -> Result<()> {
        if site >= self.num_sites() {
            return Err(Error::InvalidIndex {
                index: site,
                limit: self.num_sites(),
            });
        }
        if value < 1 || value > self.colors {
            return Err(Error::InvalidParameter(format!(
                "color {value} outside 1..={}",
                self.colors
            )));
        }
        state.cells[site] = value;
        Ok(())
    }

    fn gibbs_sweep(&self, state: &mut PottsLattice, theta: &[f64], rng: &mut RngStream) {
        let t = theta[0];
        let k = self.colors as usize;
        // exp(θ·j) for j = 0..=4 neighbors of a color
        let boltz: [f64; 5] = std::array::from_fn(|j| (t * j as f64).exp());
        let mut counts = vec![0u8; k + 1];
        let mut weights = vec![0.0f64; k];
        for site in 0..state.cells.len() {
            counts.iter_mut().for_each(|c| *c = 0);
            state.for_each_neighbor(site, |j| counts[state.cells[j] as usize] += 1);
            let mut total = 0.0;
            for (color, w) in weights.iter_mut().enumerate() {
                *w = boltz[counts[color + 1] as usize];
                total += *w;
            }
            let mut u = rng.uniform() * total;
            let mut chosen = k;
            for (color, w) in weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = color + 1;
                    break;
                }
            }
            state.cells[site] = chosen as u8;
        }
    }

    fn inner_cycle(
        &self,
        kind: InnerKind,
        state: &mut PottsLattice,
        theta: &[f64],
        rng: &mut RngStream,
    ) -> Result<()> {
        match kind {
            InnerKind::GibbsSweep => {
                self.gibbs_sweep(state, theta, rng);
                Ok(())
            }
            InnerKind::SwendsenWang => self.swendsen_wang_cycle(state, theta[0], rng),
            InnerKind::EdgeToggle => Err(Error::Unsupported(
                "edge-toggle updates apply only to graph models".into(),
            )),
        }
    }

    fn run_cycles(
        &self,
        kind: InnerKind,
        cycles: usize,
        state: &mut PottsLattice,
        theta: &[f64],
        rng: &mut RngStream,
    ) -> Result<()> {
        if kind != InnerKind::SwendsenWang {
            for _ in 0..cycles {
                self.inner_cycle(kind, state, theta, rng)?;
            }
            return Ok(());
        }
        if !(theta[0] >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Swendsen-Wang requires theta >= 0, got {}",
                theta[0]
            )));
        }
        let mut work = SwWorkspace::new(state.cells.len());
        for _ in 0..cycles {
            work.cycle(state, theta[0], rng);
        }
        Ok(())
    }

    fn state_space_size(&self) -> Option<u64> {
        (self.colors as u64).checked_pow(u32::try_from(self.rows * self.cols).ok()?)
    }

    fn state_space_description(&self) -> String {
        format!("{}^{} states", self.colors, self.rows * self.cols)
    }

    fn state_at(&self, mut index: u64) -> PottsLattice {
        let k = self.colors as u64;
        let cells = (0..self.rows * self.cols)
            .map(|_| {
                let d = (index % k) as u8;
                index /= k;
                d + 1
            })
            .collect();
        PottsLattice {
            rows: self.rows,
            cols: self.cols,
            colors: self.colors,
            cells,
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        crate::error::check_dim(1, theta.len())
    }
}
