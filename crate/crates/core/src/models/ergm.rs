//! Undirected exponential random graph model with edge count and GWESP
//! statistics, S(x) = (edges, GWESP(x; 0.2)).
//!
//! GWESP(x) = e^a Σ_{k≥1} {1 - (1 - e^{-a})^k} ESP_k(x), a = 0.2, where ESP_k
//! counts connected pairs with exactly k shared partners. Equivalently it is
//! the sum of w(sp_ij) over edges, with w(0) = 0, which is what the
//! incremental updates exploit.

use serde::{Deserialize, Serialize};

use super::{pairs, ExpFamily, InnerKind, ModelKind, SuffStat};
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::rng::RngStream;

/// GWESP decay parameter, fixed.
pub const GWESP_DECAY: f64 = 0.2;

/// GWESP weight for an edge with k shared partners.
pub fn gwesp_weight(k: usize) -> f64 {
    GWESP_DECAY.exp() * (1.0 - (1.0 - (-GWESP_DECAY).exp()).powi(k as i32))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<u8>,
}

impl UndirectedGraph {
    pub fn empty(n: usize) -> Self {
        UndirectedGraph {
            n,
            adj: vec![0; n * n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = UndirectedGraph::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidState(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidState(format!("self-loop at node {i}")));
            }
            g.adj[i * n + j] = 1;
            g.adj[j * n + i] = 1;
        }
        Ok(g)
    }

    /// Build from a full adjacency matrix (row-major), checking symmetry and
    /// the zero diagonal.
    pub fn from_adjacency(n: usize, adj: Vec<u8>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::InvalidState("adjacency must be n x n".into()));
        }
        for i in 0..n {
            if adj[i * n + i] != 0 {
                return Err(Error::InvalidState(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let a = adj[i * n + j];
                if a > 1 || a != adj[j * n + i] {
                    return Err(Error::InvalidState(format!(
                        "adjacency not symmetric binary at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(UndirectedGraph { n, adj })
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j] == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&a| a == 1).count() / 2
    }

    fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(i, j)).collect()
    }

    /// ESP histogram recomputed from scratch by walking neighbor lists,
    /// O(n·deg²). Index k holds the number of edges with k shared partners.
    pub fn esp_histogram(&self) -> Vec<u32> {
        let n = self.n;
        let mut shared = vec![0u16; n * n];
        for k in 0..n {
            let nb = self.neighbors(k);
            for (a, &i) in nb.iter().enumerate() {
                for &j in &nb[a + 1..] {
                    shared[i * n + j] += 1;
                }
            }
        }
        let mut esp = vec![0u32; n.max(2) - 1];
        for (i, j) in self.edges() {
            esp[shared[i * n + j] as usize] += 1;
        }
        esp
    }

    /// (edges, GWESP) by full recomputation.
    pub fn suffstats(&self) -> SuffStat {
        let esp = self.esp_histogram();
        SuffStat(vec![self.edge_count() as f64, gwesp_from_histogram(&esp)])
    }
}

pub(crate) fn gwesp_from_histogram(esp: &[u32]) -> f64 {
    esp.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| gwesp_weight(k) * c as f64)
        .sum()
}

/// Graph plus incrementally maintained shared-partner counts, ESP
/// histogram and neighbor bitsets, so single-dyad toggles cost
/// O(n / 64 + degree).
#[derive(Clone, Debug)]
pub struct ErgmState {
    graph: UndirectedGraph,
    shared: Vec<u16>,
    esp: Vec<u32>,
    edges: u32,
    /// 64-bit words per neighbor bitset row.
    words: usize,
    neighbors: Vec<u64>,
}

impl PartialEq for ErgmState {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph
    }
}

impl ErgmState {
    pub fn new(graph: UndirectedGraph) -> Self {
        let n = graph.n;
        let mut shared = vec![0u16; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = (0..n)
                    .filter(|&k| graph.has_edge(i, k) && graph.has_edge(j, k))
                    .count() as u16;
                shared[i * n + j] = c;
                shared[j * n + i] = c;
            }
        }
        let mut esp = vec![0u32; n.max(2) - 1];
        for (i, j) in graph.edges() {
            esp[shared[i * n + j] as usize] += 1;
        }
        let edges = graph.edge_count() as u32;
        let words = n.div_ceil(64).max(1);
        let mut neighbors = vec![0u64; n * words];
        for (i, j) in graph.edges() {
            neighbors[i * words + j / 64] |= 1 << (j % 64);
            neighbors[j * words + i / 64] |= 1 << (i % 64);
        }
        ErgmState {
            graph,
            shared,
            esp,
            edges,
            words,
            neighbors,
        }
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> UndirectedGraph {
        self.graph
    }

    pub fn esp(&self) -> &[u32] {
        &self.esp
    }

    pub fn shared_partners(&self, i: usize, j: usize) -> u16 {
        self.shared[i * self.graph.n + j]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgmModel {
    n: usize,
    weights: Vec<f64>,
    dyads: Vec<(u16, u16)>,
}

impl ErgmModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "graph model needs at least 2 nodes, got {n}"
            )));
        }
        if n > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!("too many nodes: {n}")));
        }
        let weights = (0..n).map(gwesp_weight).collect();
        let mut dyads = Vec::with_capacity(pairs(n));
        for i in 0..n {
            for j in i + 1..n {
                dyads.push((i as u16, j as u16));
            }
        }
        Ok(ErgmModel { n, weights, dyads })
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    /// (i, j) with i < j for a dyad index.
    pub fn dyad(&self, index: usize) -> (usize, usize) {
        let (i, j) = self.dyads[index];
        (i as usize, j as usize)
    }

    pub fn dyad_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Change in (edges, GWESP) from toggling dyad (i, j).
    #[inline]
    fn toggle_delta(&self, state: &ErgmState, i: usize, j: usize) -> (f64, f64) {
        let n = self.n;
        let w = &self.weights;
        let adj = &state.graph.adj;
        let sp = &state.shared;
        let wd = state.words;
        let (ni, nj) = (&state.neighbors[i * wd..][..wd], &state.neighbors[j * wd..][..wd]);
        let (si, sj) = (&sp[i * n..][..n], &sp[j * n..][..n]);
        let present = adj[i * n + j] == 1;
        let step: isize = if present { -1 } else { 1 };
        let mut d2 = 0.0;
        for (word, (&x, &y)) in ni.iter().zip(nj).enumerate() {
            let mut common = x & y;
            while common != 0 {
                let k = word * 64 + common.trailing_zeros() as usize;
                common &= common - 1;
                let (a, b) = (si[k] as usize, sj[k] as usize);
                d2 += (w[a.wrapping_add_signed(step)] - w[a]) + (w[b.wrapping_add_signed(step)] - w[b]);
            }
        }
        let own = w[si[j] as usize];
        if present {
            (-1.0, d2 - own)
        } else {
            (1.0, d2 + own)
        }
    }

    fn toggle(&self, state: &mut ErgmState, i: usize, j: usize) {
        let n = self.n;
        let adding = state.graph.adj[i * n + j] == 0;
        let sp_ij = state.shared[i * n + j] as usize;
        if adding {
            state.esp[sp_ij] += 1;
            state.edges += 1;
        } else {
            state.esp[sp_ij] -= 1;
            state.edges -= 1;
        }
        // j becomes (or stops being) a shared partner of i and each neighbor
        // of j, and symmetrically for i
        let wd = state.words;
        for (a, b) in [(i, j), (j, i)] {
            for word in 0..wd {
                let mut nb = state.neighbors[b * wd + word];
                while nb != 0 {
                    let k = word * 64 + nb.trailing_zeros() as usize;
                    nb &= nb - 1;
                    if k == a {
                        continue;
                    }
                    let old = state.shared[a * n + k];
                    let new = if adding { old + 1 } else { old - 1 };
                    if state.graph.adj[a * n + k] == 1 {
                        state.esp[old as usize] -= 1;
                        state.esp[new as usize] += 1;
                    }
                    state.shared[a * n + k] = new;
                    state.shared[k * n + a] = new;
                }
            }
        }
        let v = adding as u8;
        state.graph.adj[i * n + j] = v;
        state.graph.adj[j * n + i] = v;
        state.neighbors[i * wd + j / 64] ^= 1 << (j % 64);
        state.neighbors[j * wd + i / 64] ^= 1 << (i % 64);
    }

    /// Metropolis toggles of C(n,2) uniformly chosen dyads.
    pub fn edge_toggle_cycle(&self, state: &mut ErgmState, theta: &[f64], rng: &mut RngStream) {
        for _ in 0..self.dyads.len() {
            let (i, j) = self.dyad(rng.below(self.dyads.len()));
            let (d1, d2) = self.toggle_delta(state, i, j);
            let log_ratio = theta[0] * d1 + theta[1] * d2;
            if log_ratio >= 0.0 || rng.uniform() < log_ratio.exp() {
                self.toggle(state, i, j);
            }
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.dyads.len() {
            return Err(Error::InvalidIndex {
                index: site,
                limit: self.dyads.len(),
            });
        }
        Ok(())
    }
}

impl ExpFamily for ErgmModel {
    type State = ErgmState;

    fn kind(&self) -> ModelKind {
        ModelKind::Ergm
    }

    fn dim(&self) -> usize {
        2
    }

    fn suffstats(&self, state: &ErgmState) -> SuffStat {
        SuffStat(vec![state.edges as f64, gwesp_from_histogram(&state.esp)])
    }

    fn validate(&self, state: &ErgmState) -> Result<()> {
        if state.graph.n != self.n {
            return Err(Error::InvalidState(format!(
                "graph has {} nodes, model expects {}",
                state.graph.n, self.n
            )));
        }
        Ok(())
    }

    fn num_sites(&self) -> usize {
        self.dyads.len()
    }

    fn value_range(&self) -> (u8, u8) {
        (0, 1)
    }

    fn site_value(&self, state: &ErgmState, site: usize) -> u8 {
        let (i, j) = self.dyad(site);
        state.graph.adj[i * self.n + j]
    }

    fn change_stat(&self, state: &ErgmState, site: usize, value: u8) -> Result<SuffStat> {
        self.check_site(site)?;
        if value > 1 {
            return Err(Error::InvalidParameter(format!("dyad value {value} not binary")));
        }
        if self.site_value(state, site) == value {
            return Ok(SuffStat::zeros(2));
        }
        let (i, j) = self.dyad(site);
        let (d1, d2) = self.toggle_delta(state, i, j);
        Ok(SuffStat(vec![d1, d2]))
    }

    fn set_site(&self, state: &mut ErgmState, site: usize, value: u8) -> Result<()> {
        self.check_site(site)?;
        if value > 1 {
            return Err(Error::InvalidParameter(format!("dyad value {value} not binary")));
        }
        if self.site_value(state, site) != value {
            let (i, j) = self.dyad(site);
            self.toggle(state, i, j);
        }
        Ok(())
    }

    fn gibbs_sweep(&self, state: &mut ErgmState, theta: &[f64], rng: &mut RngStream) {
        for d in 0..self.dyads.len() {
            let (i, j) = self.dyad(d);
            let (d1, d2) = self.toggle_delta(state, i, j);
            let present = state.graph.adj[i * self.n + j] == 1;
            // log-odds of the edge being present given the rest
            let mut eta = theta[0] * d1 + theta[1] * d2;
            if present {
                eta = -eta;
            }
            let want = rng.uniform() < logistic(eta);
            if want != present {
                self.toggle(state, i, j);
            }
        }
    }

    fn inner_cycle(
        &self,
        kind: InnerKind,
        state: &mut ErgmState,
        theta: &[f64],
        rng: &mut RngStream,
    ) -> Result<()> {
        match kind {
            InnerKind::GibbsSweep => self.gibbs_sweep(state, theta, rng),
            InnerKind::EdgeToggle => self.edge_toggle_cycle(state, theta, rng),
            InnerKind::SwendsenWang => {
                return Err(Error::Unsupported(
                    "Swendsen-Wang applies only to the Potts model".into(),
                ))
            }
        }
        Ok(())
    }

    fn state_space_size(&self) -> Option<u64> {
        let d = self.dyads.len();
        if d < 64 {
            Some(1u64 << d)
        } else {
            None
        }
    }

    fn state_space_description(&self) -> String {
        format!("2^{} graphs", self.dyads.len())
    }

    fn state_at(&self, index: u64) -> ErgmState {
        let mut g = UndirectedGraph::empty(self.n);
        for (d, &(i, j)) in self.dyads.iter().enumerate() {
            if (index >> d) & 1 == 1 {
                let (i, j) = (i as usize, j as usize);
                g.adj[i * self.n + j] = 1;
                g.adj[j * self.n + i] = 1;
            }
        }
        ErgmState::new(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> UndirectedGraph {
        UndirectedGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn unit_weight_for_one_partner() {
        assert!((gwesp_weight(1) - 1.0).abs() < 1e-15);
        assert_eq!(gwesp_weight(0), 0.0);
    }

    #[test]
    fn empty_graph_is_zero() {
        assert_eq!(UndirectedGraph::empty(5).suffstats().0, vec![0.0, 0.0]);
    }

    #[test]
    fn triangle_stats() {
        let s = triangle().suffstats();
        assert_eq!(s[0], 3.0);
        assert!((s[1] - 3.0).abs() < 1e-12);
        let m = ErgmModel::new(3).unwrap();
        let st = ErgmState::new(triangle());
        assert_eq!(m.suffstats(&st), s);
        assert!((m.log_h(&st, &[0.5, -0.25]).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn triangle_edge_deletion() {
        let m = ErgmModel::new(3).unwrap();
        let st = ErgmState::new(triangle());
        let d = m.change_stat(&st, m.dyad_index(0, 1), 0).unwrap();
        // the path 0-2-1 left behind has no shared partners on its edges
        let after = UndirectedGraph::from_edges(3, &[(1, 2), (0, 2)]).unwrap().suffstats();
        assert_eq!(d[0], -1.0);
        assert!((d[1] - (after[1] - 3.0)).abs() < 1e-12);
        assert!((d[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn dyad_indexing_roundtrip() {
        let m = ErgmModel::new(7).unwrap();
        for d in 0..m.num_sites() {
            let (i, j) = m.dyad(d);
            assert_eq!(m.dyad_index(i, j), d);
            assert_eq!(m.dyad_index(j, i), d);
        }
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert!(UndirectedGraph::from_edges(3, &[(0, 3)]).is_err());
        assert!(UndirectedGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(UndirectedGraph::from_adjacency(2, vec![0, 1, 0, 0]).is_err());
        let m = ErgmModel::new(3).unwrap();
        let st = ErgmState::new(triangle());
        assert!(m.change_stat(&st, 3, 1).is_err());
    }
}
