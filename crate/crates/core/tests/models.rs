use proptest::prelude::*;

use intractable::inner::simulate_with;
use intractable::models::{
    ErgmModel, ErgmState, ExpFamily, InnerKind, IsingNetModel, ItemResponseMatrix, PottsLattice, PottsModel,
    UndirectedGraph,
};
use intractable::rng::RngStream;

fn potts_case() -> impl Strategy<Value = (usize, usize, u8, Vec<u8>)> {
    (1usize..6, 1usize..6, 2u8..5).prop_flat_map(|(r, c, k)| (Just(r), Just(c), Just(k), prop::collection::vec(1..=k, r * c)))
}

fn graph_case() -> impl Strategy<Value = (usize, Vec<bool>)> {
    (3usize..9).prop_flat_map(|n| (Just(n), prop::collection::vec(any::<bool>(), n * (n - 1) / 2)))
}

fn graph_from(n: usize, bits: &[bool]) -> UndirectedGraph {
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[k] {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    UndirectedGraph::from_edges(n, &edges).unwrap()
}

proptest! {
    #[test]
    fn potts_change_stat_matches_recount((r, c, k, cells) in potts_case(), site in any::<prop::sample::Index>(), v in 1u8..5) {
        let x = PottsLattice::new(r, c, k, cells).unwrap();
        let model = PottsModel::for_lattice(&x);
        let site = site.index(r * c);
        let v = 1 + (v - 1) % k;
        let delta = model.change_stat(&x, site, v).unwrap();
        let mut y = x.clone();
        model.set_site(&mut y, site, v).unwrap();
        prop_assert_eq!(delta[0], model.suffstats(&y)[0] - model.suffstats(&x)[0]);
    }

    #[test]
    fn potts_color_relabeling_is_invariant((r, c, k, cells) in potts_case(), seed in any::<u64>()) {
        let mut perm: Vec<u8> = (1..=k).collect();
        let mut rng = RngStream::new(seed, 0);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.below(i + 1));
        }
        let relabeled: Vec<u8> = cells.iter().map(|&v| perm[(v - 1) as usize]).collect();
        let x = PottsLattice::new(r, c, k, cells).unwrap();
        let y = PottsLattice::new(r, c, k, relabeled).unwrap();
        let model = PottsModel::for_lattice(&x);
        prop_assert_eq!(model.suffstats(&x), model.suffstats(&y));
    }

    #[test]
    fn ergm_change_stat_matches_recount((n, bits) in graph_case(), site in any::<prop::sample::Index>()) {
        let model = ErgmModel::new(n).unwrap();
        let x = ErgmState::new(graph_from(n, &bits));
        let site = site.index(model.num_sites());
        let v = 1 - model.site_value(&x, site);
        let delta = model.change_stat(&x, site, v).unwrap();
        let mut y = x.clone();
        model.set_site(&mut y, site, v).unwrap();
        let (before, after) = (x.graph().suffstats(), y.graph().suffstats());
        prop_assert_eq!(delta[0], after[0] - before[0]);
        prop_assert!((delta[1] - (after[1] - before[1])).abs() < 1e-9);
    }

    #[test]
    fn ergm_incremental_counts_match_rebuild((n, bits) in graph_case(), toggles in prop::collection::vec(any::<prop::sample::Index>(), 1..40)) {
        let model = ErgmModel::new(n).unwrap();
        let mut x = ErgmState::new(graph_from(n, &bits));
        for t in toggles {
            let site = t.index(model.num_sites());
            let v = 1 - model.site_value(&x, site);
            model.set_site(&mut x, site, v).unwrap();
        }
        let rebuilt = ErgmState::new(x.graph().clone());
        prop_assert_eq!(x.esp(), rebuilt.esp());
        let (a, b) = (model.suffstats(&x), rebuilt.graph().suffstats());
        prop_assert_eq!(a[0], b[0]);
        prop_assert!((a[1] - b[1]).abs() < 1e-9);
    }

    #[test]
    fn isingnet_change_stat_matches_recount(
        (n, p, entries) in (1usize..5, 2usize..5).prop_flat_map(|(n, p)| (Just(n), Just(p), prop::collection::vec(0u8..2, n * p))),
        site in any::<prop::sample::Index>(),
    ) {
        let x = ItemResponseMatrix::new(n, p, entries).unwrap();
        let model = IsingNetModel::for_data(&x);
        let site = site.index(n * p);
        let v = 1 - model.site_value(&x, site);
        let delta = model.change_stat(&x, site, v).unwrap();
        let mut y = x.clone();
        model.set_site(&mut y, site, v).unwrap();
        let (a, b) = (model.suffstats(&x), model.suffstats(&y));
        for k in 0..model.dim() {
            prop_assert_eq!(delta[k], b[k] - a[k]);
        }
    }
}

#[test]
fn ergm_at_zero_is_uniform_over_graphs() {
    let n = 12;
    let model = ErgmModel::new(n).unwrap();
    let init = ErgmState::new(UndirectedGraph::empty(n));
    let dyads = (n * (n - 1) / 2) as f64;
    let mut rng = RngStream::new(4, 0);
    let draws = 400;
    let mut total = 0.0;
    for _ in 0..draws {
        let g = simulate_with(&model, &[0.0, 0.0], InnerKind::GibbsSweep, 3, &init, &mut rng).unwrap();
        total += model.suffstats(&g)[0];
    }
    let mean = total / draws as f64;
    let se = (dyads * 0.25 / draws as f64).sqrt();
    assert!((mean - dyads / 2.0).abs() < 3.0 * se, "mean edges {mean} vs {}", dyads / 2.0);
}
