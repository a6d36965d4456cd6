use intractable::diagnostics::{
    acd, acd_threshold, batch_means_cov, curvature_vector, score_terms_from_moments, AcdSettings, SeriesKind,
    DEFAULT_R_CAP,
};
use intractable::emulation::{snis_moments, AuxStatPool, PoolGenerator};
use intractable::inner::ExactSampler;
use intractable::models::{Enumeration, ExpFamily, InnerKind, PottsLattice, PottsModel};
use intractable::numeric::{mean, variance};
use intractable::outer::{run_chain, ChainSettings, DmhKernel, MhSampler, Prior, Proposal, TraceMeta};
use intractable::rng::RngStream;

fn testbed() -> (PottsModel, PottsLattice, Prior) {
    let data = PottsLattice::new(2, 2, 2, vec![1, 1, 1, 2]).unwrap();
    (PottsModel::for_lattice(&data), data, Prior::potts_default())
}

/// The testbed lattice under a smooth N(1, 1) prior, whose posterior
/// vanishes at infinity as the curvature identity requires.
fn smooth_testbed() -> (PottsModel, PottsLattice, Prior) {
    let (model, data, _) = testbed();
    (model, data, Prior::normal(vec![1.0], vec![1.0]).unwrap())
}

fn dmh_thetas(prior: &Prior, m: usize, iterations: usize, seed: u64) -> Vec<Vec<f64>> {
    let (model, data, _) = testbed();
    let stats = model.suffstats(&data);
    let kernel = DmhKernel::new(&model, &data, &stats, prior, InnerKind::GibbsSweep, m).unwrap();
    let mut s = MhSampler {
        kernel,
        proposal: Proposal::adaptive(&[0.5], iterations / 10).unwrap(),
    };
    let trace = run_chain(&mut s, &[1.0], &ChainSettings::new(iterations, seed), TraceMeta::default(), None).unwrap();
    trace.retained_thetas().iter().map(|t| t.to_vec()).collect()
}

fn settings(pool_size: usize, replications: usize, seed: u64) -> AcdSettings {
    AcdSettings {
        pool_size,
        replications,
        generator: PoolGenerator {
            inner: InnerKind::GibbsSweep,
            burn_in: 100,
            spacing: 1,
        },
        kind: SeriesKind::Markov,
        batch: None,
        r_cap: DEFAULT_R_CAP,
        seed,
        stream: 0,
    }
}

#[test]
fn thresholds() {
    assert!((acd_threshold(1) - 6.63).abs() < 0.005);
    assert!((acd_threshold(3) - 11.34).abs() < 0.005);
}

#[test]
fn batch_means_white_noise() {
    let mut rng = RngStream::new(1, 0);
    let x: Vec<f64> = (0..100_000).map(|_| rng.normal()).collect();
    let v = batch_means_cov(&x, 1, None).unwrap()[0];
    assert!((v - 1.0).abs() < 0.15, "{v}");
}

#[test]
fn batch_means_constant_is_zero() {
    assert_eq!(batch_means_cov(&[2.5; 400], 1, None).unwrap(), vec![0.0]);
    assert!(batch_means_cov(&[1.0; 3], 1, Some(2)).is_err());
}

#[test]
fn batch_means_ar1_long_run_variance() {
    let rho = 0.5;
    let mut rng = RngStream::new(2, 0);
    let mut x = Vec::with_capacity(1_000_000);
    let mut v = rng.normal() / (1.0f64 - rho * rho).sqrt();
    for _ in 0..1_000_000 {
        v = rho * v + rng.normal();
        x.push(v);
    }
    let marginal = 1.0 / (1.0 - rho * rho);
    let target = marginal * (1.0 + rho) / (1.0 - rho);
    assert!((target / marginal - 3.0).abs() < 1e-12);
    let est = batch_means_cov(&x, 1, None).unwrap()[0];
    assert!((est / target - 1.0).abs() < 0.2, "{est} vs {target}");
}

#[test]
fn standard_normal_stand_in_has_centered_curvature() {
    let flat = Prior::uniform(vec![-1e9], vec![1e9]).unwrap();
    let mut rng = RngStream::new(3, 0);
    let n = 100_000;
    let d: Vec<f64> = (0..n)
        .map(|_| {
            let th = rng.normal();
            let t = score_terms_from_moments(&[0.0], &flat, &[th], &[th], &[1.0]);
            let d = curvature_vector(&t)[0];
            assert!((d - (th * th - 1.0)).abs() < 1e-12);
            d
        })
        .collect();
    let se = (variance(&d) / n as f64).sqrt();
    assert!(mean(&d).abs() < 3.0 * se, "mean {} se {se}", mean(&d));
}

#[test]
fn snis_moments_match_enumeration() {
    let (model, _, _) = testbed();
    let exact = ExactSampler::new(&model, 1 << 20).unwrap();
    let en = Enumeration::new(&model, 1 << 20).unwrap();
    let (reference, target) = (1.0, 1.3);
    let (mu, cov) = en.moments(&[target]).unwrap();
    let mut rng = RngStream::new(5, 0);
    let reps = 20;
    let (mut means, mut vars) = (Vec::new(), Vec::new());
    for _ in 0..reps {
        let mut pool = AuxStatPool::new(vec![reference]);
        for _ in 0..10_000 {
            pool.push_unbounded(&exact.sample_stats(&[reference], &mut rng)).unwrap();
        }
        let m = snis_moments(&pool, &[target]).unwrap();
        means.push(m.mean[0]);
        vars.push(m.cov[0]);
    }
    let se_mu = (variance(&means) / reps as f64).sqrt();
    let se_var = (variance(&vars) / reps as f64).sqrt();
    assert!((mean(&means) - mu[0]).abs() < 3.0 * se_mu, "{} vs {}", mean(&means), mu[0]);
    assert!((mean(&vars) - cov[0][0]).abs() < 3.0 * se_var, "{} vs {}", mean(&vars), cov[0][0]);
}

#[test]
fn acd_is_deterministic() {
    let (model, data, prior) = smooth_testbed();
    let thetas = dmh_thetas(&prior, 1, 5000, 6);
    let refs: Vec<&[f64]> = thetas.iter().map(|t| t.as_slice()).collect();
    let a = acd(&refs, &model, &data, &prior, &settings(1000, 4, 8)).unwrap();
    let b = acd(&refs, &model, &data, &prior, &settings(1000, 4, 8)).unwrap();
    assert_eq!(a, b);
    let c = acd(&refs, &model, &data, &prior, &settings(1000, 4, 9)).unwrap();
    assert_ne!(a.statistics, c.statistics);
}

#[test]
fn doubling_pool_halves_variance() {
    let (model, data, prior) = smooth_testbed();
    let thetas = dmh_thetas(&prior, 1, 20_000, 7);
    let refs: Vec<&[f64]> = thetas.iter().map(|t| t.as_slice()).collect();
    let var_at = |n: usize| variance(&acd(&refs, &model, &data, &prior, &settings(n, 400, 10)).unwrap().statistics);
    let ratio = var_at(2000) / var_at(4000);
    assert!((ratio / 2.0 - 1.0).abs() < 0.3, "variance ratio {ratio}");
}

#[test]
fn acd_discriminates_dmh_inner_length() {
    let (model, data, prior) = smooth_testbed();
    let mut means = Vec::new();
    let mut passes = Vec::new();
    for (k, m) in [1, 5, 50, 500].into_iter().enumerate() {
        let thetas = dmh_thetas(&prior, m, 100_000, 20 + k as u64);
        let refs: Vec<&[f64]> = thetas.iter().map(|t| t.as_slice()).collect();
        let report = acd(&refs, &model, &data, &prior, &settings(10_000, 30, 11)).unwrap();
        means.push(report.mean);
        passes.push(report.pass);
    }
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    assert!(!passes[0] && passes[3], "{means:?} {passes:?}");
}
