use serde::{Deserialize, Serialize};

use super::pool::{build_pool, snis_log_ratio, AuxStatPool, PoolGenerator};
use crate::error::{check_dim, Error, Result};
use crate::models::ExpFamily;
use crate::numeric::dot;
use crate::rng::RngStream;

/// Default minimum effective sample size per telescoping hop.
pub const DEFAULT_ESS_FLOOR: f64 = 50.0;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the particle nearest the centroid.
pub fn central_particle(particles: &[Vec<f64>]) -> usize {
    let p = particles[0].len();
    let mut c = vec![0.0; p];
    for th in particles {
        for k in 0..p {
            c[k] += th[k] / particles.len() as f64;
        }
    }
    (0..particles.len())
        .min_by(|&a, &b| dist2(&particles[a], &c).total_cmp(&dist2(&particles[b], &c)))
        .unwrap_or(0)
}

/// Nearest-particle telescoping order from `root`: each later particle is
/// attached to its nearest predecessor (Prim order). Returns
/// `(particle, hop source)` pairs, the root having no source.
pub fn telescoping_order(particles: &[Vec<f64>], root: usize) -> Vec<(usize, Option<usize>)> {
    let d = particles.len();
    let mut placed = vec![false; d];
    let mut best: Vec<(f64, usize)> = particles
        .iter()
        .map(|th| (dist2(th, &particles[root]), root))
        .collect();
    placed[root] = true;
    let mut order = vec![(root, None)];
    for _ in 1..d {
        let next = (0..d)
            .filter(|&i| !placed[i])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("unplaced particle remains");
        placed[next] = true;
        order.push((next, Some(best[next].1)));
        for i in 0..d {
            if !placed[i] {
                let dd = dist2(&particles[i], &particles[next]);
                if dd < best[i].0 {
                    best[i] = (dd, next);
                }
            }
        }
    }
    order
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEstimateSettings {
    pub pool_size: usize,
    pub generator: PoolGenerator,
    pub ess_floor: f64,
}

/// Log-likelihood estimates at particles, relative to a common constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEstimates {
    /// log ĉ(θ_j) − log ĉ(θ_root).
    pub log_c: Vec<f64>,
    /// θ_jᵀS(x) − log ĉ(θ_j) + constant.
    pub values: Vec<f64>,
    /// Delta-method variance of each value, accumulated along its path.
    pub noise_var: Vec<f64>,
    pub root: usize,
    /// Hop source of each particle; `None` for the root.
    pub parent: Vec<Option<usize>>,
    pub min_ess: f64,
}

/// Telescoped importance-sampling estimates of the unnormalized
/// log-likelihood at each particle.
///
/// Pools of `pool_size` draws are simulated at every hop source, each from its
/// own child stream of `rng`, starting the inner chain at the data.
pub fn estimate_loglik_at_particles<M: ExpFamily>(
    particles: &[Vec<f64>],
    model: &M,
    data: &M::State,
    data_stats: &[f64],
    settings: &ParticleEstimateSettings,
    rng: &RngStream,
) -> Result<ParticleEstimates> {
    if particles.is_empty() {
        return Err(Error::InvalidParameter("no particles supplied".into()));
    }
    for th in particles {
        check_dim(model.dim(), th.len())?;
    }
    check_dim(model.dim(), data_stats.len())?;
    let d = particles.len();
    let root = central_particle(particles);
    let order = telescoping_order(particles, root);

    let mut is_source = vec![false; d];
    for &(_, src) in &order {
        if let Some(s) = src {
            is_source[s] = true;
        }
    }
    let mut pools: Vec<Option<AuxStatPool>> = (0..d).map(|_| None).collect();
    for j in (0..d).filter(|&j| is_source[j]) {
        let mut stream = rng.child(j as u64);
        pools[j] = Some(build_pool(
            model,
            &particles[j],
            settings.pool_size,
            settings.generator,
            data,
            &mut stream,
        )?);
    }

    let mut log_c = vec![0.0; d];
    let mut noise_var = vec![0.0; d];
    let mut parent = vec![None; d];
    let mut min_ess = f64::INFINITY;
    for (hop, &(j, src)) in order.iter().enumerate() {
        let Some(s) = src else { continue };
        let pool = pools[s].as_ref().expect("pool built for every hop source");
        let (lr, ess) = snis_log_ratio(pool, &particles[j])?;
        if ess < settings.ess_floor {
            return Err(Error::EssBelowFloor {
                ess,
                floor: settings.ess_floor,
                hop,
            });
        }
        min_ess = min_ess.min(ess);
        log_c[j] = log_c[s] + lr;
        let n = pool.len() as f64;
        noise_var[j] = noise_var[s] + (1.0 / ess - 1.0 / n).max(0.0);
        parent[j] = Some(s);
    }
    let values = particles
        .iter()
        .zip(&log_c)
        .map(|(th, lc)| dot(th, data_stats) - lc)
        .collect();
    Ok(ParticleEstimates {
        log_c,
        values,
        noise_var,
        root,
        parent,
        min_ess: if min_ess.is_finite() { min_ess } else { settings.pool_size as f64 },
    })
}

/// Farthest-point thinning: start at the point nearest the mean, then
/// repeatedly add the point farthest from those already chosen.
pub fn farthest_point_thinning(points: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    if points.is_empty() || d == 0 {
        return Vec::new();
    }
    let first = central_particle(points);
    let mut chosen = vec![points[first].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while chosen.len() < d.min(points.len()) {
        let (idx, far) = nearest
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if far <= 0.0 {
            break;
        }
        chosen.push(points[idx].clone());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(dist2(p, &points[idx]));
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prim_order_on_a_line() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0, 4.0].iter().map(|&x| vec![x]).collect();
        let order = telescoping_order(&pts, 2);
        assert_eq!(order[0], (2, None));
        for &(j, src) in &order[1..] {
            let s = src.unwrap();
            assert_eq!((j as i64 - s as i64).abs(), 1);
        }
    }

    #[test]
    fn thinning_spreads_points() {
        let pts: Vec<Vec<f64>> = (0..101).map(|i| vec![i as f64 / 100.0]).collect();
        let mut chosen: Vec<f64> = farthest_point_thinning(&pts, 3).iter().map(|p| p[0]).collect();
        chosen.sort_by(f64::total_cmp);
        assert_eq!(chosen, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn thinning_stops_at_duplicates() {
        let pts = vec![vec![1.0]; 10];
        assert_eq!(farthest_point_thinning(&pts, 5).len(), 1);
    }
}
