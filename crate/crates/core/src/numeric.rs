//! Small numerical helpers shared by the samplers and diagnostics.

use nalgebra::{DMatrix, DVector};

/// log(sum(exp(xs))), stable for large magnitudes. Returns -inf for an empty
/// slice or when every term is -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linear-interpolated empirical quantile (type 7, as in R's default).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_against_cdf(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(sample);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Cholesky factor with escalating diagonal jitter. Returns the lower factor
/// and the jitter that was needed.
pub fn cholesky_jittered(
    m: &DMatrix<f64>,
    max_jitter: f64,
) -> Option<(nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>, f64)> {
    if let Some(c) = m.clone().cholesky() {
        return Some((c, 0.0));
    }
    let scale = m.diagonal().iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    let mut jitter = 1e-12 * scale;
    while jitter <= max_jitter * scale {
        let mut mj = m.clone();
        for i in 0..mj.nrows() {
            mj[(i, i)] += jitter;
        }
        if let Some(c) = mj.cholesky() {
            return Some((c, jitter));
        }
        jitter *= 10.0;
    }
    None
}

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite matrix.
/// Returns the inverse and whether any eigenvalue had to be dropped.
pub fn pinv_symmetric(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tol = max * m.nrows() as f64 * f64::EPSILON * 16.0;
    let mut dropped = false;
    let inv_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| {
            if l > tol {
                1.0 / l
            } else {
                dropped = true;
                0.0
            }
        }),
    );
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&inv_vals) * v.transpose(), dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive() {
        let xs = [0.1, -2.0, 3.5];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn quantile_type7() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert!((quantile(&s, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = [0.3, 0.1, 0.7];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert!((ks_two_sample(&[0.0], &[1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinv_of_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (p, dropped) = pinv_symmetric(&m);
        assert!(dropped);
        // pinv of [[1,1],[1,1]] is [[.25,.25],[.25,.25]]
        for x in p.iter() {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }
}
