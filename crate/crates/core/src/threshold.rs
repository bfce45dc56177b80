//! Thresholding rules used as baselines.

use crate::error::{Error, Result};
use crate::shrink::NoiseModel;
use crate::special::norm_sf;

pub fn soft_threshold(d: f64, lambda: f64) -> f64 {
    let excess = d.abs() - lambda;
    if excess > 0.0 {
        excess.copysign(d)
    } else {
        0.0
    }
}

/// Keeps `d` when `|d| > lambda`.
pub fn hard_threshold(d: f64, lambda: f64) -> f64 {
    if d.abs() > lambda {
        d
    } else {
        0.0
    }
}

/// `σ sqrt(2 ln n)`.
pub fn universal_threshold(noise: NoiseModel, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Argument(format!(
            "universal threshold needs n >= 2, got {n}"
        )));
    }
    Ok(noise.sigma() * (2.0 * (n as f64).ln()).sqrt())
}

/// Stein-unbiased-risk threshold for soft thresholding one block of
/// coefficients.
///
/// Works on `x = d / σ` and minimises
/// `n − 2 #{|x| ≤ t} + Σ min(|x|, t)²` over the candidates `|x_k| ≤ λU`
/// together with `λU = sqrt(2 ln n)`; ties go to the smaller threshold.
/// When the block looks like pure noise (`mean(x²) ≤ 1 + log₂(n)^1.5 / sqrt(n)`)
/// the universal threshold is returned directly. The result is in `d` units.
pub fn sure_threshold(coeffs: &[f64], noise: NoiseModel) -> Result<f64> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::Argument("SURE threshold of an empty block".into()));
    }
    let sigma = noise.sigma();
    let universal = (2.0 * (n as f64).ln()).sqrt();
    let nf = n as f64;
    let mut x: Vec<f64> = coeffs.iter().map(|d| (d / sigma).abs()).collect();
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / nf;
    let sparse_bound = 1.0 + nf.log2().powf(1.5) / nf.sqrt();
    if mean_sq <= sparse_bound {
        return Ok(sigma * universal);
    }

    x.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    // With K = #{x ≤ t}: SURE(t) = n − 2K + Σ_{i<K} x_i² + (n − K) t².
    let risk = |t: f64, k: usize| nf - 2.0 * k as f64 + prefix[k] + (n - k) as f64 * t * t;

    let (mut best_t, mut best) = (
        universal,
        risk(universal, x.partition_point(|&v| v <= universal)),
    );
    let mut i = 0;
    while i < n && x[i] <= universal {
        let t = x[i];
        let mut k = i + 1;
        while k < n && x[k] == t {
            k += 1;
        }
        let r = risk(t, k);
        if r < best || (r == best && t < best_t) {
            best = r;
            best_t = t;
        }
        i = k;
    }
    Ok(sigma * best_t)
}

/// Benjamini–Hochberg threshold at level `q` on two-sided normal p-values.
///
/// Returns the magnitude `|d|` of the last coefficient admitted by the
/// step-up rule, or `+inf` when none is admitted.
pub fn fdr_threshold(coeffs: &[f64], noise: NoiseModel, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Argument(format!(
            "FDR level q={q} must lie in (0, 1)"
        )));
    }
    if coeffs.is_empty() {
        return Err(Error::Argument("FDR threshold of an empty set".into()));
    }
    let mut mags: Vec<f64> = coeffs.iter().map(|d| d.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let n = mags.len() as f64;
    let mut lambda = f64::INFINITY;
    for (i, &m) in mags.iter().enumerate() {
        let p = 2.0 * norm_sf(m / noise.sigma());
        if p <= q * (i + 1) as f64 / n {
            lambda = m;
        }
    }
    Ok(lambda)
}
