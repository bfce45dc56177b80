//! Posterior-mean shrinkage under a point mass plus bounded spread prior.
//!
//! For `d | θ ~ N(θ, σ²)` and prior `α δ₀ + (1 − α) g`, the posterior mean is
//!
//! ```text
//!            (1 − α) ∫ (σu + d) g(σu + d) φ(u) du
//! δ(d) = ------------------------------------------------
//!         α φ(d/σ)/σ + (1 − α) ∫ g(σu + d) φ(u) du
//! ```
//!
//! with both integrals over `u ∈ [(−m − d)/σ, (m − d)/σ]`. Every term is
//! accumulated as a logarithm so that neither `φ(d/σ)` nor large powers in
//! `g` underflow before the ratio is formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::{BetaPrior, BickelPrior, Prior, SpreadDensity, TriangularPrior, UniformPrior};
use crate::quadrature::{for_each_node, gauss_legendre, panelize, Grade};
use crate::special::{ln_add_exp, norm_interval, norm_ln_pdf, norm_pdf, LogSum, SignedLogSum};

/// Gaussian noise level of the empirical coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!(
                "noise sigma={sigma} must be positive and finite"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl TryFrom<f64> for NoiseModel {
    type Error = Error;

    fn try_from(sigma: f64) -> Result<Self> {
        NoiseModel::new(sigma)
    }
}

impl From<NoiseModel> for f64 {
    fn from(n: NoiseModel) -> f64 {
        n.sigma
    }
}

/// Composite Gauss–Legendre settings for the posterior-mean integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Nodes per panel on the first pass; the check pass doubles it.
    pub order: usize,
    /// Upper bound on panel width in standardized (`u`) units.
    pub max_panel_width: f64,
    /// Half-width of the retained `u` window around the Gaussian peak.
    pub window: f64,
    /// Allowed disagreement between the two passes, relative to `max(|δ|, 1e-6 m)`.
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            order: 32,
            max_panel_width: 4.0,
            window: 40.0,
            rel_tol: 1e-9,
        }
    }
}

/// Posterior mean `E[θ | d]` by log-space quadrature, with default settings.
pub fn posterior_mean_shrink(d: f64, prior: &impl SpreadDensity, noise: NoiseModel) -> Result<f64> {
    posterior_mean_shrink_with(d, prior, noise, &QuadratureOptions::default())
}

pub fn posterior_mean_shrink_with(
    d: f64,
    prior: &impl SpreadDensity,
    noise: NoiseModel,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if !d.is_finite() {
        return Err(Error::Argument(format!("coefficient {d} is not finite")));
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    // δ is odd in d for a symmetric prior; evaluate on d > 0 only.
    let x = d.abs();
    let coarse = posterior_mean_once(x, prior, noise.sigma, opts.order, opts);
    let fine = posterior_mean_once(x, prior, noise.sigma, 2 * opts.order, opts);
    let scale = fine.abs().max(1e-6 * prior.half_width());
    let residual = (fine - coarse).abs() / scale;
    if !(residual <= opts.rel_tol) || !fine.is_finite() {
        return Err(Error::numerical(
            format!("posterior mean at d={d}"),
            residual,
        ));
    }
    Ok(fine.copysign(d))
}

fn posterior_mean_once(
    d: f64,
    prior: &impl SpreadDensity,
    sigma: f64,
    order: usize,
    opts: &QuadratureOptions,
) -> f64 {
    let m = prior.half_width();
    let alpha = prior.alpha();
    // Integrate in θ so prior edges and kinks are exact even when |d| >> m.
    let peak = d.clamp(-m, m);
    let win_lo = (-m).max(peak - opts.window * sigma);
    let win_hi = m.min(peak + opts.window * sigma);
    let width = (opts.max_panel_width * sigma).min(2.0 * scale_hint(prior));
    // Grade toward an edge that is singular, or that the Gaussian peak sits
    // against: there the integrand is a boundary layer of width ~σ/|u*|.
    let singular = prior.singular_edges();
    let grade = |edge: f64, window_edge: f64| {
        let u_edge = (edge - d) / sigma;
        if window_edge != edge {
            Grade::None
        } else if singular {
            Grade::Singular
        } else if peak == edge && u_edge.abs() > 1.0 {
            Grade::Layer(2.0 * sigma / u_edge.abs())
        } else {
            Grade::None
        }
    };
    let panels = panelize(
        win_lo,
        win_hi,
        &prior.kinks(),
        width,
        (grade(-m, win_lo), grade(m, win_hi)),
    );

    let rule = gauss_legendre(order);
    let ln_sigma = sigma.ln();
    let mut num = SignedLogSum::new();
    let mut den = LogSum::new();
    for_each_node(&panels, &rule, |theta, w| {
        let lg = prior.ln_density(theta);
        if !lg.is_finite() {
            return;
        }
        let term = w.ln() + norm_ln_pdf((theta - d) / sigma) - ln_sigma + lg;
        den.add(term);
        if theta != 0.0 {
            num.add(theta > 0.0, term + theta.abs().ln());
        }
    });

    let ln_spread_weight = (-alpha).ln_1p();
    let ln_point = if alpha > 0.0 {
        alpha.ln() + norm_ln_pdf(d / sigma) - sigma.ln()
    } else {
        f64::NEG_INFINITY
    };
    let ln_den = ln_add_exp(ln_point, ln_spread_weight + den.ln());
    let (sign, ln_num) = num.value();
    if sign == 0.0 {
        return 0.0;
    }
    sign * (ln_spread_weight + ln_num - ln_den).exp()
}

/// Rough width of the spread density's bulk, used to size panels.
///
/// A midpoint sweep of the second moment is enough here; beta priors with a
/// large shape narrow like `m / sqrt(2a + 1)` and need the finer panels.
fn scale_hint(prior: &impl SpreadDensity) -> f64 {
    let m = prior.half_width();
    let steps = 64;
    let (mut mass, mut second) = (0.0, 0.0);
    for i in 0..steps {
        let x = -m + (i as f64 + 0.5) * 2.0 * m / steps as f64;
        let g = prior.density(x);
        if g.is_finite() {
            mass += g;
            second += g * x * x;
        }
    }
    let sd = if mass > 0.0 {
        (second / mass).sqrt()
    } else {
        m
    };
    sd.clamp(1e-3 * m, m)
}

/// Posterior mean under the triangular prior from its closed form in `φ`
/// and `Φ`, falling back to log-space quadrature when the closed form is
/// ill-conditioned or underflows.
pub fn triangular_shrink_closed(d: f64, prior: &TriangularPrior, noise: NoiseModel) -> Result<f64> {
    match triangular_closed_form(d, prior, noise) {
        Some(v) => Ok(v),
        None => posterior_mean_shrink(d, prior, noise),
    }
}

/// The closed form alone; `None` where its conditioning check fails.
pub fn triangular_closed_form(d: f64, prior: &TriangularPrior, noise: NoiseModel) -> Option<f64> {
    const MAX_CONDITION: f64 = 4.0e4;
    if !d.is_finite() {
        return None;
    }
    if d == 0.0 {
        return Some(0.0);
    }
    let x = d.abs();
    let sigma = noise.sigma();
    let m = prior.half_width();
    let alpha = prior.alpha();

    // m² g(θ) = m + θ on [−m, 0] and m − θ on [0, m]; the numerator adds a factor θ.
    let pieces = [(-m, 0.0, 1.0), (0.0, m, -1.0)];
    let (mut den, mut den_abs, mut num, mut num_abs) = (0.0, 0.0, 0.0, 0.0);
    for (a, b, slope) in pieces {
        let (ul, uh) = ((a - x) / sigma, (b - x) / sigma);
        let (v, s) = gaussian_poly_integral(shift_poly([m, slope, 0.0], x, sigma), ul, uh);
        den += v;
        den_abs += s;
        let (v, s) = gaussian_poly_integral(shift_poly([0.0, m, slope], x, sigma), ul, uh);
        num += v;
        num_abs += s;
    }
    let m2 = m * m;
    let spread_den = den / m2;
    let point = alpha * norm_pdf(x / sigma) / sigma;
    let total = point + (1.0 - alpha) * spread_den;
    let well_conditioned = den > 0.0
        && num > 0.0
        && den_abs / den < MAX_CONDITION
        && num_abs / num < MAX_CONDITION
        && total > 1e-280;
    if !well_conditioned {
        return None;
    }
    let value = (1.0 - alpha) * (num / m2) / total;
    value.is_finite().then(|| value.copysign(d))
}

/// Coefficients of `p(d + σu)` in powers of `u` for `p(θ) = c0 + c1 θ + c2 θ²`.
fn shift_poly(c: [f64; 3], d: f64, sigma: f64) -> [f64; 3] {
    [
        c[0] + c[1] * d + c[2] * d * d,
        (c[1] + 2.0 * c[2] * d) * sigma,
        c[2] * sigma * sigma,
    ]
}

/// `∫_{ul}^{uh} (b0 + b1 u + b2 u²) φ(u) du` and the sum of absolute term sizes.
fn gaussian_poly_integral(b: [f64; 3], ul: f64, uh: f64) -> (f64, f64) {
    let mass = norm_interval(ul, uh);
    let (pl, ph) = (norm_pdf(ul), norm_pdf(uh));
    let terms = [
        b[0] * mass,
        b[2] * mass,
        b[1] * pl,
        -b[1] * ph,
        b[2] * ul * pl,
        -b[2] * uh * ph,
    ];
    (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
}

/// A coefficient-wise estimator with all of its parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkageRule {
    BayesBeta(BetaPrior),
    BayesTriangularClosed(TriangularPrior),
    BayesTriangularQuad(TriangularPrior),
    BayesBickel(BickelPrior),
    BayesUniform(UniformPrior),
    Soft { threshold: f64 },
    Hard { threshold: f64 },
    Identity,
}

impl ShrinkageRule {
    pub fn apply(&self, d: f64, noise: NoiseModel) -> Result<f64> {
        match self {
            ShrinkageRule::BayesBeta(p) => posterior_mean_shrink(d, p, noise),
            ShrinkageRule::BayesTriangularClosed(p) => triangular_shrink_closed(d, p, noise),
            ShrinkageRule::BayesTriangularQuad(p) => posterior_mean_shrink(d, p, noise),
            ShrinkageRule::BayesBickel(p) => posterior_mean_shrink(d, p, noise),
            ShrinkageRule::BayesUniform(p) => posterior_mean_shrink(d, p, noise),
            ShrinkageRule::Soft { threshold } => {
                Ok(crate::threshold::soft_threshold(d, *threshold))
            }
            ShrinkageRule::Hard { threshold } => {
                Ok(crate::threshold::hard_threshold(d, *threshold))
            }
            ShrinkageRule::Identity => Ok(d),
        }
    }

    /// The prior behind a Bayesian rule.
    pub fn prior(&self) -> Option<Prior> {
        match *self {
            ShrinkageRule::BayesBeta(p) => Some(Prior::Beta(p)),
            ShrinkageRule::BayesTriangularClosed(p) | ShrinkageRule::BayesTriangularQuad(p) => {
                Some(Prior::Triangular(p))
            }
            ShrinkageRule::BayesBickel(p) => Some(Prior::Bickel(p)),
            ShrinkageRule::BayesUniform(p) => Some(Prior::Uniform(p)),
            _ => None,
        }
    }

    /// Points in `d` where the rule is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            ShrinkageRule::Soft { threshold } | ShrinkageRule::Hard { threshold } => {
                if threshold > 0.0 && threshold.is_finite() {
                    vec![-threshold, threshold]
                } else if threshold == 0.0 {
                    vec![0.0]
                } else {
                    Vec::new()
                }
            }
            _ => Vec::new(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ShrinkageRule::BayesTriangularClosed(p) => {
                format!("{} [closed form]", Prior::Triangular(*p).describe())
            }
            ShrinkageRule::BayesTriangularQuad(p) => {
                format!("{} [quadrature]", Prior::Triangular(*p).describe())
            }
            ShrinkageRule::Soft { threshold } => format!("soft(lambda={threshold})"),
            ShrinkageRule::Hard { threshold } => format!("hard(lambda={threshold})"),
            ShrinkageRule::Identity => "identity".to_string(),
            other => other.prior().map(|p| p.describe()).unwrap_or_default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> NoiseModel {
        NoiseModel::new(1.0).unwrap()
    }

    fn beta(alpha: f64, a: f64, m: f64) -> BetaPrior {
        BetaPrior::new(alpha, a, m).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(
            posterior_mean_shrink(0.0, &beta(0.9, 2.0, 3.0), unit()).unwrap(),
            0.0
        );
        let t = TriangularPrior::new(0.9, 3.0).unwrap();
        assert_eq!(triangular_shrink_closed(0.0, &t, unit()).unwrap(), 0.0);
    }

    #[test]
    fn approaches_the_bound_monotonically() {
        for a in [1.0, 2.0, 5.0, 10.0] {
            let p = beta(0.9, a, 3.0);
            let values: Vec<f64> = (1..=60)
                .map(|i| posterior_mean_shrink(0.5 * i as f64, &p, unit()).unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "a={a}");
            let last = *values.last().unwrap();
            assert!(last < 3.0 && last > 2.5, "a={a} last={last}");
        }
    }

    #[test]
    fn heavy_point_mass_kills_moderate_coefficients() {
        let p = beta(1.0 - 1e-12, 2.0, 3.0);
        for d in [0.5, 1.0, 2.0, 3.0] {
            assert!(posterior_mean_shrink(d, &p, unit()).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn point_mass_free_prior_is_accepted() {
        let v = posterior_mean_shrink(1.0, &beta(0.0, 2.0, 3.0), unit()).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn beta_shape_one_is_uniform() {
        let b = beta(0.8, 1.0, 2.5);
        let u = UniformPrior::new(0.8, 2.5).unwrap();
        for i in -40..=40 {
            let d = 0.2 * i as f64;
            let (x, y) = (
                posterior_mean_shrink(d, &b, unit()).unwrap(),
                posterior_mean_shrink(d, &u, unit()).unwrap(),
            );
            assert!((x - y).abs() < 1e-10, "d={d}");
        }
    }

    #[test]
    fn larger_shape_shrinks_more_near_origin() {
        let (p1, p5) = (beta(0.9, 1.0, 3.0), beta(0.9, 5.0, 3.0));
        for i in 1..=30 {
            let d = 0.1 * i as f64;
            let (s1, s5) = (
                posterior_mean_shrink(d, &p1, unit()).unwrap(),
                posterior_mean_shrink(d, &p5, unit()).unwrap(),
            );
            assert!(s5 <= s1 + 1e-8, "d={d}: {s5} > {s1}");
        }
    }

    #[test]
    fn far_tail_stays_finite_and_bounded() {
        let priors = [
            Prior::Beta(beta(0.9, 10.0, 3.0)),
            Prior::Beta(beta(0.9, 0.7, 3.0)),
            Prior::Triangular(TriangularPrior::new(0.9, 3.0).unwrap()),
            Prior::Bickel(BickelPrior::new(0.9, 3.0).unwrap()),
            Prior::Uniform(UniformPrior::new(0.9, 3.0).unwrap()),
        ];
        for p in priors {
            for d in [50.0, -50.0, 53.0, 400.0] {
                let v = posterior_mean_shrink(d, &p, unit()).unwrap();
                assert!(
                    v.is_finite() && v.abs() < 3.0 && v.signum() == d.signum(),
                    "{} d={d} v={v}",
                    p.describe()
                );
            }
        }
    }

    #[test]
    fn closed_form_is_used_in_the_bulk() {
        let t = TriangularPrior::new(0.9, 3.0).unwrap();
        for i in 0..=40 {
            let d = -4.0 + 0.2 * i as f64;
            assert!(triangular_closed_form(d, &t, unit()).is_some(), "d={d}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for sigma in [0.5, 1.0, 2.0] {
            let noise = NoiseModel::new(sigma).unwrap();
            for alpha in [0.0, 0.6, 0.99] {
                let t = TriangularPrior::new(alpha, 3.0).unwrap();
                for i in 0..=100 {
                    let d = -15.0 + 0.3 * i as f64;
                    let c = triangular_shrink_closed(d, &t, noise).unwrap();
                    let q = posterior_mean_shrink(d, &t, noise).unwrap();
                    assert!(
                        (c - q).abs() < 1e-8,
                        "sigma={sigma} alpha={alpha} d={d}: {c} vs {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn rule_variants_dispatch() {
        let n = unit();
        assert_eq!(
            ShrinkageRule::Soft { threshold: 3.0 }
                .apply(5.0, n)
                .unwrap(),
            2.0
        );
        assert_eq!(
            ShrinkageRule::Hard { threshold: 3.0 }
                .apply(2.0, n)
                .unwrap(),
            0.0
        );
        assert_eq!(ShrinkageRule::Identity.apply(-1.25, n).unwrap(), -1.25);
        assert_eq!(
            ShrinkageRule::Soft { threshold: 1.5 }.kinks(),
            vec![-1.5, 1.5]
        );
        assert!(ShrinkageRule::BayesBeta(beta(0.5, 2.0, 1.0))
            .prior()
            .is_some());
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(posterior_mean_shrink(f64::NAN, &beta(0.5, 2.0, 1.0), unit()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn odd_and_bounded(d in -60.0f64..60.0, a in 0.6f64..12.0, alpha in 0.0f64..0.999, m in 0.2f64..8.0, sigma in 0.1f64..4.0) {
            let noise = NoiseModel::new(sigma).unwrap();
            let priors = [
                Prior::Beta(beta(alpha, a, m)),
                Prior::Triangular(TriangularPrior::new(alpha, m).unwrap()),
                Prior::Bickel(BickelPrior::new(alpha, m).unwrap()),
            ];
            for p in priors {
                let pos = posterior_mean_shrink(d, &p, noise).unwrap();
                let neg = posterior_mean_shrink(-d, &p, noise).unwrap();
                prop_assert!((pos + neg).abs() <= 1e-10);
                prop_assert!(pos.abs() < m);
            }
        }
    }
}
