//! Point-mass-at-zero mixtures with bounded symmetric spread densities.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, panelize, Grade};
use crate::special::ln_beta;

/// Spread part `g` of the prior `α δ₀ + (1 − α) g` on `[−m, m]`.
pub trait SpreadDensity: Sync {
    /// Point-mass weight `α`.
    fn alpha(&self) -> f64;

    /// Support half-width `m`.
    fn half_width(&self) -> f64;

    /// `ln g(x)`; `-inf` outside the support.
    fn ln_density(&self, x: f64) -> f64;

    fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// Interior points where `g` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Whether `g` has a non-analytic factor at `±m` that needs graded panels.
    fn singular_edges(&self) -> bool {
        false
    }

    /// `∫ g` over the support; should be one.
    fn spread_mass(&self) -> f64 {
        let m = self.half_width();
        let edges = if self.singular_edges() {
            Grade::Singular
        } else {
            Grade::None
        };
        let panels = panelize(-m, m, &self.kinks(), m / 2.0, (edges, edges));
        integrate_panels(&panels, 24, |x| self.density(x))
    }
}

fn check_common(alpha: f64, m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Argument(format!(
            "point-mass weight alpha={alpha} must lie in [0, 1)"
        )));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Argument(format!(
            "half-width m={m} must be positive and finite"
        )));
    }
    Ok(())
}

/// Symmetric beta density rescaled to `[−m, m]` with shape `a` on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaParams", into = "BetaParams")]
pub struct BetaPrior {
    alpha: f64,
    a: f64,
    m: f64,
    ln_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct BetaParams {
    alpha: f64,
    a: f64,
    m: f64,
}

impl TryFrom<BetaParams> for BetaPrior {
    type Error = Error;

    fn try_from(p: BetaParams) -> Result<Self> {
        BetaPrior::new(p.alpha, p.a, p.m)
    }
}

impl From<BetaPrior> for BetaParams {
    fn from(p: BetaPrior) -> Self {
        BetaParams {
            alpha: p.alpha,
            a: p.a,
            m: p.m,
        }
    }
}

impl BetaPrior {
    pub fn new(alpha: f64, a: f64, m: f64) -> Result<Self> {
        check_common(alpha, m)?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Argument(format!(
                "beta shape a={a} must be positive and finite"
            )));
        }
        let ln_norm = -(2.0 * a - 1.0) * (2.0 * m).ln() - ln_beta(a, a);
        let prior = Self {
            alpha,
            a,
            m,
            ln_norm,
        };
        #[cfg(debug_assertions)]
        if a >= 0.5 {
            let mass = prior.spread_mass();
            debug_assert!((mass - 1.0).abs() < 1e-8, "beta(a={a}, m={m}) mass {mass}");
        }
        Ok(prior)
    }

    pub fn shape(&self) -> f64 {
        self.a
    }
}

impl SpreadDensity for BetaPrior {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn half_width(&self) -> f64 {
        self.m
    }

    fn ln_density(&self, x: f64) -> f64 {
        if !(x.abs() <= self.m) {
            return f64::NEG_INFINITY;
        }
        if self.a == 1.0 {
            return self.ln_norm;
        }
        // (m - x)(m + x) keeps relative accuracy near the edges; the edge
        // points themselves are dropped so a < 1 never yields +inf.
        let q = (self.m - x) * (self.m + x);
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.a - 1.0) * q.ln() + self.ln_norm
    }

    fn singular_edges(&self) -> bool {
        self.a < 1.0 || self.a.fract() != 0.0
    }
}

/// Triangular density on `[−m, m]` with peak `1/m` at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularPrior {
    alpha: f64,
    m: f64,
}

impl TriangularPrior {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        check_common(alpha, m)?;
        Ok(Self { alpha, m })
    }
}

impl SpreadDensity for TriangularPrior {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn half_width(&self) -> f64 {
        self.m
    }

    fn ln_density(&self, x: f64) -> f64 {
        if !(x.abs() <= self.m) {
            return f64::NEG_INFINITY;
        }
        (self.m - x.abs()).ln() - 2.0 * self.m.ln()
    }

    fn kinks(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// `(1/m) cos²(πθ / 2m)` on `[−m, m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BickelPrior {
    alpha: f64,
    m: f64,
}

impl BickelPrior {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        check_common(alpha, m)?;
        Ok(Self { alpha, m })
    }
}

impl SpreadDensity for BickelPrior {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn half_width(&self) -> f64 {
        self.m
    }

    fn ln_density(&self, x: f64) -> f64 {
        if !(x.abs() <= self.m) {
            return f64::NEG_INFINITY;
        }
        2.0 * (PI * x / (2.0 * self.m)).cos().abs().ln() - self.m.ln()
    }
}

/// Uniform density `1/(2m)` on `[−m, m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    alpha: f64,
    m: f64,
}

impl UniformPrior {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        check_common(alpha, m)?;
        Ok(Self { alpha, m })
    }
}

impl SpreadDensity for UniformPrior {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn half_width(&self) -> f64 {
        self.m
    }

    fn ln_density(&self, x: f64) -> f64 {
        if !(x.abs() <= self.m) {
            return f64::NEG_INFINITY;
        }
        -(2.0 * self.m).ln()
    }
}

/// Any of the supported spread families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Prior {
    Beta(BetaPrior),
    Triangular(TriangularPrior),
    Bickel(BickelPrior),
    Uniform(UniformPrior),
}

impl Prior {
    fn inner(&self) -> &dyn SpreadDensity {
        match self {
            Prior::Beta(p) => p,
            Prior::Triangular(p) => p,
            Prior::Bickel(p) => p,
            Prior::Uniform(p) => p,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Prior::Beta(p) => format!("beta(a={}, alpha={}, m={})", p.a, p.alpha, p.m),
            Prior::Triangular(p) => format!("triangular(alpha={}, m={})", p.alpha, p.m),
            Prior::Bickel(p) => format!("bickel(alpha={}, m={})", p.alpha, p.m),
            Prior::Uniform(p) => format!("uniform(alpha={}, m={})", p.alpha, p.m),
        }
    }
}

impl SpreadDensity for Prior {
    fn alpha(&self) -> f64 {
        self.inner().alpha()
    }

    fn half_width(&self) -> f64 {
        self.inner().half_width()
    }

    fn ln_density(&self, x: f64) -> f64 {
        self.inner().ln_density(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.inner().kinks()
    }

    fn singular_edges(&self) -> bool {
        self.inner().singular_edges()
    }
}

/// `g(x)` for any prior; zero outside `[−m, m]`.
pub fn spread_density(prior: &impl SpreadDensity, x: f64) -> f64 {
    prior.density(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn beta_density_examples() {
        let uniform = BetaPrior::new(0.9, 1.0, 3.0).unwrap();
        assert!((spread_density(&uniform, 0.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((spread_density(&uniform, 3.0) - 1.0 / 6.0).abs() < 1e-15);
        let b2 = BetaPrior::new(0.9, 2.0, 3.0).unwrap();
        assert!((spread_density(&b2, 0.0) - 0.25).abs() < 1e-14);
        assert_eq!(spread_density(&b2, 3.0), 0.0);
        assert_eq!(spread_density(&b2, -3.0), 0.0);
        assert_eq!(spread_density(&b2, 3.5), 0.0);
    }

    #[test]
    fn triangular_peak_is_one_over_m() {
        let t = TriangularPrior::new(0.5, 3.0).unwrap();
        assert!((spread_density(&t, 0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((spread_density(&t, 1.5) - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(spread_density(&t, 3.0), 0.0);
    }

    #[test]
    fn large_shape_stays_finite() {
        let b = BetaPrior::new(0.0, 400.0, 3.0).unwrap();
        let g0 = spread_density(&b, 0.0);
        assert!(g0.is_finite() && g0 > 0.0);
        assert!((b.spread_mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        assert!(BetaPrior::new(1.0, 2.0, 3.0).is_err());
        assert!(BetaPrior::new(-0.1, 2.0, 3.0).is_err());
        assert!(BetaPrior::new(0.5, 0.0, 3.0).is_err());
        assert!(BetaPrior::new(0.5, 2.0, 0.0).is_err());
        assert!(TriangularPrior::new(0.5, f64::INFINITY).is_err());
        assert!(BickelPrior::new(0.5, -1.0).is_err());
    }

    #[test]
    fn every_family_integrates_to_one() {
        let priors = [
            Prior::Beta(BetaPrior::new(0.9, 0.6, 2.0).unwrap()),
            Prior::Beta(BetaPrior::new(0.9, 2.5, 3.0).unwrap()),
            Prior::Beta(BetaPrior::new(0.9, 10.0, 7.0).unwrap()),
            Prior::Triangular(TriangularPrior::new(0.9, 3.0).unwrap()),
            Prior::Bickel(BickelPrior::new(0.9, 3.0).unwrap()),
            Prior::Uniform(UniformPrior::new(0.9, 0.4).unwrap()),
        ];
        for p in priors {
            assert!((p.spread_mass() - 1.0).abs() < 1e-8, "{}", p.describe());
        }
    }

    proptest! {
        #[test]
        fn densities_are_symmetric(x in -4.0f64..4.0, a in 0.3f64..12.0, m in 0.1f64..5.0) {
            let ps = [
                Prior::Beta(BetaPrior::new(0.5, a, m).unwrap()),
                Prior::Triangular(TriangularPrior::new(0.5, m).unwrap()),
                Prior::Bickel(BickelPrior::new(0.5, m).unwrap()),
            ];
            for p in ps {
                let (l, r) = (p.density(x), p.density(-x));
                prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
            }
        }
    }
}
