//! Level-dependent hyperparameters, the robust noise estimate, and the
//! percentile method for the beta shape.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_integrate;
use crate::special::{ln_beta, median_in_place};
use crate::wavelet::WaveletDecomposition;

/// Normal MAD consistency constant.
pub const MAD_SCALE: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    #[default]
    Estimated,
    Provided(f64),
}

/// Fixed `(α, m)` for one level, bypassing the data-driven schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOverride {
    pub alpha: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperPolicy {
    pub gamma: f64,
    pub j0: usize,
    /// Beta shape used when a rule does not fix its own.
    pub a: f64,
    pub sigma: SigmaSource,
    pub overrides: BTreeMap<usize, LevelOverride>,
}

impl Default for HyperPolicy {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            j0: 3,
            a: 2.0,
            sigma: SigmaSource::Estimated,
            overrides: BTreeMap::new(),
        }
    }
}

impl HyperPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::schema(
                "policy.gamma",
                format!("{} must be positive", self.gamma),
            ));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::schema(
                "policy.a",
                format!("{} must be positive", self.a),
            ));
        }
        if let SigmaSource::Provided(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::schema(
                    "policy.sigma",
                    format!("{s} must be positive"),
                ));
            }
        }
        for (j, o) in &self.overrides {
            if !(0.0..1.0).contains(&o.alpha) || !(o.m >= 0.0 && o.m.is_finite()) {
                return Err(Error::schema(
                    format!("policy.overrides.{j}"),
                    "need 0 <= alpha < 1 and m >= 0",
                ));
            }
        }
        Ok(())
    }

    /// `σ` for this decomposition, estimated or as provided.
    pub fn sigma_for(&self, decomp: &WaveletDecomposition) -> Result<f64> {
        match self.sigma {
            SigmaSource::Estimated => estimate_sigma(decomp),
            SigmaSource::Provided(s) => Ok(s),
        }
    }

    /// `(α(j), m(j))`, honouring any override for level `j`.
    pub fn level_params(&self, decomp: &WaveletDecomposition, j: usize) -> Result<(f64, f64)> {
        if let Some(o) = self.overrides.get(&j) {
            return Ok((o.alpha, o.m));
        }
        Ok((alpha_level(j, self.j0, self.gamma)?, m_level(decomp, j)?))
    }
}

/// `median |d_{J−1,k}| / 0.6745` over the finest detail level.
pub fn estimate_sigma(decomp: &WaveletDecomposition) -> Result<f64> {
    let finest = decomp
        .detail(decomp.finest_level())
        .ok_or_else(|| Error::Shape("decomposition has no detail levels".into()))?;
    let mut mags: Vec<f64> = finest.iter().map(|d| d.abs()).collect();
    let med = median_in_place(&mut mags)
        .ok_or_else(|| Error::Shape("finest detail level is empty".into()))?;
    Ok(med / MAD_SCALE)
}

/// `1 − 1/(j − J0 + 1)^γ`.
pub fn alpha_level(j: usize, j0: usize, gamma: f64) -> Result<f64> {
    if j < j0 {
        return Err(Error::Argument(format!(
            "level {j} is below the primary level {j0}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::Argument(format!("gamma={gamma} must be positive")));
    }
    Ok(1.0 - ((j - j0 + 1) as f64).powf(-gamma))
}

/// `max_k |d_{jk}|`.
pub fn m_level(decomp: &WaveletDecomposition, j: usize) -> Result<f64> {
    let level = decomp
        .detail(j)
        .ok_or_else(|| Error::Argument(format!("level {j} is not in the decomposition")))?;
    Ok(level.iter().fold(0.0, |acc, d| acc.max(d.abs())))
}

/// `P(θ ≤ k)` for the symmetric beta density with shape `a` on `[−m, m]`.
pub fn beta_cdf(k: f64, a: f64, m: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite() && m > 0.0 && m.is_finite()) {
        return Err(Error::Argument(format!(
            "beta cdf needs a > 0 and m > 0 (a={a}, m={m})"
        )));
    }
    if k <= -m {
        return Ok(0.0);
    }
    if k >= m {
        return Ok(1.0);
    }
    let x = (k + m) / (2.0 * m);
    if x > 0.5 {
        return Ok(1.0 - lower_regularized(1.0 - x, a)?);
    }
    lower_regularized(x, a)
}

/// `I_x(a, a)` for `x ≤ 1/2`.
fn lower_regularized(x: f64, a: f64) -> Result<f64> {
    let ln_b = ln_beta(a, a);
    let v = if a < 1.0 {
        // t = s^(1/a) removes the t^(a−1) singularity at the origin.
        let upper = x.powf(a);
        adaptive_integrate(
            |s| ((a - 1.0) * (-s.powf(1.0 / a)).ln_1p() - ln_b).exp() / a,
            0.0,
            upper,
            1e-14,
        )?
    } else {
        adaptive_integrate(
            |t| ((a - 1.0) * (t.ln() + (-t).ln_1p()) - ln_b).exp(),
            0.0,
            x,
            1e-14,
        )?
    };
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elicitation {
    pub a: f64,
    /// `|F_a(k) − p|` at the returned shape.
    pub residual: f64,
    /// Root within a factor of two of either end of `[1e-3, 1e3]`.
    pub near_bracket_edge: bool,
}

pub const ELICIT_BRACKET: (f64, f64) = (1e-3, 1e3);

/// Beta shape `a` such that `P(θ ≤ k) = p` under the symmetric beta on `[−m, m]`.
pub fn elicit_a(k: f64, p: f64, m: f64) -> Result<Elicitation> {
    if !(m > 0.0 && m.is_finite()) || !(k > -m && k < m) {
        return Err(Error::Argument(format!("need -m < k < m (k={k}, m={m})")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Argument(format!(
            "probability p={p} must lie in (0, 1)"
        )));
    }
    if k == 0.0 {
        return if p == 0.5 {
            Err(Error::DegenerateConstraint(
                "k=0 with p=0.5 holds for every shape".into(),
            ))
        } else {
            Err(Error::NoSolution(format!(
                "P(theta <= 0) is 0.5 for every shape, not {p}"
            )))
        };
    }
    let f = |ln_a: f64| beta_cdf(k, ln_a.exp(), m).map(|v| v - p);
    let (mut lo, mut hi) = (ELICIT_BRACKET.0.ln(), ELICIT_BRACKET.1.ln());
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo == 0.0 {
        hi = lo;
    } else if f_hi == 0.0 {
        lo = hi;
    } else if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSolution(format!(
            "F_a({k}) - {p} keeps sign {} over a in [{}, {}]",
            f_lo.signum(),
            ELICIT_BRACKET.0,
            ELICIT_BRACKET.1
        )));
    }
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v == 0.0 {
            lo = mid;
            hi = mid;
        } else if v.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = (0.5 * (lo + hi)).exp();
    let residual = (beta_cdf(k, a, m)? - p).abs();
    if residual > 1e-6 {
        return Err(Error::numerical(
            format!("percentile elicitation at k={k}, p={p}"),
            residual,
        ));
    }
    let near_bracket_edge = a < 2.0 * ELICIT_BRACKET.0 || a > 0.5 * ELICIT_BRACKET.1;
    Ok(Elicitation {
        a,
        residual,
        near_bracket_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::beta::beta_reg;

    #[test]
    fn alpha_schedule_examples() {
        assert_eq!(alpha_level(3, 3, 2.0).unwrap(), 0.0);
        assert_eq!(alpha_level(7, 7, 0.3).unwrap(), 0.0);
        assert_eq!(alpha_level(4, 3, 2.0).unwrap(), 0.75);
        assert_eq!(alpha_level(12, 3, 2.0).unwrap(), 0.99);
        assert!(alpha_level(2, 3, 2.0).is_err());
    }

    #[test]
    fn alpha_is_nondecreasing() {
        for gamma in [0.5, 1.0, 2.0, 3.5] {
            let v: Vec<f64> = (3..20).map(|j| alpha_level(j, 3, gamma).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    fn decomp_with_finest(finest: Vec<f64>) -> WaveletDecomposition {
        let n = finest.len();
        let depth = n.trailing_zeros() as usize + 1;
        let mut details: Vec<Vec<f64>> = (0..depth - 1).map(|j| vec![0.5; 1 << j]).collect();
        details.push(finest);
        WaveletDecomposition::from_parts(vec![1.0], details, 0).unwrap()
    }

    #[test]
    fn sigma_of_constant_level() {
        let d = decomp_with_finest(vec![-1.3; 16]);
        assert_eq!(estimate_sigma(&d).unwrap(), 1.3 / 0.6745);
    }

    #[test]
    fn m_level_examples() {
        let d = WaveletDecomposition::from_parts(vec![0.0], vec![vec![0.0], vec![1.0, -4.0]], 0)
            .unwrap();
        assert_eq!(m_level(&d, 1).unwrap(), 4.0);
        assert_eq!(m_level(&d, 0).unwrap(), 0.0);
        assert!(m_level(&d, 2).is_err());
    }

    #[test]
    fn cdf_matches_incomplete_beta() {
        for a in [0.2, 0.5, 1.0, 1.7, 2.0, 4.0, 9.5, 60.0] {
            for k in [-2.9, -1.0, -0.2, 0.0, 0.3, 1.0, 2.5] {
                let ours = beta_cdf(k, a, 3.0).unwrap();
                let reference = beta_reg(a, a, (k + 3.0) / 6.0);
                assert!(
                    (ours - reference).abs() < 1e-10,
                    "a={a} k={k}: {ours} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn elicit_round_trip_known_shape() {
        let p = beta_cdf(1.0, 4.0, 3.0).unwrap();
        let e = elicit_a(1.0, p, 3.0).unwrap();
        assert!((e.a - 4.0).abs() < 1e-4);
        assert!(!e.near_bracket_edge);
    }

    #[test]
    fn elicit_rejects_symmetric_and_incompatible_constraints() {
        assert!(matches!(
            elicit_a(0.0, 0.5, 3.0),
            Err(Error::DegenerateConstraint(_))
        ));
        assert!(matches!(elicit_a(1.0, 0.3, 3.0), Err(Error::NoSolution(_))));
        assert!(matches!(
            elicit_a(-1.0, 0.7, 3.0),
            Err(Error::NoSolution(_))
        ));
        assert!(elicit_a(3.0, 0.7, 3.0).is_err());
    }

    #[test]
    fn concentration_pushes_toward_the_bracket_edge() {
        let p = beta_cdf(0.05, 800.0, 3.0).unwrap();
        let e = elicit_a(0.05, p, 3.0).unwrap();
        assert!(e.near_bracket_edge && e.a > 500.0);
        let mut last = 0.0;
        for p in [0.6, 0.8, 0.95, 0.999, 0.999999] {
            let a = elicit_a(1.5, p, 3.0).unwrap().a;
            assert!(a > last);
            last = a;
        }
    }

    #[test]
    fn policy_serde_defaults() {
        let p: HyperPolicy =
            serde_json::from_str(r#"{"gamma": 1.5, "sigma": {"provided": 2.0}}"#).unwrap();
        assert_eq!(p.gamma, 1.5);
        assert_eq!(p.j0, 3);
        assert_eq!(p.sigma, SigmaSource::Provided(2.0));
        let e: HyperPolicy = serde_json::from_str(r#"{"sigma": "estimated"}"#).unwrap();
        assert_eq!(e, HyperPolicy::default());
    }

    proptest! {
        #[test]
        fn sigma_is_scale_equivariant(v in prop::collection::vec(-5.0f64..5.0, 16), c in 0.01f64..100.0) {
            let base = estimate_sigma(&decomp_with_finest(v.clone())).unwrap();
            let scaled = estimate_sigma(&decomp_with_finest(v.iter().map(|x| x * c).collect())).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
        }

        #[test]
        fn m_level_is_scale_equivariant_and_order_free(mut v in prop::collection::vec(-5.0f64..5.0, 8), c in 0.01f64..100.0) {
            let d = WaveletDecomposition::from_parts(vec![0.0], vec![vec![0.0], vec![0.0; 2], vec![0.0; 4], v.clone()], 0).unwrap();
            let m = m_level(&d, 3).unwrap();
            let brute = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            prop_assert_eq!(m, brute);
            v.reverse();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let ds = WaveletDecomposition::from_parts(vec![0.0], vec![vec![0.0], vec![0.0; 2], vec![0.0; 4], scaled], 0).unwrap();
            prop_assert!((m_level(&ds, 3).unwrap() - c * m).abs() <= 1e-12 * c * m.max(1e-300));
        }
    }
}
