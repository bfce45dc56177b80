//! Frequentist and Bayes risk of coefficient-wise rules.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::{Prior, SpreadDensity};
use crate::quadrature::{for_each_node, gauss_hermite, gauss_legendre, panelize, Grade};
use crate::shrink::{NoiseModel, ShrinkageRule};
use crate::special::norm_pdf;

pub const HERMITE_ORDER: usize = 101;
const MOMENT_TOL: f64 = 1e-7;
const BAYES_ORDER: usize = 16;
const BAYES_TOL: f64 = 1e-6;

/// `E[δ(d)]` and `E[δ(d)²]` for `d ~ N(θ, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
    /// Relative disagreement between the base and doubled rules.
    pub residual: f64,
    /// `δ` evaluations spent.
    pub evaluations: usize,
}

pub fn rule_moments(theta: f64, rule: &ShrinkageRule, noise: NoiseModel) -> Result<Moments> {
    if !theta.is_finite() {
        return Err(Error::Argument(format!("theta={theta} is not finite")));
    }
    let sigma = noise.sigma();
    let kinks = rule.kinks();
    let (coarse, fine, evaluations) = if kinks.is_empty() {
        let a = hermite_moments(theta, rule, noise, HERMITE_ORDER)?;
        let b = hermite_moments(theta, rule, noise, 2 * HERMITE_ORDER)?;
        (a, b, 3 * HERMITE_ORDER)
    } else {
        // Hermite nodes converge slowly across a jump or kink; split there instead.
        let (lo, hi) = (theta - 14.0 * sigma, theta + 14.0 * sigma);
        let panels = panelize(lo, hi, &kinks, sigma, (Grade::None, Grade::None));
        let a = legendre_moments(theta, rule, noise, &panels, 16)?;
        let b = legendre_moments(theta, rule, noise, &panels, 32)?;
        (a, b, 48 * panels.len())
    };
    let floor = 1e-6 * sigma;
    let residual = ((fine.0 - coarse.0).abs() / fine.0.abs().max(floor))
        .max((fine.1 - coarse.1).abs() / fine.1.max(floor * floor));
    if !(residual <= MOMENT_TOL) {
        return Err(Error::numerical(
            format!("moments of {} at theta={theta}", rule.describe()),
            residual,
        ));
    }
    Ok(Moments {
        // Every rule is odd, so E δ(θ + ε) vanishes at θ = 0.
        mean: if theta == 0.0 { 0.0 } else { fine.0 },
        second: fine.1,
        residual,
        evaluations,
    })
}

fn hermite_moments(
    theta: f64,
    rule: &ShrinkageRule,
    noise: NoiseModel,
    order: usize,
) -> Result<(f64, f64)> {
    let gh = gauss_hermite(order);
    let (mut m1, mut m2) = (0.0, 0.0);
    for (x, w) in gh.nodes.iter().zip(&gh.weights) {
        let v = rule.apply(theta + noise.sigma() * x, noise)?;
        m1 += w * v;
        m2 += w * v * v;
    }
    Ok((m1, m2))
}

fn legendre_moments(
    theta: f64,
    rule: &ShrinkageRule,
    noise: NoiseModel,
    panels: &[(f64, f64)],
    order: usize,
) -> Result<(f64, f64)> {
    let gl = gauss_legendre(order);
    let sigma = noise.sigma();
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut failure = None;
    for_each_node(panels, &gl, |d, w| {
        if failure.is_some() {
            return;
        }
        match rule.apply(d, noise) {
            Ok(v) => {
                let k = w * norm_pdf((d - theta) / sigma) / sigma;
                m1 += k * v;
                m2 += k * v * v;
            }
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((m1, m2)),
    }
}

/// `R(θ) = E[(δ(d) − θ)²]`.
pub fn classical_risk(theta: f64, rule: &ShrinkageRule, noise: NoiseModel) -> Result<f64> {
    let m = rule_moments(theta, rule, noise)?;
    Ok((m.second - 2.0 * theta * m.mean + theta * theta).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRisk {
    pub value: f64,
    pub residual: f64,
    /// Number of θ at which `R` was evaluated.
    pub risk_evaluations: usize,
}

/// `α R(0) + (1 − α) ∫ R(θ) g(θ) dθ` under `prior`.
///
/// Every rule here is odd, so `R` is even and the spread integral is taken
/// over `[0, m]` and doubled.
pub fn bayes_risk(rule: &ShrinkageRule, prior: &Prior, noise: NoiseModel) -> Result<BayesRisk> {
    let m = prior.half_width();
    let alpha = prior.alpha();
    let edge = if prior.singular_edges() {
        Grade::Singular
    } else {
        Grade::None
    };
    let breaks: Vec<f64> = rule.kinks().into_iter().filter(|k| *k > 0.0).collect();
    let panels = panelize(0.0, m, &breaks, m / 4.0, (Grade::None, edge));

    let r0 = classical_risk(0.0, rule, noise)?;
    let spread = |order: usize| -> Result<f64> {
        let gl = gauss_legendre(order);
        let mut nodes = Vec::new();
        for_each_node(&panels, &gl, |x, w| nodes.push((x, w)));
        let parts: Vec<f64> = nodes
            .par_iter()
            .map(|&(x, w)| {
                let g = prior.density(x);
                if g == 0.0 {
                    return Ok(0.0);
                }
                Ok(w * g * classical_risk(x, rule, noise)?)
            })
            .collect::<Result<_>>()?;
        Ok(2.0 * parts.iter().sum::<f64>())
    };
    let coarse = spread(BAYES_ORDER)?;
    let fine = spread(2 * BAYES_ORDER)?;
    let residual = (fine - coarse).abs() / fine.abs().max(1e-12);
    if !(residual <= BAYES_TOL) {
        return Err(Error::numerical(
            format!("Bayes risk of {}", rule.describe()),
            residual,
        ));
    }
    Ok(BayesRisk {
        value: alpha * r0 + (1.0 - alpha) * fine,
        residual,
        risk_evaluations: 1 + 3 * BAYES_ORDER * panels.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub hermite_nodes: usize,
    pub max_moment_residual: f64,
    pub bayes_residual: Option<f64>,
    pub bayes_risk_evaluations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub rule: String,
    pub sigma: f64,
    pub theta_grid: Vec<f64>,
    pub bias_sq: Vec<f64>,
    pub variance: Vec<f64>,
    pub classical_risk: Vec<f64>,
    pub bayes_risk: Option<f64>,
    pub quadrature: QuadratureMeta,
}

/// Bias², variance and risk on `grid`, plus the Bayes risk when a prior is given.
pub fn risk_curves(
    grid: &[f64],
    rule: &ShrinkageRule,
    prior: Option<&Prior>,
    noise: NoiseModel,
) -> Result<RiskReport> {
    let moments: Vec<Moments> = grid
        .par_iter()
        .map(|&t| rule_moments(t, rule, noise).map_err(|e| e.within(format!("theta={t}"))))
        .collect::<Result<_>>()?;
    let mut bias_sq = Vec::with_capacity(grid.len());
    let mut variance = Vec::with_capacity(grid.len());
    let mut risk = Vec::with_capacity(grid.len());
    for (&t, m) in grid.iter().zip(&moments) {
        let b = m.mean - t;
        let v = (m.second - m.mean * m.mean).max(0.0);
        bias_sq.push(b * b);
        variance.push(v);
        risk.push(b * b + v);
    }
    let bayes = prior.map(|p| bayes_risk(rule, p, noise)).transpose()?;
    Ok(RiskReport {
        rule: rule.describe(),
        sigma: noise.sigma(),
        theta_grid: grid.to_vec(),
        bias_sq,
        variance,
        classical_risk: risk,
        bayes_risk: bayes.map(|b| b.value),
        quadrature: QuadratureMeta {
            hermite_nodes: HERMITE_ORDER,
            max_moment_residual: moments.iter().map(|m| m.residual).fold(0.0, f64::max),
            bayes_residual: bayes.map(|b| b.residual),
            bayes_risk_evaluations: bayes.map(|b| b.risk_evaluations),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{BetaPrior, TriangularPrior};
    use crate::special::{norm_cdf, norm_pdf};

    fn unit() -> NoiseModel {
        NoiseModel::new(1.0).unwrap()
    }

    /// Closed-form soft-threshold risk for σ = 1.
    fn soft_risk(lambda: f64, mu: f64) -> f64 {
        1.0 + lambda * lambda
            + (mu * mu - lambda * lambda - 1.0) * (norm_cdf(lambda - mu) - norm_cdf(-lambda - mu))
            - (lambda - mu) * norm_pdf(lambda + mu)
            - (lambda + mu) * norm_pdf(lambda - mu)
    }

    #[test]
    fn soft_threshold_risk_matches_closed_form() {
        let rule = ShrinkageRule::Soft { threshold: 1.7 };
        for mu in [0.0, 0.5, 1.7, 3.0, 6.0] {
            let r = classical_risk(mu, &rule, unit()).unwrap();
            assert!((r - soft_risk(1.7, mu)).abs() < 1e-9, "mu={mu}: {r}");
        }
    }

    #[test]
    fn identity_rule_has_noise_risk() {
        let n = NoiseModel::new(1.5).unwrap();
        for t in [-2.0, 0.0, 4.0] {
            assert!((classical_risk(t, &ShrinkageRule::Identity, n).unwrap() - 2.25).abs() < 1e-10);
        }
    }

    #[test]
    fn null_rule_has_risk_theta_squared() {
        let rule = ShrinkageRule::BayesBeta(BetaPrior::new(1.0 - 1e-13, 2.0, 3.0).unwrap());
        for t in [0.0, 1.0, 2.5] {
            let m = rule_moments(t, &rule, unit()).unwrap();
            assert!(m.mean.abs() < 1e-8 && m.second.abs() < 1e-8);
            assert!((classical_risk(t, &rule, unit()).unwrap() - t * t).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetric_rule_is_unbiased_at_zero() {
        let rule = ShrinkageRule::BayesTriangularClosed(TriangularPrior::new(0.9, 3.0).unwrap());
        assert!(rule_moments(0.0, &rule, unit()).unwrap().mean.abs() < 1e-8);
    }

    #[test]
    fn curves_satisfy_the_decomposition() {
        let p = BetaPrior::new(0.9, 2.0, 3.0).unwrap();
        let grid: Vec<f64> = (-6..=6).map(|i| 0.5 * i as f64).collect();
        let rep = risk_curves(
            &grid,
            &ShrinkageRule::BayesBeta(p),
            Some(&Prior::Beta(p)),
            unit(),
        )
        .unwrap();
        for i in 0..grid.len() {
            assert!((rep.classical_risk[i] - rep.bias_sq[i] - rep.variance[i]).abs() < 1e-8);
        }
        let r0 = rep.classical_risk[6];
        assert!(rep.classical_risk.iter().all(|&r| r >= r0 - 1e-12));
        let b = rep.bayes_risk.unwrap();
        let max_r = rep.classical_risk.iter().cloned().fold(0.0, f64::max);
        assert!(b >= 0.0 && b <= 0.9 * r0 + 0.1 * max_r);
    }

    #[test]
    fn single_point_grid() {
        let rule = ShrinkageRule::BayesBeta(BetaPrior::new(0.9, 5.0, 3.0).unwrap());
        let rep = risk_curves(&[0.0], &rule, None, unit()).unwrap();
        assert_eq!(rep.theta_grid.len(), 1);
        assert!(rep.bias_sq[0] < 1e-16);
        assert!(rep.bayes_risk.is_none());
    }
}
