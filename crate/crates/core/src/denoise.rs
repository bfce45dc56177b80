//! Rule descriptors and the wavelet-domain shrinkage pipeline.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::HyperPolicy;
use crate::prior::{BetaPrior, BickelPrior, TriangularPrior, UniformPrior};
use crate::shrink::{NoiseModel, ShrinkageRule};
use crate::threshold::{fdr_threshold, sure_threshold, universal_threshold};
use crate::wavelet::{dwt, idwt, Signal, WaveletDecomposition, WaveletFilter};

pub const DEFAULT_FDR_Q: f64 = 0.05;

/// A data-driven rule: which estimator to use, with its parameters chosen
/// per level from the decomposition and a [`HyperPolicy`].
///
/// Serialized as a short label such as `beta:a=5`, `triangular`,
/// `universal-soft`, `sure` or `fdr:q=0.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RuleSpec {
    /// Beta prior; `None` takes the shape from the policy.
    Beta {
        a: Option<f64>,
    },
    /// Triangular prior through its closed form.
    Triangular,
    /// Triangular prior through generic quadrature.
    TriangularQuad,
    Bickel,
    Uniform,
    UniversalSoft,
    UniversalHard,
    Sure,
    Fdr {
        q: f64,
    },
    Identity,
}

impl RuleSpec {
    pub fn is_bayesian(&self) -> bool {
        matches!(
            self,
            RuleSpec::Beta { .. }
                | RuleSpec::Triangular
                | RuleSpec::TriangularQuad
                | RuleSpec::Bickel
                | RuleSpec::Uniform
        )
    }

    fn bayes_rule(&self, policy: &HyperPolicy, alpha: f64, m: f64) -> Result<ShrinkageRule> {
        Ok(match *self {
            RuleSpec::Beta { a } => {
                ShrinkageRule::BayesBeta(BetaPrior::new(alpha, a.unwrap_or(policy.a), m)?)
            }
            RuleSpec::Triangular => {
                ShrinkageRule::BayesTriangularClosed(TriangularPrior::new(alpha, m)?)
            }
            RuleSpec::TriangularQuad => {
                ShrinkageRule::BayesTriangularQuad(TriangularPrior::new(alpha, m)?)
            }
            RuleSpec::Bickel => ShrinkageRule::BayesBickel(BickelPrior::new(alpha, m)?),
            RuleSpec::Uniform => ShrinkageRule::BayesUniform(UniformPrior::new(alpha, m)?),
            _ => unreachable!("not a Bayesian rule"),
        })
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::Beta { a: Some(a) } => write!(f, "beta:a={a}"),
            RuleSpec::Beta { a: None } => f.write_str("beta"),
            RuleSpec::Triangular => f.write_str("triangular"),
            RuleSpec::TriangularQuad => f.write_str("triangular-quad"),
            RuleSpec::Bickel => f.write_str("bickel"),
            RuleSpec::Uniform => f.write_str("uniform"),
            RuleSpec::UniversalSoft => f.write_str("universal-soft"),
            RuleSpec::UniversalHard => f.write_str("universal-hard"),
            RuleSpec::Sure => f.write_str("sure"),
            RuleSpec::Fdr { q } => write!(f, "fdr:q={q}"),
            RuleSpec::Identity => f.write_str("identity"),
        }
    }
}

/// Lower-case and hyphenate, so `UniversalSoft` and `universal_soft` both
/// read as `universal-soft`.
fn normalize(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    for (i, c) in name.trim().chars().enumerate() {
        if c.is_ascii_uppercase() && i > 0 && !out.ends_with('-') {
            out.push('-');
        }
        out.push(if c == '_' {
            '-'
        } else {
            c.to_ascii_lowercase()
        });
    }
    out
}

impl FromStr for RuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let param = |key: &str| -> Result<Option<f64>> {
            let Some(p) = params else { return Ok(None) };
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("rule `{s}`: expected `{key}=<value>`")))?;
            if k.trim() != key {
                return Err(Error::Argument(format!(
                    "rule `{s}`: unknown parameter `{}`",
                    k.trim()
                )));
            }
            v.trim()
                .parse::<f64>()
                .map(Some)
                .map_err(|e| Error::Argument(format!("rule `{s}`: {e}")))
        };
        let no_params = |spec: RuleSpec| -> Result<RuleSpec> {
            match params {
                None => Ok(spec),
                Some(_) => Err(Error::Argument(format!("rule `{s}` takes no parameters"))),
            }
        };
        match normalize(name).as_str() {
            "beta" => {
                let a = param("a")?;
                if let Some(a) = a {
                    if !(a > 0.0 && a.is_finite()) {
                        return Err(Error::Argument(format!(
                            "rule `{s}`: shape must be positive"
                        )));
                    }
                }
                Ok(RuleSpec::Beta { a })
            }
            "fdr" => {
                let q = param("q")?.unwrap_or(DEFAULT_FDR_Q);
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::Argument(format!("rule `{s}`: q must lie in (0, 1)")));
                }
                Ok(RuleSpec::Fdr { q })
            }
            "triangular" => no_params(RuleSpec::Triangular),
            "triangular-quad" => no_params(RuleSpec::TriangularQuad),
            "bickel" => no_params(RuleSpec::Bickel),
            "uniform" => no_params(RuleSpec::Uniform),
            "universal-soft" => no_params(RuleSpec::UniversalSoft),
            "universal-hard" => no_params(RuleSpec::UniversalHard),
            "sure" => no_params(RuleSpec::Sure),
            "identity" => no_params(RuleSpec::Identity),
            other => Err(Error::Argument(format!("unknown rule `{other}`"))),
        }
    }
}

impl TryFrom<String> for RuleSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RuleSpec> for String {
    fn from(r: RuleSpec) -> String {
        r.to_string()
    }
}

/// What was used at one detail level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    pub threshold: Option<f64>,
    /// Left untouched (zero level or noise-free input).
    pub passthrough: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkOutcome {
    pub shrunk: WaveletDecomposition,
    pub sigma: f64,
    pub levels: Vec<LevelReport>,
}

/// Replaces the detail coefficients by the rule's estimates; scaling
/// coefficients pass through.
pub fn apply_rule(
    decomp: &WaveletDecomposition,
    rule: &RuleSpec,
    policy: &HyperPolicy,
) -> Result<WaveletDecomposition> {
    apply_rule_with_report(decomp, rule, policy).map(|o| o.shrunk)
}

pub fn apply_rule_with_report(
    decomp: &WaveletDecomposition,
    rule: &RuleSpec,
    policy: &HyperPolicy,
) -> Result<ShrinkOutcome> {
    policy.validate()?;
    let sigma = policy.sigma_for(decomp)?;
    let mut shrunk = decomp.clone();
    let mut levels = Vec::new();
    let all_levels: Vec<usize> = decomp.levels().map(|(j, _)| j).collect();

    // A zero noise estimate means the coefficients are exact.
    if sigma == 0.0 || matches!(rule, RuleSpec::Identity) {
        for &j in &all_levels {
            levels.push(LevelReport {
                level: j,
                alpha: None,
                m: None,
                threshold: None,
                passthrough: true,
            });
        }
        return Ok(ShrinkOutcome {
            shrunk,
            sigma,
            levels,
        });
    }
    let noise = NoiseModel::new(sigma)?;
    let n = 1usize << decomp.depth();

    match rule {
        RuleSpec::UniversalSoft | RuleSpec::UniversalHard => {
            let lambda = universal_threshold(noise, n)?;
            let rule = if matches!(rule, RuleSpec::UniversalSoft) {
                ShrinkageRule::Soft { threshold: lambda }
            } else {
                ShrinkageRule::Hard { threshold: lambda }
            };
            for &j in &all_levels {
                shrink_level(&mut shrunk, j, &rule, noise)?;
                levels.push(LevelReport {
                    level: j,
                    alpha: None,
                    m: None,
                    threshold: Some(lambda),
                    passthrough: false,
                });
            }
        }
        RuleSpec::Sure => {
            for &j in &all_levels {
                let lambda = sure_threshold(decomp.detail(j).unwrap(), noise)?;
                shrink_level(
                    &mut shrunk,
                    j,
                    &ShrinkageRule::Soft { threshold: lambda },
                    noise,
                )?;
                levels.push(LevelReport {
                    level: j,
                    alpha: None,
                    m: None,
                    threshold: Some(lambda),
                    passthrough: false,
                });
            }
        }
        RuleSpec::Fdr { q } => {
            let all: Vec<f64> = decomp
                .levels()
                .flat_map(|(_, d)| d.iter().copied())
                .collect();
            let lambda = fdr_threshold(&all, noise, *q)?;
            for &j in &all_levels {
                // The step-up rule admits the coefficient sitting exactly at λ.
                for d in shrunk.detail_mut(j).unwrap() {
                    if d.abs() < lambda {
                        *d = 0.0;
                    }
                }
                levels.push(LevelReport {
                    level: j,
                    alpha: None,
                    m: None,
                    threshold: Some(lambda),
                    passthrough: false,
                });
            }
        }
        RuleSpec::Identity => unreachable!(),
        bayes => {
            for &j in &all_levels {
                let (alpha, m) = policy.level_params(decomp, j)?;
                if m == 0.0 {
                    levels.push(LevelReport {
                        level: j,
                        alpha: Some(alpha),
                        m: Some(m),
                        threshold: None,
                        passthrough: true,
                    });
                    continue;
                }
                let rule = bayes.bayes_rule(policy, alpha, m)?;
                shrink_level(&mut shrunk, j, &rule, noise)?;
                levels.push(LevelReport {
                    level: j,
                    alpha: Some(alpha),
                    m: Some(m),
                    threshold: None,
                    passthrough: false,
                });
            }
        }
    }
    Ok(ShrinkOutcome {
        shrunk,
        sigma,
        levels,
    })
}

fn shrink_level(
    decomp: &mut WaveletDecomposition,
    j: usize,
    rule: &ShrinkageRule,
    noise: NoiseModel,
) -> Result<()> {
    let level = decomp
        .detail_mut(j)
        .ok_or_else(|| Error::Argument(format!("level {j} is absent")))?;
    let out: Vec<f64> = level
        .par_iter()
        .enumerate()
        .map(|(k, &d)| {
            rule.apply(d, noise)
                .map_err(|e| e.within(format!("level {j}, k={k}")))
        })
        .collect::<Result<_>>()?;
    level.copy_from_slice(&out);
    Ok(())
}

/// Result of running the full transform, shrink, inverse pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub estimate: Signal,
    pub empirical: WaveletDecomposition,
    pub shrunk: WaveletDecomposition,
    pub sigma: f64,
    pub levels: Vec<LevelReport>,
}

pub fn denoise(
    signal: &Signal,
    filter: &WaveletFilter,
    rule: &RuleSpec,
    policy: &HyperPolicy,
) -> Result<Denoised> {
    let empirical = dwt(signal, filter, policy.j0)?;
    let outcome = apply_rule_with_report(&empirical, rule, policy)?;
    let estimate = idwt(&outcome.shrunk, filter)?;
    Ok(Denoised {
        estimate,
        empirical,
        shrunk: outcome.shrunk,
        sigma: outcome.sigma,
        levels: outcome.levels,
    })
}
