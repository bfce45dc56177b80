//! Replicated AMSE study on the Donoho–Johnstone signals.
//!
//! Replication `r` draws its noise from `ChaCha20(seed)` on stream `r`, so
//! every scenario sees the same standard-normal draws (common random
//! numbers) and the result does not depend on the thread schedule.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::{apply_rule, RuleSpec};
use crate::error::{Error, Result};
use crate::hyper::{HyperPolicy, SigmaSource};
use crate::signals::{add_noise, dj_signal, mse, rescale_to_sd, DjSignal};
use crate::wavelet::{dwt, idwt, Signal, WaveletFilter};

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_signals() -> OneOrMany<DjSignal> {
    OneOrMany::Many(DjSignal::ALL.to_vec())
}
fn default_n() -> OneOrMany<usize> {
    OneOrMany::Many(vec![512, 1024, 2048])
}
fn default_snr() -> OneOrMany<f64> {
    OneOrMany::Many(vec![3.0, 5.0, 7.0])
}
fn default_replications() -> usize {
    200
}
fn default_rules() -> Vec<RuleSpec> {
    vec![RuleSpec::Beta { a: None }]
}
fn default_seed() -> u64 {
    1
}
fn default_filter() -> usize {
    10
}
fn default_signal_sd() -> Option<f64> {
    Some(7.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_signals", alias = "signals", alias = "signal_name")]
    pub signal: OneOrMany<DjSignal>,
    #[serde(default = "default_n")]
    pub n: OneOrMany<usize>,
    #[serde(default = "default_snr")]
    pub snr: OneOrMany<f64>,
    #[serde(default = "default_replications", alias = "M")]
    pub replications: usize,
    #[serde(default = "default_rules")]
    pub rules: Vec<RuleSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Daubechies vanishing moments.
    #[serde(default = "default_filter")]
    pub filter: usize,
    #[serde(default)]
    pub policy: HyperPolicy,
    /// Population sd the clean signal is rescaled to; `null` keeps the raw scale.
    #[serde(default = "default_signal_sd")]
    pub signal_sd: Option<f64>,
    /// Give the rules the true noise level instead of the MAD estimate.
    #[serde(default)]
    pub use_true_sigma: bool,
    /// Worker threads; results do not depend on it.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.signal.to_vec().is_empty() {
            return Err(Error::schema("signal", "at least one signal is required"));
        }
        let ns = self.n.to_vec();
        if ns.is_empty() {
            return Err(Error::schema("n", "at least one length is required"));
        }
        for n in ns {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::schema(
                    "n",
                    format!("{n} is not a power of two >= 2"),
                ));
            }
            if self.policy.j0 >= n.trailing_zeros() as usize {
                return Err(Error::schema(
                    "policy.j0",
                    format!(
                        "{} must be below log2(n)={}",
                        self.policy.j0,
                        n.trailing_zeros()
                    ),
                ));
            }
        }
        let snrs = self.snr.to_vec();
        if snrs.is_empty() || snrs.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::schema(
                "snr",
                "every snr must be positive and finite",
            ));
        }
        if self.replications == 0 {
            return Err(Error::schema("replications", "must be at least 1"));
        }
        if self.rules.is_empty() {
            return Err(Error::schema("rules", "at least one rule is required"));
        }
        if !(1..=20).contains(&self.filter) {
            return Err(Error::schema(
                "filter",
                format!("{} vanishing moments unsupported (1..=20)", self.filter),
            ));
        }
        if let Some(sd) = self.signal_sd {
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(Error::schema("signal_sd", "must be positive"));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::schema("threads", "must be at least 1"));
        }
        self.policy.validate()
    }

    /// `(signal, n, snr)` in table order.
    pub fn scenarios(&self) -> Vec<(DjSignal, usize, f64)> {
        let mut out = Vec::new();
        for s in self.signal.to_vec() {
            for n in self.n.to_vec() {
                for snr in self.snr.to_vec() {
                    out.push((s, n, snr));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmseRow {
    pub signal: DjSignal,
    pub n: usize,
    pub snr: f64,
    pub rule: RuleSpec,
    pub amse: f64,
    pub se: f64,
    #[serde(rename = "M")]
    pub replications: usize,
    /// Noise level implied by the SNR.
    pub sigma_true: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmseTable {
    pub rows: Vec<AmseRow>,
}

pub const AMSE_HEADER: &str = "signal,n,snr,rule,amse,se,M";

impl AmseTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(AMSE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.signal,
                r.n,
                fmt_number(r.snr),
                r.rule,
                fmt_number(r.amse),
                fmt_number(r.se),
                r.replications
            );
        }
        out
    }

    pub fn get(&self, signal: DjSignal, n: usize, snr: f64, rule: &RuleSpec) -> Option<&AmseRow> {
        self.rows
            .iter()
            .find(|r| r.signal == signal && r.n == n && r.snr == snr && &r.rule == rule)
    }
}

/// Round to 15 significant digits and print the shortest form that reads back
/// to that value.
pub fn fmt_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("valid float");
    format!("{rounded:?}")
}

/// The clean signal for a scenario, rescaled when the config asks for it.
pub fn scenario_truth(config: &StudyConfig, signal: DjSignal, n: usize) -> Result<Signal> {
    let raw = dj_signal(signal, n)?;
    match config.signal_sd {
        Some(sd) => rescale_to_sd(&raw, sd),
        None => Ok(raw),
    }
}

/// Noise generator for replication `r`.
pub fn replication_rng(seed: u64, replication: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// MSE of every rule on one replication of one scenario.
pub fn run_replication(
    config: &StudyConfig,
    truth: &Signal,
    snr: f64,
    filter: &WaveletFilter,
    replication: usize,
) -> Result<Vec<f64>> {
    let mut rng = replication_rng(config.seed, replication);
    let (noisy, sigma_true) = add_noise(truth, snr, &mut rng)?;
    let empirical = dwt(&noisy, filter, config.policy.j0)?;
    let mut policy = config.policy.clone();
    if config.use_true_sigma {
        policy.sigma = SigmaSource::Provided(sigma_true);
    }
    config
        .rules
        .iter()
        .map(|rule| {
            let shrunk = apply_rule(&empirical, rule, &policy)
                .map_err(|e| e.within(format!("replication {replication}, rule {rule}")))?;
            mse(&idwt(&shrunk, filter)?, truth)
        })
        .collect()
}

pub fn run_study(config: &StudyConfig) -> Result<AmseTable> {
    config.validate()?;
    match config.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?
            .install(|| run_study_inner(config)),
        None => run_study_inner(config),
    }
}

fn run_study_inner(config: &StudyConfig) -> Result<AmseTable> {
    let filter = WaveletFilter::daubechies(config.filter)?;
    let m = config.replications;
    let mut rows = Vec::new();
    for (signal, n, snr) in config.scenarios() {
        let truth = scenario_truth(config, signal, n)?;
        let sigma_true = crate::signals::population_sd(truth.samples()) / snr;
        let per_rep: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|r| {
                run_replication(config, &truth, snr, &filter, r)
                    .map_err(|e| e.within(format!("{signal} n={n} snr={snr}")))
            })
            .collect::<Result<_>>()?;
        for (i, rule) in config.rules.iter().enumerate() {
            // Summed in replication order for a schedule-free result.
            let values: Vec<f64> = per_rep.iter().map(|v| v[i]).collect();
            let (amse, se) = mean_and_se(&values);
            rows.push(AmseRow {
                signal,
                n,
                snr,
                rule: *rule,
                amse,
                se,
                replications: m,
                sigma_true,
            });
        }
    }
    Ok(AmseTable { rows })
}

/// Mean and standard error (sample sd over `sqrt(M)`; zero when `M = 1`).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}
