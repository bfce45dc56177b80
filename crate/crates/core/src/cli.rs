//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::denoise::{denoise, RuleSpec};
use crate::error::{Error, Result};
use crate::hyper::{HyperPolicy, SigmaSource};
use crate::io::{
    coefficients_csv, dyadic_length, levels_csv, read_json, read_samples, risk_csv, signal_csv,
    unix_now, write_file, CommandConfig, DenoiseConfig, Grid, PriorFamily, RiskConfig, RunManifest,
    Truncation, MANIFEST_NAME,
};
use crate::prior::{BetaPrior, BickelPrior, Prior, TriangularPrior, UniformPrior};
use crate::risk::risk_curves;
use crate::shrink::{NoiseModel, ShrinkageRule};
use crate::sim::{fmt_number, run_study, StudyConfig};
use crate::wavelet::{Signal, WaveletFilter};

#[derive(Debug, Parser)]
#[command(
    name = "betashrink",
    version,
    about = "Bayesian wavelet shrinkage with bounded symmetric priors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise a sampled signal.
    Denoise(DenoiseArgs),
    /// Run the replicated AMSE study described by a JSON config.
    Simulate(SimulateArgs),
    /// Bias, variance and Bayes risk of a Bayes rule over a θ grid.
    Risk(RiskArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Field of each line to read (0-based).
    #[arg(long, default_value_t = 0)]
    pub column: usize,
    /// beta, triangular, triangular-quad, bickel, uniform, universal-soft,
    /// universal-hard, sure, fdr, identity.
    #[arg(long, default_value = "beta")]
    pub rule: RuleSpec,
    /// Beta shape.
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// FDR level for `--rule fdr`.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 3)]
    pub j0: usize,
    /// Daubechies vanishing moments.
    #[arg(long = "filter-n", default_value_t = 10)]
    pub filter_n: usize,
    /// Known noise level; estimated from the finest level when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Keep exactly this many leading samples.
    #[arg(long, conflicts_with = "strict")]
    pub length: Option<usize>,
    /// Fail on inputs whose length is not a power of two.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PriorArg {
    Beta,
    Triangular,
    Bickel,
    Uniform,
}

impl From<PriorArg> for PriorFamily {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Beta => PriorFamily::Beta,
            PriorArg::Triangular => PriorFamily::Triangular,
            PriorArg::Bickel => PriorFamily::Bickel,
            PriorArg::Uniform => PriorFamily::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[arg(long, value_enum, default_value = "beta")]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// `LO:HI:STEP` or a single θ.
    #[arg(long, default_value = "0:3:0.05")]
    pub grid: Grid,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

impl DenoiseArgs {
    pub fn resolve(&self) -> Result<DenoiseConfig> {
        let rule = match (self.rule, self.q) {
            (RuleSpec::Fdr { .. }, Some(q)) => RuleSpec::Fdr { q },
            (_, Some(_)) => return Err(Error::Argument("--q only applies to --rule fdr".into())),
            (RuleSpec::Beta { a: None }, None) => RuleSpec::Beta { a: Some(self.a) },
            (r, None) => r,
        };
        let sigma = match self.sigma {
            Some(s) => SigmaSource::Provided(s),
            None => SigmaSource::Estimated,
        };
        let policy = HyperPolicy {
            gamma: self.gamma,
            j0: self.j0,
            a: self.a,
            sigma,
            ..HyperPolicy::default()
        };
        policy.validate()?;
        let truncation = match (self.length, self.strict) {
            (Some(k), _) => Truncation::Length(k),
            (None, true) => Truncation::Strict,
            (None, false) => Truncation::Prefix,
        };
        Ok(DenoiseConfig {
            input: self.input.clone(),
            column: self.column,
            rule,
            filter: self.filter_n,
            policy,
            truncation,
        })
    }
}

impl RiskArgs {
    pub fn resolve(&self) -> RiskConfig {
        RiskConfig {
            prior: self.prior.into(),
            a: self.a,
            alpha: self.alpha,
            m: self.m,
            sigma: self.sigma,
            grid: self.grid,
        }
    }
}

/// What a command printed and wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub outputs: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let (command, out) = match cli.command {
        Command::Denoise(a) => (CommandConfig::Denoise(a.resolve()?), a.out),
        Command::Simulate(a) => {
            let mut config: StudyConfig = read_json(&a.config)?;
            if a.threads.is_some() {
                config.threads = a.threads;
            }
            (CommandConfig::Simulate(config), a.out)
        }
        Command::Risk(a) => (CommandConfig::Risk(a.resolve()), a.out),
        Command::Rerun(a) => {
            let manifest: RunManifest = read_json(&a.manifest)?;
            (manifest.command, a.out)
        }
    };
    execute(command, &out)
}

/// Runs a resolved command and writes its files plus a manifest into `out`.
pub fn execute(command: CommandConfig, out: &Path) -> Result<Outcome> {
    let started = unix_now();
    let (summary, files) = match &command {
        CommandConfig::Denoise(c) => run_denoise(c)?,
        CommandConfig::Simulate(c) => run_simulate(c)?,
        CommandConfig::Risk(c) => run_risk(c)?,
    };
    let mut outputs = Vec::new();
    for (name, contents) in &files {
        outputs.push(write_file(out, name, contents)?);
    }
    let names = files.iter().map(|(n, _)| n.clone()).collect();
    let manifest = RunManifest::new(command, started, names);
    outputs.push(write_file(out, MANIFEST_NAME, &manifest.to_json())?);
    Ok(Outcome { summary, outputs })
}

type Files = Vec<(String, String)>;

fn run_denoise(c: &DenoiseConfig) -> Result<(String, Files)> {
    let samples = read_samples(&c.input, c.column)?;
    let n_read = samples.values.len();
    let n = dyadic_length(n_read, c.truncation)?;
    let mut values = samples.values;
    values.truncate(n);
    let filter = WaveletFilter::daubechies(c.filter)?;
    let result = denoise(&Signal::new(values)?, &filter, &c.rule, &c.policy)?;
    let summary = format!(
        "read {n_read} samples, used {n}; sigma_hat={}; rule={}",
        fmt_number(result.sigma),
        c.rule
    );
    let files = vec![
        (
            "denoised.csv".to_string(),
            signal_csv(result.estimate.samples()),
        ),
        (
            "coefficients.csv".to_string(),
            coefficients_csv(&result.empirical, &result.shrunk),
        ),
        ("levels.csv".to_string(), levels_csv(&result)),
    ];
    Ok((summary, files))
}

fn run_simulate(c: &StudyConfig) -> Result<(String, Files)> {
    let table = run_study(c)?;
    let summary = format!(
        "{} rows, M={}, seed={}; snr = sd(signal)/sigma",
        table.rows.len(),
        c.replications,
        c.seed
    );
    Ok((summary, vec![("amse.csv".to_string(), table.to_csv())]))
}

/// The prior a risk config describes.
pub fn risk_prior(c: &RiskConfig) -> Result<Prior> {
    Ok(match c.prior {
        PriorFamily::Beta => Prior::Beta(BetaPrior::new(c.alpha, c.a, c.m)?),
        PriorFamily::Triangular => Prior::Triangular(TriangularPrior::new(c.alpha, c.m)?),
        PriorFamily::Bickel => Prior::Bickel(BickelPrior::new(c.alpha, c.m)?),
        PriorFamily::Uniform => Prior::Uniform(UniformPrior::new(c.alpha, c.m)?),
    })
}

fn run_risk(c: &RiskConfig) -> Result<(String, Files)> {
    let prior = risk_prior(c)?;
    let rule = match prior {
        Prior::Beta(p) => ShrinkageRule::BayesBeta(p),
        Prior::Triangular(p) => ShrinkageRule::BayesTriangularClosed(p),
        Prior::Bickel(p) => ShrinkageRule::BayesBickel(p),
        Prior::Uniform(p) => ShrinkageRule::BayesUniform(p),
    };
    let noise = NoiseModel::new(c.sigma)?;
    let report = risk_curves(&c.grid.points()?, &rule, Some(&prior), noise)?;
    let summary = format!(
        "{}: bayes_risk={}",
        rule.describe(),
        report.bayes_risk.map(fmt_number).unwrap_or_default()
    );
    Ok((summary, vec![("risk.csv".to_string(), risk_csv(&report))]))
}
