//! Python bindings.

use betashrink_core as core;
use betashrink_core::io::{PriorFamily, RiskConfig};
use betashrink_core::risk::bayes_risk as core_bayes_risk;
use betashrink_core::{Error, HyperPolicy, NoiseModel, RuleSpec, ShrinkageRule, SigmaSource};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn family(name: &str) -> PyResult<PriorFamily> {
    serde_json::from_value(serde_json::Value::String(name.to_ascii_lowercase()))
        .map_err(|_| PyValueError::new_err(format!("unknown prior `{name}`")))
}

fn rule_for(prior: &str, a: f64, alpha: f64, m: f64) -> PyResult<(ShrinkageRule, core::Prior)> {
    let config = RiskConfig {
        prior: family(prior)?,
        a,
        alpha,
        m,
        sigma: 1.0,
        grid: "0".parse().map_err(to_py)?,
    };
    let prior = core::cli::risk_prior(&config).map_err(to_py)?;
    let rule = match prior {
        core::Prior::Beta(p) => ShrinkageRule::BayesBeta(p),
        core::Prior::Triangular(p) => ShrinkageRule::BayesTriangularClosed(p),
        core::Prior::Bickel(p) => ShrinkageRule::BayesBickel(p),
        core::Prior::Uniform(p) => ShrinkageRule::BayesUniform(p),
    };
    Ok((rule, prior))
}

/// Posterior-mean shrinkage of one coefficient.
#[pyfunction]
#[pyo3(signature = (d, prior="beta", alpha=0.9, m=3.0, a=2.0, sigma=1.0))]
fn shrink(d: f64, prior: &str, alpha: f64, m: f64, a: f64, sigma: f64) -> PyResult<f64> {
    let (rule, _) = rule_for(prior, a, alpha, m)?;
    rule.apply(d, NoiseModel::new(sigma).map_err(to_py)?)
        .map_err(to_py)
}

/// Bayes risk of the Bayes rule of a prior.
#[pyfunction]
#[pyo3(signature = (prior="beta", alpha=0.9, m=3.0, a=2.0, sigma=1.0))]
fn bayes_risk(prior: &str, alpha: f64, m: f64, a: f64, sigma: f64) -> PyResult<f64> {
    let (rule, p) = rule_for(prior, a, alpha, m)?;
    core_bayes_risk(&rule, &p, NoiseModel::new(sigma).map_err(to_py)?)
        .map(|r| r.value)
        .map_err(to_py)
}

/// Denoises a power-of-two length signal; returns `{"estimate", "sigma"}`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (samples, rule="beta", a=2.0, gamma=2.0, j0=3, filter_n=10, sigma=None))]
fn denoise<'py>(
    py: Python<'py>,
    samples: Vec<f64>,
    rule: &str,
    a: f64,
    gamma: f64,
    j0: usize,
    filter_n: usize,
    sigma: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let rule: RuleSpec = rule.parse().map_err(to_py)?;
    let policy = HyperPolicy {
        gamma,
        j0,
        a,
        sigma: sigma.map_or(SigmaSource::Estimated, SigmaSource::Provided),
        ..HyperPolicy::default()
    };
    let signal = core::Signal::new(samples).map_err(to_py)?;
    let filter = core::WaveletFilter::daubechies(filter_n).map_err(to_py)?;
    let out = core::denoise(&signal, &filter, &rule, &policy).map_err(to_py)?;
    let dict = PyDict::new(py);
    dict.set_item("estimate", out.estimate.into_samples())?;
    dict.set_item("sigma", out.sigma)?;
    Ok(dict)
}

/// Donoho–Johnstone test signal sampled at `i/n`.
#[pyfunction]
fn dj_signal(name: &str, n: usize) -> PyResult<Vec<f64>> {
    let s: core::signals::DjSignal = name.parse().map_err(to_py)?;
    core::signals::dj_signal(s, n)
        .map(core::Signal::into_samples)
        .map_err(to_py)
}

/// Runs a study from a JSON config and returns the AMSE table as CSV.
#[pyfunction]
fn simulate(config_json: &str) -> PyResult<String> {
    let config: core::sim::StudyConfig = core::io::parse_json(config_json).map_err(to_py)?;
    core::sim::run_study(&config)
        .map(|t| t.to_csv())
        .map_err(to_py)
}

/// Beta shape whose prior puts mass `p` below `k`.
#[pyfunction]
fn elicit_a(k: f64, p: f64, m: f64) -> PyResult<f64> {
    core::elicit_a(k, p, m).map(|e| e.a).map_err(to_py)
}

#[pymodule]
fn betashrink(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(shrink, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_risk, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(dj_signal, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(elicit_a, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
