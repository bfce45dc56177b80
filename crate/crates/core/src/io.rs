//! Sample ingestion, CSV emission and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::denoise::{Denoised, RuleSpec};
use crate::error::{Error, Result};
use crate::hyper::HyperPolicy;
use crate::risk::RiskReport;
use crate::sim::{fmt_number, StudyConfig};
use crate::wavelet::WaveletDecomposition;

/// Samples read from a text stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub values: Vec<f64>,
    pub header: Option<String>,
}

/// Newline-delimited numbers, one optional header line. Lines may carry
/// several fields split by `,`, `;`, tabs or spaces; `column` picks one.
pub fn parse_samples(text: &str, column: usize) -> Result<Samples> {
    let mut values = Vec::new();
    let mut header = None;
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let field = fields.get(column).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("no column {column} in `{line}`"),
        })?;
        let field = field.trim_matches('"');
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value `{field}`"),
                })
            }
            Err(_) if !seen_content => header = Some(line.to_string()),
            Err(_) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("`{field}` is not a number"),
                })
            }
        }
        seen_content = true;
    }
    Ok(Samples { values, header })
}

pub fn read_samples(path: &Path, column: usize) -> Result<Samples> {
    let text = fs::read_to_string(path).map_err(|e| annotate_io(e, path))?;
    parse_samples(&text, column)
}

/// How a non-dyadic input is cut down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Keep the longest leading power-of-two prefix.
    #[default]
    Prefix,
    /// Refuse inputs whose length is not a power of two.
    Strict,
    /// Keep exactly this many leading samples (a power of two).
    Length(usize),
}

/// Length to keep out of `n` samples.
pub fn dyadic_length(n: usize, policy: Truncation) -> Result<usize> {
    if n < 2 {
        return Err(Error::Shape(format!("need at least 2 samples, got {n}")));
    }
    match policy {
        Truncation::Prefix => Ok(1usize << n.ilog2()),
        Truncation::Strict if n.is_power_of_two() => Ok(n),
        Truncation::Strict => Err(Error::Shape(format!(
            "{n} samples is not a power of two (drop the strict flag to keep the leading {})",
            1usize << n.ilog2()
        ))),
        Truncation::Length(k) if k >= 2 && k.is_power_of_two() && k <= n => Ok(k),
        Truncation::Length(k) => Err(Error::Shape(format!(
            "cannot keep {k} of {n} samples: need a power of two between 2 and {n}"
        ))),
    }
}

/// JSON from `text`, reporting the path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            "<root>".to_string()
        } else {
            path
        };
        Error::schema(field, e.into_inner().to_string())
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| annotate_io(e, path))?;
    parse_json(&text)
}

fn annotate_io(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| annotate_io(e, dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| annotate_io(e, &path))?;
    Ok(path)
}

/// Single-column CSV with header `denoised`; reads back through [`parse_samples`].
pub fn signal_csv(values: &[f64]) -> String {
    let mut out = String::from("denoised\n");
    for v in values {
        out.push_str(&fmt_number(*v));
        out.push('\n');
    }
    out
}

/// Detail coefficients before and after shrinkage, `level,k,empirical,shrunk`.
pub fn coefficients_csv(empirical: &WaveletDecomposition, shrunk: &WaveletDecomposition) -> String {
    let mut out = String::from("level,k,empirical,shrunk\n");
    for ((j, emp), (_, shr)) in empirical.levels().zip(shrunk.levels()) {
        for (k, (e, s)) in emp.iter().zip(shr).enumerate() {
            let _ = writeln!(out, "{j},{k},{},{}", fmt_number(*e), fmt_number(*s));
        }
    }
    out
}

fn opt_number(x: Option<f64>) -> String {
    x.map(fmt_number).unwrap_or_default()
}

/// Per-level hyperparameters, `level,alpha,m,threshold,passthrough`.
pub fn levels_csv(result: &Denoised) -> String {
    let mut out = String::from("level,alpha,m,threshold,passthrough\n");
    for l in &result.levels {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            l.level,
            opt_number(l.alpha),
            opt_number(l.m),
            opt_number(l.threshold),
            l.passthrough
        );
    }
    out
}

/// `theta,bias_sq,variance,classical_risk` rows; the Bayes risk follows as a
/// `# bayes_risk,<value>` comment line.
pub fn risk_csv(report: &RiskReport) -> String {
    let mut out = String::from("theta,bias_sq,variance,classical_risk\n");
    for i in 0..report.theta_grid.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_number(report.theta_grid[i]),
            fmt_number(report.bias_sq[i]),
            fmt_number(report.variance[i]),
            fmt_number(report.classical_risk[i])
        );
    }
    if let Some(b) = report.bayes_risk {
        let _ = writeln!(out, "# bayes_risk,{}", fmt_number(b));
    }
    out
}

/// `LO:HI:STEP`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Argument(format!("grid `{s}` is not LO:HI:STEP"));
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let grid = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Grid {
                    lo: v,
                    hi: v,
                    step: 1.0,
                }
            }
            [lo, hi, step] => Grid {
                lo: num(lo)?,
                hi: num(hi)?,
                step: num(step)?,
            },
            _ => return Err(bad()),
        };
        grid.points()?;
        Ok(grid)
    }
}

impl Grid {
    const MAX_POINTS: usize = 1_000_000;

    pub fn points(&self) -> Result<Vec<f64>> {
        let Grid { lo, hi, step } = *self;
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || hi < lo || step <= 0.0 {
            return Err(Error::Argument(format!(
                "grid {lo}:{hi}:{step} needs finite LO <= HI and STEP > 0"
            )));
        }
        // Tolerate HI landing a rounding error short of the last step.
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > Self::MAX_POINTS {
            return Err(Error::Argument(format!(
                "grid has {count} points (limit {})",
                Self::MAX_POINTS
            )));
        }
        Ok((0..count).map(|i| lo + step * i as f64).collect())
    }
}

/// Family of the prior behind `risk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorFamily {
    Beta,
    Triangular,
    Bickel,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub column: usize,
    pub rule: RuleSpec,
    /// Daubechies vanishing moments.
    pub filter: usize,
    pub policy: HyperPolicy,
    #[serde(default)]
    pub truncation: Truncation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub prior: PriorFamily,
    pub a: f64,
    pub alpha: f64,
    pub m: f64,
    pub sigma: f64,
    pub grid: Grid,
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "snake_case")]
pub enum CommandConfig {
    Denoise(DenoiseConfig),
    Simulate(StudyConfig),
    Risk(RiskConfig),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Denoise(_) => "denoise",
            CommandConfig::Simulate(_) => "simulate",
            CommandConfig::Risk(_) => "risk",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            CommandConfig::Simulate(c) => Some(c.seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub command: CommandConfig,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: CommandConfig, started_unix: f64, outputs: Vec<String>) -> Self {
        Self {
            seed: command.seed(),
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix: unix_now(),
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected_once() {
        let s = parse_samples("value\n1.5\n\n-2e3\n", 0).unwrap();
        assert_eq!(s.values, vec![1.5, -2000.0]);
        assert_eq!(s.header.as_deref(), Some("value"));
        let plain = parse_samples("1\n2\n", 0).unwrap();
        assert!(plain.header.is_none());
    }

    #[test]
    fn bad_line_is_reported_with_its_number() {
        match parse_samples("x\n1\n2\nabc\n", 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_samples("1\nnan\n", 0),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn columns_and_delimiters() {
        let s = parse_samples("t;v\n0;1.0\n1;2.0\n", 1).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0]);
        let s = parse_samples("0\t3\n1  4\n", 1).unwrap();
        assert_eq!(s.values, vec![3.0, 4.0]);
        assert!(parse_samples("1\n", 2).is_err());
    }

    #[test]
    fn truncation_policies() {
        assert_eq!(dyadic_length(20000, Truncation::Prefix).unwrap(), 16384);
        assert_eq!(dyadic_length(1024, Truncation::Strict).unwrap(), 1024);
        assert!(dyadic_length(1000, Truncation::Strict).is_err());
        assert_eq!(dyadic_length(1000, Truncation::Length(256)).unwrap(), 256);
        assert!(dyadic_length(1000, Truncation::Length(2048)).is_err());
        assert!(matches!(
            dyadic_length(1, Truncation::Prefix),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn grid_includes_both_ends() {
        let g: Grid = "0:3:0.1".parse().unwrap();
        let p = g.points().unwrap();
        assert_eq!(p.len(), 31);
        assert!((p[30] - 3.0).abs() < 1e-12);
        assert_eq!("0".parse::<Grid>().unwrap().points().unwrap(), vec![0.0]);
        assert!("3:0:1".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
    }

    #[test]
    fn schema_errors_name_the_path() {
        match parse_json::<StudyConfig>(r#"{"policy": {"gamma": "two"}}"#) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "policy.gamma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest::new(
            CommandConfig::Simulate(StudyConfig::default()),
            1.0,
            vec!["amse.csv".into()],
        );
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.seed, Some(1));
    }
}
