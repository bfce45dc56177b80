use std::fs;
use std::path::Path;
use std::process::Command;

use betashrink_core::io::parse_samples;
use betashrink_core::signals::{add_noise, dj_signal, mse, DjSignal};
use betashrink_core::Signal;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_betashrink"))
}

fn write_column(path: &Path, header: Option<&str>, values: &[f64]) {
    let mut s = header.map(|h| format!("{h}\n")).unwrap_or_default();
    for v in values {
        s.push_str(&format!("{v:?}\n"));
    }
    fs::write(path, s).unwrap();
}

fn read_column(path: &Path) -> Vec<f64> {
    parse_samples(&fs::read_to_string(path).unwrap(), 0)
        .unwrap()
        .values
}

#[test]
fn zero_input_denoises_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zeros.txt");
    write_column(&input, None, &[0.0; 1024]);
    let out = dir.path().join("out");
    let status = bin()
        .args(["denoise", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let est = read_column(&out.join("denoised.csv"));
    assert_eq!(est.len(), 1024);
    assert!(est.iter().all(|v| *v == 0.0));
    let coeffs = fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(coeffs.starts_with("level,k,empirical,shrunk\n"));
    assert_eq!(coeffs.lines().count(), 1 + 1024 - 8);
}

#[test]
fn denoising_noisy_bumps_lowers_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dj_signal(DjSignal::Bumps, 2048).unwrap();
    let (noisy, _) = add_noise(&truth, 5.0, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
    let input = dir.path().join("bumps.csv");
    write_column(&input, Some("value"), noisy.samples());
    for rule in [
        "beta",
        "triangular",
        "bickel",
        "sure",
        "fdr",
        "universal-hard",
    ] {
        let out = dir.path().join(rule);
        let output = bin()
            .args(["denoise", "--rule", rule, "--input"])
            .arg(&input)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{rule}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(String::from_utf8_lossy(&output.stdout).contains("sigma_hat="));
        let est = Signal::new(read_column(&out.join("denoised.csv"))).unwrap();
        assert!(
            mse(&est, &truth).unwrap() < mse(&noisy, &truth).unwrap(),
            "{rule}"
        );
    }
}

#[test]
fn non_dyadic_input_is_truncated_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("odd.txt");
    let values: Vec<f64> = (0..1500).map(|i| (i as f64 * 0.01).sin()).collect();
    write_column(&input, None, &values);
    let out = dir.path().join("out");
    let ok = bin()
        .args(["denoise", "--rule", "sure", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("read 1500 samples, used 1024"));
    assert_eq!(read_column(&out.join("denoised.csv")).len(), 1024);

    let strict = bin()
        .args(["denoise", "--strict", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(strict.code(), Some(3));
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "x\n1\n2\nthree\n").unwrap();
    let r = bin()
        .args(["denoise", "--input"])
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 4"));

    let one = dir.path().join("one.txt");
    fs::write(&one, "1\n").unwrap();
    let r = bin()
        .args(["denoise", "--input"])
        .arg(&one)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(r.code(), Some(3));

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"M": 0}"#).unwrap();
    let r = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("replications"));

    let r = bin()
        .args(["risk", "--a=-1"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(r.code(), Some(2));
    let r = bin()
        .args(["risk", "--grid", "1:0:1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(r.code(), Some(2));
    let r = bin()
        .args(["denoise", "--rule", "wiener", "--input", "x", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(r.code(), Some(2));
}

#[test]
fn simulate_writes_one_row_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"signal": "Bumps", "n": 512, "snr": 3, "M": 2, "rules": ["UniversalSoft"], "seed": 1}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let s = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(s.success());
    }
    let csv = fs::read_to_string(a.join("amse.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("signal,n,snr,rule,amse,se,M\nBumps,512,3.0,universal-soft,"));
    assert_eq!(csv, fs::read_to_string(b.join("amse.csv")).unwrap());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["filter"], 10);
    assert_eq!(manifest["config"]["policy"]["j0"], 3);
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn risk_reports_curves_and_bayes_risk() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("risk");
    let s = bin()
        .args([
            "risk",
            "--prior",
            "triangular",
            "--alpha",
            "0.9",
            "--grid",
            "0",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(s.success());
    let csv = fs::read_to_string(out.join("risk.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,bias_sq,variance,classical_risk");
    let row: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(row[0], 0.0);
    assert_eq!(row[1], 0.0);
    assert_eq!(row[2], row[3]);
    let bayes: f64 = lines[2]
        .strip_prefix("# bayes_risk,")
        .unwrap()
        .parse()
        .unwrap();
    assert!((bayes - 0.119).abs() < 0.005);
}

#[test]
fn triangular_risk_falls_with_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let mut last = f64::INFINITY;
    for alpha in ["0.6", "0.7", "0.8", "0.9", "0.99"] {
        let out = dir.path().join(alpha);
        let o = bin()
            .args([
                "risk",
                "--prior",
                "triangular",
                "--grid",
                "0",
                "--alpha",
                alpha,
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success());
        let csv = fs::read_to_string(out.join("risk.csv")).unwrap();
        let r: f64 = csv
            .lines()
            .last()
            .unwrap()
            .strip_prefix("# bayes_risk,")
            .unwrap()
            .parse()
            .unwrap();
        assert!(r < last, "alpha={alpha}");
        last = r;
    }
}
