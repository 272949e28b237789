use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_betashrink"))
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios")).join(name)
}

fn read_column(path: &Path, column: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == column).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

fn sd(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn write_noise(path: &Path, n: usize, seed: u64) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut text = String::from("y\n");
    for _ in 0..n {
        text.push_str(&format!("{}\n", rng.sample::<f64, _>(StandardNormal)));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn denoising_pure_noise_shrinks_it() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("noise.csv");
    let output = dir.path().join("out.csv");
    write_noise(&input, 1024, 4);
    run(bin().arg("denoise").arg("--input").arg(&input).arg("--output").arg(&output));
    let est = read_column(&output, "denoised");
    assert_eq!(est.len(), 1024);
    assert!(sd(&est) < 0.5, "sd {}", sd(&est));
    assert!(dir.path().join("out_diagnostics.json").exists());
}

#[test]
fn denoising_heavisine_improves_mse() {
    let dir = tempfile::tempdir().unwrap();
    let generated = dir.path().join("h.csv");
    run(bin()
        .args(["genfunc", "--name", "heavisine", "--n", "1024", "--snr", "4", "--seed", "11", "--output"])
        .arg(&generated));
    let clean = read_column(&generated, "f");
    let noisy = read_column(&generated, "y");
    let input = dir.path().join("y.csv");
    let body: String = noisy.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&input, format!("y\n{body}")).unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(&config, r#"{"schema_version": 1, "wavelet": "daub10"}"#).unwrap();

    for method in ["beta", "sure", "univ", "fdr"] {
        let output = dir.path().join(format!("{method}.csv"));
        run(bin()
            .args(["denoise", "--method", method, "--input"])
            .arg(&input)
            .arg("--output")
            .arg(&output)
            .arg("--config")
            .arg(&config));
        let est = read_column(&output, "denoised");
        let mse = |v: &[f64]| v.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / clean.len() as f64;
        assert!(mse(&est) < 0.5 * mse(&noisy), "{method}: {} vs {}", mse(&est), mse(&noisy));
    }
}

#[test]
fn three_column_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let generated = dir.path().join("h.csv");
    run(bin().args(["genfunc", "--name", "doppler", "--n", "64", "--snr", "4", "--output"]).arg(&generated));
    let out = bin().arg("denoise").arg("--input").arg(&generated).arg("--output").arg(dir.path().join("o.csv")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 columns"));
}

#[test]
fn denoise_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("noise.csv");
    write_noise(&input, 700, 9);
    let mut bytes = Vec::new();
    for i in 0..2 {
        let output = dir.path().join(format!("o{i}.csv"));
        let diag = dir.path().join(format!("d{i}.json"));
        run(bin()
            .args(["denoise", "--pad", "reflect", "--input"])
            .arg(&input)
            .arg("--output")
            .arg(&output)
            .arg("--diagnostics")
            .arg(&diag));
        bytes.push(std::fs::read(&output).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn diagnostics_report_levels() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("noise.csv");
    let diag = dir.path().join("diag.json");
    write_noise(&input, 512, 1);
    run(bin()
        .args(["denoise", "--j0", "3", "--a", "2", "--b", "5", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("o.csv"))
        .arg("--diagnostics")
        .arg(&diag));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&diag).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["j0"], 3);
    assert_eq!(v["levels"].as_array().unwrap().len(), 6);
    assert!((v["sigma_hat"].as_f64().unwrap() - 1.0).abs() < 0.2);
}

#[test]
fn short_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "y\n1\n2\n3\n").unwrap();
    let out = bin().arg("denoise").arg("--input").arg(&short).arg("--output").arg(dir.path().join("o.csv")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 16"));

    let bad = dir.path().join("bad.csv");
    let mut text = String::from("y\n");
    for i in 0..20 {
        text.push_str(&format!("{i}\n"));
    }
    text.push_str("oops\n");
    std::fs::write(&bad, text).unwrap();
    let out = bin().arg("denoise").arg("--input").arg(&bad).arg("--output").arg(dir.path().join("o.csv")).output().unwrap();
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!out.status.success());
    assert!(err.contains(":22:") && err.contains("oops"), "{err}");
}

#[test]
fn failure_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("noise.csv");
    write_noise(&input, 256, 2);
    let out = bin()
        .arg("denoise")
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("o.csv"))
        .arg("--diagnostics")
        .arg(dir.path().join("missing").join("d.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("noise.csv")]);
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let text = std::fs::read_to_string(bundled("function_doppler_small.json")).unwrap();
    std::fs::write(&path, text.replacen("\"snr\"", "\"snrr\"", 1)).unwrap();
    let out = bin()
        .arg("simulate")
        .arg("--scenario")
        .arg(&path)
        .arg("--output")
        .arg(dir.path().join("r.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("snrr"));
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn simulate_single_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        run(bin()
            .arg("simulate")
            .arg("--scenario")
            .arg(bundled("prior_moderate_small.json"))
            .args(["--runs", "1", "--seed", "7", "--format", "json", "--sequential", "--output"])
            .arg(&out));
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
        assert_eq!(v["per_run"].as_array().unwrap().len(), 4);
        assert_eq!(v["per_run"][0]["seed"], 7);
        files.push((v["per_run"].clone(), v["amse"].clone()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn risk_check_on_bundled_table() {
    let out = run(bin().arg("risk").arg("--config").arg(bundled("risk_alpha_sweep.json")).arg("--check"));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("alpha,a,b,m,sigma,bayes_risk,target,deviation"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn risk_check_reports_best_sigma_on_miss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("risk.json");
    std::fs::write(
        &cfg,
        r#"{"sigma": 1.0, "tolerance": 0.001, "priors": [{"alpha": 0.9, "a": 7, "b": 3, "m": 3, "target": 0.3}]}"#,
    )
    .unwrap();
    let out = bin().arg("risk").arg("--config").arg(&cfg).arg("--check").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("best-fitting sigma"));
}

#[test]
fn risk_curve_decomposes() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    run(bin().args(["risk", "--points", "41", "--curve"]).arg(&curve));
    let bias2 = read_column(&curve, "bias2");
    let variance = read_column(&curve, "variance");
    let risk = read_column(&curve, "risk");
    assert_eq!(risk.len(), 41);
    for i in 0..risk.len() {
        assert!((bias2[i] + variance[i] - risk[i]).abs() < 1e-10);
    }
    // default prior leans positive: more risk on the negative side
    assert!(risk[0] > risk[40]);
}

#[test]
fn genfunc_writes_the_function() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    run(bin().args(["genfunc", "--name", "blocks", "--n", "128", "--output"]).arg(&out));
    let f = read_column(&out, "f");
    assert_eq!(f.len(), 128);
    let header = std::fs::read_to_string(&out).unwrap();
    assert!(header.starts_with("x,f\n"));

    let bad = bin().args(["genfunc", "--name", "wiggle", "--output"]).arg(&out).output().unwrap();
    assert!(!bad.status.success());
}
