//! End-to-end tests of the `esprit` binary: exit-code contract, file
//! formats, and the synth -> estimate round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esprit"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("esprit-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

const VALID_CONFIG: &str = r#"{
    "locations": [0.1, 0.35],
    "intensities": [0.6, 0.4],
    "r": 2,
    "alpha": 0.0,
    "noise_kind": "none",
    "seed": 1,
    "n": 64
}"#;

#[test]
fn synth_writes_signal_file() {
    let dir = tmp_dir("synth-ok");
    let cfg = dir.join("m.json");
    let out = dir.join("sig.txt");
    write(&cfg, VALID_CONFIG);
    let res = run(bin().args(["synth", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(exit_code(&res), 0, "{res:?}");
    let contents = std::fs::read_to_string(&out).unwrap();
    assert_eq!(contents.lines().count(), 65); // n + header line
    assert_eq!(contents.lines().next().unwrap(), "64");
}

#[test]
fn synth_rejects_r_above_d() {
    let dir = tmp_dir("synth-r");
    let cfg = dir.join("m.json");
    write(&cfg, &VALID_CONFIG.replace("\"r\": 2", "\"r\": 3"));
    let res = run(bin().args(["synth", "--config"]).arg(&cfg).arg("--out").arg(dir.join("s.txt")));
    assert_eq!(exit_code(&res), 2);
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("r"), "stderr: {stderr}");
}

#[test]
fn synth_rejects_negative_alpha() {
    let dir = tmp_dir("synth-alpha");
    let cfg = dir.join("m.json");
    write(&cfg, &VALID_CONFIG.replace("\"alpha\": 0.0", "\"alpha\": -0.5"));
    let res = run(bin().args(["synth", "--config"]).arg(&cfg).arg("--out").arg(dir.join("s.txt")));
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn synth_estimate_round_trip_noiseless() {
    let dir = tmp_dir("roundtrip");
    let cfg = dir.join("m.json");
    let sig = dir.join("sig.txt");
    let est = dir.join("est.json");
    write(&cfg, VALID_CONFIG);
    assert_eq!(exit_code(&run(bin().args(["synth", "--config"]).arg(&cfg).arg("--out").arg(&sig))), 0);
    let res = run(bin()
        .args(["estimate", "--r", "2", "--solver", "fast", "--signal"])
        .arg(&sig)
        .arg("--out")
        .arg(&est));
    assert_eq!(exit_code(&res), 0, "{res:?}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&est).unwrap()).unwrap();
    let z_hat = v["z_hat"].as_array().unwrap();
    assert_eq!(z_hat.len(), 2);
    // truth: exp(2 pi i 0.1), exp(2 pi i 0.35); output sorted by argument
    let truth = [0.1f64, 0.35];
    for (zj, f) in z_hat.iter().zip(truth) {
        let re = zj["re"].as_f64().unwrap();
        let im = zj["im"].as_f64().unwrap();
        let want = num_complex::Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f);
        let err = (num_complex::Complex64::new(re, im) - want).norm();
        assert!(err <= 1e-8, "node error {err}");
    }
    let mu = v["mu_hat"].as_array().unwrap();
    assert!((mu[0].as_f64().unwrap() - 0.6).abs() <= 1e-8);
    assert!((mu[1].as_f64().unwrap() - 0.4).abs() <= 1e-8);
}

#[test]
fn estimate_rejects_truncated_signal() {
    let dir = tmp_dir("truncated");
    let sig = dir.join("sig.txt");
    write(&sig, "8\n1.0,0.0\n0.5,0.5\n");
    let res = run(bin().args(["estimate", "--r", "1", "--signal"]).arg(&sig));
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn estimate_rejects_r_equal_n() {
    let dir = tmp_dir("r-eq-n");
    let sig = dir.join("sig.txt");
    write(&sig, "2\n1.0,0.0\n0.5,0.5\n");
    let res = run(bin().args(["estimate", "--r", "2", "--signal"]).arg(&sig));
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn estimate_rejects_unknown_solver() {
    let dir = tmp_dir("solver");
    let sig = dir.join("sig.txt");
    write(&sig, "2\n1.0,0.0\n0.5,0.5\n");
    let res = run(bin().args(["estimate", "--r", "1", "--solver", "magic", "--signal"]).arg(&sig));
    assert_eq!(exit_code(&res), 2);
}

const BENCH_CONFIG: &str = r#"{
    "locations": [0.1, 0.35],
    "intensities": [0.6, 0.4],
    "r": 2,
    "alpha": 0.3,
    "n_grid": [16, 32, 64],
    "trials": 3,
    "base_seed": 7,
    "solver": "dense",
    "statistic": "median"
}"#;

#[test]
fn bench_scaling_writes_csv_and_json() {
    let dir = tmp_dir("bench");
    let cfg = dir.join("b.json");
    let csv = dir.join("rows.csv");
    let json = dir.join("summary.json");
    write(&cfg, BENCH_CONFIG);
    let res = run(bin()
        .args(["bench-scaling", "--threads", "2", "--config"])
        .arg(&cfg)
        .arg("--csv")
        .arg(&csv)
        .arg("--json")
        .arg(&json));
    assert_eq!(exit_code(&res), 0, "{res:?}");
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("n,trial,md_z,md_mu,wall_ms,failed\n"));
    assert_eq!(rows.lines().count(), 1 + 9);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v["failure_rate"].as_f64().unwrap() < 0.05);
    assert_eq!(v["per_n"].as_array().unwrap().len(), 3);
}

#[test]
fn bench_scaling_rejects_zero_trials() {
    let dir = tmp_dir("bench-zero");
    let cfg = dir.join("b.json");
    write(&cfg, &BENCH_CONFIG.replace("\"trials\": 3", "\"trials\": 0"));
    let res = run(bin().args(["bench-scaling", "--config"]).arg(&cfg));
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn bench_scaling_rejects_unknown_solver_name() {
    let dir = tmp_dir("bench-solver");
    let cfg = dir.join("b.json");
    write(&cfg, &BENCH_CONFIG.replace("\"dense\"", "\"cholesky\""));
    let res = run(bin().args(["bench-scaling", "--config"]).arg(&cfg));
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn verify_schur_passes() {
    let res = run(bin().args(["verify", "--suite", "schur"]));
    assert_eq!(exit_code(&res), 0, "{res:?}");
    let v: serde_json::Value = serde_json::from_str(&String::from_utf8_lossy(&res.stdout)).unwrap();
    assert_eq!(v[0]["failures"].as_u64().unwrap(), 0);
}

#[test]
fn verify_forced_failure_exits_nonzero() {
    let res = run(bin()
        .args(["verify", "--suite", "schur"])
        .env("ESPRIT_VERIFY_FORCE_FAIL", "1"));
    assert_ne!(exit_code(&res), 0);
}

#[test]
fn verify_rejects_unknown_suite() {
    let res = run(bin().args(["verify", "--suite", "nonsense"]));
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn missing_config_file_is_io_error() {
    let res = run(bin().args(["synth", "--config", "/nonexistent/cfg.json", "--out", "/tmp/x.txt"]));
    assert_eq!(exit_code(&res), 1);
}
