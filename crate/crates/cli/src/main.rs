//! `esprit` command-line tool: synthesize measurement series, run the
//! ESPRIT estimator, benchmark error scaling against the cutoff frequency,
//! and execute the verification oracle suites.
//!
//! Exit codes: 0 success, 1 IO error, 2 config/precondition error,
//! 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use esprit_core::analysis::{
    lower_bound_suite, moitra_suite, noise_norm_suite, perturbation_suite, schur_suite,
    OracleReport,
};
use esprit_core::esprit::{self, EspritError, Solver};
use esprit_core::experiments::{run_scaling, rows_to_csv, summarize, ScalingConfigFile};
use esprit_core::signal::{
    read_signal, sample_noise, separation, synthesize, tail_mass, write_signal, MeasureConfig,
    SignalError,
};

#[derive(Parser)]
#[command(name = "esprit", version, about = "ESPRIT spectral estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a measurement series from a JSON measure config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the ESPRIT estimator on a signal file.
    Estimate {
        /// Signal file as written by `synth`.
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value = "dense", value_parser = std::str::FromStr::from_str as fn(&str) -> std::result::Result<Solver, String>)]
        solver: Solver,
        /// Seed for the fast solver's iteration start.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep n and fit log-log error slopes.
    BenchScaling {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Worker threads (default: logical cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run verification oracle suites; exit 0 iff zero failures.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0x5EED)]
        seed: u64,
        /// JSON report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Moitra,
    Perturbation,
    Schur,
    #[value(alias = "noise_norm")]
    NoiseNorm,
    #[value(alias = "lower_bound")]
    LowerBound,
}

enum AppError {
    Io(String),
    Config(String),
    Numerical(String),
}

impl AppError {
    fn exit(&self) -> ExitCode {
        let (code, label, msg) = match self {
            AppError::Io(m) => (1, "io", m),
            AppError::Config(m) => (2, "config", m),
            AppError::Numerical(m) => (3, "numerical", m),
        };
        eprintln!("error ({label}): {msg}");
        ExitCode::from(code)
    }
}

type Result<T> = std::result::Result<T, AppError>;

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents)
            .map_err(|e| AppError::Io(format!("{}: {e}", p.display()))),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

/// Measure config plus the number of measurements to synthesize.
#[derive(Serialize, Deserialize)]
struct SynthConfig {
    #[serde(flatten)]
    measure: MeasureConfig,
    n: usize,
}

fn signal_error_to_app(e: SignalError) -> AppError {
    match e {
        SignalError::Io(m) => AppError::Io(m),
        other => AppError::Config(other.to_string()),
    }
}

fn cmd_synth(config: &Path, out: &Path) -> Result<()> {
    let cfg: SynthConfig = serde_json::from_str(&read_to_string(config)?)
        .map_err(|e| AppError::Config(format!("{}: {e}", config.display())))?;
    if cfg.n < 1 {
        return Err(AppError::Config("n must be >= 1".into()));
    }
    let (measure, noise_spec) = cfg.measure.build().map_err(signal_error_to_app)?;
    let mut g = synthesize(&measure, cfg.n);
    let noise = sample_noise(cfg.n, &noise_spec);
    for (s, e) in g.samples.iter_mut().zip(&noise) {
        *s += e;
    }
    write_signal(out, &g).map_err(signal_error_to_app)?;
    let (mu_tail, _) = tail_mass(&measure);
    println!(
        "n = {}, delta_z = {:.6}, mu_tail = {:.6}",
        cfg.n,
        separation(&measure),
        mu_tail.max(0.0)
    );
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput {
    z_hat: Vec<ReIm>,
    args: Vec<f64>,
    mu_hat: Vec<f64>,
    solver: Solver,
    wall_ms: f64,
    diagnostics: esprit_core::esprit::Diagnostics,
}

#[derive(Serialize)]
struct ReIm {
    re: f64,
    im: f64,
}

fn cmd_estimate(
    signal: &Path,
    r: usize,
    solver: Solver,
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<()> {
    let g = read_signal(signal).map_err(signal_error_to_app)?;
    let res = esprit::run(&g, r, solver, seed).map_err(|e| match e {
        EspritError::InvalidRank { .. } => AppError::Config(e.to_string()),
        other => AppError::Numerical(other.to_string()),
    })?;
    let output = EstimateOutput {
        args: res.z_hat.iter().map(|z| z.arg().rem_euclid(2.0 * std::f64::consts::PI)).collect(),
        z_hat: res.z_hat.iter().map(|z| ReIm { re: z.re, im: z.im }).collect(),
        mu_hat: res.mu_hat,
        solver: res.solver_used,
        wall_ms: res.wall_time.as_secs_f64() * 1e3,
        diagnostics: res.diagnostics,
    };
    write_output(out, &serde_json::to_string_pretty(&output).unwrap())
}

fn cmd_bench_scaling(
    config: &Path,
    csv: &Option<PathBuf>,
    json: &Option<PathBuf>,
    threads: Option<usize>,
) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| AppError::Config(e.to_string()))?;
    }
    let cfg_file: ScalingConfigFile = serde_json::from_str(&read_to_string(config)?)
        .map_err(|e| AppError::Config(format!("{}: {e}", config.display())))?;
    let cfg = cfg_file.build().map_err(|e| AppError::Config(e.to_string()))?;
    let rows = run_scaling(&cfg).map_err(|e| AppError::Numerical(e.to_string()))?;
    if let Some(p) = csv {
        std::fs::write(p, rows_to_csv(&rows))
            .map_err(|e| AppError::Io(format!("{}: {e}", p.display())))?;
    }
    let summary = summarize(&rows, cfg.statistic).map_err(|e| AppError::Numerical(e.to_string()))?;
    for per_n in &summary.per_n {
        println!(
            "n = {:>6}: median md_z = {:.3e}, median md_mu = {:.3e}",
            per_n.n, per_n.median_md_z, per_n.median_md_mu
        );
    }
    match summary.slope_z {
        Some(s) => println!("slope_z  = {s:.4}"),
        None => println!("slope_z  = floor reached (all medians < 1e-8)"),
    }
    match summary.slope_mu {
        Some(s) => println!("slope_mu = {s:.4}"),
        None => println!("slope_mu = floor reached (all medians < 1e-8)"),
    }
    println!("failure_rate = {:.4}", summary.failure_rate);
    if let Some(p) = json {
        std::fs::write(p, serde_json::to_string_pretty(&summary).unwrap())
            .map_err(|e| AppError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn cmd_verify(suite: Suite, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    let mut reports: Vec<OracleReport> = Vec::new();
    if matches!(suite, Suite::All | Suite::Moitra) {
        reports.push(moitra_suite(seed));
    }
    if matches!(suite, Suite::All | Suite::Perturbation) {
        reports.extend(perturbation_suite(seed));
    }
    if matches!(suite, Suite::All | Suite::Schur) {
        reports.push(schur_suite(seed));
    }
    if matches!(suite, Suite::All | Suite::NoiseNorm) {
        reports.push(noise_norm_suite(seed));
    }
    if matches!(suite, Suite::All | Suite::LowerBound) {
        reports.push(lower_bound_suite());
    }
    // Test-only hook: flip one report to a failure so scripted callers can
    // verify the nonzero-exit contract without a real tolerance break.
    if std::env::var_os("ESPRIT_VERIFY_FORCE_FAIL").is_some() {
        if let Some(first) = reports.first_mut() {
            first.failures += 1;
        }
    }
    write_output(out, &serde_json::to_string_pretty(&reports).unwrap())?;
    let failures: usize = reports.iter().map(|r| r.failures).sum();
    for r in &reports {
        eprintln!(
            "{}: {} instances, {} failures, worst slack {:.3e}",
            r.oracle_name, r.instances, r.failures, r.worst_slack
        );
    }
    if failures > 0 {
        return Err(AppError::Numerical(format!("{failures} oracle failures")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth { config, out } => cmd_synth(config, out),
        Command::Estimate { signal, r, solver, seed, out } => {
            cmd_estimate(signal, *r, *solver, *seed, out)
        }
        Command::BenchScaling { config, csv, json, threads } => {
            cmd_bench_scaling(config, csv, json, *threads)
        }
        Command::Verify { suite, seed, out } => cmd_verify(*suite, *seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.exit(),
    }
}
