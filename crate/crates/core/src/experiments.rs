//! Monte Carlo harness: sweep the cutoff frequency n, estimate with ESPRIT
//! under seeded noise, and fit log-log slopes of the matching-distance
//! errors against n.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::esprit::{self, Solver};
use crate::rng::mix;
use crate::signal::{
    matching_distance, new_measure, sample_noise, synthesize, NoiseKind, NoiseSpec,
    SpectralMeasure,
};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentsError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("insufficient data: need >= 3 distinct n values with a successful trial each, got {0}")]
    InsufficientData(usize),
}

pub type Result<T> = std::result::Result<T, ExperimentsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    Median,
    Mean,
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub measure: SpectralMeasure,
    pub alpha: f64,
    /// Ascending powers of two, each >= r + 2.
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub solver: Solver,
    pub statistic: Statistic,
}

/// JSON form of a scaling experiment consumed by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingConfigFile {
    pub locations: Vec<f64>,
    pub intensities: Vec<f64>,
    pub r: usize,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub solver: Solver,
    #[serde(default)]
    pub statistic: Statistic,
}

impl ScalingConfigFile {
    pub fn build(&self) -> Result<ScalingConfig> {
        let measure = new_measure(&self.locations, &self.intensities, self.r)
            .map_err(|e| ExperimentsError::ConfigInvalid(e.to_string()))?;
        let cfg = ScalingConfig {
            measure,
            alpha: self.alpha,
            n_grid: self.n_grid.clone(),
            trials: self.trials,
            base_seed: self.base_seed,
            solver: self.solver,
            statistic: self.statistic,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(ExperimentsError::ConfigInvalid("trials must be >= 1".into()));
        }
        if self.alpha < 0.0 {
            return Err(ExperimentsError::ConfigInvalid("alpha must be >= 0".into()));
        }
        if self.n_grid.is_empty() {
            return Err(ExperimentsError::ConfigInvalid("n_grid must be nonempty".into()));
        }
        let mut prev = 0usize;
        for &n in &self.n_grid {
            if !n.is_power_of_two() {
                return Err(ExperimentsError::ConfigInvalid(format!(
                    "n_grid entry {n} is not a power of two"
                )));
            }
            if n < self.measure.r() + 2 {
                return Err(ExperimentsError::ConfigInvalid(format!(
                    "n_grid entry {n} below r + 2 = {}",
                    self.measure.r() + 2
                )));
            }
            if n <= prev {
                return Err(ExperimentsError::ConfigInvalid("n_grid must be strictly ascending".into()));
            }
            prev = n;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub trial: u64,
    pub md_z: f64,
    pub md_mu: f64,
    pub wall_ms: f64,
    pub failed: bool,
}

fn run_trial(cfg: &ScalingConfig, n: usize, trial: u64) -> ScalingRow {
    let seed = mix(cfg.base_seed, n as u64, trial);
    let mut g = synthesize(&cfg.measure, n);
    if cfg.alpha > 0.0 {
        let spec = NoiseSpec { alpha: cfg.alpha, kind: NoiseKind::ComplexGaussian, seed };
        let noise = sample_noise(n, &spec);
        for (s, e) in g.samples.iter_mut().zip(&noise) {
            *s += e;
        }
    }
    let r = cfg.measure.r();
    match esprit::run(&g, r, cfg.solver, mix(seed, 0x50_57, 0)) {
        Ok(res) => {
            let z_true = cfg.measure.dominant_nodes();
            let mu_true = cfg.measure.dominant_intensities();
            // One permutation scores both errors: match on locations, reuse
            // the pairing for intensities.
            let (md_z, perm) = matching_distance(&z_true, &res.z_hat)
                .expect("r <= 8 enforced by the measure");
            let md_mu = mu_true
                .iter()
                .zip(&perm)
                .map(|(&mu, &j)| (mu - res.mu_hat[j]).abs())
                .fold(0.0, f64::max);
            ScalingRow {
                n,
                trial,
                md_z,
                md_mu,
                wall_ms: res.wall_time.as_secs_f64() * 1e3,
                failed: false,
            }
        }
        Err(_) => ScalingRow { n, trial, md_z: f64::NAN, md_mu: f64::NAN, wall_ms: 0.0, failed: true },
    }
}

/// Runs every (n, trial) cell in parallel. Rows come back sorted by
/// (n, trial) and depend only on the config, not on scheduling.
pub fn run_scaling(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.trials as u64).map(move |t| (n, t)))
        .collect();
    let mut rows: Vec<ScalingRow> = cells
        .par_iter()
        .map(|&(n, trial)| run_trial(cfg, n, trial))
        .collect();
    rows.sort_by_key(|r| (r.n, r.trial));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdField {
    Location,
    Intensity,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerN {
    pub n: usize,
    pub median_md_z: f64,
    pub median_md_mu: f64,
}

#[derive(Debug, Clone)]
pub enum FitOutcome {
    Fitted { slope: f64, intercept: f64 },
    /// Every per-n statistic sits below 1e-8: the errors hit the numerical
    /// floor and a fitted slope would be meaningless.
    FloorReached,
}

fn statistic_of(values: &mut Vec<f64>, statistic: Statistic) -> f64 {
    match statistic {
        Statistic::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Statistic::Median => {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = values.len();
            if k % 2 == 1 {
                values[k / 2]
            } else {
                0.5 * (values[k / 2 - 1] + values[k / 2])
            }
        }
    }
}

fn per_n_statistic(
    rows: &[ScalingRow],
    statistic: Statistic,
    field: MdField,
) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut out = Vec::new();
    for n in ns {
        let mut vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n && !r.failed)
            .map(|r| match field {
                MdField::Location => r.md_z,
                MdField::Intensity => r.md_mu,
            })
            .collect();
        if !vals.is_empty() {
            out.push((n, statistic_of(&mut vals, statistic)));
        }
    }
    out
}

/// Ordinary least squares of log2(statistic of md) on log2(n).
pub fn fit_slope(rows: &[ScalingRow], statistic: Statistic, field: MdField) -> Result<FitOutcome> {
    let stats = per_n_statistic(rows, statistic, field);
    if stats.len() < 3 {
        return Err(ExperimentsError::InsufficientData(stats.len()));
    }
    if stats.iter().all(|&(_, v)| v < 1e-8) {
        return Ok(FitOutcome::FloorReached);
    }
    let pts: Vec<(f64, f64)> = stats
        .iter()
        .map(|&(n, v)| ((n as f64).log2(), v.max(f64::MIN_POSITIVE).log2()))
        .collect();
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let intercept = (sy - slope * sx) / k;
    Ok(FitOutcome::Fitted { slope, intercept })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingSummary {
    /// None when the location errors hit the numerical floor.
    pub slope_z: Option<f64>,
    pub slope_mu: Option<f64>,
    pub per_n: Vec<PerN>,
    pub failure_rate: f64,
}

pub fn summarize(rows: &[ScalingRow], statistic: Statistic) -> Result<ScalingSummary> {
    let slope_of = |field| -> Result<Option<f64>> {
        Ok(match fit_slope(rows, statistic, field)? {
            FitOutcome::Fitted { slope, .. } => Some(slope),
            FitOutcome::FloorReached => None,
        })
    };
    let z_stats = per_n_statistic(rows, Statistic::Median, MdField::Location);
    let mu_stats = per_n_statistic(rows, Statistic::Median, MdField::Intensity);
    let per_n = z_stats
        .iter()
        .zip(&mu_stats)
        .map(|(&(n, z), &(_, mu))| PerN { n, median_md_z: z, median_md_mu: mu })
        .collect();
    let failures = rows.iter().filter(|r| r.failed).count();
    Ok(ScalingSummary {
        slope_z: slope_of(MdField::Location)?,
        slope_mu: slope_of(MdField::Intensity)?,
        per_n,
        failure_rate: failures as f64 / rows.len().max(1) as f64,
    })
}

/// CSV with header `n,trial,md_z,md_mu,wall_ms,failed`; float fields use
/// shortest-roundtrip formatting so identical configs produce identical
/// bytes.
pub fn rows_to_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("n,trial,md_z,md_mu,wall_ms,failed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.trial, r.md_z, r.md_mu, r.wall_ms, r.failed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(alpha: f64) -> ScalingConfig {
        ScalingConfig {
            measure: new_measure(&[0.1, 0.35], &[0.6, 0.4], 2).unwrap(),
            alpha,
            n_grid: vec![16, 32, 64],
            trials: 3,
            base_seed: 7,
            solver: Solver::Dense,
            statistic: Statistic::Median,
        }
    }

    #[test]
    fn noiseless_rows_hit_floor() {
        let cfg = small_config(0.0);
        let rows = run_scaling(&cfg).unwrap();
        assert_eq!(rows.len(), 9);
        for row in &rows {
            assert!(!row.failed);
            assert!(row.md_z <= 1e-8, "md_z = {}", row.md_z);
        }
        assert!(matches!(
            fit_slope(&rows, Statistic::Median, MdField::Location).unwrap(),
            FitOutcome::FloorReached
        ));
        let summary = summarize(&rows, Statistic::Median).unwrap();
        assert!(summary.slope_z.is_none());
        assert_eq!(summary.failure_rate, 0.0);
    }

    #[test]
    fn determinism_and_csv_bytes() {
        let cfg = small_config(0.3);
        let a = run_scaling(&cfg).unwrap();
        let b = run_scaling(&cfg).unwrap();
        // Everything except wall-clock timing must be bit-identical.
        let key = |rows: &[ScalingRow]| -> Vec<(usize, u64, f64, f64, bool)> {
            rows.iter().map(|r| (r.n, r.trial, r.md_z, r.md_mu, r.failed)).collect()
        };
        assert_eq!(key(&a), key(&b));
        // distinct seeds change the rows
        let mut cfg2 = cfg.clone();
        cfg2.base_seed = 8;
        let c = run_scaling(&cfg2).unwrap();
        assert_ne!(key(&a), key(&c));
    }

    #[test]
    fn planted_power_laws() {
        let synth = |f: fn(f64) -> f64| -> Vec<ScalingRow> {
            [16usize, 32, 64, 128]
                .iter()
                .map(|&n| ScalingRow {
                    n,
                    trial: 0,
                    md_z: f(n as f64),
                    md_mu: f(n as f64),
                    wall_ms: 0.0,
                    failed: false,
                })
                .collect()
        };
        let rows = synth(|n| n.powf(-1.5));
        match fit_slope(&rows, Statistic::Median, MdField::Location).unwrap() {
            FitOutcome::Fitted { slope, .. } => assert!((slope + 1.5).abs() < 1e-10),
            _ => panic!("expected fit"),
        }
        let rows = synth(|_| 0.25);
        match fit_slope(&rows, Statistic::Median, MdField::Location).unwrap() {
            FitOutcome::Fitted { slope, .. } => assert!(slope.abs() < 1e-10),
            _ => panic!("expected fit"),
        }
        let rows = synth(|n| 4.0 / n);
        match fit_slope(&rows, Statistic::Mean, MdField::Location).unwrap() {
            FitOutcome::Fitted { slope, intercept } => {
                assert!((slope + 1.0).abs() < 1e-10);
                assert!((intercept - 2.0).abs() < 1e-10);
            }
            _ => panic!("expected fit"),
        }
    }

    #[test]
    fn insufficient_data() {
        let rows = vec![ScalingRow { n: 16, trial: 0, md_z: 0.1, md_mu: 0.1, wall_ms: 0.0, failed: false }];
        assert!(matches!(
            fit_slope(&rows, Statistic::Median, MdField::Location),
            Err(ExperimentsError::InsufficientData(1))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config(0.1);
        cfg.n_grid = vec![16, 48];
        assert!(matches!(cfg.validate(), Err(ExperimentsError::ConfigInvalid(_))));
        let mut cfg = small_config(0.1);
        cfg.n_grid = vec![32, 16];
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(0.1);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let file = ScalingConfigFile {
            locations: vec![0.1, 0.1],
            intensities: vec![0.5, 0.5],
            r: 2,
            alpha: 0.1,
            n_grid: vec![16, 32, 64],
            trials: 2,
            base_seed: 1,
            solver: Solver::Dense,
            statistic: Statistic::Median,
        };
        assert!(file.build().is_err()); // coincident locations
    }

    #[test]
    fn same_permutation_scores_intensities() {
        // Two well-separated sources with distinct intensities; the md_mu of
        // a noiseless run must be tiny, which fails if the permutation from
        // the location matching were not reused.
        let cfg = ScalingConfig {
            measure: new_measure(&[0.05, 0.6], &[0.7, 0.3], 2).unwrap(),
            alpha: 0.0,
            n_grid: vec![32],
            trials: 1,
            base_seed: 3,
            solver: Solver::Dense,
            statistic: Statistic::Median,
        };
        let rows = run_scaling(&cfg).unwrap();
        assert!(rows[0].md_mu <= 1e-8);
    }
}
