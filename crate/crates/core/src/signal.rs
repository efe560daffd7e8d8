//! Point-source spectral measures, measurement synthesis, sub-Gaussian
//! noise sampling, and the optimal matching distance used for scoring.

use std::f64::consts::PI;
use std::io::BufRead;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Rng;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("locations and intensities have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("location {0} is outside [0, 1)")]
    OutOfRangeLocation(f64),
    #[error("intensity {0} is not positive")]
    NonPositiveIntensity(f64),
    #[error("invalid dominant count r = {r} for {d} components")]
    InvalidRank { r: usize, d: usize },
    #[error("two nodes coincide on the unit circle (dominant separation is zero)")]
    ZeroSeparation,
    #[error("matching distance supports at most 8 points, got {0}")]
    TooLarge(usize),
    #[error("point lists have different lengths ({0} vs {1})")]
    PointCountMismatch(usize, usize),
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed signal file: {0}")]
    MalformedSignal(String),
}

pub type Result<T> = std::result::Result<T, SignalError>;

/// A discrete measure on the unit circle: locations f_i in [0, 1) (cycles)
/// with positive intensities, normalized to unit total mass, sorted by
/// intensity descending. The first `r` components are the dominant part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    locations: Vec<f64>,
    intensities: Vec<f64>,
    r: usize,
}

/// Noise model for the measurement series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub alpha: f64,
    pub kind: NoiseKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    ComplexGaussian,
    RealGaussian,
    None,
}

/// Complex measurement samples g_0 .. g_{n-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    pub samples: Vec<Complex64>,
}

impl MeasurementSeries {
    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

/// Node on the unit circle for a location in cycles.
pub fn node(f: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * f)
}

/// Validates, sorts by intensity descending (locations co-permuted), and
/// rescales to unit total mass.
pub fn new_measure(f: &[f64], mu: &[f64], r: usize) -> Result<SpectralMeasure> {
    if f.len() != mu.len() {
        return Err(SignalError::LengthMismatch(f.len(), mu.len()));
    }
    let d = f.len();
    if r < 1 || r > d {
        return Err(SignalError::InvalidRank { r, d });
    }
    for &fi in f {
        if !(0.0..1.0).contains(&fi) {
            return Err(SignalError::OutOfRangeLocation(fi));
        }
    }
    for &mi in mu {
        if mi <= 0.0 {
            return Err(SignalError::NonPositiveIntensity(mi));
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| mu[j].partial_cmp(&mu[i]).unwrap());
    let total: f64 = mu.iter().sum();
    let locations: Vec<f64> = order.iter().map(|&i| f[i]).collect();
    let intensities: Vec<f64> = order.iter().map(|&i| mu[i] / total).collect();
    let m = SpectralMeasure { locations, intensities, r };
    if separation(&m) == 0.0 {
        return Err(SignalError::ZeroSeparation);
    }
    Ok(m)
}

impl SpectralMeasure {
    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.locations.len()
    }

    pub fn dominant_nodes(&self) -> Vec<Complex64> {
        self.locations[..self.r].iter().map(|&f| node(f)).collect()
    }

    pub fn tail_nodes(&self) -> Vec<Complex64> {
        self.locations[self.r..].iter().map(|&f| node(f)).collect()
    }

    pub fn dominant_intensities(&self) -> &[f64] {
        &self.intensities[..self.r]
    }

    pub fn tail_intensities(&self) -> &[f64] {
        &self.intensities[self.r..]
    }

    /// New measure with every location shifted by `c` cycles (mod 1).
    pub fn rotated(&self, c: f64) -> SpectralMeasure {
        let locations = self.locations.iter().map(|f| (f + c).rem_euclid(1.0)).collect();
        SpectralMeasure { locations, intensities: self.intensities.clone(), r: self.r }
    }
}

/// Minimum chordal distance |z_i - z_i'| over dominant-vs-all pairs.
pub fn separation(m: &SpectralMeasure) -> f64 {
    let nodes: Vec<Complex64> = m.locations.iter().map(|&f| node(f)).collect();
    let mut best = f64::INFINITY;
    for i in 0..m.r {
        for j in 0..nodes.len() {
            if i == j {
                continue;
            }
            best = best.min((nodes[i] - nodes[j]).norm());
        }
    }
    if best.is_finite() {
        best
    } else {
        // single dominant source with no other nodes: separation vacuous
        2.0
    }
}

/// Cumulative tail intensity with the mu_tail <= mu_r / 8 flag.
pub fn tail_mass(m: &SpectralMeasure) -> (f64, bool) {
    let mass: f64 = m.tail_intensities().iter().sum();
    let flag = mass <= m.intensities[m.r - 1] / 8.0;
    (mass, flag)
}

/// Clean samples g_j = sum_i mu_i exp(2 pi i f_i j), j = 0 .. n-1.
pub fn synthesize(m: &SpectralMeasure, n: usize) -> MeasurementSeries {
    assert!(n >= 1);
    let nodes: Vec<Complex64> = m.locations.iter().map(|&f| node(f)).collect();
    let mut powers: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); nodes.len()];
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let g: Complex64 = powers
            .iter()
            .zip(&m.intensities)
            .map(|(p, &mu)| p * mu)
            .sum();
        samples.push(g);
        for (p, z) in powers.iter_mut().zip(&nodes) {
            *p *= z;
        }
    }
    MeasurementSeries { samples }
}

/// Draws the noise vector E_0 .. E_{n-1}. E_0 is drawn real so that the
/// diagonal of Toep(g) stays real and the Hermitian structure is exact.
pub fn sample_noise(n: usize, spec: &NoiseSpec) -> Vec<Complex64> {
    assert!(n >= 1);
    assert!(spec.alpha >= 0.0);
    if spec.kind == NoiseKind::None {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let mut rng = Rng::new(spec.seed);
    let mut out = Vec::with_capacity(n);
    out.push(Complex64::new(spec.alpha * rng.normal(), 0.0));
    for _ in 1..n {
        let e = match spec.kind {
            NoiseKind::ComplexGaussian => {
                Complex64::new(rng.normal(), rng.normal()) * (spec.alpha / std::f64::consts::SQRT_2)
            }
            NoiseKind::RealGaussian => Complex64::new(spec.alpha * rng.normal(), 0.0),
            NoiseKind::None => unreachable!(),
        };
        out.push(e);
    }
    out
}

/// Optimal matching distance: min over permutations pi of
/// max_i |a_i - b_{pi(i)}|, solved exhaustively for r <= 8.
/// Returns the distance and an achieving permutation (truth index i is
/// paired with b[pi[i]]), which callers reuse to score intensities with
/// the same pairing.
pub fn matching_distance(a: &[Complex64], b: &[Complex64]) -> Result<(f64, Vec<usize>)> {
    if a.len() != b.len() {
        return Err(SignalError::PointCountMismatch(a.len(), b.len()));
    }
    let r = a.len();
    if r > 8 {
        return Err(SignalError::TooLarge(r));
    }
    if r == 0 {
        return Ok((0.0, vec![]));
    }
    let mut dist = vec![vec![0.0f64; r]; r];
    for i in 0..r {
        for j in 0..r {
            dist[i][j] = (a[i] - b[j]).norm();
        }
    }
    let mut perm: Vec<usize> = (0..r).collect();
    let mut best = f64::INFINITY;
    let mut best_perm = perm.clone();
    // Heap's algorithm, iterative.
    let mut counters = vec![0usize; r];
    let evaluate = |p: &[usize], best: &mut f64, best_perm: &mut Vec<usize>| {
        let mut worst = 0.0f64;
        for (i, &j) in p.iter().enumerate() {
            worst = worst.max(dist[i][j]);
            if worst >= *best {
                return;
            }
        }
        *best = worst;
        best_perm.clone_from_slice(p);
    };
    evaluate(&perm, &mut best, &mut best_perm);
    let mut i = 0;
    while i < r {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            evaluate(&perm, &mut best, &mut best_perm);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok((best, best_perm))
}

/// JSON measure configuration consumed by the CLI and the harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub locations: Vec<f64>,
    pub intensities: Vec<f64>,
    pub r: usize,
    pub alpha: f64,
    pub noise_kind: NoiseKind,
    pub seed: u64,
}

impl MeasureConfig {
    pub fn build(&self) -> Result<(SpectralMeasure, NoiseSpec)> {
        if self.alpha < 0.0 {
            return Err(SignalError::NonPositiveIntensity(self.alpha));
        }
        let m = new_measure(&self.locations, &self.intensities, self.r)?;
        Ok((m, NoiseSpec { alpha: self.alpha, kind: self.noise_kind, seed: self.seed }))
    }
}

/// Writes the text signal format: first line `n`, then n lines `re,im`
/// with 17 significant digits.
pub fn write_signal(path: &Path, g: &MeasurementSeries) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{}\n", g.n()));
    for z in &g.samples {
        out.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
    }
    std::fs::write(path, out).map_err(|e| SignalError::Io(e.to_string()))
}

pub fn read_signal(path: &Path) -> Result<MeasurementSeries> {
    let file = std::fs::File::open(path).map_err(|e| SignalError::Io(e.to_string()))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| SignalError::MalformedSignal("empty file".into()))?
        .map_err(|e| SignalError::Io(e.to_string()))?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| SignalError::MalformedSignal(format!("bad header line {header:?}")))?;
    let mut samples = Vec::with_capacity(n);
    for line in lines {
        let line = line.map_err(|e| SignalError::Io(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| SignalError::MalformedSignal(format!("bad sample line {line:?}")))?;
        let re: f64 = re.trim().parse().map_err(|_| SignalError::MalformedSignal(format!("bad real part {re:?}")))?;
        let im: f64 = im.trim().parse().map_err(|_| SignalError::MalformedSignal(format!("bad imaginary part {im:?}")))?;
        samples.push(Complex64::new(re, im));
    }
    if samples.len() != n {
        return Err(SignalError::MalformedSignal(format!("expected {n} samples, found {}", samples.len())));
    }
    if n == 0 {
        return Err(SignalError::MalformedSignal("n must be at least 1".into()));
    }
    Ok(MeasurementSeries { samples })
}
