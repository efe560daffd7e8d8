//! The ESPRIT pipeline: Toeplitz assembly, dominant subspace, rotational
//! invariance eigenvalues, unit-circle projection, least-squares
//! intensities.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::vandermonde;
use crate::dense::{self, LinalgError};
use crate::matrix::ComplexMatrix;
use crate::signal::MeasurementSeries;
use crate::toeplitz::{top_r_eigs, HermitianToeplitz};

#[derive(Debug, Error)]
pub enum EspritError {
    #[error("invalid rank r = {r} for signal length n = {n} (need 1 <= r <= n-1)")]
    InvalidRank { r: usize, n: usize },
    #[error("the shifted eigenvector block is numerically rank deficient")]
    RankDeficientUpBlock,
    #[error("recovered nodes are numerically coincident; intensity system is rank deficient")]
    RankDeficient,
    #[error("solver failure: {0}")]
    SolverFailure(String),
}

pub type Result<T> = std::result::Result<T, EspritError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Dense,
    Fast,
}

impl std::str::FromStr for Solver {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dense" => Ok(Solver::Dense),
            "fast" => Ok(Solver::Fast),
            other => Err(format!("unknown solver {other:?} (expected dense or fast)")),
        }
    }
}

/// Side information about lossy steps in the pipeline.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// |Im g_0| discarded when Hermitianizing the Toeplitz diagonal.
    pub discarded_im_g0: f64,
    /// Largest negative intensity clamped to zero.
    pub clamp_magnitude: f64,
    /// Largest imaginary part dropped from the least-squares intensities.
    pub intensity_im_residual: f64,
    /// Some rotational eigenvalue was (numerically) zero; its argument was
    /// mapped to 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Recovered nodes, exactly unit modulus, sorted by argument in [0, 2pi).
    pub z_hat: Vec<Complex64>,
    pub mu_hat: Vec<f64>,
    /// Raw eigenvalues of the rotation matrix before unit-circle projection,
    /// in the same order as z_hat.
    pub w_eigenvalues: Vec<Complex64>,
    pub solver_used: Solver,
    pub wall_time: Duration,
    pub diagnostics: Diagnostics,
}

///// Hermitian Toeplitz matrix of the measurements: first column
/// (Re g_0, g_1, ..., g_{n-1}); the upper triangle is implied by
/// conjugation. Returns the discarded |Im g_0| as a diagnostic.
pub fn toeplitz_from_signal(g: &MeasurementSeries) -> (HermitianToeplitz, f64) {
    let im_g0 = g.samples[0].im.abs();
    (HermitianToeplitz::new(g.samples.clone()), im_g0)
}

fn arg_in_two_pi(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        return 0.0;
    }
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Full Algorithm: eigendecomposition of Toep(g), shift-invariance solve,
/// unit-circle projection, least-squares intensities.
pub fn run(g: &MeasurementSeries, r: usize, solver: Solver, seed: u64) -> Result<EstimationResult> {
    let start = Instant::now();
    let n = g.n();
    if r < 1 || r + 1 > n {
        return Err(EspritError::InvalidRank { r, n });
    }
    let (t, im_g0) = toeplitz_from_signal(g);
    if t.first_col().iter().all(|z| z.norm() == 0.0) {
        // T = 0 carries no signal subspace at all.
        return Err(EspritError::RankDeficientUpBlock);
    }

    let q_r: ComplexMatrix = match solver {
        Solver::Dense => {
            let eig = dense::hermitian_eig(&t.to_dense())
                .map_err(|e| EspritError::SolverFailure(e.to_string()))?;
            eig.vectors.select_columns(0..r)
        }
        Solver::Fast => top_r_eigs(&t, r, 1e-9, 5000, seed)
            .map_err(|e| EspritError::SolverFailure(e.to_string()))?
            .q_r,
    };

    let q_up = q_r.select_rows(0..n - 1);
    let q_down = q_r.select_rows(1..n);
    let w = dense::pinv_solve(&q_up, &q_down).map_err(|e| match e {
        LinalgError::RankDeficient { .. } => EspritError::RankDeficientUpBlock,
        other => EspritError::SolverFailure(other.to_string()),
    })?;
    let mut lambda =
        dense::general_eig_small(&w).map_err(|e| EspritError::SolverFailure(e.to_string()))?;
    // Sort by argument in [0, 2pi); break argument ties by ascending |lambda|.
    lambda.sort_by(|a, b| {
        (arg_in_two_pi(*a), a.norm())
            .partial_cmp(&(arg_in_two_pi(*b), b.norm()))
            .unwrap()
    });
    let degenerate = lambda.iter().any(|z| z.norm() < 1e-12);
    let z_hat: Vec<Complex64> = lambda
        .iter()
        .map(|z| Complex64::from_polar(1.0, arg_in_two_pi(*z)))
        .collect();

    let (mu_hat, mut diagnostics) = estimate_intensities(&z_hat, g)?;
    diagnostics.discarded_im_g0 = im_g0;
    diagnostics.degenerate = degenerate;

    Ok(EstimationResult {
        z_hat,
        mu_hat,
        w_eigenvalues: lambda,
        solver_used: solver,
        wall_time: start.elapsed(),
        diagnostics,
    })
}

/// Least-squares intensities mu = V_n(z)^+ g: real parts are returned,
/// negatives clamped to zero, both adjustments reported.
pub fn estimate_intensities(
    z_hat: &[Complex64],
    g: &MeasurementSeries,
) -> Result<(Vec<f64>, Diagnostics)> {
    let n = g.n();
    assert!(n >= z_hat.len());
    let v = vandermonde(z_hat, n);
    let rhs = ComplexMatrix::column_vector(&g.samples);
    let coeffs = dense::pinv_solve(&v, &rhs).map_err(|e| match e {
        LinalgError::RankDeficient { .. } => EspritError::RankDeficient,
        other => EspritError::SolverFailure(other.to_string()),
    })?;
    let mut diagnostics = Diagnostics::default();
    let mut mu = Vec::with_capacity(z_hat.len());
    for i in 0..z_hat.len() {
        let c = coeffs[(i, 0)];
        diagnostics.intensity_im_residual = diagnostics.intensity_im_residual.max(c.im.abs());
        if c.re < 0.0 {
            diagnostics.clamp_magnitude = diagnostics.clamp_magnitude.max(-c.re);
            mu.push(0.0);
        } else {
            mu.push(c.re);
        }
    }
    Ok((mu, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::signal::{matching_distance, new_measure, node, sample_noise, synthesize, NoiseKind, NoiseSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn toeplitz_assembly_examples() {
        let g = MeasurementSeries { samples: vec![c(1.0, 0.0)] };
        let (t, _) = toeplitz_from_signal(&g);
        assert_eq!(t.n(), 1);

        let g = MeasurementSeries { samples: vec![c(1.0, 0.5), c(0.0, 1.0)] };
        let (t, im) = toeplitz_from_signal(&g);
        assert!((im - 0.5).abs() < 1e-15);
        let d = t.to_dense();
        assert_eq!(d[(0, 0)], c(1.0, 0.0));
        assert_eq!(d[(0, 1)], c(0.0, -1.0));
        assert_eq!(d[(1, 0)], c(0.0, 1.0));

        // noiseless DC source: all-ones matrix, rank 1
        let m = new_measure(&[0.0], &[1.0], 1).unwrap();
        let g = synthesize(&m, 3);
        let (t, _) = toeplitz_from_signal(&g);
        let d = t.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((d[(i, j)] - c(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn noiseless_two_source_exact() {
        let m = new_measure(&[0.1, 0.3], &[0.6, 0.4], 2).unwrap();
        let g = synthesize(&m, 16);
        let res = run(&g, 2, Solver::Dense, 0).unwrap();
        let (md_z, perm) = matching_distance(&m.dominant_nodes(), &res.z_hat).unwrap();
        assert!(md_z <= 1e-8, "md_z = {md_z}");
        let md_mu = m
            .dominant_intensities()
            .iter()
            .enumerate()
            .map(|(i, mu)| (mu - res.mu_hat[perm[i]]).abs())
            .fold(0.0f64, f64::max);
        assert!(md_mu <= 1e-8, "md_mu = {md_mu}");
    }

    #[test]
    fn rank_one_quarter_cycle() {
        let m = new_measure(&[0.25], &[1.0], 1).unwrap();
        let g = synthesize(&m, 8);
        let res = run(&g, 1, Solver::Dense, 0).unwrap();
        assert!((res.z_hat[0] - c(0.0, 1.0)).norm() <= 1e-10);
        assert!((res.mu_hat[0] - 1.0).abs() <= 1e-10);
        assert!((res.z_hat[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_is_degenerate() {
        let g = MeasurementSeries { samples: vec![c(0.0, 0.0); 8] };
        assert!(run(&g, 1, Solver::Dense, 0).is_err());
    }

    #[test]
    fn invalid_rank_rejected() {
        let g = MeasurementSeries { samples: vec![c(1.0, 0.0); 8] };
        assert!(matches!(run(&g, 0, Solver::Dense, 0), Err(EspritError::InvalidRank { .. })));
        assert!(matches!(run(&g, 8, Solver::Dense, 0), Err(EspritError::InvalidRank { .. })));
    }

    #[test]
    fn intensity_examples() {
        // constant signal, single node at 1
        let g = MeasurementSeries { samples: vec![c(2.0, 0.0); 4] };
        let (mu, _) = estimate_intensities(&[c(1.0, 0.0)], &g).unwrap();
        assert!((mu[0] - 2.0).abs() < 1e-12);

        // orthogonal nodes at +-1 with n = 4
        let g = MeasurementSeries { samples: vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)] };
        let (mu, _) = estimate_intensities(&[c(1.0, 0.0), c(-1.0, 0.0)], &g).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-12);
        assert!((mu[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn intensity_coincident_nodes_rejected() {
        let g = MeasurementSeries { samples: vec![c(1.0, 0.0); 6] };
        let z = [c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(estimate_intensities(&z, &g), Err(EspritError::RankDeficient)));
    }

    fn random_separated_measure(rng: &mut Rng, r: usize) -> crate::signal::SpectralMeasure {
        loop {
            let f: Vec<f64> = (0..r).map(|_| rng.next_f64()).collect();
            let mu: Vec<f64> = (0..r).map(|_| rng.uniform(0.05, 1.0)).collect();
            if let Ok(m) = new_measure(&f, &mu, r) {
                if crate::signal::separation(&m) >= 0.1 {
                    return m;
                }
            }
        }
    }

    #[test]
    fn noiseless_exact_recovery_sweep() {
        let mut rng = Rng::new(2024);
        for _ in 0..20 {
            let r = 1 + (rng.next_u64() % 5) as usize;
            let m = random_separated_measure(&mut rng, r);
            let g = synthesize(&m, 64);
            let res = run(&g, r, Solver::Dense, 0).unwrap();
            let (md_z, perm) = matching_distance(&m.dominant_nodes(), &res.z_hat).unwrap();
            assert!(md_z <= 1e-8, "md_z = {md_z} for r = {r}");
            let md_mu = m
                .dominant_intensities()
                .iter()
                .enumerate()
                .map(|(i, mu)| (mu - res.mu_hat[perm[i]]).abs())
                .fold(0.0f64, f64::max);
            assert!(md_mu <= 1e-8, "md_mu = {md_mu} for r = {r}");
        }
    }

    #[test]
    fn rotation_equivariance() {
        let m = new_measure(&[0.12, 0.41], &[0.7, 0.3], 2).unwrap();
        let shift = 0.2345;
        let g0 = synthesize(&m, 32);
        let g1 = synthesize(&m.rotated(shift), 32);
        let r0 = run(&g0, 2, Solver::Dense, 0).unwrap();
        let r1 = run(&g1, 2, Solver::Dense, 0).unwrap();
        let rotated: Vec<Complex64> = r0.z_hat.iter().map(|z| z * node(shift)).collect();
        let (md, _) = matching_distance(&rotated, &r1.z_hat).unwrap();
        assert!(md <= 1e-8, "rotation equivariance md = {md}");
    }

    #[test]
    fn solver_agreement_noiseless_and_noisy() {
        let m = new_measure(&[0.1, 0.35, 0.62], &[0.5, 0.3, 0.2], 3).unwrap();
        for (n, alpha) in [(128usize, 0.0), (256, 0.1)] {
            let mut g = synthesize(&m, n);
            if alpha > 0.0 {
                let noise = sample_noise(
                    n,
                    &NoiseSpec { alpha, kind: NoiseKind::ComplexGaussian, seed: 31 },
                );
                for (s, e) in g.samples.iter_mut().zip(noise) {
                    *s += e;
                }
            }
            let dense_res = run(&g, 3, Solver::Dense, 7).unwrap();
            let fast_res = run(&g, 3, Solver::Fast, 7).unwrap();
            let (md, _) = matching_distance(&dense_res.z_hat, &fast_res.z_hat).unwrap();
            assert!(md <= 1e-6, "solver disagreement md = {md} at n = {n}, alpha = {alpha}");
        }
    }

    #[test]
    fn output_sorted_by_argument_unit_modulus() {
        let m = new_measure(&[0.8, 0.2, 0.5], &[0.4, 0.35, 0.25], 3).unwrap();
        let g = synthesize(&m, 64);
        let res = run(&g, 3, Solver::Dense, 0).unwrap();
        for z in &res.z_hat {
            assert!((z.norm() - 1.0).abs() < 1e-15);
        }
        let args: Vec<f64> = res.z_hat.iter().map(|z| arg_in_two_pi(*z)).collect();
        assert!(args.windows(2).all(|w| w[0] <= w[1]));
    }
}
