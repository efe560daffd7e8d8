//! Executable oracles for the mathematical toolbox backing the estimator:
//! Vandermonde singular-value bounds, error-matrix decompositions and
//! norms, classical perturbation inequalities, the Schur-polynomial /
//! contour-integral identity, and the TV-distance lower-bound construction.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dense::{self, hermitian_eig, small_svd, spectral_norm};
use crate::matrix::ComplexMatrix;
use crate::rng::{mix, Rng};
use crate::signal::{node, SpectralMeasure};
use crate::toeplitz::{toeplitz_spectral_norm, HermitianToeplitz};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("precondition violated: need n > 1 + 2*pi/delta (n = {n}, threshold = {threshold:.3})")]
    PreconditionViolated { n: usize, threshold: f64 },
    #[error("enumeration size {0} exceeds the cap {1}")]
    TooLarge(u64, u64),
    #[error("eigenvalues nearly coincident (gap {gap:.3e} below {required:.3e}); residue sum ill-conditioned")]
    NearCoincident { gap: f64, required: f64 },
    #[error("spectral gap is nonpositive; sin-theta oracle skipped")]
    GapNonpositive,
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] dense::LinalgError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// n x k Vandermonde matrix: column j holds powers 1, z_j, ..., z_j^{n-1}.
pub fn vandermonde(z: &[Complex64], n: usize) -> ComplexMatrix {
    assert!(n >= 1);
    let mut v = ComplexMatrix::zeros(n, z.len());
    for (j, &zj) in z.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for i in 0..n {
            v[(i, j)] = p;
            p *= zj;
        }
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct MoitraReport {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub delta: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
    pub gram_deviation: f64,
}

/// Singular-value bounds for a unit-circle Vandermonde matrix, plus the
/// Gram-matrix deviation ||V^dagger V / n - I||_2.
pub fn moitra_bounds_check(z: &[Complex64], n: usize) -> Result<MoitraReport> {
    let k = z.len();
    assert!(k >= 1);
    debug_assert!(z.iter().all(|zi| (zi.norm() - 1.0).abs() < 1e-9));
    let mut delta = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            delta = delta.min((z[i] - z[j]).norm());
        }
    }
    if !delta.is_finite() {
        delta = 2.0; // single node: bounds reduce to sigma = sqrt(n)
    }
    let threshold = 1.0 + 2.0 * std::f64::consts::PI / delta;
    if (n as f64) <= threshold {
        return Err(AnalysisError::PreconditionViolated { n, threshold });
    }
    let v = vandermonde(z, n);
    let svd = small_svd(&v)?;
    let sigma_max = svd.sigma[0];
    let sigma_min = *svd.sigma.last().unwrap();
    let two_pi_over_delta = 2.0 * std::f64::consts::PI / delta;
    let upper = (n as f64 - 1.0 + two_pi_over_delta).sqrt();
    let lower = (n as f64 - 1.0 - two_pi_over_delta).sqrt();
    let slack = 1e-9 * (n as f64).sqrt();
    let gram = v.adjoint().mul(&v).scale(Complex64::new(1.0 / n as f64, 0.0));
    let dev_matrix = gram.sub(&ComplexMatrix::identity(k));
    let gram_deviation = hermitian_eig(&dev_matrix)?
        .values
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    Ok(MoitraReport {
        sigma_max,
        sigma_min,
        delta,
        upper_ok: sigma_max <= upper + slack,
        lower_ok: sigma_min >= lower - slack,
        gram_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorNorms {
    pub e_tail: f64,
    pub e_random: f64,
    pub e_tail_q_r: f64,
}

/// The decomposition Toep(g_noisy) = T_clean + E_tail + E_random.
#[derive(Debug, Clone)]
pub struct ErrorDecomposition {
    pub t_clean: HermitianToeplitz,
    pub e_tail: HermitianToeplitz,
    pub e_random: HermitianToeplitz,
    pub norms: ErrorNorms,
}

impl ErrorDecomposition {
    /// Max entrywise deviation of t_clean + e_tail + e_random from `total`.
    pub fn entrywise_residual(&self, total: &HermitianToeplitz) -> f64 {
        let sum = self.t_clean.add(&self.e_tail).add(&self.e_random);
        sum.first_col()
            .iter()
            .zip(total.first_col())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn toeplitz_col_from_nodes(nodes: &[Complex64], weights: &[f64], n: usize) -> Vec<Complex64> {
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    let mut powers: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); nodes.len()];
    for entry in col.iter_mut() {
        *entry = powers.iter().zip(weights).map(|(p, &w)| p * w).sum();
        for (p, z) in powers.iter_mut().zip(nodes) {
            *p *= z;
        }
    }
    col
}

/// Assembles T_clean, E_tail = V(z_tail) diag(mu_tail) V(z_tail)^dagger,
/// E_random = Toep(noise), and their spectral norms.
///
/// The norm bound ||E_tail||_2 <= n * mu_tail is asserted on every call.
/// ||E_tail Q_r||_2 is reported only; its theoretical bound is asymptotic
/// with an unspecified constant.
pub fn error_matrices(m: &SpectralMeasure, noise: &[Complex64], n: usize) -> Result<ErrorDecomposition> {
    assert!(n >= 1);
    assert_eq!(noise.len(), n);
    let t_clean = HermitianToeplitz::new(toeplitz_col_from_nodes(
        &m.dominant_nodes(),
        m.dominant_intensities(),
        n,
    ));
    let e_tail = HermitianToeplitz::new(toeplitz_col_from_nodes(
        &m.tail_nodes(),
        m.tail_intensities(),
        n,
    ));
    let e_random = HermitianToeplitz::new(noise.to_vec());

    let tail_mass: f64 = m.tail_intensities().iter().sum();
    let e_tail_norm = toeplitz_spectral_norm(&e_tail, 0xE7A1);
    assert!(
        e_tail_norm <= n as f64 * tail_mass + 1e-8,
        "||E_tail|| = {e_tail_norm} exceeds n * mu_tail = {}",
        n as f64 * tail_mass
    );
    let e_random_norm = toeplitz_spectral_norm(&e_random, 0xE7A2);

    let e_tail_q_r = if tail_mass > 0.0 {
        let eig = hermitian_eig(&t_clean.to_dense())?;
        let q_r = eig.vectors.select_columns(0..m.r());
        spectral_norm(&e_tail.to_dense().mul(&q_r))
    } else {
        0.0
    };

    Ok(ErrorDecomposition {
        t_clean,
        e_tail,
        e_random,
        norms: ErrorNorms { e_tail: e_tail_norm, e_random: e_random_norm, e_tail_q_r },
    })
}

/// One evaluated inequality: pass iff lhs <= rhs + tolerance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// rhs - lhs; negative values within tolerance still pass.
    pub slack: f64,
}

fn outcome(lhs: f64, rhs: f64, tol: f64) -> OracleOutcome {
    OracleOutcome { lhs, rhs, pass: lhs <= rhs + tol, slack: rhs - lhs }
}

/// Weyl: |lambda_i(A + E) - lambda_i(A)| <= ||E||_2 for all i.
pub fn weyl_check(a: &ComplexMatrix, e: &ComplexMatrix) -> Result<OracleOutcome> {
    let la = hermitian_eig(a)?.values;
    let lae = hermitian_eig(&a.add(e))?.values;
    let norm_e = spectral_norm(e);
    let worst = la
        .iter()
        .zip(&lae)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let tol = 1e-8 * spectral_norm(a).max(1.0);
    Ok(outcome(worst, norm_e, tol))
}

/// Ostrowski: the r nonzero eigenvalues of B A B^dagger are multiplicative
/// perturbations of lambda_i(A) by factors in [sigma_min^2, sigma_max^2].
pub fn ostrowski_check(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<OracleOutcome> {
    let r = a.rows();
    let la = hermitian_eig(a)?.values;
    let svd = small_svd(b)?;
    let smin2 = svd.sigma.last().unwrap().powi(2);
    let smax2 = svd.sigma[0].powi(2);
    let bab = b.mul(a).mul(&b.adjoint());
    let lbab = hermitian_eig(&bab)?.values;
    // Nonzero eigenvalues: with p positives and q negatives in A, the
    // congruent matrix keeps the same inertia; descending order puts the p
    // positives first and the q negatives last.
    let p = la.iter().filter(|v| **v > 0.0).count();
    let q = r - p;
    let n = lbab.len();
    let mut nonzero = Vec::with_capacity(r);
    nonzero.extend_from_slice(&lbab[..p]);
    nonzero.extend_from_slice(&lbab[n - q..]);
    let scale = spectral_norm(&bab).max(1.0);
    let tol = 1e-8 * scale;
    let mut worst_violation = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for (li, lb) in la.iter().zip(&nonzero) {
        let bounds = [smin2 * li, smax2 * li];
        let lo = bounds[0].min(bounds[1]);
        let hi = bounds[0].max(bounds[1]);
        worst_violation = worst_violation.max((lo - lb).max(lb - hi).max(0.0));
        min_slack = min_slack.min((lb - lo).min(hi - lb));
    }
    Ok(OracleOutcome { lhs: worst_violation, rhs: 0.0, pass: worst_violation <= tol, slack: min_slack })
}

/// Davis-Kahan: sin theta(Q_r, Qhat_r) <= ||E Q_r||_2 / (lambda_r(T) -
/// lambda_{r+1}(T + E)). Requires a positive gap.
pub fn davis_kahan_check(t: &ComplexMatrix, e: &ComplexMatrix, r: usize) -> Result<OracleOutcome> {
    let eig_t = hermitian_eig(t)?;
    let eig_th = hermitian_eig(&t.add(e))?;
    let gap = eig_t.values[r - 1] - eig_th.values[r];
    if gap <= 0.0 {
        return Err(AnalysisError::GapNonpositive);
    }
    let q_r = eig_t.vectors.select_columns(0..r);
    let qhat_r = eig_th.vectors.select_columns(0..r);
    let lhs = dense::sin_theta(&q_r, &qhat_r)?;
    let rhs = spectral_norm(&e.mul(&q_r)) / gap;
    Ok(outcome(lhs, rhs, 1e-8))
}

/// Distance from angles: ||Qhat - Q U||_2 <= 2 sin theta(Q, Qhat) for the
/// Procrustes-optimal unitary U.
pub fn distance_from_angles_check(q: &ComplexMatrix, qhat: &ComplexMatrix) -> Result<OracleOutcome> {
    let u = dense::procrustes_align(q, qhat)?;
    let lhs = spectral_norm(&qhat.sub(&q.mul(&u)));
    let rhs = 2.0 * dense::sin_theta(q, qhat)?;
    Ok(outcome(lhs, rhs, 1e-8))
}

/// Bauer-Fike in matching distance: md(lambda, lambda_hat) <=
/// (2r - 1) ||V||_2 ||V^{-1}||_2 ||E||_2 for A = V diag(lambda) V^{-1}.
pub fn bauer_fike_check(
    v: &ComplexMatrix,
    lambda: &[Complex64],
    e: &ComplexMatrix,
) -> Result<OracleOutcome> {
    let r = lambda.len();
    let v_inv = dense::pinv_solve(v, &ComplexMatrix::identity(r))?;
    let diag = ComplexMatrix::from_fn(r, r, |i, j| if i == j { lambda[i] } else { Complex64::new(0.0, 0.0) });
    let a = v.mul(&diag).mul(&v_inv);
    let lambda_hat = dense::general_eig_small(&a.add(e))?;
    let (md, _) = crate::signal::matching_distance(lambda, &lambda_hat)
        .expect("r <= 4 in Bauer-Fike oracle");
    let rhs = (2 * r - 1) as f64 * spectral_norm(v) * spectral_norm(&v_inv) * spectral_norm(e);
    let tol = 1e-8 * spectral_norm(&a).max(1.0);
    Ok(outcome(md, rhs, tol))
}

/// Pseudoinverse perturbation: ||(A + E)^+ - A^+||_2 <=
/// 3 ||A^+||^2 ||E||_2 / (1 - ||A^+|| ||E||_2), valid for ||E|| < sigma_min(A).
pub fn pinv_perturbation_check(a: &ComplexMatrix, e: &ComplexMatrix) -> Result<OracleOutcome> {
    let svd = small_svd(a)?;
    let sigma_min = *svd.sigma.last().unwrap();
    let norm_e = spectral_norm(e);
    assert!(norm_e < sigma_min, "oracle requires ||E|| < sigma_min(A)");
    let a_pinv = dense::pinv_solve(a, &ComplexMatrix::identity(a.rows()))?;
    let ae_pinv = dense::pinv_solve(&a.add(e), &ComplexMatrix::identity(a.rows()))?;
    let lhs = spectral_norm(&ae_pinv.sub(&a_pinv));
    let pinv_norm = spectral_norm(&a_pinv);
    let rhs = 3.0 * pinv_norm * pinv_norm * norm_e / (1.0 - pinv_norm * norm_e);
    Ok(outcome(lhs, rhs, 1e-8 * pinv_norm.max(1.0)))
}

const SCHUR_ENUMERATION_CAP: u64 = 10_000_000;

/// Schur polynomial s_{(m, ..., m, 0)}(x_1, ..., x_ell) evaluated as the
/// combinatorial sum over exponent vectors beta in {0..m}^ell with
/// |beta|_1 = (ell - 1) m. For ell = 1 the partition is empty and the
/// value is 1.
pub fn schur_mm0(m: u64, ell: usize, x: &[f64]) -> Result<f64> {
    assert!(ell >= 1);
    assert_eq!(x.len(), ell);
    if ell == 1 {
        return Ok(1.0);
    }
    let size = (m + 1).checked_pow(ell as u32).unwrap_or(u64::MAX);
    if size > SCHUR_ENUMERATION_CAP {
        return Err(AnalysisError::TooLarge(size, SCHUR_ENUMERATION_CAP));
    }
    let target = (ell as u64 - 1) * m;
    let mut beta = vec![0u64; ell];
    let mut total = 0.0;
    loop {
        if beta.iter().sum::<u64>() == target {
            let mut term = 1.0;
            for (b, &xi) in beta.iter().zip(x) {
                term *= xi.powi(*b as i32);
            }
            total += term;
        }
        // odometer increment over {0..m}^ell
        let mut i = 0;
        loop {
            if i == ell {
                return Ok(total);
            }
            if beta[i] < m {
                beta[i] += 1;
                break;
            }
            beta[i] = 0;
            i += 1;
        }
    }
}

/// Exact coefficient count s_{(m, ..., m, 0)}(1, ..., 1), in integers.
pub fn schur_mm0_ones(m: u64, ell: usize) -> Result<u64> {
    assert!(ell >= 1);
    if ell == 1 {
        return Ok(1);
    }
    let size = (m + 1).checked_pow(ell as u32).unwrap_or(u64::MAX);
    if size > SCHUR_ENUMERATION_CAP {
        return Err(AnalysisError::TooLarge(size, SCHUR_ENUMERATION_CAP));
    }
    let target = (ell as u64 - 1) * m;
    let mut beta = vec![0u64; ell];
    let mut count = 0u64;
    loop {
        if beta.iter().sum::<u64>() == target {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == ell {
                return Ok(count);
            }
            if beta[i] < m {
                beta[i] += 1;
                break;
            }
            beta[i] = 0;
            i += 1;
        }
    }
}

/// Exact binomial coefficient in u64 arithmetic.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result = 1u64;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

fn check_distinct(lambdas: &[f64]) -> Result<()> {
    let max_abs = lambdas.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let required = 1e-6 * max_abs;
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            let gap = (lambdas[i] - lambdas[j]).abs();
            if gap < required {
                return Err(AnalysisError::NearCoincident { gap, required });
            }
        }
    }
    Ok(())
}

/// Residue-sum evaluation of the resolvent contour integral
/// A_m(lambda_1, ..., lambda_ell) = sum_j lambda_j^{-(m+1)} prod_{p != j}
/// (lambda_j - lambda_p)^{-1}.
pub fn contour_a_residue(m: i64, lambdas: &[f64]) -> Result<f64> {
    assert!(m >= -1);
    assert!(!lambdas.is_empty());
    assert!(lambdas.iter().all(|l| *l > 0.0));
    check_distinct(lambdas)?;
    let mut total = 0.0;
    for (j, &lj) in lambdas.iter().enumerate() {
        let mut term = lj.powi(-(m + 1) as i32);
        for (p, &lp) in lambdas.iter().enumerate() {
            if p != j {
                term /= lj - lp;
            }
        }
        total += term;
    }
    Ok(total)
}

/// Closed form of the same integral via the Schur polynomial:
/// (-1)^{ell-1} s_{(m, ..., m, 0)}(lambda) / prod lambda_j^{m+1}.
pub fn contour_a_schur(m: i64, lambdas: &[f64]) -> Result<f64> {
    assert!(m >= -1);
    let ell = lambdas.len();
    let s = if m >= 0 {
        schur_mm0(m as u64, ell, lambdas)?
    } else if ell == 1 {
        1.0 // empty partition
    } else {
        0.0 // no exponent vector reaches a negative degree
    };
    let denom: f64 = lambdas.iter().map(|l| l.powi((m + 1) as i32)).product();
    let sign = if ell % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * s / denom)
}

#[derive(Debug, Clone, Serialize)]
pub struct TvReport {
    pub n: usize,
    pub eps: f64,
    /// sum_{j=1..n} 4 sin^2(j eps)
    pub sum: f64,
    /// sqrt of the sum: the TV-distance bound between the two Gaussians.
    pub tv_bound: f64,
    /// sum / (n^3 eps^2); O(1) when n*eps <= 1.
    pub ratio_to_n3_eps2: f64,
}

/// The two-point indistinguishability construction: measurement vectors of
/// nodes 1 and exp(2 i eps) differ in squared l2 norm by sum 4 sin^2(j eps),
/// which bounds the total-variation distance of the noisy observations.
pub fn tv_lower_bound_demo(n: usize, eps: f64) -> TvReport {
    assert!(n >= 1);
    assert!(eps > 0.0 && eps < 1.0);
    let sum: f64 = (1..=n).map(|j| 4.0 * (j as f64 * eps).sin().powi(2)).sum();
    TvReport {
        n,
        eps,
        sum,
        tv_bound: sum.sqrt(),
        ratio_to_n3_eps2: sum / ((n as f64).powi(3) * eps * eps),
    }
}

// ---------------------------------------------------------------------------
// Seeded verification suites
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub oracle_name: String,
    pub instances: usize,
    pub failures: usize,
    pub worst_slack: f64,
}

impl OracleReport {
    fn record(&mut self, out: &OracleOutcome) {
        self.instances += 1;
        if !out.pass {
            self.failures += 1;
        }
        self.worst_slack = self.worst_slack.min(out.slack);
    }

    fn new(name: &str) -> Self {
        OracleReport { oracle_name: name.into(), instances: 0, failures: 0, worst_slack: f64::INFINITY }
    }
}

fn random_hermitian(n: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::random_gaussian(n, n, rng).hermitian_part()
}

fn random_orthonormal(n: usize, r: usize, rng: &mut Rng) -> ComplexMatrix {
    small_svd(&ComplexMatrix::random_gaussian(n, r, rng)).unwrap().u
}

/// Random unit-circle node set with pairwise chordal separation >= min_sep.
pub fn random_separated_nodes(k: usize, min_sep: f64, rng: &mut Rng) -> Vec<Complex64> {
    'outer: loop {
        let f: Vec<f64> = (0..k).map(|_| rng.next_f64()).collect();
        let z: Vec<Complex64> = f.iter().map(|&fi| node(fi)).collect();
        for i in 0..k {
            for j in i + 1..k {
                if (z[i] - z[j]).norm() < min_sep {
                    continue 'outer;
                }
            }
        }
        return z;
    }
}

/// 100 seeded separated node sets at n = 128: both singular-value bounds
/// and the pinned Gram-deviation bound must hold.
pub fn moitra_suite(base_seed: u64) -> OracleReport {
    let mut report = OracleReport::new("moitra_bounds");
    let n = 128;
    for trial in 0..100u64 {
        let mut rng = Rng::new(mix(base_seed, 1, trial));
        let k = 1 + (rng.next_u64() % 5) as usize;
        let z = random_separated_nodes(k, 0.1, &mut rng);
        let rep = moitra_bounds_check(&z, n).expect("separation 0.1 admits n = 128");
        let gram_bound = 2.0 * std::f64::consts::PI / (rep.delta * n as f64) * 1.01;
        let pass = rep.upper_ok && rep.lower_ok && rep.gram_deviation <= gram_bound;
        let slack = (gram_bound - rep.gram_deviation)
            .min((n as f64 - 1.0 + 2.0 * std::f64::consts::PI / rep.delta).sqrt() - rep.sigma_max)
            .min(rep.sigma_min - (n as f64 - 1.0 - 2.0 * std::f64::consts::PI / rep.delta).sqrt());
        report.record(&OracleOutcome { lhs: rep.gram_deviation, rhs: gram_bound, pass, slack });
    }
    report
}

/// 200 seeded instances per perturbation theorem at dimensions <= 16.
pub fn perturbation_suite(base_seed: u64) -> Vec<OracleReport> {
    let mut weyl = OracleReport::new("weyl");
    let mut ostrowski = OracleReport::new("ostrowski");
    let mut davis_kahan = OracleReport::new("davis_kahan");
    let mut angles = OracleReport::new("distance_from_angles");
    let mut bauer_fike = OracleReport::new("bauer_fike");
    let mut pinv_pert = OracleReport::new("pinv_perturbation");

    for trial in 0..200u64 {
        // Weyl
        {
            let mut rng = Rng::new(mix(base_seed, 10, trial));
            let n = 2 + (rng.next_u64() % 15) as usize;
            let a = random_hermitian(n, &mut rng);
            let e = random_hermitian(n, &mut rng).scale(Complex64::new(rng.uniform(0.01, 1.0), 0.0));
            weyl.record(&weyl_check(&a, &e).unwrap());
        }
        // Ostrowski
        {
            let mut rng = Rng::new(mix(base_seed, 11, trial));
            let r = 1 + (rng.next_u64() % 5) as usize;
            let n = r + 1 + (rng.next_u64() % 10) as usize;
            let a = random_hermitian(r, &mut rng);
            let b = ComplexMatrix::random_gaussian(n, r, &mut rng);
            ostrowski.record(&ostrowski_check(&a, &b).unwrap());
        }
        // Davis-Kahan: scale E below the unperturbed gap so it stays positive.
        {
            let mut rng = Rng::new(mix(base_seed, 12, trial));
            let n = 3 + (rng.next_u64() % 13) as usize;
            let t = random_hermitian(n, &mut rng);
            let r = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
            let values = hermitian_eig(&t).unwrap().values;
            let gap = values[r - 1] - values[r];
            if gap <= 1e-8 {
                continue;
            }
            let e_raw = random_hermitian(n, &mut rng);
            let e = e_raw.scale(Complex64::new(0.3 * gap / spectral_norm(&e_raw), 0.0));
            davis_kahan.record(&davis_kahan_check(&t, &e, r).unwrap());
        }
        // Distance from angles
        {
            let mut rng = Rng::new(mix(base_seed, 13, trial));
            let n = 3 + (rng.next_u64() % 13) as usize;
            let r = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
            let q = random_orthonormal(n, r, &mut rng);
            let qhat = random_orthonormal(n, r, &mut rng);
            angles.record(&distance_from_angles_check(&q, &qhat).unwrap());
        }
        // Bauer-Fike on diagonalizable-by-construction matrices.
        {
            let mut rng = Rng::new(mix(base_seed, 14, trial));
            let r = 1 + (rng.next_u64() % 4) as usize;
            let v = loop {
                let cand = ComplexMatrix::random_gaussian(r, r, &mut rng);
                let svd = small_svd(&cand).unwrap();
                if svd.sigma[0] / svd.sigma.last().unwrap().max(1e-300) < 50.0 {
                    break cand;
                }
            };
            let lambda: Vec<Complex64> =
                (0..r).map(|_| Complex64::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0))).collect();
            let e = ComplexMatrix::random_gaussian(r, r, &mut rng)
                .scale(Complex64::new(rng.uniform(0.001, 0.1), 0.0));
            bauer_fike.record(&bauer_fike_check(&v, &lambda, &e).unwrap());
        }
        // Pseudoinverse perturbation
        {
            let mut rng = Rng::new(mix(base_seed, 15, trial));
            let k = 1 + (rng.next_u64() % 5) as usize;
            let m_rows = k + 2 + (rng.next_u64() % 9) as usize;
            let a = ComplexMatrix::random_gaussian(m_rows, k, &mut rng);
            let sigma_min = *small_svd(&a).unwrap().sigma.last().unwrap();
            if sigma_min < 1e-6 {
                continue;
            }
            let e_raw = ComplexMatrix::random_gaussian(m_rows, k, &mut rng);
            let e = e_raw.scale(Complex64::new(
                rng.uniform(0.05, 0.5) * sigma_min / spectral_norm(&e_raw),
                0.0,
            ));
            pinv_pert.record(&pinv_perturbation_check(&a, &e).unwrap());
        }
    }
    vec![weyl, ostrowski, davis_kahan, angles, bauer_fike, pinv_pert]
}

/// Residue-sum vs Schur-formula agreement, plus the exact coefficient-sum
/// identity s(1, ..., 1) = binom(m + ell - 1, ell - 1).
pub fn schur_suite(base_seed: u64) -> OracleReport {
    let mut report = OracleReport::new("schur_contour");
    for m in -1i64..=5 {
        for ell in 1usize..=4 {
            for trial in 0..50u64 {
                let mut rng = Rng::new(mix(base_seed, (m + 2) as u64 * 100 + ell as u64, trial));
                let lambdas = loop {
                    let cand: Vec<f64> = (0..ell).map(|_| rng.uniform(0.5, 2.0)).collect();
                    if check_distinct_gap(&cand, 0.05) {
                        break cand;
                    }
                };
                let residue = contour_a_residue(m, &lambdas).unwrap();
                let schur = contour_a_schur(m, &lambdas).unwrap();
                let tol = if schur.abs() > 0.0 { 1e-9 * schur.abs() } else { 1e-12 };
                let diff = (residue - schur).abs();
                report.record(&OracleOutcome { lhs: diff, rhs: tol, pass: diff <= tol, slack: tol - diff });
            }
        }
    }
    // Exact integer identity.
    for m in 0u64..=6 {
        for ell in 1usize..=5 {
            let got = schur_mm0_ones(m, ell).unwrap();
            let want = binomial(m + ell as u64 - 1, ell as u64 - 1);
            let pass = got == want;
            report.record(&OracleOutcome {
                lhs: got as f64,
                rhs: want as f64,
                pass,
                slack: if pass { 0.0 } else { -1.0 },
            });
        }
    }
    report
}

fn check_distinct_gap(v: &[f64], gap: f64) -> bool {
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (v[i] - v[j]).abs() < gap {
                return false;
            }
        }
    }
    true
}

/// Concentration of the random Toeplitz norm: the ratio
/// ||E_random||_2 / (alpha sqrt(n log n)) must land in (0.1, 10).
pub fn noise_norm_suite(base_seed: u64) -> OracleReport {
    let mut report = OracleReport::new("noise_norm");
    let alpha = 1.0;
    for &n in &[256usize, 1024] {
        for trial in 0..20u64 {
            let spec = crate::signal::NoiseSpec {
                alpha,
                kind: crate::signal::NoiseKind::ComplexGaussian,
                seed: mix(base_seed, n as u64, trial),
            };
            let noise = crate::signal::sample_noise(n, &spec);
            let t = HermitianToeplitz::new(noise);
            let norm = toeplitz_spectral_norm(&t, mix(base_seed, n as u64, trial ^ 0xFFFF));
            let scale = alpha * ((n as f64) * (n as f64).ln()).sqrt();
            let ratio = norm / scale;
            let pass = ratio > 0.1 && ratio < 10.0;
            report.record(&OracleOutcome {
                lhs: ratio,
                rhs: 10.0,
                pass,
                slack: (10.0 - ratio).min(ratio - 0.1),
            });
        }
    }
    report
}

/// TV lower-bound demo: the bound sqrt(sum 4 sin^2(j eps)) at eps = n^{-1.6}
/// stays below 2 n^{1.5} eps and decreases in n.
pub fn lower_bound_suite() -> OracleReport {
    let mut report = OracleReport::new("lower_bound_tv");
    let mut prev = f64::INFINITY;
    for &n in &[100usize, 1_000, 10_000] {
        let eps = (n as f64).powf(-1.6);
        let rep = tv_lower_bound_demo(n, eps);
        let cap = 2.0 * (n as f64).powf(1.5) * eps;
        let pass = rep.tv_bound <= cap && rep.tv_bound < prev;
        report.record(&OracleOutcome {
            lhs: rep.tv_bound,
            rhs: cap,
            pass,
            slack: (cap - rep.tv_bound).min(prev - rep.tv_bound),
        });
        prev = rep.tv_bound;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::new_measure;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vandermonde_examples() {
        let v = vandermonde(&[c(1.0, 0.0)], 3);
        for i in 0..3 {
            assert_eq!(v[(i, 0)], c(1.0, 0.0));
        }
        let v = vandermonde(&[c(1.0, 0.0), c(-1.0, 0.0)], 2);
        assert_eq!(v[(1, 1)], c(-1.0, 0.0));
        let v = vandermonde(&[c(0.0, 1.0)], 4);
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (i, w) in want.iter().enumerate() {
            assert!((v[(i, 0)] - w).norm() < 1e-15);
        }
    }

    #[test]
    fn moitra_orthogonal_columns() {
        // z = {1, -1} with even n: exactly orthogonal columns, sigma = sqrt(n)
        let n = 64;
        let rep = moitra_bounds_check(&[c(1.0, 0.0), c(-1.0, 0.0)], n).unwrap();
        assert!((rep.sigma_max - (n as f64).sqrt()).abs() < 1e-9);
        assert!((rep.sigma_min - (n as f64).sqrt()).abs() < 1e-9);
        assert!(rep.upper_ok && rep.lower_ok);
        assert!(rep.gram_deviation < 1e-12);
    }

    #[test]
    fn moitra_generic_pair() {
        let z = [node(0.0), node(0.3)];
        let rep = moitra_bounds_check(&z, 64).unwrap();
        assert!(rep.upper_ok && rep.lower_ok);
    }

    #[test]
    fn moitra_precondition() {
        let z = [node(0.0), node(0.001)];
        assert!(matches!(
            moitra_bounds_check(&z, 100),
            Err(AnalysisError::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn error_matrices_examples() {
        // no tail
        let m = new_measure(&[0.1, 0.4], &[0.6, 0.4], 2).unwrap();
        let noise = vec![c(0.0, 0.0); 16];
        let dec = error_matrices(&m, &noise, 16).unwrap();
        assert!(dec.norms.e_tail == 0.0);
        assert!(dec.norms.e_random == 0.0);

        // tail present
        let m = new_measure(&[0.1, 0.6], &[0.9, 0.1], 1).unwrap();
        let noise = vec![c(0.0, 0.0); 32];
        let dec = error_matrices(&m, &noise, 32).unwrap();
        assert!(dec.norms.e_tail <= 3.2 + 1e-9);
        assert!(dec.norms.e_tail_q_r.is_finite());
        assert!(dec.norms.e_tail_q_r <= dec.norms.e_tail + 1e-9);
    }

    #[test]
    fn error_decomposition_entrywise() {
        let m = new_measure(&[0.05, 0.3, 0.8], &[0.5, 0.3, 0.2], 2).unwrap();
        let spec = crate::signal::NoiseSpec {
            alpha: 0.2,
            kind: crate::signal::NoiseKind::ComplexGaussian,
            seed: 9,
        };
        let n = 48;
        let noise = crate::signal::sample_noise(n, &spec);
        let dec = error_matrices(&m, &noise, n).unwrap();
        let mut g = crate::signal::synthesize(&m, n);
        for (s, e) in g.samples.iter_mut().zip(&noise) {
            *s += e;
        }
        let (t_hat, _) = crate::esprit::toeplitz_from_signal(&g);
        let resid = dec.entrywise_residual(&t_hat);
        assert!(resid <= 1e-12, "residual {resid}");
    }

    #[test]
    fn weyl_zero_perturbation() {
        let mut rng = Rng::new(1);
        let a = random_hermitian(6, &mut rng);
        let e = ComplexMatrix::zeros(6, 6);
        let out = weyl_check(&a, &e).unwrap();
        assert!(out.pass);
        assert!(out.lhs < 1e-10);
    }

    #[test]
    fn weyl_2x2_closed_form() {
        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
        let e = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.1, 0.0)], vec![c(0.1, 0.0), c(0.0, 0.0)]]);
        let out = weyl_check(&a, &e).unwrap();
        assert!(out.pass);
        // perturbed eigenvalues: (3 +- sqrt(1 + 0.04))/2, shift < 0.1
        assert!(out.lhs <= 0.1 + 1e-12);
    }

    #[test]
    fn schur_examples() {
        // m=1, ell=2: x1 + x2
        let v = schur_mm0(1, 2, &[1.0, 1.0]).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(binomial(2, 1), 2);
        // m=2, ell=2, x=(2,3): 4 + 6 + 9 = 19
        let v = schur_mm0(2, 2, &[2.0, 3.0]).unwrap();
        assert_eq!(v, 19.0);
        // ones identity
        for m in 0..=6u64 {
            for ell in 1..=5usize {
                assert_eq!(schur_mm0_ones(m, ell).unwrap(), binomial(m + ell as u64 - 1, ell as u64 - 1));
            }
        }
    }

    #[test]
    fn schur_too_large() {
        assert!(matches!(schur_mm0(1000, 4, &[1.0; 4]), Err(AnalysisError::TooLarge(_, _))));
    }

    #[test]
    fn contour_examples() {
        // single residue 1/lambda^{m+1}
        let v = contour_a_residue(1, &[2.0]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!((contour_a_schur(1, &[2.0]).unwrap() - 0.25).abs() < 1e-15);

        // ell = 2: -(2 + 3)/(4 * 9) = -5/36
        let v = contour_a_residue(1, &[2.0, 3.0]).unwrap();
        assert!((v + 5.0 / 36.0).abs() < 1e-12);
        assert!((contour_a_schur(1, &[2.0, 3.0]).unwrap() + 5.0 / 36.0).abs() < 1e-15);

        // m = -1, ell = 2: residues cancel
        let v = contour_a_residue(-1, &[2.0, 3.0]).unwrap();
        assert!(v.abs() < 1e-12);
        assert_eq!(contour_a_schur(-1, &[2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn contour_near_coincident() {
        assert!(matches!(
            contour_a_residue(0, &[1.0, 1.0 + 1e-9]),
            Err(AnalysisError::NearCoincident { .. })
        ));
    }

    #[test]
    fn tv_demo_examples() {
        let rep = tv_lower_bound_demo(1, 0.999_999);
        assert!(rep.sum <= 4.0);
        let rep = tv_lower_bound_demo(10, 0.001);
        // direct-summation oracle
        let want: f64 = (1..=10).map(|j| 4.0 * ((j as f64) * 0.001).sin().powi(2)).sum();
        assert!((rep.sum - want).abs() < 1e-18);
        assert!((rep.sum - 1.54e-3).abs() < 1e-5);
        // continuity: smaller eps shrinks the sum
        assert!(tv_lower_bound_demo(10, 1e-6).sum < rep.sum);
    }

    #[test]
    fn suites_have_zero_failures_smoke() {
        // full-size suite runs live in the acceptance tests; smoke-check the
        // cheap ones here
        let rep = schur_suite(3);
        assert_eq!(rep.failures, 0, "{rep:?}");
        let rep = lower_bound_suite();
        assert_eq!(rep.failures, 0, "{rep:?}");
    }
}
