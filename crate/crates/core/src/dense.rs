//! Reference complex dense linear algebra.
//!
//! Everything here is built on three kernels:
//! * Hermitian eigendecomposition: Householder tridiagonalization with a
//!   diagonal phase rescaling to a real symmetric tridiagonal, then
//!   implicit-shift QL with eigenvector accumulation.
//! * Small general eigenvalues: Hessenberg reduction + single-shift complex
//!   QR with deflation (eigenvalues only).
//! * Small SVD: one-sided Jacobi on columns.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::ComplexMatrix;
use crate::rng::Rng;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("iteration cap exceeded in {0}")]
    ConvergenceFailure(&'static str),
    #[error("matrix is numerically rank deficient (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("columns are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("dimension {0} exceeds the small-problem cap {1}")]
    TooLarge(usize, usize),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Full Hermitian eigendecomposition, eigenvalues in algebraically
/// descending order, eigenvector columns orthonormal.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Dominant block of a Hermitian eigendecomposition: top-r eigenvalues
/// (descending) with the n x r orthonormal eigenvector block.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    pub r: usize,
    pub values: Vec<f64>,
    pub q_r: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn phase_of(z: Complex64) -> Complex64 {
    let a = z.norm();
    if a == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / a
    }
}

/// Tridiagonalize a Hermitian matrix in place. Returns (d, e, q) with the
/// real symmetric tridiagonal (diagonal d, subdiagonal e >= 0) and the
/// accumulated unitary q such that input = q * tridiag * q^dagger.
fn tridiagonalize(a: &mut ComplexMatrix) -> (Vec<f64>, Vec<f64>, ComplexMatrix) {
    let n = a.rows();
    let mut q = ComplexMatrix::identity(n);
    let mut u = vec![ZERO; n];
    let mut p = vec![ZERO; n];

    for k in 0..n.saturating_sub(2) {
        let mut norm_x_sq = 0.0;
        for i in k + 1..n {
            norm_x_sq += a[(i, k)].norm_sqr();
        }
        let norm_x = norm_x_sq.sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let ph = phase_of(x0);
        // Householder vector: u = x + phase(x0) * ||x|| * e1.
        u[k + 1] = x0 + ph * norm_x;
        for i in k + 2..n {
            u[i] = a[(i, k)];
        }
        let u_norm_sq: f64 = (k + 1..n).map(|i| u[i].norm_sqr()).sum();
        if u_norm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / u_norm_sq;

        // Column k maps to -phase * ||x|| * e1; mirror into row k.
        a[(k + 1, k)] = -ph * norm_x;
        a[(k, k + 1)] = a[(k + 1, k)].conj();
        for i in k + 2..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }

        // Rank-2 update of the trailing block: A <- A - u w^t - w u^t
        // with p = beta A u and w = p - (beta/2)(u^t p) u.
        for i in k + 1..n {
            let mut acc = ZERO;
            for j in k + 1..n {
                acc += a[(i, j)] * u[j];
            }
            p[i] = acc * beta;
        }
        let mut udotp = ZERO;
        for i in k + 1..n {
            udotp += u[i].conj() * p[i];
        }
        let kappa = 0.5 * beta * udotp.re;
        for i in k + 1..n {
            p[i] -= u[i] * kappa; // p now holds w
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let delta = u[i] * p[j].conj() + p[i] * u[j].conj();
                a[(i, j)] -= delta;
            }
        }

        // Accumulate Q <- Q (I - beta u u^t).
        for row in 0..n {
            let mut s = ZERO;
            for l in k + 1..n {
                s += q[(row, l)] * u[l];
            }
            let s = s * beta;
            for l in k + 1..n {
                let d = s * u[l].conj();
                q[(row, l)] -= d;
            }
        }

        for i in k + 1..n {
            u[i] = ZERO;
            p[i] = ZERO;
        }
    }

    // Make the subdiagonal real and nonnegative by a diagonal phase
    // similarity, absorbing the phases into the columns of q.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut col_phase = vec![Complex64::new(1.0, 0.0); n];
    for k in 0..n {
        d[k] = a[(k, k)].re;
    }
    for k in 0..n.saturating_sub(1) {
        let t = a[(k + 1, k)];
        e[k] = t.norm();
        col_phase[k + 1] = col_phase[k] * phase_of(t);
    }
    for j in 0..n {
        if col_phase[j] != Complex64::new(1.0, 0.0) {
            for i in 0..n {
                let v = q[(i, j)] * col_phase[j];
                q[(i, j)] = v;
            }
        }
    }
    (d, e, q)
}

/// Implicit-shift QL on a real symmetric tridiagonal, accumulating the
/// rotations into the complex eigenvector matrix `z`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut ComplexMatrix) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    // Absolute deflation floor: off-diagonals below eps * ||T|| are
    // numerically zero even when the neighboring diagonals vanish (exact
    // low-rank inputs), where the purely relative test would never fire.
    let anorm = d.iter().map(|v| v.abs()).fold(0.0, f64::max)
        + e.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = (d[m].abs() + d[m + 1].abs()).max(anorm);
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(LinalgError::ConvergenceFailure("tridiagonal QL"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..z.rows() {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = z[(k, i)] * s + f * c;
                    z[(k, i)] = z[(k, i)] * c - f * s;
                }
            }
            if underflow && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Hermitian eigendecomposition with eigenvalues in algebraically
/// descending order. The input is Hermitianized by (H + H^dagger)/2 first.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let (mut d, mut e, mut q) = tridiagonalize(&mut a);
    tridiagonal_ql(&mut d, &mut e, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = q.permute_columns(&order);
    Ok(EigenDecomposition { values, vectors })
}

impl EigenDecomposition {
    pub fn top_block(&self, r: usize) -> SubspaceDecomposition {
        SubspaceDecomposition {
            r,
            values: self.values[..r].to_vec(),
            q_r: self.vectors.select_columns(0..r),
        }
    }
}

/// Reduce a general complex matrix to upper Hessenberg form in place.
fn hessenberg_reduce(a: &mut ComplexMatrix) {
    let n = a.rows();
    let mut u = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let mut norm_x_sq = 0.0;
        for i in k + 1..n {
            norm_x_sq += a[(i, k)].norm_sqr();
        }
        let norm_x = norm_x_sq.sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let ph = phase_of(x0);
        u[k + 1] = x0 + ph * norm_x;
        for i in k + 2..n {
            u[i] = a[(i, k)];
        }
        let u_norm_sq: f64 = (k + 1..n).map(|i| u[i].norm_sqr()).sum();
        if u_norm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / u_norm_sq;
        // A <- P A
        for j in 0..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += u[i].conj() * a[(i, j)];
            }
            let s = s * beta;
            for i in k + 1..n {
                let d = u[i] * s;
                a[(i, j)] -= d;
            }
        }
        // A <- A P
        for i in 0..n {
            let mut s = ZERO;
            for j in k + 1..n {
                s += a[(i, j)] * u[j];
            }
            let s = s * beta;
            for j in k + 1..n {
                let d = s * u[j].conj();
                a[(i, j)] -= d;
            }
        }
        for i in k + 1..n {
            u[i] = ZERO;
        }
    }
}

/// Complex Givens rotation zeroing `z` against `x`: returns (c, s) with c
/// real so that -conj(s) x + c z = 0 and |c|^2 + |s|^2 = 1.
fn givens(x: Complex64, z: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let az = z.norm();
    if az == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = ax.hypot(az);
    let c = ax / r;
    let s = (x / ax) * (z.conj() / r);
    (c, s)
}

/// Eigenvalue of the trailing 2x2 of the active block closest to the corner.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of a small general complex matrix, unordered.
pub fn general_eig_small(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if n > 64 {
        return Err(LinalgError::TooLarge(n, 64));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = a.clone();
    hessenberg_reduce(&mut h);

    let eps = f64::EPSILON;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut high = n - 1;
    let mut iters_at_block = 0usize;
    loop {
        // Deflate negligible subdiagonals.
        for i in 1..=high {
            let scale = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
            if h[(i, i - 1)].norm() <= eps * scale.max(f64::MIN_POSITIVE) {
                h[(i, i - 1)] = ZERO;
            }
        }
        if high == 0 {
            eigenvalues.push(h[(0, 0)]);
            break;
        }
        if h[(high, high - 1)] == ZERO {
            eigenvalues.push(h[(high, high)]);
            high -= 1;
            iters_at_block = 0;
            continue;
        }
        // Start of the active block.
        let mut low = high;
        while low > 0 && h[(low, low - 1)] != ZERO {
            low -= 1;
        }
        iters_at_block += 1;
        if iters_at_block > 200 {
            return Err(LinalgError::ConvergenceFailure("Hessenberg QR"));
        }
        let shift = if iters_at_block % 30 == 0 {
            // Exceptional shift to break symmetry cycles.
            h[(high, high)] + Complex64::new(1.5, 0.0) * h[(high, high - 1)].norm()
        } else {
            wilkinson_shift(
                h[(high - 1, high - 1)],
                h[(high - 1, high)],
                h[(high, high - 1)],
                h[(high, high)],
            )
        };
        // Single-shift bulge chase on rows/cols low..=high.
        let mut x = h[(low, low)] - shift;
        let mut z = h[(low + 1, low)];
        for k in low..high {
            let (c, s) = givens(x, z);
            // Rows k and k+1.
            let jstart = k.saturating_sub(1);
            for j in jstart..n {
                let hkj = h[(k, j)];
                let hk1j = h[(k + 1, j)];
                h[(k, j)] = hkj * c + hk1j * s;
                h[(k + 1, j)] = -hkj * s.conj() + hk1j * c;
            }
            // Columns k and k+1.
            let iend = (k + 2).min(high) + 1;
            for i in 0..iend.min(n) {
                let hik = h[(i, k)];
                let hik1 = h[(i, k + 1)];
                h[(i, k)] = hik * c + hik1 * s.conj();
                h[(i, k + 1)] = -hik * s + hik1 * c;
            }
            if k + 2 <= high {
                x = h[(k + 1, k)];
                z = h[(k + 2, k)];
            }
        }
    }
    Ok(eigenvalues)
}

/// One-sided Jacobi SVD. Requires min(rows, cols) <= 64.
pub fn small_svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    if m.min(n) > 64 {
        return Err(LinalgError::TooLarge(m.min(n), 64));
    }
    if m < n {
        let svd = small_svd(&a.adjoint())?;
        return Ok(Svd { u: svd.v, sigma: svd.sigma, v: svd.u });
    }
    let mut w = a.clone(); // columns orthogonalized in place
    let mut v = ComplexMatrix::identity(n);

    let tol = 1e-14;
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = ZERO;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                let off = apq.norm();
                if off <= tol * (app * aqq).sqrt() || off == 0.0 {
                    continue;
                }
                rotated = true;
                let ph = phase_of(apq);
                // Real Jacobi rotation after absorbing the phase of apq.
                let tau = (aqq - app) / (2.0 * off);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)] * ph.conj();
                    w[(i, p)] = wp * c - wq * s;
                    w[(i, q)] = (wp * s + wq * c) * ph;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)] * ph.conj();
                    v[(i, p)] = vp * c - vq * s;
                    v[(i, q)] = (vp * s + vq * c) * ph;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::ConvergenceFailure("Jacobi SVD"));
    }

    let mut sigma: Vec<f64> = (0..n).map(|j| w.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let sigma_sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let w = w.permute_columns(&order);
    let v = v.permute_columns(&order);
    sigma = sigma_sorted;

    // Normalize columns of U; complete an orthonormal basis for any
    // numerically zero singular values.
    let sig_max = sigma.first().copied().unwrap_or(0.0);
    let zero_tol = sig_max * 1e-15;
    let mut u = ComplexMatrix::zeros(m, n);
    let mut filled: Vec<usize> = Vec::new();
    for j in 0..n {
        if sigma[j] > zero_tol {
            let col: Vec<Complex64> = w.column(j).iter().map(|z| z / sigma[j]).collect();
            u.set_column(j, &col);
            filled.push(j);
        } else {
            sigma[j] = 0.0;
        }
    }
    for j in 0..n {
        if sigma[j] > zero_tol {
            continue;
        }
        // Gram-Schmidt a canonical vector against the existing columns.
        let mut best: Vec<Complex64> = vec![ZERO; m];
        let mut best_norm = -1.0;
        for attempt in 0..m {
            let mut cand = vec![ZERO; m];
            cand[attempt] = Complex64::new(1.0, 0.0);
            for &k in &filled {
                let col = u.column(k);
                let proj: Complex64 = col.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                for i in 0..m {
                    cand[i] -= col[i] * proj;
                }
            }
            let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > best_norm {
                best_norm = norm;
                best = cand;
            }
            if norm > 0.5 {
                break;
            }
        }
        for z in best.iter_mut() {
            *z /= best_norm;
        }
        u.set_column(j, &best);
        filled.push(j);
    }
    Ok(Svd { u, sigma, v })
}

/// Least-squares solve X = A^+ B for a full-column-rank A.
pub fn pinv_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows() != b.rows() {
        return Err(LinalgError::ShapeMismatch(a.rows(), a.cols(), b.rows(), b.cols()));
    }
    let svd = small_svd(a)?;
    let sig_max = svd.sigma.first().copied().unwrap_or(0.0);
    let sig_min = svd.sigma.last().copied().unwrap_or(0.0);
    if a.rows() < a.cols() || sig_max == 0.0 || sig_min <= 1e-10 * sig_max {
        return Err(LinalgError::RankDeficient { ratio: if sig_max > 0.0 { sig_min / sig_max } else { 0.0 } });
    }
    // X = V diag(1/sigma) U^dagger B
    let utb = svd.u.adjoint().mul(b);
    let scaled = ComplexMatrix::from_fn(utb.rows(), utb.cols(), |i, j| utb[(i, j)] / svd.sigma[i]);
    Ok(svd.v.mul(&scaled))
}

/// Moore-Penrose pseudoinverse for any shape and rank: singular values
/// below 1e-12 * sigma_max are truncated to zero. Unlike pinv_solve, rank
/// deficiency is not an error here.
pub fn pinv(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let svd = small_svd(a)?;
    let sig_max = svd.sigma.first().copied().unwrap_or(0.0);
    let tol = 1e-12 * sig_max;
    let ut = svd.u.adjoint();
    let scaled = ComplexMatrix::from_fn(ut.rows(), ut.cols(), |i, j| {
        if svd.sigma[i] > tol {
            ut[(i, j)] / svd.sigma[i]
        } else {
            ZERO
        }
    });
    Ok(svd.v.mul(&scaled))
}

/// Largest singular value by power iteration on A^dagger A with a
/// deterministic pseudo-random start. Returns 0 for the zero matrix.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut rng = Rng::new(0x9E37_79B9_7F4A_7C15);
    let mut x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
    let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in x.iter_mut() {
        *z /= norm;
    }
    let at = a.adjoint();
    let mut sigma_prev = 0.0;
    for _ in 0..10_000 {
        let y = at.matvec(&a.matvec(&x));
        let norm: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let sigma = norm.sqrt();
        x = y.iter().map(|z| z / norm).collect();
        if (sigma - sigma_prev).abs() <= 1e-9 * sigma {
            return sigma;
        }
        sigma_prev = sigma;
    }
    sigma_prev
}

fn check_orthonormal(u: &ComplexMatrix, tol: f64) -> Result<()> {
    let gram = u.adjoint().mul(u);
    let dev = gram.sub(&ComplexMatrix::identity(u.cols())).max_abs();
    if dev > tol {
        return Err(LinalgError::NotOrthonormal(dev));
    }
    Ok(())
}

/// sin of the principal angle between two column spans:
/// the spectral norm of the projector difference U U^dagger - V V^dagger.
pub fn sin_theta(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    if u.rows() != v.rows() || u.cols() != v.cols() {
        return Err(LinalgError::ShapeMismatch(u.rows(), u.cols(), v.rows(), v.cols()));
    }
    let tol = 1e-8 * (u.rows() as f64).max(1.0);
    check_orthonormal(u, tol)?;
    check_orthonormal(v, tol)?;
    let pu = u.mul(&u.adjoint());
    let pv = v.mul(&v.adjoint());
    Ok(spectral_norm(&pu.sub(&pv)))
}

/// Unitary r x r factor aligning Q to Qhat: the polar factor of
/// Q^dagger Qhat, minimizing ||Qhat - Q U||_F over unitary U.
pub fn procrustes_align(q: &ComplexMatrix, qhat: &ComplexMatrix) -> Result<ComplexMatrix> {
    if q.rows() != qhat.rows() || q.cols() != qhat.cols() {
        return Err(LinalgError::ShapeMismatch(q.rows(), q.cols(), qhat.rows(), qhat.cols()));
    }
    let overlap = q.adjoint().mul(qhat);
    let svd = small_svd(&overlap)?;
    Ok(svd.u.mul(&svd.v.adjoint()))
}
