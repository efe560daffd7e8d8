//! Structured fast path: radix-2 FFT, circulant-embedded Toeplitz
//! matrix-vector products, and subspace iteration for the dominant
//! eigenspace of a Hermitian Toeplitz matrix.

use num_complex::Complex64;
use thiserror::Error;

use crate::dense::{hermitian_eig, SubspaceDecomposition};
use crate::matrix::ComplexMatrix;
use crate::rng::Rng;

#[derive(Debug, Error, PartialEq)]
pub enum ToeplitzError {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("vector length {got} does not match matrix dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid rank {r} for dimension {n}")]
    InvalidRank { r: usize, n: usize },
    #[error("subspace iteration hit the iteration cap {0} before reaching tolerance")]
    ConvergenceFailure(usize),
}

pub type Result<T> = std::result::Result<T, ToeplitzError>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Unnormalized forward DFT, in place. Iterative radix-2 with precomputed
/// twiddles; the length must be a power of two.
pub fn fft_in_place(x: &mut [Complex64]) -> Result<()> {
    transform(x, false)
}

/// Inverse DFT (includes the 1/m normalization), in place.
pub fn ifft_in_place(x: &mut [Complex64]) -> Result<()> {
    transform(x, true)?;
    let scale = 1.0 / x.len() as f64;
    for z in x.iter_mut() {
        *z *= scale;
    }
    Ok(())
}

pub fn fft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut y = x.to_vec();
    fft_in_place(&mut y)?;
    Ok(y)
}

pub fn ifft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut y = x.to_vec();
    ifft_in_place(&mut y)?;
    Ok(y)
}

fn transform(x: &mut [Complex64], inverse: bool) -> Result<()> {
    let m = x.len();
    if m == 0 || !m.is_power_of_two() {
        return Err(ToeplitzError::NotPowerOfTwo(m));
    }
    // bit-reversal permutation
    let bits = m.trailing_zeros();
    for i in 0..m {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            x.swap(i, j);
        }
    }
    // precomputed twiddles for the largest stage, strided for smaller ones
    let sign = if inverse { 1.0 } else { -1.0 };
    let half = m / 2;
    let twiddles: Vec<Complex64> = (0..half)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * k as f64 / m as f64))
        .collect();
    let mut len = 2;
    while len <= m {
        let stride = m / len;
        for start in (0..m).step_by(len) {
            for k in 0..len / 2 {
                let w = twiddles[k * stride];
                let a = x[start + k];
                let b = x[start + k + len / 2] * w;
                x[start + k] = a + b;
                x[start + k + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Hermitian Toeplitz matrix stored by its first column.
/// Entry (i, j) = first_col[i - j] for i >= j and conj(first_col[j - i])
/// for i < j; the (0, 0) entry is real by construction.
#[derive(Debug, Clone)]
pub struct HermitianToeplitz {
    first_col: Vec<Complex64>,
}

impl HermitianToeplitz {
    /// Builds the matrix from its first column; any imaginary part of the
    /// leading entry is discarded.
    pub fn new(mut first_col: Vec<Complex64>) -> Self {
        assert!(!first_col.is_empty());
        first_col[0] = Complex64::new(first_col[0].re, 0.0);
        HermitianToeplitz { first_col }
    }

    pub fn identity(n: usize) -> Self {
        let mut col = vec![ZERO; n];
        col[0] = Complex64::new(1.0, 0.0);
        HermitianToeplitz { first_col: col }
    }

    pub fn n(&self) -> usize {
        self.first_col.len()
    }

    pub fn first_col(&self) -> &[Complex64] {
        &self.first_col
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        if i >= j {
            self.first_col[i - j]
        } else {
            self.first_col[j - i].conj()
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n(), self.n(), |i, j| self.entry(i, j))
    }

    /// Entrywise sum with another Toeplitz matrix of the same size.
    pub fn add(&self, other: &HermitianToeplitz) -> HermitianToeplitz {
        assert_eq!(self.n(), other.n());
        HermitianToeplitz::new(
            self.first_col.iter().zip(&other.first_col).map(|(a, b)| a + b).collect(),
        )
    }
}

/// Precomputed circulant embedding for O(m log m) Toeplitz products.
///
/// Embedding layout: the Toeplitz matrix of dimension n is embedded in an
/// m x m circulant with m = smallest power of two >= 2n. The circulant's
/// first column is
///
///   c[k]     = first_col[k]            for k = 0 .. n-1
///   c[k]     = 0                       for k = n .. m-n   (zero padding)
///   c[m - k] = conj(first_col[k])      for k = 1 .. n-1
///
/// so that c[(i - j) mod m] reproduces entry (i, j) of the Toeplitz matrix
/// whenever 0 <= i, j < n. The product y = C x_padded is computed as
/// ifft(fft(c) .* fft(x_padded)) and the first n entries are returned.
#[derive(Debug, Clone)]
pub struct CirculantEmbedding {
    n: usize,
    m: usize,
    symbol_fft: Vec<Complex64>,
}

impl CirculantEmbedding {
    pub fn new(t: &HermitianToeplitz) -> Self {
        let n = t.n();
        let m = (2 * n).next_power_of_two();
        let mut c = vec![ZERO; m];
        c[..n].copy_from_slice(t.first_col());
        for k in 1..n {
            c[m - k] = t.first_col()[k].conj();
        }
        fft_in_place(&mut c).expect("m is a power of two");
        CirculantEmbedding { n, m, symbol_fft: c }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(ToeplitzError::LengthMismatch { expected: self.n, got: x.len() });
        }
        let mut buf = vec![ZERO; self.m];
        buf[..self.n].copy_from_slice(x);
        fft_in_place(&mut buf)?;
        for (b, s) in buf.iter_mut().zip(&self.symbol_fft) {
            *b *= s;
        }
        ifft_in_place(&mut buf)?;
        buf.truncate(self.n);
        Ok(buf)
    }
}

/// Toeplitz matrix-vector product via circulant embedding.
pub fn toeplitz_matvec(t: &HermitianToeplitz, x: &[Complex64]) -> Result<Vec<Complex64>> {
    CirculantEmbedding::new(t).matvec(x)
}

fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm estimate (max |eigenvalue|) by power iteration on T^2
/// using the fast matvec. Deterministic given the seed.
pub fn toeplitz_spectral_norm(t: &HermitianToeplitz, seed: u64) -> f64 {
    let emb = CirculantEmbedding::new(t);
    let n = t.n();
    let mut rng = Rng::new(seed);
    let mut x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
    let norm = vec_norm(&x);
    for z in x.iter_mut() {
        *z /= norm;
    }
    let mut prev = 0.0;
    for _ in 0..5_000 {
        let y = emb.matvec(&emb.matvec(&x).unwrap()).unwrap();
        let norm = vec_norm(&y);
        if norm == 0.0 {
            return 0.0;
        }
        let est = norm.sqrt();
        x = y.iter().map(|z| z / norm).collect();
        if (est - prev).abs() <= 1e-10 * est {
            return est;
        }
        prev = est;
    }
    prev
}

/// Modified Gram-Schmidt with one reorthogonalization pass over the
/// columns of `x`, in place.
fn orthonormalize(x: &mut ComplexMatrix, rng: &mut Rng) {
    let n = x.rows();
    let p = x.cols();
    for j in 0..p {
        let mut col = x.column(j);
        for _pass in 0..2 {
            for k in 0..j {
                let prev = x.column(k);
                let proj: Complex64 = prev.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    col[i] -= prev[i] * proj;
                }
            }
        }
        let mut norm = vec_norm(&col);
        if norm < 1e-300 {
            // degenerate column: replace with a fresh random direction
            for z in col.iter_mut() {
                *z = Complex64::new(rng.normal(), rng.normal());
            }
            for k in 0..j {
                let prev = x.column(k);
                let proj: Complex64 = prev.iter().zip(&col).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    col[i] -= prev[i] * proj;
                }
            }
            norm = vec_norm(&col);
        }
        for z in col.iter_mut() {
            *z /= norm;
        }
        x.set_column(j, &col);
    }
}

/// Top-r eigenpairs of a Hermitian Toeplitz matrix by algebraic value.
///
/// Subspace iteration on the shifted operator T + cI, where c is chosen
/// large enough that the top algebraic eigenvalues of T dominate in
/// magnitude. The shift is removed from the returned Ritz values.
pub fn top_r_eigs(
    t: &HermitianToeplitz,
    r: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SubspaceDecomposition> {
    let n = t.n();
    if r < 1 || r >= n {
        return Err(ToeplitzError::InvalidRank { r, n });
    }
    assert!(tol > 0.0);
    let emb = CirculantEmbedding::new(t);

    // Norm estimate for the shift. The power-iteration estimate keeps the
    // shift proportional to ||T||_2; the l1 row-sum bound can exceed the
    // spectral norm by a sqrt(n) factor and would stall convergence.
    let norm_est = {
        let pow = toeplitz_spectral_norm(t, seed ^ 0x5851_F42D_4C95_7F2D);
        let l1: f64 = t.first_col()[0].norm()
            + 2.0 * t.first_col()[1..].iter().map(|z| z.norm()).sum::<f64>();
        if pow > 0.0 {
            pow.min(l1)
        } else {
            l1
        }
    };
    if norm_est == 0.0 {
        // zero matrix: every eigenvalue is 0, any orthonormal block works
        let mut q = ComplexMatrix::zeros(n, r);
        for j in 0..r {
            q[(j, j)] = Complex64::new(1.0, 0.0);
        }
        return Ok(SubspaceDecomposition { r, values: vec![0.0; r], q_r: q });
    }
    let shift = 1.25 * norm_est;

    let p = (r + 2).min(n);
    let mut rng = Rng::new(seed);
    let mut x = ComplexMatrix::random_gaussian(n, p, &mut rng);
    orthonormalize(&mut x, &mut rng);

    let apply = |x: &ComplexMatrix| -> ComplexMatrix {
        let mut w = ComplexMatrix::zeros(n, p);
        for j in 0..p {
            let col = x.column(j);
            let mut y = emb.matvec(&col).unwrap();
            for i in 0..n {
                y[i] += col[i] * shift;
            }
            w.set_column(j, &y);
        }
        w
    };

    for _iter in 0..max_iter {
        let w = apply(&x); // w = (T + cI) x
        // Rayleigh-Ritz on span(x): s = x^dagger w, p x p Hermitian.
        let s = x.adjoint().mul(&w);
        let ritz = hermitian_eig(&s).expect("p x p Rayleigh-Ritz");
        let xr = x.mul(&ritz.vectors);
        let wr = w.mul(&ritz.vectors);
        // Ritz residuals for the leading r pairs.
        let mut worst = 0.0_f64;
        for i in 0..r {
            let xi = xr.column(i);
            let wi = wr.column(i);
            let theta = ritz.values[i];
            let resid: f64 = wi
                .iter()
                .zip(&xi)
                .map(|(w, x)| (w - x * theta).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(resid);
        }
        if worst <= tol * norm_est {
            let values: Vec<f64> = ritz.values[..r].iter().map(|v| v - shift).collect();
            let q_r = xr.select_columns(0..r);
            return Ok(SubspaceDecomposition { r, values, q_r });
        }
        // Next power step from the already-computed W, rotated to Ritz order.
        x = wr;
        orthonormalize(&mut x, &mut rng);
    }
    Err(ToeplitzError::ConvergenceFailure(max_iter))
}
