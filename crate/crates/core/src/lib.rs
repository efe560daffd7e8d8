//! Spectral estimation on the unit circle with ESPRIT.
//!
//! The crate synthesizes noisy trigonometric-moment sequences, recovers the
//! underlying point masses (locations on the circle and nonnegative
//! intensities) via the ESPRIT subspace algorithm, and ships the numerical
//! toolbox needed to study its error scaling: hand-rolled dense Hermitian
//! and general eigensolvers, an FFT-based fast path for Hermitian Toeplitz
//! matrices, executable perturbation-theory oracles, and a Monte Carlo
//! harness that fits log-log error slopes against the cutoff frequency.

pub mod analysis;
pub mod dense;
pub mod esprit;
pub mod experiments;
pub mod matrix;
pub mod rng;
pub mod signal;
pub mod toeplitz;
