//! Hermitian matrix helpers: the Hermitian part, spectra, the positivity gate
//! and the principal logarithm.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted as positive by the gate.
pub const PD_THRESHOLD: f64 = 1e-12;

/// Hermitian part `(M + M†) / 2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest absolute eigenvalue, the operator norm of a Hermitian matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    eigenvalues(m).into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// `true` iff every eigenvalue exceeds [`PD_THRESHOLD`].
pub fn psd_gate(m: &DMatrix<Complex64>) -> bool {
    eigenvalues(m).first().is_some_and(|&e| e > PD_THRESHOLD)
}

/// Scalar version of [`psd_gate`].
pub fn psd_gate_scalar(b: f64) -> bool {
    b > PD_THRESHOLD
}

/// Gate of the prior-informed estimator: every eigenvalue in `[lower, upper]`.
pub fn spectrum_within(m: &DMatrix<Complex64>, lower: f64, upper: f64) -> bool {
    let ev = eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => lo >= lower && hi <= upper && lo > PD_THRESHOLD,
        _ => false,
    }
}

fn spectral_map<F: Fn(f64) -> f64>(m: &DMatrix<Complex64>, f: F) -> (DMatrix<Complex64>, f64) {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::new(f(e), 0.0)));
    (v * d * v.adjoint(), min)
}

/// Unique Hermitian logarithm `V diag(log λ_i) V†` of a Hermitian
/// positive-definite matrix.
pub fn matrix_log_hpd(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (log, min) = spectral_map(m, f64::ln);
    if !(min > PD_THRESHOLD) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(hermitian_part(&log))
}

/// Matrix exponential of a Hermitian matrix.
pub fn matrix_exp_hermitian(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    hermitian_part(&spectral_map(m, f64::exp).0)
}

/// Frobenius norm.
pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
