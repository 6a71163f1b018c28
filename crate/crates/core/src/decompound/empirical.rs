//! Empirical characteristic functions of observed rotations.
//!
//! Sums run over fixed chunks of [`CHUNK_SIZE`] observations in parallel and
//! are then combined in chunk order, so results are bit-identical for any
//! number of worker threads.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::linalg::hermitian_part;
use crate::error::{Error, Result};
use crate::harmonic::{character, dim, irrep_matrices, legendre_all};
use crate::processes::CHUNK_SIZE;
use crate::rotations::Rotation;

fn chunked_sum<T, F, A>(obs: &[Rotation], zero: impl Fn() -> T + Sync, per_sample: F, add: A) -> T
where
    T: Send,
    F: Fn(&mut T, &Rotation) + Sync,
    A: Fn(&mut T, T),
{
    let partials: Vec<T> = obs
        .par_chunks(CHUNK_SIZE)
        .map(|chunk| {
            let mut acc = zero();
            for r in chunk {
                per_sample(&mut acc, r);
            }
            acc
        })
        .collect();
    let mut total = zero();
    for p in partials {
        add(&mut total, p);
    }
    total
}

fn add_vec(total: &mut [f64], part: Vec<f64>) {
    for (t, p) in total.iter_mut().zip(part) {
        *t += p;
    }
}

fn check_nonempty(obs: &[Rotation]) -> Result<f64> {
    if obs.is_empty() {
        Err(Error::EmptyObservations)
    } else {
        Ok(obs.len() as f64)
    }
}

/// `(1 / 2n) Σ_m (U^δ(Z_m) + U^δ(Z_m)†)` for every `δ < cutoff`.
pub fn empirical_char_all(obs: &[Rotation], cutoff: usize) -> Result<Vec<DMatrix<Complex64>>> {
    let n = check_nonempty(obs)?;
    if cutoff == 0 {
        return Ok(Vec::new());
    }
    let zero = || {
        (0..cutoff)
            .map(|d| DMatrix::zeros(dim(d), dim(d)))
            .collect::<Vec<DMatrix<Complex64>>>()
    };
    let sums = chunked_sum(
        obs,
        zero,
        |acc, r| {
            for (a, u) in acc.iter_mut().zip(irrep_matrices(cutoff - 1, r)) {
                *a += u;
            }
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        },
    );
    Ok(sums.iter().map(|s| hermitian_part(s).unscale(n)).collect())
}

/// Empirical characteristic matrix `φ̂_Z(δ)`, Hermitian by construction.
pub fn empirical_char(obs: &[Rotation], delta: usize) -> Result<DMatrix<Complex64>> {
    Ok(empirical_char_all(obs, delta + 1)?.pop().expect("non-empty"))
}

/// `(1/n) Σ_m P_δ(cos θ_m)` for every `δ < cutoff`, `θ_m` the Euler angle.
///
/// This is the `(0, 0)` entry of [`empirical_char`]: the only entry that a
/// law depending on `θ` alone can make nonzero.
pub fn empirical_char_zonal_all(obs: &[Rotation], cutoff: usize) -> Result<Vec<f64>> {
    let n = check_nonempty(obs)?;
    if cutoff == 0 {
        return Ok(Vec::new());
    }
    let sums = chunked_sum(
        obs,
        || vec![0.0; cutoff],
        |acc, r| {
            let x = r.cos_euler_theta().clamp(-1.0, 1.0);
            for (a, p) in acc.iter_mut().zip(legendre_all(cutoff - 1, x)) {
                *a += p;
            }
        },
        |t: &mut Vec<f64>, p| add_vec(t, p),
    );
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Single-`δ` form of [`empirical_char_zonal_all`].
pub fn empirical_char_zonal(obs: &[Rotation], delta: usize) -> Result<f64> {
    Ok(empirical_char_zonal_all(obs, delta + 1)?[delta])
}

/// `(1/n) Σ_m χ_δ(ω_m) / (2δ + 1)` for every `δ < cutoff`, `ω_m` the rotation
/// angle: the normalized trace of [`empirical_char`], and the scalar
/// `a_δ` of `φ(δ) = a_δ I` for conjugate-invariant laws.
pub fn empirical_char_central_all(obs: &[Rotation], cutoff: usize) -> Result<Vec<f64>> {
    let n = check_nonempty(obs)?;
    let sums = chunked_sum(
        obs,
        || vec![0.0; cutoff],
        |acc, r| {
            let omega = r.angle();
            for (d, a) in acc.iter_mut().enumerate() {
                *a += character(d, omega) / dim(d) as f64;
            }
        },
        |t: &mut Vec<f64>, p| add_vec(t, p),
    );
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Single-`δ` form of [`empirical_char_central_all`].
pub fn empirical_char_central(obs: &[Rotation], delta: usize) -> Result<f64> {
    Ok(empirical_char_central_all(obs, delta + 1)?[delta])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompound::linalg::{frobenius, operator_norm};
    use crate::processes::stream_rng;
    use crate::rotations::sample_haar;

    fn haar(n: usize, seed: u64) -> Vec<Rotation> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| sample_haar(&mut rng)).collect()
    }

    #[test]
    fn identity_observation() {
        let obs = vec![Rotation::IDENTITY];
        for d in 0..6 {
            let m = empirical_char(&obs, d).unwrap();
            assert!(frobenius(&(m - DMatrix::identity(dim(d), dim(d)))) < 1e-14);
            assert!((empirical_char_zonal(&obs, d).unwrap() - 1.0).abs() < 1e-14);
            assert!((empirical_char_central(&obs, d).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_and_inverse() {
        let r = haar(1, 5)[0];
        let obs = vec![r, r.inverse()];
        for d in 0..5 {
            let u = crate::harmonic::irrep_matrix(d, &r);
            let expected = (&u + u.adjoint()).scale(0.5);
            assert!(frobenius(&(empirical_char(&obs, d).unwrap() - expected)) < 1e-12);
        }
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(empirical_char(&[], 1), Err(Error::EmptyObservations)));
        assert!(matches!(empirical_char_zonal(&[], 1), Err(Error::EmptyObservations)));
        assert!(matches!(empirical_char_central(&[], 1), Err(Error::EmptyObservations)));
    }

    #[test]
    fn haar_char_vanishes() {
        let n = 100_000;
        let obs = haar(n, 6);
        let mats = empirical_char_all(&obs, 4).unwrap();
        for (d, m) in mats.iter().enumerate().skip(1) {
            let tol = 5.0 * dim(d) as f64 / (n as f64).sqrt();
            assert!(m.iter().all(|z| z.norm() < tol), "δ={d}");
        }
    }

    #[test]
    fn reductions_match_matrix() {
        let obs = haar(300, 7);
        let mats = empirical_char_all(&obs, 8).unwrap();
        let zonal = empirical_char_zonal_all(&obs, 8).unwrap();
        let central = empirical_char_central_all(&obs, 8).unwrap();
        for (d, m) in mats.iter().enumerate() {
            assert!((m[(d, d)].re - zonal[d]).abs() < 1e-12);
            assert!((m.trace().re / dim(d) as f64 - central[d]).abs() < 1e-12);
            assert!(operator_norm(m) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn chunking_independent_of_threads() {
        let obs = haar(3 * CHUNK_SIZE + 17, 8);
        let a = empirical_char_zonal_all(&obs, 10).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| empirical_char_zonal_all(&obs, 10).unwrap());
        assert_eq!(a, b);
    }
}
