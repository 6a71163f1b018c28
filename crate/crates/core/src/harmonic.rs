//! Harmonic analysis on SO(3).
//!
//! Irreducible representations are labelled by `δ = 0, 1, 2, …` with
//! dimension `2δ + 1`. Matrix rows and columns are indexed by `a = −δ..=δ`,
//! stored at position `a + δ`. The matrix elements follow
//!
//! ```text
//! U^δ_ab(φ, θ, ψ) = e^{−i a φ} d^δ_ab(θ) e^{−i b ψ}
//! ```
//!
//! in ZYZ Euler coordinates, with `d^δ` the real Wigner small-d matrix,
//! so that `U^δ(g h) = U^δ(g) U^δ(h)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::ThetaRule;
use crate::rotations::{AngleDensity, Rotation};

/// Dimension `d_δ = 2δ + 1`.
pub fn dim(delta: usize) -> usize {
    2 * delta + 1
}

/// Laplace–Beltrami (Casimir) eigenvalue `λ_δ = δ(δ + 1)`.
pub fn casimir(delta: usize) -> f64 {
    (delta * (delta + 1)) as f64
}

/// Largest `δ` used by default, matching 31 Legendre coefficients.
pub const DEFAULT_MAX_DELTA: usize = 31;

/// A matrix Fourier coefficient `A_δ` or characteristic matrix `φ(δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficient {
    pub delta: usize,
    pub matrix: DMatrix<Complex64>,
}

impl FourierCoefficient {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).iter().all(|z| z.norm() < tol)
    }
}

/// Real Legendre spectrum `(a_0, …, a_{l−1})` of a zonal function.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalSpectrum {
    coeffs: Vec<f64>,
}

impl ZonalSpectrum {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `a_δ = r^δ`; the Henyey–Greenstein spectrum when `r = g`.
    pub fn geometric(ratio: f64, cutoff: usize) -> Self {
        Self::new((0..cutoff).map(|d| ratio.powi(d as i32)).collect())
    }

    /// Spectrum of the constant density 1.
    pub fn uniform(cutoff: usize) -> Self {
        let mut c = vec![0.0; cutoff];
        if cutoff > 0 {
            c[0] = 1.0;
        }
        Self::new(c)
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, delta: usize) -> f64 {
        self.coeffs.get(delta).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient-wise difference, padded with zeros to the longer cutoff.
    pub fn sub(&self, other: &ZonalSpectrum) -> ZonalSpectrum {
        let n = self.cutoff().max(other.cutoff());
        Self::new((0..n).map(|d| self.get(d) - other.get(d)).collect())
    }
}

/// Legendre polynomial `P_δ(x)` by the Bonnet recursion.
pub fn legendre_p(delta: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0 + 1e-12) {
        return Err(Error::Domain {
            what: "legendre_p",
            value: x,
        });
    }
    Ok(legendre_all(delta, x.clamp(-1.0, 1.0))[delta])
}

/// `[P_0(x), …, P_{max_delta}(x)]`; `x` is assumed to lie in `[-1, 1]`.
pub fn legendre_all(max_delta: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(max_delta + 1);
    p.push(1.0);
    if max_delta >= 1 {
        p.push(x);
    }
    for k in 1..max_delta {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `d^{j}_{m' m}(θ)` at `j = max(|m|, |m'|)`, the start of the recursion in `j`.
fn wigner_seed(mp: i64, m: i64, half_cos: f64, half_sin: f64) -> f64 {
    let j = mp.abs().max(m.abs());
    if m.abs() > mp.abs() {
        // d_{m' m} = (−1)^{m − m'} d_{m m'}
        let sign = if (m - mp).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        return sign * wigner_seed(m, mp, half_cos, half_sin);
    }
    let (pc, ps, sign) = if mp == j {
        (j + m, j - m, if (j - m) % 2 == 0 { 1.0 } else { -1.0 })
    } else {
        (j - m, j + m, 1.0)
    };
    let lb = 0.5 * ln_binomial((2 * j) as usize, (j + m) as usize);
    sign * lb.exp() * pow_or_one(half_cos, pc) * pow_or_one(half_sin, ps)
}

fn pow_or_one(x: f64, p: i64) -> f64 {
    if p == 0 {
        1.0
    } else {
        x.powi(p as i32)
    }
}

/// Wigner small-d matrices `d^0(θ), …, d^{max_delta}(θ)`.
///
/// Each entry `(m', m)` is carried upwards in `δ` by the three-term
/// recursion at fixed `θ`, starting from the single-term closed form at
/// `δ = max(|m|, |m'|)`.
pub fn wigner_d_all(max_delta: usize, theta: f64) -> Vec<DMatrix<f64>> {
    let x = theta.cos();
    let (half_sin, half_cos) = (0.5 * theta).sin_cos();
    let mut out: Vec<DMatrix<f64>> = (0..=max_delta).map(|d| DMatrix::zeros(dim(d), dim(d))).collect();
    let lmax = max_delta as i64;
    let legendre = legendre_all(max_delta, x);
    for (d, p) in legendre.iter().enumerate() {
        out[d][(d, d)] = *p;
    }
    for mp in -lmax..=lmax {
        for m in -lmax..=lmax {
            if mp == 0 && m == 0 {
                continue;
            }
            let j0 = mp.abs().max(m.abs());
            let mut prev = 0.0;
            let mut cur = wigner_seed(mp, m, half_cos, half_sin);
            let (m2, mp2) = ((m * m) as f64, (mp * mp) as f64);
            let mm = (m * mp) as f64;
            let mut j = j0;
            loop {
                let ju = j as usize;
                out[ju][((mp + j) as usize, (m + j) as usize)] = cur;
                if j == lmax {
                    break;
                }
                let jf = j as f64;
                let j1 = jf + 1.0;
                let a = (2.0 * jf + 1.0) * (jf * j1 * x - mm);
                let b = j1 * ((jf * jf - m2) * (jf * jf - mp2)).max(0.0).sqrt();
                let c = jf * ((j1 * j1 - m2) * (j1 * j1 - mp2)).sqrt();
                let next = (a * cur - b * prev) / c;
                prev = cur;
                cur = next;
                j += 1;
            }
        }
    }
    out
}

/// Wigner small-d matrix `d^δ(θ)`.
pub fn wigner_d(delta: usize, theta: f64) -> DMatrix<f64> {
    wigner_d_all(delta, theta).pop().expect("non-empty")
}

fn phases(max_delta: usize, angle: f64) -> Vec<Complex64> {
    // e^{−i a angle} for a = −max..=max
    let l = max_delta as i64;
    (-l..=l)
        .map(|a| Complex64::from_polar(1.0, -(a as f64) * angle))
        .collect()
}

/// Representation matrices `U^0(r), …, U^{max_delta}(r)`.
pub fn irrep_matrices(max_delta: usize, r: &Rotation) -> Vec<DMatrix<Complex64>> {
    let e = r.to_euler_zyz();
    let ds = wigner_d_all(max_delta, e.theta);
    let left = phases(max_delta, e.phi);
    let right = phases(max_delta, e.psi);
    ds.into_iter()
        .enumerate()
        .map(|(delta, d)| {
            let n = dim(delta);
            let off = max_delta - delta;
            DMatrix::from_fn(n, n, |i, k| left[off + i] * d[(i, k)] * right[off + k])
        })
        .collect()
}

/// The unitary matrix `U^δ(r)`.
pub fn irrep_matrix(delta: usize, r: &Rotation) -> DMatrix<Complex64> {
    irrep_matrices(delta, r).pop().expect("non-empty")
}

/// Character `χ_δ(ω) = sin((δ + ½) ω) / sin(ω / 2)` of a rotation by `ω`.
pub fn character(delta: usize, omega: f64) -> f64 {
    let d = delta as f64;
    if omega.abs() < 1e-7 {
        // Taylor expansion about the identity
        return (2.0 * d + 1.0) * (1.0 - d * (d + 1.0) * omega * omega / 6.0);
    }
    ((d + 0.5) * omega).sin() / (0.5 * omega).sin()
}

/// Legendre coefficients `a_δ = ½ ∫ p(θ) P_δ(cos θ) sin θ dθ`, `δ < cutoff`.
pub fn legendre_spectrum(density: &dyn AngleDensity, cutoff: usize) -> ZonalSpectrum {
    let rule = ThetaRule::for_cutoff(cutoff);
    let mut acc = vec![0.0; cutoff];
    if cutoff == 0 {
        return ZonalSpectrum::new(acc);
    }
    for (&t, &w) in rule.thetas.iter().zip(&rule.weights) {
        let f = density.density(t) * w;
        for (a, p) in acc.iter_mut().zip(legendre_all(cutoff - 1, t.cos())) {
            *a += f * p;
        }
    }
    ZonalSpectrum::new(acc)
}

/// Single Legendre coefficient `a_δ` of a zonal density.
pub fn legendre_coeff(density: &dyn AngleDensity, delta: usize) -> f64 {
    legendre_spectrum(density, delta + 1).get(delta)
}

/// `Σ_δ (2δ + 1) a_δ P_δ(cos θ)`.
pub fn legendre_series(spectrum: &ZonalSpectrum, theta: f64) -> f64 {
    let l = spectrum.cutoff();
    if l == 0 {
        return 0.0;
    }
    legendre_all(l - 1, theta.cos())
        .iter()
        .zip(spectrum.as_slice())
        .enumerate()
        .map(|(d, (p, a))| (2 * d + 1) as f64 * a * p)
        .sum()
}

/// Squared `L²(SO(3))` norm of a zonal function: `Σ_δ (2δ + 1) a_δ²`.
pub fn plancherel_norm_sq(spectrum: &ZonalSpectrum) -> f64 {
    spectrum
        .as_slice()
        .iter()
        .enumerate()
        .map(|(d, a)| (2 * d + 1) as f64 * a * a)
        .sum()
}
