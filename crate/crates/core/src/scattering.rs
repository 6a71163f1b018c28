//! Multiple scattering in a plane-parallel layer.
//!
//! A wave entering the layer along `s(0) = (0, 0, 1)` is deflected at the
//! events of a Poisson process with rate `1/ℓ`; each deflection is an
//! independent zonal rotation with the Henyey–Greenstein phase function.
//! After a path of length `H` the direction is `s(0) · Y(H)`, so the angle
//! between `s(0)` and `s(H)` is the Euler angle `θ` of `Y(H)`.

use rand::Rng;

use crate::decompound::ParametricEstimate;
use crate::error::{Error, Result};
use crate::harmonic::legendre_all;
use crate::processes::CompoundModel;
use crate::rotations::AngleDensity;

/// Henyey–Greenstein phase function with anisotropy `g ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HenyeyGreenstein {
    g: f64,
}

impl HenyeyGreenstein {
    pub fn new(g: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&g) {
            return Err(Error::Domain {
                what: "Henyey–Greenstein anisotropy",
                value: g,
            });
        }
        Ok(Self { g })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    fn density_unchecked(g: f64, cos_theta: f64) -> f64 {
        (1.0 - g * g) / (1.0 + g * g - 2.0 * g * cos_theta).powf(1.5)
    }

    /// `P(cos θ ≤ c)`.
    pub fn cdf_cos(&self, c: f64) -> f64 {
        let g = self.g;
        if g == 0.0 {
            return (0.5 * (c + 1.0)).clamp(0.0, 1.0);
        }
        let c = c.clamp(-1.0, 1.0);
        ((1.0 - g * g) / (2.0 * g) * (1.0 / (1.0 + g * g - 2.0 * g * c).sqrt() - 1.0 / (1.0 + g))).clamp(0.0, 1.0)
    }
}

impl AngleDensity for HenyeyGreenstein {
    fn density(&self, theta: f64) -> f64 {
        Self::density_unchecked(self.g, theta.cos())
    }

    fn cos_theta_quantile(&self, u: f64) -> Option<f64> {
        Some(hg_cos_quantile(self.g, u))
    }

    fn describe(&self) -> String {
        format!("hg:{}", self.g)
    }
}

/// Henyey–Greenstein density of `θ` with respect to `sin θ dθ / 2`,
/// `(1 − g²) / (1 + g² − 2g cos θ)^{3/2}`.
pub fn hg_density(g: f64, theta: f64) -> Result<f64> {
    Ok(HenyeyGreenstein::new(g)?.density(theta))
}

/// Below this anisotropy the closed-form quantile loses precision and the
/// isotropic quantile is used.
const ISOTROPIC_G: f64 = 1e-8;

fn hg_cos_quantile(g: f64, u: f64) -> f64 {
    if g < ISOTROPIC_G {
        return 2.0 * u - 1.0;
    }
    let s = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
    ((1.0 + g * g - s * s) / (2.0 * g)).clamp(-1.0, 1.0)
}

/// Draw of `cos θ` under the Henyey–Greenstein law by inversion.
pub fn hg_sample_cos<R: Rng + ?Sized>(g: f64, rng: &mut R) -> f64 {
    hg_cos_quantile(g, rng.random::<f64>())
}

/// Plane-parallel scattering layer: thickness `H`, mean free path `ℓ`,
/// anisotropy `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerModel {
    pub thickness: f64,
    pub mean_free_path: f64,
    pub g: f64,
}

impl LayerModel {
    pub fn new(thickness: f64, mean_free_path: f64, g: f64) -> Result<Self> {
        if !(thickness > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "layer thickness must be > 0, got {thickness}"
            )));
        }
        if !(mean_free_path > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean free path must be > 0, got {mean_free_path}"
            )));
        }
        HenyeyGreenstein::new(g)?;
        Ok(Self {
            thickness,
            mean_free_path,
            g,
        })
    }

    /// Optical depth `H / ℓ`, the mean number of scattering events.
    pub fn optical_depth(&self) -> f64 {
        self.thickness / self.mean_free_path
    }

    /// The compound model with `λ = 1/ℓ` and `T = H`.
    pub fn compound_model(&self) -> CompoundModel {
        CompoundModel::henyey_greenstein(1.0 / self.mean_free_path, self.thickness, 0.0, self.g)
            .expect("validated layer")
    }
}

/// Fraction of the transmitted directions inside the pencil of half-angle
/// `θ` around `s(0)`:
///
/// ```text
/// C_H(θ) = Σ_δ (2δ + 1) e^{(H/ℓ)(g^δ − 1)} · ½ ∫₀^θ P_δ(cos ξ) sin ξ dξ
/// ```
///
/// `C_H(π) = 1` and `C_H(0) = 0` (the pencil is open, so the unscattered
/// atom at `θ = 0` counts for every `θ > 0`). The intensity ratio of the
/// radiative-transfer literature is `I_H(θ) = 4π C_H(θ)`.
///
/// The unscattered atom `e^{−H/ℓ}` is split off so that the remaining
/// series decays like `g^δ`; terms beyond `delta_max` are dropped.
pub fn transmitted_intensity(layer: &LayerModel, theta: f64, delta_max: usize) -> f64 {
    let g = layer.g;
    transmitted_cdf(layer.optical_depth(), |d| g.powi(d as i32), theta, delta_max)
}

/// [`transmitted_intensity`] for an arbitrary phase-function spectrum.
pub fn transmitted_cdf<A: Fn(usize) -> f64>(optical_depth: f64, spectrum: A, theta: f64, delta_max: usize) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    let atom = (-optical_depth).exp();
    let x = theta.min(std::f64::consts::PI).cos();
    let p = legendre_all(delta_max + 1, x);
    let mut total = atom;
    for delta in 0..=delta_max {
        let c = (optical_depth * (spectrum(delta) - 1.0)).exp() - atom;
        // (2δ+1) · ½ ∫_x^1 P_δ = ½ (P_{δ−1}(x) − P_{δ+1}(x)), and ½(1 − x) at δ = 0
        let pencil = if delta == 0 {
            0.5 * (1.0 - x)
        } else {
            0.5 * (p[delta - 1] - p[delta + 1])
        };
        total += c * pencil;
    }
    total
}

/// Law of the Euler angle `θ` of `Y(T)` under Henyey–Greenstein jumps:
/// an atom `P(N = 0)` at the identity plus the continuous mixture
/// `Σ_{n ≥ 1} P(N = n) HG(gⁿ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureDensity {
    /// Continuous part, a density against `sin θ dθ / 2` of mass `1 − atom`.
    pub continuous: f64,
    /// Mass of the atom at the identity, `e^{−λT}`.
    pub atom: f64,
}

fn poisson_weights(mean: f64, nmax: usize) -> Result<Vec<f64>> {
    let mut w = Vec::with_capacity(nmax + 1);
    let mut p = (-mean).exp();
    w.push(p);
    for n in 1..=nmax {
        p *= mean / n as f64;
        w.push(p);
    }
    let tail = 1.0 - w.iter().sum::<f64>();
    if tail > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "mixture truncated at n = {nmax} leaves Poisson tail {tail:e}"
        )));
    }
    Ok(w)
}

/// Mixture density at `θ`, truncated after `nmax` scattering events.
pub fn mixture_density(g: f64, lambda_t: f64, theta: f64, nmax: usize) -> Result<MixtureDensity> {
    HenyeyGreenstein::new(g)?;
    let w = poisson_weights(lambda_t, nmax)?;
    let c = theta.cos();
    let continuous = (1..=nmax)
        .map(|n| w[n] * HenyeyGreenstein::density_unchecked(g.powi(n as i32), c))
        .sum();
    Ok(MixtureDensity { continuous, atom: w[0] })
}

/// `P(cos θ ≤ c | N(T) > 0)` for the mixture.
pub fn mixture_cdf_cos_given_scattered(g: f64, lambda_t: f64, c: f64, nmax: usize) -> Result<f64> {
    HenyeyGreenstein::new(g)?;
    let w = poisson_weights(lambda_t, nmax)?;
    let total: f64 = (1..=nmax)
        .map(|n| w[n] * HenyeyGreenstein { g: g.powi(n as i32) }.cdf_cos(c))
        .sum();
    Ok(total / (1.0 - w[0]))
}

/// Naive anisotropy estimates `ĝ_δ = â_δ^{1/δ}`, indexed by `δ`.
///
/// Entries are `None` for `δ = 0`, for rejected coefficients and for
/// `â_δ ≤ 0`, where the power is undefined.
pub fn estimate_g(est: &ParametricEstimate) -> Vec<Option<f64>> {
    est.entries
        .iter()
        .map(|e| {
            if !e.gate_passed {
                None
            } else {
                g_from_coefficient(e.delta, e.a_hat())
            }
        })
        .collect()
}

/// `a^{1/δ}` for `δ ≥ 1` and `a > 0`.
pub fn g_from_coefficient(delta: usize, a: f64) -> Option<f64> {
    (delta >= 1 && a > 0.0).then(|| a.powf(1.0 / delta as f64))
}
