//! Elements of SO(3) and random sampling on the group.
//!
//! A [`Rotation`] is stored as a unit quaternion `(w, x, y, z)` with the sign
//! fixed by `w ≥ 0`; the 3×3 matrix is computed on demand. Composition is the
//! Hamilton product, so `a.compose(&b).matrix() == a.matrix() * b.matrix()`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature::ThetaRule;

/// Below this value of `sin θ` the ZYZ coordinates are degenerate and `ψ = 0`.
pub const GIMBAL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rotation({}, {}, {}, {})", self.w, self.x, self.y, self.z)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a rotation from any nonzero quaternion; the input is normalized.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }.normalized()
    }

    /// Stored components of an already-unit quaternion, taken verbatim
    /// apart from the sign convention `w ≥ 0`; for lossless deserialization.
    pub(crate) fn from_unit_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        if w < 0.0 {
            Self {
                w: -w,
                x: -x,
                y: -y,
                z: -z,
            }
        } else {
            Self { w, x, y, z }
        }
    }

    pub fn quaternion(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation by `angle` about the axis `axis` (need not be unit length).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_quaternion(c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n)
    }

    pub fn rz(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_quaternion(c, 0.0, 0.0, s)
    }

    pub fn ry(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_quaternion(c, 0.0, s, 0.0)
    }

    fn normalized(self) -> Self {
        let n = (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        let s = if self.w < 0.0 { -1.0 / n } else { 1.0 / n };
        Self {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let (a, b, c, d) = (self.w, self.x, self.y, self.z);
        let (e, f, g, h) = (other.w, other.x, other.y, other.z);
        Rotation {
            w: a * e - b * f - c * g - d * h,
            x: a * f + b * e + c * h - d * g,
            y: a * g - b * h + c * e + d * f,
            z: a * h + b * g - c * f + d * e,
        }
        .normalized()
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Rotation angle `ω ∈ [0, π]`, from the scalar part of the quaternion.
    pub fn angle(&self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * v.atan2(self.w.abs())
    }

    /// `cos θ` of the middle ZYZ Euler angle, i.e. the `(3, 3)` matrix entry.
    pub fn cos_euler_theta(&self) -> f64 {
        1.0 - 2.0 * (self.x * self.x + self.y * self.y)
    }

    pub fn from_euler_zyz(e: EulerZyz) -> Rotation {
        // q = qz(φ) qy(θ) qz(ψ), expanded.
        let (sp, cp) = (0.5 * (e.phi + e.psi)).sin_cos();
        let (sm, cm) = (0.5 * (e.phi - e.psi)).sin_cos();
        let (st, ct) = (0.5 * e.theta).sin_cos();
        Rotation::from_quaternion(ct * cp, -st * sm, st * cm, ct * sp)
    }

    pub fn to_euler_zyz(&self) -> EulerZyz {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let theta = 2.0 * (x * x + y * y).sqrt().atan2((w * w + z * z).sqrt());
        let sum = 2.0 * z.atan2(w);
        let diff = 2.0 * (-x).atan2(y);
        let (phi, psi) = if theta.sin() < GIMBAL_EPS {
            if theta < 0.5 * PI {
                (sum, 0.0)
            } else {
                (diff, 0.0)
            }
        } else {
            (0.5 * (sum + diff), 0.5 * (sum - diff))
        };
        EulerZyz {
            phi: wrap_tau(phi),
            theta,
            psi: wrap_tau(psi),
        }
    }

    /// Rotation angle of `self⁻¹ · other`.
    pub fn distance_to(&self, other: &Rotation) -> f64 {
        self.inverse().compose(other).angle()
    }
}

fn wrap_tau(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// ZYZ Euler angles: the rotation `Rz(φ) · Ry(θ) · Rz(ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerZyz {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerZyz {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }
}

/// Haar-uniform rotation: a normalized 4-dimensional standard Gaussian.
pub fn sample_haar<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2 = q.iter().map(|v| v * v).sum::<f64>();
        if n2 > 1e-300 {
            return Rotation::from_quaternion(q[0], q[1], q[2], q[3]);
        }
    }
}

/// Uniform unit vector in R³.
pub fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-150 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Density of the Euler angle `θ` with respect to the Haar marginal
/// `sin θ dθ / 2` on `[0, π]`.
pub trait AngleDensity: Send + Sync {
    fn density(&self, theta: f64) -> f64;

    /// Closed-form inverse CDF: maps a uniform `u ∈ [0, 1)` to `cos θ`.
    fn cos_theta_quantile(&self, _u: f64) -> Option<f64> {
        None
    }

    fn describe(&self) -> String {
        "custom".to_string()
    }
}

/// The constant density 1: the Euler angle marginal of the Haar measure.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformAngle;

impl AngleDensity for UniformAngle {
    fn density(&self, _theta: f64) -> f64 {
        1.0
    }

    fn cos_theta_quantile(&self, u: f64) -> Option<f64> {
        Some(2.0 * u - 1.0)
    }

    fn describe(&self) -> String {
        "uniform".to_string()
    }
}

/// A density given by a closure.
pub struct FnDensity<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> AngleDensity for FnDensity<F> {
    fn density(&self, theta: f64) -> f64 {
        (self.0)(theta)
    }
}

const ZONAL_GRID: usize = 4096;
const NORMALIZATION_TOL: f64 = 1e-6;

/// Sampler for zonal laws: `Rz(φ) · Ry(θ) · Rz(ψ)` with `φ, ψ` uniform and
/// `θ` distributed according to an [`AngleDensity`].
///
/// Construction checks normalization. Densities without a closed-form
/// sampler are inverted on a uniform 4096-point `θ`-grid.
#[derive(Clone)]
pub struct ZonalSampler {
    density: Arc<dyn AngleDensity>,
    inverse_cdf: Option<Arc<GridInverseCdf>>,
}

impl fmt::Debug for ZonalSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZonalSampler")
            .field("density", &self.density.describe())
            .field("tabulated", &self.inverse_cdf.is_some())
            .finish()
    }
}

#[derive(Debug)]
struct GridInverseCdf {
    thetas: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridInverseCdf {
    fn build(density: &dyn AngleDensity) -> Self {
        let h = PI / (ZONAL_GRID - 1) as f64;
        let thetas: Vec<f64> = (0..ZONAL_GRID).map(|i| i as f64 * h).collect();
        let mass: Vec<f64> = thetas
            .iter()
            .map(|&t| density.density(t).max(0.0) * 0.5 * t.sin())
            .collect();
        let mut cdf = vec![0.0; ZONAL_GRID];
        for i in 1..ZONAL_GRID {
            cdf[i] = cdf[i - 1] + 0.5 * h * (mass[i - 1] + mass[i]);
        }
        let total = cdf[ZONAL_GRID - 1];
        for c in &mut cdf {
            *c /= total;
        }
        Self { thetas, cdf }
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, ZONAL_GRID - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.thetas[i - 1] + frac * (self.thetas[i] - self.thetas[i - 1])
    }
}

impl ZonalSampler {
    pub fn new(density: Arc<dyn AngleDensity>) -> Result<Self> {
        let integral = ThetaRule::new(64).integrate(|t| density.density(t));
        if !integral.is_finite() || (integral - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { integral });
        }
        let inverse_cdf = match density.cos_theta_quantile(0.5) {
            Some(_) => None,
            None => Some(Arc::new(GridInverseCdf::build(density.as_ref()))),
        };
        Ok(Self { density, inverse_cdf })
    }

    pub fn density(&self) -> &Arc<dyn AngleDensity> {
        &self.density
    }

    /// Euler angle `θ` of one draw.
    pub fn sample_theta<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.inverse_cdf {
            Some(table) => table.sample(rng.random::<f64>()),
            None => {
                let u = rng.random::<f64>();
                let c = self.density.cos_theta_quantile(u).unwrap_or(2.0 * u - 1.0);
                c.clamp(-1.0, 1.0).acos()
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Rotation {
        let theta = self.sample_theta(rng);
        let phi = TAU * rng.random::<f64>();
        let psi = TAU * rng.random::<f64>();
        Rotation::from_euler_zyz(EulerZyz::new(phi, theta, psi))
    }
}

/// One draw from the zonal law with Euler-`θ` density `theta_density`.
pub fn sample_zonal<R: Rng>(sampler: &ZonalSampler, rng: &mut R) -> Rotation {
    sampler.sample(rng)
}
