//! Generative models: compound Poisson products on SO(3), Brownian noise and
//! the interlaced noisy process, together with their closed-form spectra.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonic::{casimir, character, ZonalSpectrum};
use crate::rotations::{sample_haar, sample_unit_vector, Rotation, ZonalSampler};
use crate::scattering::{hg_sample_cos, HenyeyGreenstein};

/// Samples per deterministic simulation chunk. Each chunk owns one RNG stream,
/// so results do not depend on how chunks are spread over threads.
pub const CHUNK_SIZE: usize = 1024;

/// Random stream `stream` of the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson-distributed count with the given mean.
///
/// Knuth's multiplication method for `mean ≤ 30`, the `rand_distr` sampler
/// above that.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    assert!(
        mean >= 0.0 && mean.is_finite(),
        "Poisson mean must be finite and ≥ 0, got {mean}"
    );
    if mean == 0.0 {
        return 0;
    }
    if mean <= 30.0 {
        let limit = (-mean).exp();
        let mut k = 0u64;
        let mut p = rng.random::<f64>();
        while p > limit {
            k += 1;
            p *= rng.random::<f64>();
        }
        return k;
    }
    Poisson::new(mean).expect("valid mean").sample(rng) as u64
}

/// Law of the i.i.d. jumps `X_n`.
#[derive(Debug, Clone)]
pub enum JumpLaw {
    /// Zonal law with Henyey–Greenstein `θ`-density; `g = 0` is Haar.
    HenyeyGreenstein(HenyeyGreenstein),
    /// Any zonal law given by its `θ`-density.
    Zonal(ZonalSampler),
}

impl JumpLaw {
    pub fn henyey_greenstein(g: f64) -> Result<Self> {
        Ok(Self::HenyeyGreenstein(HenyeyGreenstein::new(g)?))
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Rotation {
        match self {
            JumpLaw::HenyeyGreenstein(hg) => {
                let c = hg_sample_cos(hg.g(), rng);
                let phi = TAU * rng.random::<f64>();
                let psi = TAU * rng.random::<f64>();
                Rotation::from_euler_zyz(crate::EulerZyz::new(phi, c.clamp(-1.0, 1.0).acos(), psi))
            }
            JumpLaw::Zonal(sampler) => sampler.sample(rng),
        }
    }

    /// Legendre spectrum `a_0, …, a_{cutoff−1}` of the jump density.
    pub fn spectrum(&self, cutoff: usize) -> ZonalSpectrum {
        match self {
            JumpLaw::HenyeyGreenstein(hg) => ZonalSpectrum::geometric(hg.g(), cutoff),
            JumpLaw::Zonal(sampler) => crate::harmonic::legendre_spectrum(sampler.density().as_ref(), cutoff),
        }
    }

    /// Short text form, `hg:<g>` or `custom`.
    pub fn describe(&self) -> String {
        match self {
            JumpLaw::HenyeyGreenstein(hg) => format!("hg:{}", hg.g()),
            JumpLaw::Zonal(s) => s.density().describe(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "uniform" || text == "haar" {
            return Self::henyey_greenstein(0.0);
        }
        match text.strip_prefix("hg:") {
            Some(g) => {
                let g: f64 = g
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad anisotropy in jump law '{text}'")))?;
                Self::henyey_greenstein(g)
            }
            None => Err(Error::InvalidParameter(format!("unknown jump law '{text}'"))),
        }
    }
}

/// Generative configuration `(λ, T, σ², jump law)`.
#[derive(Debug, Clone)]
pub struct CompoundModel {
    pub lambda: f64,
    pub horizon: f64,
    pub sigma2: f64,
    pub jump: JumpLaw,
}

impl CompoundModel {
    pub fn new(lambda: f64, horizon: f64, sigma2: f64, jump: JumpLaw) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate lambda must be > 0, got {lambda}"
            )));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon T must be ≥ 0, got {horizon}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be ≥ 0, got {sigma2}"
            )));
        }
        if sigma2 > 0.0 && horizon == 0.0 {
            return Err(Error::InvalidParameter("noise requires a positive horizon".into()));
        }
        Ok(Self {
            lambda,
            horizon,
            sigma2,
            jump,
        })
    }

    /// Henyey–Greenstein model, the setting of the scattering experiments.
    pub fn henyey_greenstein(lambda: f64, horizon: f64, sigma2: f64, g: f64) -> Result<Self> {
        Self::new(lambda, horizon, sigma2, JumpLaw::henyey_greenstein(g)?)
    }

    pub fn mean_jumps(&self) -> f64 {
        self.lambda * self.horizon
    }

    /// Variance rate `σ̄² = σ² / T` of the Brownian motion used for interlacing.
    pub fn brownian_rate(&self) -> f64 {
        if self.horizon > 0.0 {
            self.sigma2 / self.horizon
        } else {
            0.0
        }
    }
}

/// `Y(T) = X_0 X_1 ⋯ X_{N(T)}` together with the number of jumps `N(T)`.
pub fn simulate_compound_counted<R: Rng>(model: &CompoundModel, rng: &mut R) -> (Rotation, u64) {
    let n = sample_poisson(model.mean_jumps(), rng);
    let mut y = Rotation::IDENTITY;
    for _ in 0..n {
        y = y.compose(&model.jump.sample(rng));
    }
    (y, n)
}

/// One draw of the compound Poisson product `Y(T)`.
pub fn simulate_compound<R: Rng>(model: &CompoundModel, rng: &mut R) -> Rotation {
    simulate_compound_counted(model, rng).0
}

const IMAGE_TERMS: i32 = 3;
/// Variance at which the sampler switches from the image sum to the series.
const SERIES_SWITCH: f64 = 1.0;

/// Heat kernel on SO(3) relative to Haar measure, as a function of the
/// rotation angle, by its character expansion
/// `Σ_δ (2δ + 1) e^{−δ(δ+1)σ²/2} χ_δ(ω)`.
pub fn heat_kernel_series(sigma2: f64, omega: f64) -> f64 {
    assert!(sigma2 > 0.0);
    let mut total = 0.0;
    for delta in 0..100_000usize {
        let d = (2 * delta + 1) as f64;
        let decay = (-casimir(delta) * sigma2 / 2.0).exp();
        total += d * decay * character(delta, omega);
        if delta > 0 && d * d * decay < 1e-17 {
            break;
        }
    }
    total
}

/// The same kernel by Poisson summation over windings:
/// `e^{σ²/8} √(2π) σ^{−3} / sin(ω/2) · Σ_k (−1)^k (ω + 2πk) e^{−(ω+2πk)²/(2σ²)}`.
pub fn heat_kernel_images(sigma2: f64, omega: f64) -> f64 {
    assert!(sigma2 > 0.0);
    let w = omega.max(1e-6);
    let mut g = 0.0;
    for k in -IMAGE_TERMS..=IMAGE_TERMS {
        let x = w + TAU * k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        g += sign * x * (-x * x / (2.0 * sigma2)).exp();
    }
    (sigma2 / 8.0).exp() * TAU.sqrt() * sigma2.powf(-1.5) * g / (0.5 * w).sin()
}

/// Acceptance ratio of the heat-kernel angle density against a Maxwell
/// proposal of scale `σ`, normalized to 1 at `ω = 0` (up to `e^{σ²/8}`).
fn maxwell_ratio(sigma2: f64, omega: f64) -> f64 {
    let lead = (sigma2 / 8.0).exp();
    if omega < 1e-8 {
        return lead;
    }
    let mut images = 0.0;
    for k in -IMAGE_TERMS..=IMAGE_TERMS {
        let kf = k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let shift = (4.0 * PI * kf * omega + 4.0 * PI * PI * kf * kf) / (2.0 * sigma2);
        images += sign * (omega + TAU * kf) / omega * (-shift).exp();
    }
    lead * 2.0 * (0.5 * omega).sin() / omega * images
}

/// Envelope constant for [`maxwell_ratio`] on `σ² ≤ 1`.
fn maxwell_bound(sigma2: f64) -> f64 {
    2.05 * (sigma2 / 8.0).exp()
}

/// Rotation angle of a Brownian increment with variance parameter `σ²`.
pub fn sample_heat_kernel_angle<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> f64 {
    if sigma2 <= SERIES_SWITCH {
        let sigma = sigma2.sqrt();
        let bound = maxwell_bound(sigma2);
        loop {
            let v: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let omega = sigma * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if omega > PI {
                continue;
            }
            let ratio = maxwell_ratio(sigma2, omega);
            debug_assert!(ratio <= bound, "envelope violated: {ratio} > {bound}");
            if rng.random::<f64>() * bound < ratio {
                return omega;
            }
        }
    } else {
        let peak = heat_kernel_series(sigma2, 0.0);
        loop {
            let omega = sample_haar(rng).angle();
            if rng.random::<f64>() * peak < heat_kernel_series(sigma2, omega) {
                return omega;
            }
        }
    }
}

/// Brownian (heat-kernel) noise `M` with `φ_M(δ) = e^{−δ(δ+1)σ²/2} I`.
///
/// Exact for every `σ² ≥ 0`: a uniform axis and a rotation angle drawn by
/// rejection sampling. `σ² = 0` returns the identity without consuming
/// randomness.
pub fn sample_heat_kernel<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> Rotation {
    assert!(sigma2 >= 0.0, "noise variance must be ≥ 0");
    if sigma2 == 0.0 {
        return Rotation::IDENTITY;
    }
    let omega = sample_heat_kernel_angle(sigma2, rng);
    let axis = sample_unit_vector(rng);
    Rotation::from_axis_angle(axis, omega)
}

/// One observation `Z = M · Y(T)` of the noisy model.
pub fn simulate_noisy_observation<R: Rng>(model: &CompoundModel, rng: &mut R) -> Rotation {
    let m = sample_heat_kernel(model.sigma2, rng);
    let y = simulate_compound(model, rng);
    m.compose(&y)
}

/// `ζ(T)` of the interlaced process: a Brownian path with variance rate
/// `σ̄² = σ²/T` into which the jumps are multiplied at their jump times.
///
/// Jump times are sorted uniforms on `[0, T]` given `N(T)`. Brownian
/// increments are exact heat-kernel draws on sub-intervals of length at
/// most `step`.
pub fn simulate_interlaced<R: Rng>(model: &CompoundModel, step: f64, rng: &mut R) -> Result<Rotation> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "interlacing step must be > 0, got {step}"
        )));
    }
    let horizon = model.horizon;
    let rate = model.brownian_rate();
    let n = sample_poisson(model.mean_jumps(), rng);
    let mut times: Vec<f64> = (0..n).map(|_| horizon * rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);

    let advance = |zeta: Rotation, dt: f64, rng: &mut R| -> Rotation {
        if rate == 0.0 || dt <= 0.0 {
            return zeta;
        }
        let pieces = (dt / step).ceil().max(1.0) as usize;
        let h = dt / pieces as f64;
        (0..pieces).fold(zeta, |z, _| z.compose(&sample_heat_kernel(rate * h, rng)))
    };

    let mut zeta = Rotation::IDENTITY;
    let mut t = 0.0;
    for &tau in &times {
        zeta = advance(zeta, tau - t, rng);
        zeta = zeta.compose(&model.jump.sample(rng));
        t = tau;
    }
    Ok(advance(zeta, horizon - t, rng))
}

/// Closed-form zonal spectrum of the observations,
/// `b_δ = exp(λT(a_δ − 1) − δ(δ+1)σ²/2)`.
pub fn theoretical_spectrum(model: &CompoundModel, jump_spectrum: &ZonalSpectrum) -> ZonalSpectrum {
    let lt = model.mean_jumps();
    ZonalSpectrum::new(
        jump_spectrum
            .as_slice()
            .iter()
            .enumerate()
            .map(|(d, &a)| (lt * (a - 1.0) - casimir(d) * model.sigma2 / 2.0).exp())
            .collect(),
    )
}

/// Which observation law an [`ObservationSet`] is drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// `Z = M · Y(T)` (equal to `Y(T)` when `σ² = 0`).
    Noisy,
    /// The interlaced process `ζ(T)` with the given sub-interval cap.
    Interlaced { step: f64 },
}

/// i.i.d. observations with the model and seed that produced them.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub samples: Vec<Rotation>,
    pub model: CompoundModel,
    pub seed: u64,
}

impl ObservationSet {
    /// Draws `n` observations. Chunk `c` of [`CHUNK_SIZE`] samples uses the
    /// stream `stream_rng(seed, c)`, so the output is identical for any
    /// number of worker threads.
    pub fn simulate(model: &CompoundModel, n: usize, seed: u64, sampling: Sampling) -> Result<Self> {
        if let Sampling::Interlaced { step } = sampling {
            if !(step > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "interlacing step must be > 0, got {step}"
                )));
            }
        }
        let chunks = n.div_ceil(CHUNK_SIZE);
        let parts: Vec<Vec<Rotation>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(seed, c as u64);
                let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
                (0..len)
                    .map(|_| match sampling {
                        Sampling::Noisy => simulate_noisy_observation(model, &mut rng),
                        Sampling::Interlaced { step } => {
                            simulate_interlaced(model, step, &mut rng).expect("step validated above")
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            samples: parts.into_iter().flatten().collect(),
            model: model.clone(),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
