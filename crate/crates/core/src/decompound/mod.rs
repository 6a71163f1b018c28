//! Decompounding: recovery of the jump law of a compound Poisson process on
//! SO(3) from i.i.d. observations of `Z = M ∘ Y(T)`.
//!
//! For each representation index `δ` in `Γ_l = {0, …, l − 1}` the empirical
//! characteristic matrix `φ̂_Z(δ)` is gated on positive definiteness and the
//! compounding transformation is inverted through the Hermitian logarithm:
//!
//! ```text
//! φ̂_X(δ) = Log φ̂_Z(δ) / (λT) + (λ̄_δ / λ) I,    λ̄_δ = λ + δ(δ+1)σ² / (2T)
//! ```
//!
//! `δ = 0` is carried along for convenience; its estimate is exactly 1.

mod empirical;
mod linalg;
mod reconstruct;

pub use empirical::{
    empirical_char, empirical_char_all, empirical_char_central, empirical_char_central_all, empirical_char_zonal,
    empirical_char_zonal_all,
};
pub use linalg::{
    eigenvalues, frobenius, hermitian_part, matrix_exp_hermitian, matrix_log_hpd, operator_norm, psd_gate,
    psd_gate_scalar, spectrum_within, PD_THRESHOLD,
};
pub use reconstruct::{
    error_decomposition, hg_truncation_tail, reconstruct_density, smoothing_weights, ErrorDecomposition,
    Reconstruction, Truth,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonic::{casimir, dim};
use crate::rotations::Rotation;

/// Upper end of the prior-informed gate, `1` plus roundoff slack.
pub const PRIOR_UPPER: f64 = 1.0 + 1e-9;

/// Which characteristic function is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full `(2δ+1) × (2δ+1)` matrices.
    General,
    /// The `(0, 0)` entry `(1/n) Σ P_δ(cos θ_m)` only; exact for laws that
    /// depend on the Euler angle `θ` alone.
    ZonalScalar,
}

impl Mode {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "general" => Ok(Mode::General),
            "zonal" | "zonal-scalar" => Ok(Mode::ZonalScalar),
            other => Err(Error::InvalidParameter(format!("unknown estimator mode '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::General => "general",
            Mode::ZonalScalar => "zonal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// `l`: indices `δ < l` are estimated.
    pub cutoff: usize,
    /// `K ≥ 0` in the smoothing weights `e^{−K δ(δ+1)}`.
    pub smoothing: f64,
    pub mode: Mode,
    /// `k_δ ∈ (0, 1]` for `δ < l`, used by [`decompound_with_prior`].
    pub prior_bounds: Option<Vec<f64>>,
    pub lambda: f64,
    pub horizon: f64,
    pub sigma2: f64,
}

impl EstimatorConfig {
    /// Zonal-mode configuration without smoothing or prior bounds.
    pub fn new(lambda: f64, horizon: f64, sigma2: f64, cutoff: usize) -> Result<Self> {
        let cfg = Self {
            cutoff,
            smoothing: 0.0,
            mode: Mode::ZonalScalar,
            prior_bounds: None,
            lambda,
            horizon,
            sigma2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_smoothing(mut self, k: f64) -> Result<Self> {
        self.smoothing = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_prior_bounds(mut self, bounds: Vec<f64>) -> Result<Self> {
        self.prior_bounds = Some(bounds);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.cutoff < 1 {
            return bad("cutoff l must be ≥ 1".into());
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return bad(format!("smoothing K must be finite and ≥ 0, got {}", self.smoothing));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and > 0, got {}", self.lambda));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon T must be finite and > 0, got {}", self.horizon));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be finite and ≥ 0, got {}", self.sigma2));
        }
        if let Some(k) = &self.prior_bounds {
            if k.len() != self.cutoff {
                return bad(format!(
                    "expected {} prior bounds (one per δ < l), got {}",
                    self.cutoff,
                    k.len()
                ));
            }
            if let Some(v) = k.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
                return bad(format!("prior bound {v} outside (0, 1]"));
            }
        }
        Ok(())
    }

    /// `λ̄_δ = λ + δ(δ+1)σ² / (2T)`.
    pub fn lambda_bar(&self, delta: usize) -> f64 {
        self.lambda + casimir(delta) * self.sigma2 / (2.0 * self.horizon)
    }
}

/// Estimate for one `δ`.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimateValue {
    Matrix(DMatrix<Complex64>),
    Scalar(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateEntry {
    pub delta: usize,
    pub value: EstimateValue,
    pub gate_passed: bool,
}

impl EstimateEntry {
    /// Zonal coefficient `â_δ`: the scalar, or the `(0, 0)` entry of the
    /// matrix estimate.
    pub fn a_hat(&self) -> f64 {
        match &self.value {
            EstimateValue::Scalar(a) => *a,
            EstimateValue::Matrix(m) => m[(self.delta, self.delta)].re,
        }
    }

    /// `tr φ̂_X(δ) / (2δ + 1)`.
    pub fn normalized_trace(&self) -> f64 {
        match &self.value {
            EstimateValue::Scalar(a) => *a,
            EstimateValue::Matrix(m) => m.trace().re / dim(self.delta) as f64,
        }
    }
}

/// Estimates `φ̂_X(δ)` for `δ < l` with their gate outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricEstimate {
    pub mode: Mode,
    pub entries: Vec<EstimateEntry>,
}

impl ParametricEstimate {
    pub fn cutoff(&self) -> usize {
        self.entries.len()
    }

    pub fn a_hat(&self, delta: usize) -> Option<f64> {
        self.entries.get(delta).map(EstimateEntry::a_hat)
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.entries.iter().map(EstimateEntry::a_hat).collect()
    }

    pub fn gate_passed(&self, delta: usize) -> bool {
        self.entries.get(delta).is_some_and(|e| e.gate_passed)
    }

    /// `true` when every `δ ≥ 1` was rejected (and `l > 1`).
    pub fn all_gates_failed(&self) -> bool {
        self.entries.len() > 1 && self.entries.iter().skip(1).all(|e| !e.gate_passed)
    }
}

/// `Log(b) / (λT) + λ̄_δ / λ` for a scalar observation coefficient `b`.
pub fn invert_compounding_scalar(b: f64, cfg: &EstimatorConfig, delta: usize) -> Result<f64> {
    if !psd_gate_scalar(b) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: b });
    }
    Ok(b.ln() / (cfg.lambda * cfg.horizon) + cfg.lambda_bar(delta) / cfg.lambda)
}

/// Matrix form of [`invert_compounding_scalar`].
pub fn invert_compounding(
    phi_z: &DMatrix<Complex64>,
    cfg: &EstimatorConfig,
    delta: usize,
) -> Result<DMatrix<Complex64>> {
    let log = matrix_log_hpd(phi_z)?;
    let shift = Complex64::new(cfg.lambda_bar(delta) / cfg.lambda, 0.0);
    let mut out = log.unscale(cfg.lambda * cfg.horizon);
    for i in 0..out.nrows() {
        out[(i, i)] += shift;
    }
    Ok(out)
}

enum Gate<'a> {
    Positive,
    Prior(&'a [f64]),
}

impl Gate<'_> {
    fn scalar(&self, delta: usize, b: f64) -> bool {
        match self {
            Gate::Positive => psd_gate_scalar(b),
            Gate::Prior(k) => psd_gate_scalar(b) && b >= k[delta] / 2.0 && b <= PRIOR_UPPER,
        }
    }

    fn matrix(&self, delta: usize, m: &DMatrix<Complex64>) -> bool {
        match self {
            Gate::Positive => psd_gate(m),
            Gate::Prior(k) => spectrum_within(m, k[delta] / 2.0, PRIOR_UPPER),
        }
    }
}

fn estimate(obs: &[Rotation], cfg: &EstimatorConfig, gate: Gate) -> Result<ParametricEstimate> {
    cfg.validate()?;
    let entries = match cfg.mode {
        Mode::ZonalScalar => empirical_char_zonal_all(obs, cfg.cutoff)?
            .into_iter()
            .enumerate()
            .map(|(delta, b)| {
                let passed = gate.scalar(delta, b);
                let a = if passed {
                    invert_compounding_scalar(b, cfg, delta)?
                } else {
                    0.0
                };
                Ok(EstimateEntry {
                    delta,
                    value: EstimateValue::Scalar(a),
                    gate_passed: passed,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        Mode::General => empirical_char_all(obs, cfg.cutoff)?
            .into_iter()
            .enumerate()
            .map(|(delta, m)| {
                let passed = gate.matrix(delta, &m);
                let value = if passed {
                    invert_compounding(&m, cfg, delta)?
                } else {
                    DMatrix::zeros(dim(delta), dim(delta))
                };
                Ok(EstimateEntry {
                    delta,
                    value: EstimateValue::Matrix(value),
                    gate_passed: passed,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(ParametricEstimate {
        mode: cfg.mode,
        entries,
    })
}

/// Gated estimator: `δ` is kept when `φ̂_Z(δ)` is positive definite and
/// otherwise set to zero with `gate_passed = false`.
pub fn decompound(obs: &[Rotation], cfg: &EstimatorConfig) -> Result<ParametricEstimate> {
    estimate(obs, cfg, Gate::Positive)
}

/// Prior-informed estimator: `δ` is kept when the spectrum of `φ̂_Z(δ)` lies
/// in `[k_δ / 2, 1]`.
pub fn decompound_with_prior(obs: &[Rotation], cfg: &EstimatorConfig) -> Result<ParametricEstimate> {
    let k = cfg.prior_bounds.as_deref().ok_or(Error::MissingPriorBounds)?;
    estimate(obs, cfg, Gate::Prior(k))
}

/// Zonal-mode estimate computed from an exact observation spectrum `b_δ`
/// instead of data; gates apply as in [`decompound`].
pub fn decompound_spectrum(b: &[f64], cfg: &EstimatorConfig) -> Result<ParametricEstimate> {
    cfg.validate()?;
    let entries = (0..cfg.cutoff)
        .map(|delta| {
            let bd = b.get(delta).copied().unwrap_or(0.0);
            let passed = psd_gate_scalar(bd);
            let a = if passed {
                invert_compounding_scalar(bd, cfg, delta)?
            } else {
                0.0
            };
            Ok(EstimateEntry {
                delta,
                value: EstimateValue::Scalar(a),
                gate_passed: passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParametricEstimate {
        mode: Mode::ZonalScalar,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{irrep_matrix, ZonalSpectrum};
    use crate::processes::{stream_rng, theoretical_spectrum, CompoundModel, ObservationSet, Sampling};
    use crate::rotations::sample_haar;

    const GS: [f64; 4] = [0.85, 0.9, 0.95, 0.99];

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::new(0.3, 10.0, 0.0, 31).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::new(0.3, 10.0, 0.0, 0).is_err());
        assert!(EstimatorConfig::new(0.0, 10.0, 0.0, 5).is_err());
        assert!(EstimatorConfig::new(0.3, 0.0, 0.0, 5).is_err());
        assert!(EstimatorConfig::new(0.3, 1.0, -1.0, 5).is_err());
        assert!(cfg().with_smoothing(-0.1).is_err());
        assert!(cfg().with_prior_bounds(vec![0.5; 30]).is_err());
        assert!(cfg().with_prior_bounds(vec![0.0; 31]).is_err());
        assert!(cfg().with_prior_bounds(vec![1.0; 31]).is_ok());
        assert_eq!(Mode::parse("general").unwrap(), Mode::General);
        assert!(Mode::parse("bogus").is_err());
    }

    #[test]
    fn lambda_bar_reduces_without_noise() {
        assert_eq!(cfg().lambda_bar(7), 0.3);
        let noisy = EstimatorConfig::new(0.3, 10.0, 0.05, 31).unwrap();
        assert!((noisy.lambda_bar(2) - (0.3 + 6.0 * 0.05 / 20.0)).abs() < 1e-15);
    }

    #[test]
    fn scalar_round_trip() {
        let c = cfg();
        for &a in &[-0.5, 0.0, 0.3, 0.9, 1.0] {
            let b = (c.lambda * c.horizon * (a - 1.0)).exp();
            assert!((invert_compounding_scalar(b, &c, 3).unwrap() - a).abs() < 1e-12);
        }
        assert!(invert_compounding_scalar(0.0, &c, 1).is_err());
    }

    #[test]
    fn oracle_round_trip_with_and_without_noise() {
        for sigma2 in [0.0, 0.05] {
            for g in GS {
                let model = CompoundModel::henyey_greenstein(0.3, 10.0, sigma2, g).unwrap();
                let b = theoretical_spectrum(&model, &ZonalSpectrum::geometric(g, 31));
                let c = EstimatorConfig::new(0.3, 10.0, sigma2, 31).unwrap();
                let est = decompound_spectrum(b.as_slice(), &c).unwrap();
                for d in 0..31 {
                    assert!(est.gate_passed(d));
                    assert!(
                        (est.a_hat(d).unwrap() - g.powi(d as i32)).abs() < 1e-10,
                        "σ²={sigma2} g={g} δ={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn matrix_inversion_of_exact_compounding() {
        // φ_X = diag entries (0,0)=a, rest 0, i.e. the zonal coefficient
        let c = EstimatorConfig::new(0.3, 10.0, 0.05, 8).unwrap();
        for d in 0..8 {
            let a = 0.9f64.powi(d as i32);
            let n = dim(d);
            let mut phi_x = DMatrix::<Complex64>::zeros(n, n);
            phi_x[(d, d)] = Complex64::new(a, 0.0);
            let expo = (phi_x - DMatrix::identity(n, n)).scale(c.lambda * c.horizon)
                - DMatrix::identity(n, n).scale(casimir(d) * c.sigma2 / 2.0);
            let phi_z = matrix_exp_hermitian(&expo);
            let back = invert_compounding(&phi_z, &c, d).unwrap();
            assert!((back[(d, d)].re - a).abs() < 1e-10);
            assert!(frobenius(&(&back - &back.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn all_identity_observations() {
        let obs = vec![Rotation::IDENTITY; 10];
        for mode in [Mode::ZonalScalar, Mode::General] {
            let est = decompound(&obs, &EstimatorConfig::new(0.3, 10.0, 0.0, 6).unwrap().with_mode(mode)).unwrap();
            for d in 0..6 {
                assert!(est.gate_passed(d));
                assert!((est.a_hat(d).unwrap() - 1.0).abs() < 1e-12);
                assert!((est.entries[d].normalized_trace() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gate_failure_gives_zero() {
        let mut rng = stream_rng(30, 0);
        let obs: Vec<Rotation> = (0..50).map(|_| sample_haar(&mut rng)).collect();
        for mode in [Mode::ZonalScalar, Mode::General] {
            let est = decompound(&obs, &EstimatorConfig::new(0.3, 10.0, 0.0, 12).unwrap().with_mode(mode)).unwrap();
            assert!(est.entries.iter().any(|e| !e.gate_passed));
            for e in est.entries.iter().filter(|e| !e.gate_passed) {
                match &e.value {
                    EstimateValue::Scalar(a) => assert_eq!(*a, 0.0),
                    EstimateValue::Matrix(m) => assert!(m.iter().all(|z| *z == Complex64::new(0.0, 0.0))),
                }
            }
        }
    }

    #[test]
    fn empty_observations_error() {
        assert!(matches!(decompound(&[], &cfg()), Err(Error::EmptyObservations)));
    }

    #[test]
    fn prior_gate() {
        let model = CompoundModel::henyey_greenstein(0.3, 10.0, 0.0, 0.9).unwrap();
        let obs = ObservationSet::simulate(&model, 20_000, 31, Sampling::Noisy).unwrap();
        let b = theoretical_spectrum(&model, &ZonalSpectrum::geometric(0.9, 8));
        let base = EstimatorConfig::new(0.3, 10.0, 0.0, 8).unwrap();
        assert!(matches!(
            decompound_with_prior(&obs.samples, &base),
            Err(Error::MissingPriorBounds)
        ));

        // bounds well below the truth: same as the plain estimator
        let loose = base
            .clone()
            .with_prior_bounds(b.as_slice().iter().map(|x| x * 0.5).collect())
            .unwrap();
        assert_eq!(
            decompound_with_prior(&obs.samples, &loose).unwrap(),
            decompound(&obs.samples, &base).unwrap()
        );

        // k = 0.99 rejects every coefficient of dispersed data (b_δ ≤ e^{-1.5})
        let dispersed = CompoundModel::henyey_greenstein(0.3, 10.0, 0.0, 0.5).unwrap();
        let obs = ObservationSet::simulate(&dispersed, 5000, 31, Sampling::Noisy).unwrap();
        let tight = base.with_prior_bounds(vec![0.99; 8]).unwrap();
        let est = decompound_with_prior(&obs.samples, &tight).unwrap();
        assert!(est.all_gates_failed());
        assert!(est.gate_passed(0));
    }

    #[test]
    fn general_estimate_is_hermitian() {
        let model = CompoundModel::henyey_greenstein(0.3, 10.0, 0.0, 0.9).unwrap();
        let obs = ObservationSet::simulate(&model, 2000, 32, Sampling::Noisy).unwrap();
        let est = decompound(&obs.samples, &cfg().with_mode(Mode::General)).unwrap();
        for e in &est.entries {
            if let EstimateValue::Matrix(m) = &e.value {
                assert!(frobenius(&(m - m.adjoint())) < 1e-12);
            }
        }
    }

    #[test]
    fn zonal_and_general_agree_on_symmetric_data() {
        // closing the data under conjugation by z-rotations of order 64 makes
        // every empirical matrix with δ < 32 diagonal
        let model = CompoundModel::henyey_greenstein(0.3, 10.0, 0.0, 0.9).unwrap();
        let base = ObservationSet::simulate(&model, 200, 33, Sampling::Noisy).unwrap();
        let order = 64;
        let obs: Vec<Rotation> = base
            .samples
            .iter()
            .flat_map(|r| {
                (0..order).map(move |k| {
                    let z = Rotation::rz(std::f64::consts::TAU * k as f64 / order as f64);
                    z.compose(r).compose(&z.inverse())
                })
            })
            .collect();
        let c = EstimatorConfig::new(0.3, 10.0, 0.0, 12).unwrap();
        let zonal = decompound(&obs, &c).unwrap();
        let general = decompound(&obs, &c.clone().with_mode(Mode::General)).unwrap();
        for d in 0..12 {
            if zonal.gate_passed(d) && general.gate_passed(d) {
                assert!(
                    (zonal.a_hat(d).unwrap() - general.a_hat(d).unwrap()).abs() < 1e-8,
                    "δ={d}"
                );
            }
        }
    }

    #[test]
    fn symmetrized_estimate_matches_irrep() {
        let r = Rotation::from_axis_angle([1.0, 2.0, 3.0], 0.4);
        let m = empirical_char(&[r], 2).unwrap();
        let u = irrep_matrix(2, &r);
        assert_eq!(hermitian_part(&m), m);
        assert!(frobenius(&(m - hermitian_part(&u))) < 1e-14);
    }
}
