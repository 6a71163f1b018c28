//! Density reconstruction from a parametric estimate, and the Plancherel
//! decomposition of its squared `L²` error.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{frobenius, EstimateValue, EstimatorConfig, ParametricEstimate};
use crate::harmonic::{casimir, dim, irrep_matrices, legendre_series, ZonalSpectrum};
use crate::rotations::Rotation;

/// `f_δ = (2δ + 1) e^{−K δ(δ+1)}` for `δ < l`.
pub fn smoothing_weights(cfg: &EstimatorConfig) -> Vec<f64> {
    (0..cfg.cutoff)
        .map(|d| dim(d) as f64 * (-cfg.smoothing * casimir(d)).exp())
        .collect()
}

/// Truncated, smoothed Fourier series of the estimated jump density,
/// `p̂(g) = Σ_{δ<l} f_δ tr(φ̂_X(δ) U^δ(g)†)`, real part.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Smoothed zonal coefficients `e^{−Kδ(δ+1)} â_δ`.
    pub spectrum: ZonalSpectrum,
    matrices: Option<Vec<DMatrix<Complex64>>>,
}

impl Reconstruction {
    /// Zonal evaluation at Euler angle `θ`, `Σ (2δ+1) e^{−Kδ(δ+1)} â_δ P_δ(cos θ)`.
    pub fn density(&self, theta: f64) -> f64 {
        legendre_series(&self.spectrum, theta)
    }

    /// Evaluation at a rotation; uses the full matrices in general mode.
    pub fn density_at(&self, r: &Rotation) -> f64 {
        match &self.matrices {
            None => self.density(r.cos_euler_theta().clamp(-1.0, 1.0).acos()),
            Some(ms) if ms.is_empty() => 0.0,
            Some(ms) => irrep_matrices(ms.len() - 1, r)
                .iter()
                .zip(ms)
                .enumerate()
                .map(|(d, (u, m))| dim(d) as f64 * (m * u.adjoint()).trace().re)
                .sum(),
        }
    }

    /// `(θ_i, p̂(θ_i))` on `points` equally spaced angles in `[0, π]`.
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        theta_grid(points).into_iter().map(|t| (t, self.density(t))).collect()
    }
}

/// `points` equally spaced angles from `0` to `π` inclusive.
pub fn theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| std::f64::consts::PI * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub fn reconstruct_density(est: &ParametricEstimate, cfg: &EstimatorConfig) -> Reconstruction {
    let damp: Vec<f64> = (0..est.cutoff()).map(|d| (-cfg.smoothing * casimir(d)).exp()).collect();
    let spectrum = ZonalSpectrum::new(est.entries.iter().zip(&damp).map(|(e, w)| w * e.a_hat()).collect());
    let matrices = est
        .entries
        .iter()
        .zip(&damp)
        .map(|(e, &w)| match &e.value {
            EstimateValue::Matrix(m) => Some(m.scale(w)),
            EstimateValue::Scalar(_) => None,
        })
        .collect::<Option<Vec<_>>>();
    Reconstruction { spectrum, matrices }
}

/// Known jump law for synthetic experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    /// Coefficients `a_δ`, assumed zero past the end.
    Spectrum(ZonalSpectrum),
    /// Henyey–Greenstein with `a_δ = g^δ`; the truncation tail is summed in
    /// closed form.
    HenyeyGreenstein(f64),
}

impl Truth {
    pub fn coefficient(&self, delta: usize) -> f64 {
        match self {
            Truth::Spectrum(s) => s.get(delta),
            Truth::HenyeyGreenstein(g) => g.powi(delta as i32),
        }
    }
}

/// `‖p̂ − p‖² = ‖p̂ − p_l‖² + ‖p_l − p‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDecomposition {
    pub total: f64,
    /// `Σ_{δ<l} (2δ+1) ‖φ̂_X(δ) − φ_X(δ)‖²`.
    pub parametric: f64,
    /// `Σ_{δ≥l} (2δ+1) a_δ²`.
    pub truncation: f64,
}

/// `Σ_{δ≥l} (2δ+1) g^{2δ}`.
pub fn hg_truncation_tail(g: f64, cutoff: usize) -> f64 {
    let x = g * g;
    let l = cutoff as f64;
    x.powi(cutoff as i32) * ((2.0 * l + 1.0) / (1.0 - x) + 2.0 * x / ((1.0 - x) * (1.0 - x)))
}

/// Plancherel error decomposition against a zonal truth. In general mode the
/// truth matrix has `a_δ` in the `(0, 0)` position and zeros elsewhere.
pub fn error_decomposition(est: &ParametricEstimate, truth: &Truth) -> ErrorDecomposition {
    let l = est.cutoff();
    let parametric = est
        .entries
        .iter()
        .map(|e| {
            let a = truth.coefficient(e.delta);
            let sq = match &e.value {
                EstimateValue::Scalar(x) => (x - a).powi(2),
                EstimateValue::Matrix(m) => {
                    let mut diff = m.clone();
                    diff[(e.delta, e.delta)] -= Complex64::new(a, 0.0);
                    frobenius(&diff).powi(2)
                }
            };
            dim(e.delta) as f64 * sq
        })
        .sum();
    let truncation = match truth {
        Truth::Spectrum(s) => (l..s.cutoff()).map(|d| dim(d) as f64 * s.get(d).powi(2)).sum(),
        Truth::HenyeyGreenstein(g) => hg_truncation_tail(*g, l),
    };
    ErrorDecomposition {
        total: parametric + truncation,
        parametric,
        truncation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompound::{decompound, decompound_spectrum, Mode};
    use crate::harmonic::{legendre_spectrum, plancherel_norm_sq};
    use crate::processes::{theoretical_spectrum, CompoundModel, ObservationSet, Sampling};
    use crate::quadrature::ThetaRule;
    use crate::rotations::{AngleDensity, FnDensity};
    use crate::scattering::HenyeyGreenstein;

    fn exact_estimate(g: f64, cutoff: usize, smoothing: f64) -> (ParametricEstimate, EstimatorConfig) {
        let cfg = EstimatorConfig::new(0.3, 10.0, 0.0, cutoff)
            .unwrap()
            .with_smoothing(smoothing)
            .unwrap();
        let model = CompoundModel::henyey_greenstein(0.3, 10.0, 0.0, g).unwrap();
        let b = theoretical_spectrum(&model, &ZonalSpectrum::geometric(g, cutoff));
        (decompound_spectrum(b.as_slice(), &cfg).unwrap(), cfg)
    }

    #[test]
    fn weights() {
        let cfg = EstimatorConfig::new(0.3, 10.0, 0.0, 8).unwrap();
        let w = smoothing_weights(&cfg);
        assert_eq!(w[3], 7.0);
        for (d, x) in w.iter().enumerate() {
            assert_eq!(*x, (2 * d + 1) as f64);
        }
        let w = smoothing_weights(&cfg.with_smoothing(0.01).unwrap());
        for d in 0..7 {
            assert!(w[d + 1] / ((2 * d + 3) as f64) < w[d] / ((2 * d + 1) as f64));
        }
    }

    #[test]
    fn zero_coefficients_give_uniform() {
        let (mut est, cfg) = exact_estimate(0.9, 10, 0.0);
        for e in est.entries.iter_mut().skip(1) {
            e.value = EstimateValue::Scalar(0.0);
        }
        let rec = reconstruct_density(&est, &cfg);
        for i in 0..20 {
            assert!((rec.density(0.15 * i as f64) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_hg_reconstruction() {
        let (est, cfg) = exact_estimate(0.9, 31, 0.0);
        let rec = reconstruct_density(&est, &cfg);
        let hg = HenyeyGreenstein::new(0.9).unwrap();
        for &t in &[0.5, 1.0, 2.0, 3.0] {
            // truncation error bound Σ_{δ≥l}(2δ+1) g^δ
            let x = 0.9f64;
            let tail = x.powi(31) * (63.0 / (1.0 - x) + 2.0 * x / ((1.0 - x) * (1.0 - x)));
            assert!((rec.density(t) - hg.density(t)).abs() < tail, "θ={t}");
        }
    }

    #[test]
    fn smoothed_series_has_damped_coefficients() {
        let k = 0.01;
        let (est, cfg) = exact_estimate(0.9, 31, k);
        let rec = reconstruct_density(&est, &cfg);
        let dens = FnDensity(|t: f64| rec.density(t));
        let spec = legendre_spectrum(&dens, 31);
        for d in 0..31 {
            let expected = 0.9f64.powi(d as i32) * (-k * casimir(d)).exp();
            assert!((spec.get(d) - expected).abs() < 1e-10, "δ={d}");
        }
        // a smoothed density is still a density
        let rule = ThetaRule::new(32);
        assert!((rule.integrate(|t| rec.density(t)) - 1.0).abs() < 1e-12);
        assert!(rule.thetas.iter().all(|&t| rec.density(t) > 0.0));
        assert!(!dens.describe().is_empty());
    }

    #[test]
    fn general_mode_evaluation() {
        let model = CompoundModel::henyey_greenstein(0.3, 10.0, 0.0, 0.9).unwrap();
        let obs = ObservationSet::simulate(&model, 3000, 40, Sampling::Noisy).unwrap();
        let cfg = EstimatorConfig::new(0.3, 10.0, 0.0, 6)
            .unwrap()
            .with_mode(Mode::General);
        let est = decompound(&obs.samples, &cfg).unwrap();
        let rec = reconstruct_density(&est, &cfg);
        let r = Rotation::from_axis_angle([0.3, -1.0, 0.2], 1.1);
        let us = irrep_matrices(5, &r);
        let direct: f64 = est
            .entries
            .iter()
            .map(|e| match &e.value {
                EstimateValue::Matrix(m) => {
                    let u = &us[e.delta];
                    let mut tr = Complex64::new(0.0, 0.0);
                    for i in 0..dim(e.delta) {
                        for k in 0..dim(e.delta) {
                            tr += m[(i, k)] * u[(i, k)].conj();
                        }
                    }
                    dim(e.delta) as f64 * tr.re
                }
                EstimateValue::Scalar(_) => unreachable!(),
            })
            .sum();
        assert!((rec.density_at(&r) - direct).abs() < 1e-10);

        // only the (0, 0) entries: the zonal series in θ
        let mut diag = est.clone();
        for e in diag.entries.iter_mut() {
            let a = e.a_hat();
            let mut m = DMatrix::zeros(dim(e.delta), dim(e.delta));
            m[(e.delta, e.delta)] = Complex64::new(a, 0.0);
            e.value = EstimateValue::Matrix(m);
        }
        let rec = reconstruct_density(&diag, &cfg);
        for &t in &[0.2, 1.0, 2.5] {
            let r = Rotation::rz(0.7).compose(&Rotation::ry(t)).compose(&Rotation::rz(-2.0));
            assert!((rec.density_at(&r) - rec.density(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn hg_tail_closed_form() {
        for g in [0.85f64, 0.9, 0.95, 0.99] {
            for l in [0, 1, 5, 31] {
                let direct: f64 = (l..20_000).map(|d| (2 * d + 1) as f64 * g.powi(2 * d as i32)).sum();
                assert!(
                    (hg_truncation_tail(g, l) - direct).abs() < 1e-9 * direct.max(1.0),
                    "g={g} l={l}"
                );
            }
        }
    }

    #[test]
    fn decomposition_identities() {
        let (est, _) = exact_estimate(0.9, 31, 0.0);
        let dec = error_decomposition(&est, &Truth::HenyeyGreenstein(0.9));
        assert!(dec.parametric < 1e-18);
        assert_eq!(dec.total, dec.parametric + dec.truncation);
        // full truth spectrum: truncation = ‖p‖² − ‖p_l‖²
        let truth = ZonalSpectrum::geometric(0.9, 400);
        let dec2 = error_decomposition(&est, &Truth::Spectrum(truth.clone()));
        let head = plancherel_norm_sq(&ZonalSpectrum::geometric(0.9, 31));
        assert!((dec2.truncation - (plancherel_norm_sq(&truth) - head)).abs() < 1e-9);
        assert!((dec2.truncation - dec.truncation).abs() < 1e-9);
    }

    #[test]
    fn decomposition_matches_l2_distance() {
        // ‖p̂_l − p_L‖² by quadrature against the Plancherel sum
        let (mut est, cfg) = exact_estimate(0.5, 8, 0.0);
        for e in est.entries.iter_mut().skip(1) {
            if let EstimateValue::Scalar(a) = &mut e.value {
                *a += 0.01 * e.delta as f64;
            }
        }
        let truth = ZonalSpectrum::geometric(0.5, 20);
        let dec = error_decomposition(&est, &Truth::Spectrum(truth.clone()));
        let rec = reconstruct_density(&est, &cfg);
        let rule = ThetaRule::new(64);
        let quad = rule.integrate(|t| (rec.density(t) - legendre_series(&truth, t)).powi(2));
        assert!((quad - dec.total).abs() < 1e-10);
    }
}
