//! Gauss–Legendre quadrature.
//!
//! [`GaussLegendre`] is the classical rule on `[-1, 1]`. [`ThetaRule`] is a
//! composite rule for integrals over the Euler angle `θ ∈ [0, π]` against the
//! normalized Haar weight `sin θ / 2`. Its panels are graded geometrically
//! towards both endpoints so that sharply peaked zonal densities (strongly
//! forward-scattering phase functions, for instance) are resolved.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Number of geometrically halved panels on each side of `π/2`.
const GRADED_LEVELS: usize = 24;

/// Composite rule for `∫₀^π f(θ) sin θ / 2 dθ`.
///
/// The stored weights already include the `sin θ / 2` factor, so the
/// integral of `f` is `Σ wᵢ f(θᵢ)`.
#[derive(Debug, Clone)]
pub struct ThetaRule {
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ThetaRule {
    /// `order` Gauss–Legendre nodes per panel.
    pub fn new(order: usize) -> Self {
        let base = GaussLegendre::new(order);
        let mut breaks = vec![0.0];
        for k in (1..=GRADED_LEVELS).rev() {
            breaks.push(0.5 * PI * 0.5f64.powi(k as i32 - 1) * 0.5);
        }
        breaks.push(0.5 * PI);
        for k in 1..=GRADED_LEVELS {
            breaks.push(PI - 0.5 * PI * 0.5f64.powi(k as i32 - 1) * 0.5);
        }
        breaks.push(PI);
        breaks.dedup();

        let mut thetas = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            for (&x, &w) in base.nodes.iter().zip(&base.weights) {
                let t = mid + half * x;
                thetas.push(t);
                weights.push(w * half * 0.5 * t.sin());
            }
        }
        Self { thetas, weights }
    }

    /// The rule used for Legendre coefficients up to (exclusive) `cutoff`.
    pub fn for_cutoff(cutoff: usize) -> Self {
        Self::new((4 * (cutoff + 1)).max(32))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.thetas.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let rule = GaussLegendre::new(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((rule.nodes[0] + x).abs() < 1e-15);
        assert!((rule.nodes[1] - x).abs() < 1e-15);
        assert!((rule.weights[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_polynomials() {
        let rule = GaussLegendre::new(7);
        // degree 13 is integrated exactly by 7 nodes
        let val = rule.integrate(-1.0, 1.0, |x| x.powi(12) + x.powi(13));
        assert!((val - 2.0 / 13.0).abs() < 1e-14);
        let val = rule.integrate(0.0, 2.0, |x| x * x);
        assert!((val - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 5, 64, 129] {
            let s: f64 = GaussLegendre::new(n).weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn theta_rule_is_normalized() {
        let rule = ThetaRule::new(32);
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        // E[cos θ] = 0, E[cos² θ] = 1/3 under sin θ / 2
        assert!(rule.integrate(f64::cos).abs() < 1e-14);
        assert!((rule.integrate(|t| t.cos().powi(2)) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn theta_rule_resolves_narrow_peaks() {
        // Normalized Henyey–Greenstein at g = 0.999, peak width ~ 1e-3 rad.
        let g: f64 = 0.999;
        let rule = ThetaRule::new(32);
        let val = rule.integrate(|t| (1.0 - g * g) / (1.0 + g * g - 2.0 * g * t.cos()).powf(1.5));
        assert!((val - 1.0).abs() < 1e-10, "{val}");
    }
}
