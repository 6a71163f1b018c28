//! Goodness-of-fit statistics for Monte-Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov coefficient `c(α) = √(−ln(α/2) / 2)`.
pub fn kolmogorov_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical_one_sample(alpha: f64, n: usize) -> f64 {
    kolmogorov_coefficient(alpha) / (n as f64).sqrt()
}

/// Critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical_two_sample(alpha: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_coefficient(alpha) * ((n + m) / (n * m)).sqrt()
}

/// One-sample KS distance `sup |F_n − F|` for a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    ks_one_sample_with_atoms(data, &cdf, &cdf)
}

/// One-sample KS distance against a CDF that may have atoms: `cdf` is the
/// right-continuous `P(X ≤ x)` and `cdf_left` is `P(X < x)`.
pub fn ks_one_sample_with_atoms<F, G>(data: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        // empirical CDF jumps from i/n to j/n at x
        d = d.max((j as f64 / n - cdf(x)).abs());
        d = d.max((i as f64 / n - cdf_left(x)).abs());
        i = j;
    }
    d
}

/// Two-sample KS distance `sup |F_n − G_m|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Pearson statistic `Σ (O − E)² / E`.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum()
}

/// Upper `alpha` quantile of the χ² distribution with `dof` degrees of freedom.
pub fn chi_square_critical(alpha: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).expect("dof > 0").inverse_cdf(1.0 - alpha)
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((kolmogorov_coefficient(0.01) - 1.6276).abs() < 1e-4);
        assert!((kolmogorov_coefficient(0.05) - 1.3581).abs() < 1e-4);
        assert!((chi_square_critical(0.01, 49) - 74.919).abs() < 1e-2);
    }

    #[test]
    fn ks_of_exact_grid() {
        let data: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_one_sample(&data, |x| x) - 0.005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&data, &data), 0.0);
        let dyadic: Vec<f64> = (0..100).map(|i| i as f64 / 128.0).collect();
        let shifted: Vec<f64> = dyadic.iter().map(|x| x + 13.0 / 128.0).collect();
        assert!((ks_two_sample(&dyadic, &shifted) - 0.13).abs() < 1e-12);
    }

    #[test]
    fn ks_with_atom() {
        // half the mass at 0, half uniform on (0, 1]
        let mut data = vec![0.0; 50];
        data.extend((0..50).map(|i| (i as f64 + 0.5) / 50.0));
        let cdf = |x: f64| if x < 0.0 { 0.0 } else { 0.5 + 0.5 * x.min(1.0) };
        let left = |x: f64| if x <= 0.0 { 0.0 } else { 0.5 + 0.5 * x.min(1.0) };
        assert!(ks_one_sample_with_atoms(&data, cdf, left) < 0.011);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
