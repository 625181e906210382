//! Small numeric helpers shared by the estimators.

use libm::erfc;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Linear-interpolation empirical quantile of already sorted data
/// (position `(n - 1) * p` between order statistics).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    let a = sorted[lo];
    let b = sorted[lo + 1];
    if frac == 0.0 || a == b {
        a
    } else {
        a + frac * (b - a)
    }
}

/// Sorted copy using a total order (NaNs last).
pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn std_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (sample_variance(values) / values.len() as f64).sqrt()
}

/// Standard normal CDF. Computed from the lower tail and reflected, so
/// `normal_cdf(z) + normal_cdf(-z)` rounds to exactly one.
pub fn normal_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    } else {
        1.0 - normal_cdf(-z)
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "normal quantile probability {p} outside (0, 1)"
        )));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(p))
}

/// Two-sided critical value for an equal-tailed interval at level `gamma`.
pub fn two_sided_z(gamma: f64) -> Result<f64> {
    check_level(gamma)?;
    normal_quantile(1.0 - (1.0 - gamma) / 2.0)
}

pub(crate) fn check_level(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "interval level {gamma} outside (0, 1)"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_quantile_matches_hand_values() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_sorted(&v, 0.01) - 1.99).abs() < 1e-12);
        assert!((quantile_sorted(&v, 0.99) - 99.01).abs() < 1e-12);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 100.0);
        assert_eq!(quantile_sorted(&[3.0], 0.3), 3.0);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-14);
        for z in [0.1, 0.7, 1.3, 2.9, 5.0, 8.5] {
            assert_eq!(normal_cdf(z) + normal_cdf(-z), 1.0);
        }
    }

    #[test]
    fn z_for_99_percent() {
        assert!((two_sided_z(0.99).unwrap() - 2.575_829_303_548_901).abs() < 1e-9);
        assert!(two_sided_z(1.0).is_err());
    }

    #[test]
    fn variance_is_unbiased() {
        assert!((sample_variance(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(sample_variance(&[2.0]), 0.0);
    }
}
