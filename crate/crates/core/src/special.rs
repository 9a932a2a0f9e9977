//! Closed-form CDFs and related special functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::{erf, erfc};

use crate::quadrature::legendre_integrate;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(x), accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Φ̄(x) = 1 − Φ(x), accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// P(X ≥ x) for a Cauchy(location, scale) variable.
pub fn cauchy_sf(x: f64, location: f64, scale: f64) -> f64 {
    0.5 - ((x - location) / scale).atan() / PI
}

/// P(X ≥ x) for a Lévy(0, scale) variable (support x > 0).
pub fn levy_sf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erf((scale / (2.0 * x)).sqrt())
    }
}

/// Upper orthant probability P(Z₁ > a, Z₂ > b) of a standard bivariate
/// normal with correlation `r`.
///
/// Integrates φ(x)·Φ̄((b − r x)/√(1 − r²)) over x > a with panelled
/// Gauss–Legendre; absolute error is far below 1e-12.
pub fn bvn_upper(a: f64, b: f64, r: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&r), "correlation {r} outside [-1, 1]");
    if r >= 1.0 - 1e-15 {
        return normal_sf(a.max(b));
    }
    if r <= -1.0 + 1e-15 {
        return (normal_cdf(-b) - normal_cdf(a)).max(0.0);
    }
    let s = (1.0 - r * r).sqrt();
    let lo = a.max(-14.0);
    let hi = a.max(0.0) + 14.0;
    let width = (2.0 * s).clamp(0.02, 0.5);
    let panels = (((hi - lo) / width).ceil() as usize).clamp(8, 4000);
    legendre_integrate(|x| normal_pdf(x) * normal_sf((b - r * x) / s), lo, hi, panels)
}

/// Φ₂(a, b; r) = P(Z₁ ≤ a, Z₂ ≤ b).
pub fn bvn_cdf(a: f64, b: f64, r: f64) -> f64 {
    bvn_upper(-a, -b, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_tails() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_relative_eq!(normal_cdf(-0.5), 0.308_537_538_725_986_9, max_relative = 1e-14);
        assert_relative_eq!(normal_sf(5.0), 2.866_515_718_791_939_1e-7, max_relative = 1e-12);
        assert_relative_eq!(normal_sf(10.0), 7.619_853_024_160_527e-24, max_relative = 1e-10);
    }

    #[test]
    fn levy_and_cauchy() {
        assert_relative_eq!(levy_sf(1.0, 1.0), 0.682_689_492_137_085_9, max_relative = 1e-13);
        assert_relative_eq!(levy_sf(1.0, 4.0), 0.954_499_736_103_641_6, max_relative = 1e-13);
        assert_relative_eq!(cauchy_sf(1.0, 0.0, 1.0), 0.25, epsilon = 1e-16);
    }

    #[test]
    fn bvn_independent_is_product() {
        for &(a, b) in &[(0.3, -1.2), (2.0, 2.5), (-3.0, 0.1)] {
            assert_relative_eq!(bvn_cdf(a, b, 0.0), normal_cdf(a) * normal_cdf(b), max_relative = 1e-12);
        }
    }

    #[test]
    fn bvn_at_origin_matches_arcsine_law() {
        for &r in &[-0.95, -0.5, 0.0, 0.3, 0.9, 0.999] {
            let want = 0.25 + (r as f64).asin() / (2.0 * PI);
            assert_relative_eq!(bvn_cdf(0.0, 0.0, r), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn bvn_reference_values() {
        // 30-digit mpmath quadrature of the same integral
        assert_relative_eq!(bvn_cdf(1.0, 0.5, 0.6), 0.641_828_990_063_871_3, epsilon = 1e-9);
        assert_relative_eq!(bvn_cdf(-1.0, 2.0, -0.4), 0.147_783_949_707_966_0, epsilon = 1e-9);
    }

    #[test]
    fn bvn_upper_keeps_relative_accuracy_in_tail() {
        let p = bvn_upper(6.0, 6.0, 0.0);
        assert_relative_eq!(p, normal_sf(6.0).powi(2), max_relative = 1e-10);
    }
}
