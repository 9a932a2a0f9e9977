//! Gauss–Hermite and Gauss–Legendre quadrature with cached rules.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

use gauss_quad::{GaussHermite, GaussLegendre};

use crate::error::{Error, Result};

/// Initial Gauss–Hermite rule size.
pub const HERMITE_START: usize = 64;
/// Largest rule the doubling loop will build.
pub const HERMITE_MAX: usize = 512;
/// Convergence tolerance between successive rule sizes.
pub const QUAD_TOL: f64 = 1e-10;

type Rule = &'static [(f64, f64)];

fn cached(cache: &'static OnceLock<Mutex<HashMap<usize, Rule>>>, n: usize, build: fn(usize) -> Vec<(f64, f64)>) -> Rule {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(build(n).into_boxed_slice()))
}

fn hermite_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    cached(&CACHE, n, |n| {
        let rule = GaussHermite::new(NonZeroUsize::new(n).expect("nonzero degree"));
        rule.iter().map(|(x, w)| (*x, *w)).collect()
    })
}

fn legendre_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    cached(&CACHE, n, |n| {
        let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero degree"));
        rule.iter().map(|(x, w)| (*x, *w)).collect()
    })
}

/// E[f(mean + sd·Z)] for Z ~ N(0,1) with a fixed `n`-node rule.
pub fn gauss_hermite_fixed<F: FnMut(f64) -> f64>(mut f: F, mean: f64, sd: f64, n: usize) -> f64 {
    let rule = hermite_rule(n);
    let total: f64 = rule
        .iter()
        .map(|&(x, w)| w * f(mean + SQRT_2 * sd * x))
        .sum();
    total / PI.sqrt()
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub nodes: usize,
}

/// E[f(mean + sd·Z)], doubling the Gauss–Hermite rule from 64 nodes until
/// successive values agree within [`QUAD_TOL`].
pub fn gaussian_expectation<F: FnMut(f64) -> f64>(mut f: F, mean: f64, sd: f64) -> Result<Quadrature> {
    if sd == 0.0 {
        return Ok(Quadrature { value: f(mean), nodes: 1 });
    }
    let mut n = HERMITE_START;
    let mut prev = gauss_hermite_fixed(&mut f, mean, sd, n);
    while n < HERMITE_MAX {
        n *= 2;
        let next = gauss_hermite_fixed(&mut f, mean, sd, n);
        if !next.is_finite() {
            return Err(Error::Convergence(format!("non-finite Gauss-Hermite sum at {n} nodes")));
        }
        if (next - prev).abs() < QUAD_TOL {
            return Ok(Quadrature { value: next, nodes: n });
        }
        prev = next;
    }
    Err(Error::Convergence(format!(
        "Gauss-Hermite expectation not stable to {QUAD_TOL:e} at {HERMITE_MAX} nodes"
    )))
}

/// Composite 16-point Gauss–Legendre over `[a, b]` split into `panels`.
pub fn legendre_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = legendre_rule(16);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let half = 0.5 * width;
        total += half * rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>();
    }
    total
}

/// E[f(X)] for X ~ Cauchy(location, scale), through the quantile map
/// x = location + scale·tan(π(u − ½)); `f` must be bounded.
pub fn cauchy_expectation<F: FnMut(f64) -> f64>(mut f: F, location: f64, scale: f64) -> Result<Quadrature> {
    let mut g = |u: f64| f(location + scale * (PI * (u - 0.5)).tan());
    let mut panels = 32;
    let mut prev = legendre_integrate(&mut g, 0.0, 1.0, panels);
    while panels < 1 << 14 {
        panels *= 2;
        let next = legendre_integrate(&mut g, 0.0, 1.0, panels);
        if (next - prev).abs() < QUAD_TOL * 1e-2 {
            return Ok(Quadrature { value: next, nodes: panels * 16 });
        }
        prev = next;
    }
    Err(Error::Convergence("Cauchy expectation did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_integrates_gaussian_moments() {
        let m2 = gauss_hermite_fixed(|x| x * x, 1.0, 2.0, 64);
        assert_relative_eq!(m2, 5.0, max_relative = 1e-13);
        let m4 = gauss_hermite_fixed(|x| x.powi(4), 0.0, 1.0, 64);
        assert_relative_eq!(m4, 3.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_hermite_matches_lognormal_mean() {
        let q = gaussian_expectation(|x| x.exp(), 0.2, 0.5).unwrap();
        assert_relative_eq!(q.value, (0.2f64 + 0.125).exp(), max_relative = 1e-12);
        assert_eq!(q.nodes, 128);
    }

    #[test]
    fn legendre_polynomial_exact() {
        let v = legendre_integrate(|x| 3.0 * x * x, 0.0, 2.0, 3);
        assert_relative_eq!(v, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn cauchy_expectation_of_indicator_like_function() {
        // E[atan(X)] = 0 by symmetry, E[1/(1+X^2)] = 1/2 for standard Cauchy
        let q = cauchy_expectation(|x| 1.0 / (1.0 + x * x), 0.0, 1.0).unwrap();
        assert_relative_eq!(q.value, 0.5, epsilon = 1e-12);
    }
}
