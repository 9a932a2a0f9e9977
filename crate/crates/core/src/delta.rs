//! Fourth-order delta method for E[L(X̄_K)] and the Hessian-sign classifier
//! for the eventual direction of a curve.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::losses::LossFunction;
use crate::tensor::{unflatten, Tensor};

/// Samples used when a family has no closed-form central moments.
pub const MC_MOMENT_SAMPLES: usize = 10_000_000;

/// Half-width, in standard deviations, of the range on which derivative
/// finiteness is checked.
pub const RANGE_SIGMAS: f64 = 8.0;

/// Relative floor for the definiteness tolerance: tol ≥ 1e-8·‖H‖₂.
pub const DEFINITENESS_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    Analytic,
    McEstimated,
}

/// L(μ) + c1/K + α/K².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaExpansion {
    #[serde(rename = "L_mu")]
    pub l_mu: f64,
    pub c1: f64,
    pub alpha: f64,
    pub moment_source: MomentSource,
    /// Standard error of α when the moments were estimated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_std_err: Option<f64>,
    /// Whether derivatives up to order 4 stayed finite on μ ± 8σ (checked
    /// coordinatewise along the axes; the global boundedness hypothesis of
    /// the expansion is not verified).
    #[serde(default = "yes")]
    pub finite_on_range: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    EventuallyBetter,
    EventuallyWorse,
    Undetermined,
}

/// Σ over all index tuples of a[i]·b[i].
fn contract(a: &Tensor, b: &Tensor) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
}

/// Σ ∂⁴L_{abcd}(Σ_ab Σ_cd + Σ_ac Σ_bd + Σ_ad Σ_bc) = 3 Σ ∂⁴L_{abcd} Σ_ab Σ_cd
/// by symmetry of ∂⁴L; computed with all three pairings to stay exact for
/// tensors that are only numerically symmetric.
fn fourth_pairings(d4: &Tensor, cov: &Tensor) -> f64 {
    let d = d4.dim;
    let mut idx = [0usize; 4];
    let mut total = 0.0;
    for (flat, &v) in d4.data.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        unflatten(flat, d, &mut idx);
        let c = |a: usize, b: usize| cov.get(&[idx[a], idx[b]]);
        total += v * (c(0, 1) * c(2, 3) + c(0, 2) * c(1, 3) + c(0, 3) * c(1, 2));
    }
    total
}

/// α = L‴μ₃/6 + L⁗σ⁴/8 for a univariate loss.
pub fn univariate_alpha(l3: f64, l4: f64, mu3: f64, variance: f64) -> f64 {
    l3 * mu3 / 6.0 + l4 * variance * variance / 8.0
}

/// Tensor form of α from derivative and central-moment tensors.
pub fn tensor_alpha(d3: &Tensor, d4: &Tensor, m3: &Tensor, cov: &Tensor) -> f64 {
    contract(d3, m3) / 6.0 + fourth_pairings(d4, cov) / 24.0
}

fn check_expandable(loss: &LossFunction) -> Result<()> {
    if matches!(loss, LossFunction::ZeroOne { .. }) {
        return Err(Error::Unsupported(
            "the delta method needs a smooth loss, not zero-one".into(),
        ));
    }
    loss.validate()
}

fn finite_on_range(loss: &LossFunction, mean: &[f64], cov: &Tensor) -> bool {
    const GRID: usize = 32;
    let d = mean.len();
    for axis in 0..d {
        let sd = cov.get(&[axis, axis]).sqrt();
        for g in 0..=GRID {
            let mut x = mean.to_vec();
            x[axis] += RANGE_SIGMAS * sd * (2.0 * g as f64 / GRID as f64 - 1.0);
            match loss.derivatives(&x, 4) {
                Ok(ts) if ts.iter().all(|t| t.data.iter().all(|v| v.is_finite())) => {}
                _ => return false,
            }
        }
    }
    true
}

/// Expansion with analytic central moments, falling back to
/// `MC_MOMENT_SAMPLES` draws (seed 0) when the family lacks them.
pub fn delta_expansion(loss: &LossFunction, dist: &Distribution) -> Result<DeltaExpansion> {
    check_expandable(loss)?;
    dist.validate()?;
    let mean = dist
        .mean()
        .ok_or_else(|| Error::Unsupported(format!("{} has no finite mean", dist.name())))?;
    let moments = (
        dist.central_moments(2),
        dist.central_moments(3),
        dist.central_moments(4),
    );
    match moments {
        (Some(cov), Some(m3), Some(_)) => {
            let ds = loss.derivatives(&mean, 4)?;
            let l_mu = loss.eval(&mean)?;
            Ok(DeltaExpansion {
                l_mu,
                c1: contract(&ds[1], &cov) / 2.0,
                alpha: tensor_alpha(&ds[2], &ds[3], &m3, &cov),
                moment_source: MomentSource::Analytic,
                alpha_std_err: None,
                finite_on_range: finite_on_range(loss, &mean, &cov),
            })
        }
        _ if dist.covariance().is_none() => Err(Error::Unsupported(format!(
            "{} lacks finite moments to order 4",
            dist.name()
        ))),
        _ => delta_expansion_mc(loss, dist, MC_MOMENT_SAMPLES, 0),
    }
}

/// Expansion with central moments estimated from `samples` draws; α carries
/// a first-order (influence-function) standard error.
pub fn delta_expansion_mc(
    loss: &LossFunction,
    dist: &Distribution,
    samples: usize,
    seed: u64,
) -> Result<DeltaExpansion> {
    check_expandable(loss)?;
    if samples < 2 {
        return Err(crate::error::invalid("need at least 2 moment samples"));
    }
    let d = dist.dim();
    let sampler = dist.sampler()?;
    let mut rng = crate::rng::stream(seed, 0);
    let mut draws = vec![0.0; samples * d];
    for x in draws.chunks_exact_mut(d) {
        sampler.draw(&mut rng, x);
    }
    let n = samples as f64;
    let mut mean = vec![0.0; d];
    for x in draws.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut cov = Tensor::zeros(2, d);
    let mut m3 = Tensor::zeros(3, d);
    let mut z = vec![0.0; d];
    for x in draws.chunks_exact(d) {
        for i in 0..d {
            z[i] = x[i] - mean[i];
        }
        for a in 0..d {
            for b in 0..d {
                let zab = z[a] * z[b];
                cov.data[a * d + b] += zab / n;
                for c in 0..d {
                    m3.data[(a * d + b) * d + c] += zab * z[c] / n;
                }
            }
        }
    }
    let ds = loss.derivatives(&mean, 4)?;
    let alpha = tensor_alpha(&ds[2], &ds[3], &m3, &cov);
    // ψ(z) = ∂³L[z,z,z]/6 + ∂⁴L[z,z,Σ]/4
    let mut d4_cov = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for c in 0..d {
                for e in 0..d {
                    s += ds[3].get(&[a, b, c, e]) * cov.get(&[c, e]);
                }
            }
            d4_cov[a * d + b] = s;
        }
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for x in draws.chunks_exact(d) {
        for i in 0..d {
            z[i] = x[i] - mean[i];
        }
        let mut psi = 0.0;
        for a in 0..d {
            for b in 0..d {
                let zab = z[a] * z[b];
                psi += d4_cov[a * d + b] * zab / 4.0;
                for c in 0..d {
                    psi += ds[2].data[(a * d + b) * d + c] * zab * z[c] / 6.0;
                }
            }
        }
        s1 += psi;
        s2 += psi * psi;
    }
    let var = (s2 - s1 * s1 / n) / (n - 1.0);
    Ok(DeltaExpansion {
        l_mu: loss.eval(&mean)?,
        c1: contract(&ds[1], &cov) / 2.0,
        alpha,
        moment_source: MomentSource::McEstimated,
        alpha_std_err: Some((var.max(0.0) / n).sqrt()),
        finite_on_range: finite_on_range(loss, &mean, &cov),
    })
}

/// L(μ) + c1/K + α/K².
pub fn delta_predict(exp: &DeltaExpansion, k: usize) -> f64 {
    let k = k as f64;
    exp.l_mu + exp.c1 / k + exp.alpha / (k * k)
}

/// Eventual direction of E[L(ȳ_K)] from the sign of the Hessian at ȳ_∞.
/// The effective tolerance is max(tol, 1e-8·‖H‖₂).
pub fn hessian_direction(loss: &LossFunction, y_inf: &[f64], tol: f64) -> Result<Direction> {
    let h = loss.hessian(y_inf)?;
    let eig = SymmetricEigen::new(h).eigenvalues;
    let norm = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let tol = tol.max(DEFINITENESS_REL_TOL * norm);
    Ok(if norm > 0.0 && eig.iter().all(|&l| l > tol) {
        Direction::EventuallyBetter
    } else if norm > 0.0 && eig.iter().all(|&l| l < -tol) {
        Direction::EventuallyWorse
    } else {
        Direction::Undetermined
    })
}
