//! Strong large deviations for sample means: exponential tilts, Petrov
//! asymptotes, the Gaussian multivariate rate, and exact tail sequences
//! for the lattice and stable counterexamples.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curves::{LossCurve, Method};
use crate::distributions::{Distribution, LatticeData, SumSequence};
use crate::error::{invalid, Error, Result};

/// Required accuracy of the tilt equation m(h) = c.
pub const TILT_TOL: f64 = 1e-10;

/// Largest denominator tried when placing an atom on a rational lattice.
pub const MAX_DENOMINATOR: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeMeta {
    pub span: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetrovSolution {
    /// Threshold for the sample mean.
    pub c: f64,
    /// Tilt solving m(h) = c.
    pub h: f64,
    pub log_r: f64,
    pub sigma_h: f64,
    /// h·c − log R(h).
    pub rate: f64,
    /// e^{−rate}.
    pub rho: f64,
    pub lattice: Option<LatticeMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PetrovVariant {
    /// P(X̄ₙ ≥ c) for laws with a density.
    Nonlattice,
    /// P(X̄ₙ ≥ c) with n·c on the lattice.
    LatticeGeq,
    /// P(X̄ₙ > c) with n·c on the lattice.
    LatticeStrict,
}

/// Solves m(h) = c by an expanding bracket and safeguarded Newton steps.
pub fn solve_tilt(dist: &Distribution, c: f64) -> Result<PetrovSolution> {
    dist.validate()?;
    if dist.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: dist.dim(),
        });
    }
    let bound = dist.mgf_domain_bound();
    if bound == 0.0 {
        return Err(Error::NoMgf(dist.name().into()));
    }
    let mean = dist.mean().expect("laws with an MGF have a mean")[0];
    if !(c > mean) {
        return Err(Error::NonpositiveTilt { c, mean });
    }
    let limit = dist.tilted_mean_limit()?;
    if !(c < limit) {
        return Err(Error::Infeasible { c, limit });
    }
    let m = |h: f64| dist.cgf_point(h);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        if m(hi)?.m > c {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 || hi >= bound {
            return Err(Error::Convergence(format!("no tilt bracket for c = {c}")));
        }
    }
    let mut h = 0.5 * (lo + hi);
    let mut p = m(h)?;
    for _ in 0..500 {
        let f = p.m - c;
        if f.abs() <= 1e-14 * c.abs().max(1.0) {
            break;
        }
        if f > 0.0 {
            hi = h;
        } else {
            lo = h;
        }
        let newton = h - f / p.sigma2;
        let next = if newton > lo && newton < hi && p.sigma2 > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == h || hi - lo <= f64::EPSILON * hi {
            break;
        }
        h = next;
        p = m(h)?;
    }
    if (p.m - c).abs() >= TILT_TOL {
        return Err(Error::Convergence(format!(
            "tilt equation residual {} at h = {h}",
            p.m - c
        )));
    }
    let rate = h * c - p.log_r;
    if !(rate > 0.0) {
        return Err(Error::Convergence(format!("nonpositive rate {rate}")));
    }
    let lattice = dist.lattice_data().map(|l| LatticeMeta {
        span: l.span,
        offset: l.offset,
    });
    Ok(PetrovSolution {
        c,
        h,
        log_r: p.log_r,
        sigma_h: p.sigma2.sqrt(),
        rate,
        rho: (-rate).exp(),
        lattice,
    })
}

/// Leading-order asymptote of the tail probability of X̄ₙ.
pub fn petrov_asymptote(sol: &PetrovSolution, n: usize, variant: PetrovVariant) -> Result<f64> {
    Ok(log_petrov_asymptote(sol, n, variant)?.exp())
}

/// Natural log of [`petrov_asymptote`], usable where the value underflows.
pub fn log_petrov_asymptote(sol: &PetrovSolution, n: usize, variant: PetrovVariant) -> Result<f64> {
    if n == 0 {
        return Err(invalid("asymptotes need n >= 1"));
    }
    let nf = n as f64;
    let base = -nf * sol.rate - (sol.sigma_h * (2.0 * PI * nf).sqrt()).ln();
    let lattice = || {
        sol.lattice
            .ok_or_else(|| invalid("lattice variant without lattice metadata"))
    };
    Ok(match variant {
        PetrovVariant::Nonlattice => base - sol.h.ln(),
        PetrovVariant::LatticeGeq => {
            let span = lattice()?.span;
            base + span.ln() - (-(-span * sol.h).exp_m1()).ln()
        }
        PetrovVariant::LatticeStrict => {
            let span = lattice()?.span;
            // 1/(1 − e^{−Hh}) − 1 = e^{−Hh}/(1 − e^{−Hh})
            base + span.ln() - span * sol.h - (-(-span * sol.h).exp_m1()).ln()
        }
    })
}

/// Hypothesis that fails in the eventual-decrease theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// (1) the MGF is not finite everywhere.
    MgfNotEverywhereFinite,
    /// (2) no mass above μ + ε.
    ThresholdAtOrAboveSupport,
    /// (3) neither absolutely continuous nor lattice.
    NotContinuousOrLattice,
    /// (3bis) lattice law without an atom at μ + ε.
    NoAtomAtThreshold,
}

impl Violation {
    pub fn code(self) -> &'static str {
        match self {
            Violation::MgfNotEverywhereFinite => "1",
            Violation::ThresholdAtOrAboveSupport => "2",
            Violation::NotContinuousOrLattice => "3",
            Violation::NoAtomAtThreshold => "3bis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum TailVerdict {
    EventuallyDecreasing,
    AssumptionsViolated(Violation),
}

/// Checks whether P(X̄ₙ ≥ μ + ε) is guaranteed to decrease for large n.
pub fn eventual_decrease_verdict(dist: &Distribution, epsilon: f64) -> Result<TailVerdict> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    dist.validate()?;
    if dist.mgf_domain_bound() != f64::INFINITY {
        return Ok(TailVerdict::AssumptionsViolated(Violation::MgfNotEverywhereFinite));
    }
    let mean = dist
        .mean()
        .ok_or_else(|| Error::Unsupported(format!("mean of {}", dist.name())))?;
    if mean.len() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: mean.len(),
        });
    }
    let t = mean[0] + epsilon;
    if !(dist.support_sup()? > t) {
        return Ok(TailVerdict::AssumptionsViolated(
            Violation::ThresholdAtOrAboveSupport,
        ));
    }
    if dist.is_absolutely_continuous() {
        return Ok(TailVerdict::EventuallyDecreasing);
    }
    Ok(match dist.lattice_data() {
        Some(l) if l.has_atom_at(t) => TailVerdict::EventuallyDecreasing,
        Some(_) => TailVerdict::AssumptionsViolated(Violation::NoAtomAtThreshold),
        None => TailVerdict::AssumptionsViolated(Violation::NotContinuousOrLattice),
    })
}

/// Exact tail probabilities pₙ for n = 1, 2, ….
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSequence {
    pub label: String,
    pub threshold: f64,
    pub strict: bool,
    /// `values[n − 1]` = pₙ.
    pub values: Vec<f64>,
}

impl TailSequence {
    /// The n at which pₙ > pₙ₋₁.
    pub fn increasing_steps(&self) -> Vec<usize> {
        (1..self.values.len())
            .filter(|&i| self.values[i] > self.values[i - 1])
            .map(|i| i + 1)
            .collect()
    }

    /// Smallest n₀ with pₘ₊₁ < pₘ for every scanned m ≥ n₀.
    pub fn strict_decrease_onset(&self) -> Option<usize> {
        let v = &self.values;
        if v.len() < 2 || v[v.len() - 1] >= v[v.len() - 2] {
            return None;
        }
        let mut n0 = v.len() - 1;
        while n0 > 1 && v[n0 - 1] < v[n0 - 2] {
            n0 -= 1;
        }
        Some(n0)
    }

    pub fn to_curve(&self) -> LossCurve {
        LossCurve::from_values(&self.label, 1, &self.values, Method::ExactClosedForm)
    }
}

/// ⌈x⌉, reading values within 1e-9 of an integer as that integer.
fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// pₙ = P(X̄ₙ ≥ p + ε) for Bernoulli(p) votes, from binomial sums over
/// k ≥ ⌈n(p + ε)⌉.
pub fn bernoulli_sequence(p: f64, epsilon: f64, nmax: usize) -> Result<TailSequence> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("p = {p} must lie in (0, 1)")));
    }
    let t = p + epsilon;
    if t > 1.0 + 1e-12 {
        return Err(invalid(format!("threshold {t} exceeds 1")));
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let values = (1..=nmax)
        .map(|n| {
            let nf = n as f64;
            let k0 = ceil_tolerant(nf * t).max(0.0) as usize;
            let log_nfact = libm::lgamma(nf + 1.0);
            let mut terms: Vec<f64> = (k0..=n)
                .map(|k| {
                    let kf = k as f64;
                    (log_nfact - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0)
                        + kf * lp
                        + (nf - kf) * lq)
                        .exp()
                })
                .collect();
            // smallest terms first
            terms.sort_by(f64::total_cmp);
            terms.iter().sum::<f64>().min(1.0)
        })
        .collect();
    Ok(TailSequence {
        label: "bernoulli_tail".into(),
        threshold: t,
        strict: false,
        values,
    })
}

/// Exact lattice tail sequence P(X̄ₙ ≥ t) (or > t) by repeated convolution.
pub fn lattice_tail_sequence(
    dist: &Distribution,
    threshold: f64,
    nmax: usize,
    strict: bool,
) -> Result<TailSequence> {
    let l = dist
        .lattice_data()
        .ok_or_else(|| Error::Unsupported(format!("{} is not lattice-valued", dist.name())))?;
    let mut seq = SumSequence::new(&l)?;
    let values = (0..nmax)
        .map(|_| seq.next_mean_tail(threshold, strict))
        .collect::<Result<_>>()?;
    Ok(TailSequence {
        label: if strict { "lattice_tail_strict" } else { "lattice_tail" }.into(),
        threshold,
        strict,
        values,
    })
}

/// Best rational approximation p/q of x with q ≤ `MAX_DENOMINATOR` and
/// |x − p/q| ≤ 1e-12, by continued fractions.
fn rational_approx(x: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h2 as f64 / k2 as f64).abs() <= 1e-12 {
            return Some((h2, k2));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

/// Three-point law on {0, μ + ε, 1} that puts mass back on the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRestored {
    pub distribution: Distribution,
    /// The atom μ + ε.
    pub atom: f64,
    /// Masses at 0, μ + ε and 1.
    pub masses: [f64; 3],
    /// Mean of the constructed law, which need not equal μ.
    pub effective_mean: f64,
    /// Whether the atom lies above the effective mean, as (3bis) needs.
    pub atom_above_mean: bool,
    pub verdict: TailVerdict,
}

/// Masses ε/(2(μ+ε)−1) at μ+ε, (2μ−1)/(2(μ+ε)−1) at 1, the rest at 0.
pub fn mass_restored_lattice(mu: f64, epsilon: f64) -> Result<MassRestored> {
    let atom = mu + epsilon;
    if !(atom > 0.0 && atom < 1.0) {
        return Err(invalid(format!("atom {atom} must lie strictly inside (0, 1)")));
    }
    let denom = 2.0 * atom - 1.0;
    let m_atom = epsilon / denom;
    let m_one = (2.0 * mu - 1.0) / denom;
    let m_zero = 1.0 - m_atom - m_one;
    for (name, m) in [("atom", m_atom), ("one", m_one), ("zero", m_zero)] {
        if !(m.is_finite() && (-1e-15..=1.0 + 1e-15).contains(&m)) {
            return Err(invalid(format!("mass at {name} is {m}, outside [0, 1]")));
        }
    }
    let (m_atom, m_one, m_zero) = (m_atom.clamp(0.0, 1.0), m_one.clamp(0.0, 1.0), m_zero.clamp(0.0, 1.0));
    let (p, q) = rational_approx(atom)
        .ok_or_else(|| invalid(format!("atom {atom} is not a rational with denominator <= {MAX_DENOMINATOR}")))?;
    let (p, q) = (p as usize, q as usize);
    let mut masses = vec![0.0; q + 1];
    masses[0] += m_zero;
    masses[p] += m_atom;
    masses[q] += m_one;
    let distribution = Distribution::lattice(LatticeData {
        offset: 0.0,
        span: 1.0 / q as f64,
        masses,
    });
    let effective_mean = m_atom * atom + m_one;
    let atom_above_mean = atom > effective_mean;
    let verdict = if atom_above_mean {
        eventual_decrease_verdict(&distribution, atom - effective_mean)?
    } else {
        TailVerdict::AssumptionsViolated(Violation::ThresholdAtOrAboveSupport)
    };
    Ok(MassRestored {
        distribution,
        atom,
        masses: [m_zero, m_atom, m_one],
        effective_mean,
        atom_above_mean,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StableFamily {
    /// Lévy(0, 1): X̄ₙ ~ Lévy(0, n), tails grow with n.
    Levy,
    /// Cauchy(0, 1): X̄ₙ has the law of X₁.
    Cauchy,
    /// N(0, 1): X̄ₙ ~ N(0, 1/n).
    Gaussian,
}

impl StableFamily {
    pub fn distribution(self) -> Distribution {
        match self {
            StableFamily::Levy => Distribution::Levy { scale: 1.0 },
            StableFamily::Cauchy => Distribution::Cauchy {
                location: 0.0,
                scale: 1.0,
            },
            StableFamily::Gaussian => Distribution::gaussian(0.0, 1.0),
        }
    }
}

/// pₙ = P(X̄ₙ ≥ ε) for the standard member of a stable family.
pub fn stable_counterexample(family: StableFamily, epsilon: f64, nmax: usize) -> Result<TailSequence> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let d = family.distribution();
    let values = (1..=nmax)
        .map(|n| d.tail_probability(n, epsilon, false))
        .collect::<Result<_>>()?;
    Ok(TailSequence {
        label: format!("{}_tail", d.name()),
        threshold: epsilon,
        strict: false,
        values,
    })
}

/// Two sufficient-condition forms for a positive tilt vector τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeCondition {
    /// min εᵢ/‖ε‖ > √(2(1 − √(λ_min/λ_max))); guarantees τ > 0.
    pub positivity_condition: bool,
    /// min εᵢ/‖ε‖ < √(λ_min/λ_max), the shorter stated form.
    pub ratio_condition: bool,
}

pub fn cone_condition(epsilon: &[f64], lambda_min: f64, lambda_max: f64) -> Result<ConeCondition> {
    if !(lambda_min > 0.0 && lambda_max >= lambda_min) {
        return Err(invalid("need lambda_max >= lambda_min > 0"));
    }
    let norm = epsilon.iter().map(|e| e * e).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(invalid("epsilon must be nonzero"));
    }
    let min = epsilon.iter().cloned().fold(f64::INFINITY, f64::min) / norm;
    let r = lambda_min / lambda_max;
    Ok(ConeCondition {
        positivity_condition: min > (2.0 * (1.0 - r.sqrt())).sqrt(),
        ratio_condition: min < r.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateLd {
    pub tau: Vec<f64>,
    /// Target a = μ + ε.
    pub a: Vec<f64>,
    pub rate: f64,
    /// ∇²φ(τ) = Σ.
    pub hessian_phi: Vec<Vec<f64>>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub log_det: f64,
    pub cone: ConeCondition,
}

impl MultivariateLd {
    /// e^{−n·rate}/((2πn)^{D/2}·∏τ·det(Σ)^{1/2}) for P(X̄ₙ ≥ a) coordinatewise.
    pub fn asymptote(&self, n: usize) -> f64 {
        let nf = n as f64;
        let d = self.tau.len() as f64;
        let log_prod: f64 = self.tau.iter().map(|t| t.ln()).sum();
        (-nf * self.rate - 0.5 * d * (2.0 * PI * nf).ln() - log_prod - 0.5 * self.log_det).exp()
    }
}

/// Tilt, rate and asymptote for a Gaussian N(μ, Σ) at target μ + ε.
/// The offending coordinate in `TiltOutsideOrthant` is 0-based.
pub fn gaussian_multivariate_ld(
    mu: &[f64],
    sigma: &DMatrix<f64>,
    epsilon: &[f64],
    n: usize,
) -> Result<(MultivariateLd, f64)> {
    let d = mu.len();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: sigma.nrows(),
        });
    }
    if epsilon.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: epsilon.len(),
        });
    }
    if n == 0 {
        return Err(invalid("asymptotes need n >= 1"));
    }
    let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let eps = DVector::from_column_slice(epsilon);
    let tau = chol.solve(&eps);
    if let Some((index, &value)) = tau.iter().enumerate().find(|(_, &t)| !(t > 0.0)) {
        return Err(Error::TiltOutsideOrthant { index, value });
    }
    let rate = 0.5 * eps.dot(&tau);
    let eig = SymmetricEigen::new(sigma.clone()).eigenvalues;
    let lambda_min = eig.min();
    let lambda_max = eig.max();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let ld = MultivariateLd {
        tau: tau.iter().copied().collect(),
        a: mu.iter().zip(epsilon).map(|(m, e)| m + e).collect(),
        rate,
        hessian_phi: (0..d).map(|i| sigma.row(i).iter().copied().collect()).collect(),
        lambda_min,
        lambda_max,
        log_det,
        cone: cone_condition(epsilon, lambda_min, lambda_max)?,
    };
    let asym = ld.asymptote(n);
    Ok((ld, asym))
}

/// Hypotheses of the multivariate theorem that can be checked for an
/// arbitrary law: finite MGF, positive definite covariance and a positive
/// first-order tilt Σ⁻¹ε. Beyond Gaussians the asymptote is left to MC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateHypotheses {
    pub mgf_finite: bool,
    pub covariance_positive_definite: bool,
    pub tilt_positive: bool,
    pub cone: Option<ConeCondition>,
}

pub fn multivariate_hypotheses(dist: &Distribution, epsilon: &[f64]) -> Result<MultivariateHypotheses> {
    dist.validate()?;
    if epsilon.len() != dist.dim() {
        return Err(Error::Dimension {
            expected: dist.dim(),
            got: epsilon.len(),
        });
    }
    let mgf_finite = dist.mgf_domain_bound() == f64::INFINITY;
    let cov = dist.covariance();
    let chol = cov.clone().and_then(|c| c.cholesky());
    let tilt_positive = chol.as_ref().is_some_and(|ch| {
        ch.solve(&DVector::from_column_slice(epsilon))
            .iter()
            .all(|&t| t > 0.0)
    });
    let cone = match &cov {
        Some(c) if chol.is_some() => {
            let eig = SymmetricEigen::new(c.clone()).eigenvalues;
            cone_condition(epsilon, eig.min(), eig.max()).ok()
        }
        _ => None,
    };
    Ok(MultivariateHypotheses {
        mgf_finite,
        covariance_positive_definite: chol.is_some(),
        tilt_positive,
        cone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_sf;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_tilt() {
        let s = solve_tilt(&Distribution::gaussian(0.0, 1.0), 0.5).unwrap();
        assert_relative_eq!(s.h, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.rate, 0.125, epsilon = 1e-12);
        assert_relative_eq!(s.rho, (-0.125f64).exp(), epsilon = 1e-12);
        assert!(s.lattice.is_none());
    }

    #[test]
    fn bernoulli_tilt() {
        let s = solve_tilt(&Distribution::Bernoulli { p: 0.5 }, 0.75).unwrap();
        assert_relative_eq!(s.h, 3f64.ln(), epsilon = 1e-10);
        assert_relative_eq!(s.log_r, 2f64.ln(), epsilon = 1e-10);
        assert_relative_eq!(s.rate, 0.75 * 3f64.ln() - 2f64.ln(), epsilon = 1e-10);
        assert_relative_eq!(s.rate, 0.130812, epsilon = 1e-6);
        assert_eq!(s.lattice.unwrap().span, 1.0);
    }

    #[test]
    fn tilt_errors() {
        let g = Distribution::gaussian(0.0, 1.0);
        assert!(matches!(solve_tilt(&g, 0.0), Err(Error::NonpositiveTilt { .. })));
        let b = Distribution::Bernoulli { p: 0.5 };
        assert!(matches!(solve_tilt(&b, 1.0), Err(Error::Infeasible { .. })));
        let c = Distribution::Cauchy { location: 0.0, scale: 1.0 };
        assert!(matches!(solve_tilt(&c, 1.0), Err(Error::NoMgf(_))));
    }

    #[test]
    fn nonlattice_formula_and_convergence() {
        let s = solve_tilt(&Distribution::gaussian(0.0, 1.0), 0.5).unwrap();
        let a100 = petrov_asymptote(&s, 100, PetrovVariant::Nonlattice).unwrap();
        let direct = (-12.5f64).exp() / (0.5 * (200.0 * PI).sqrt());
        assert_relative_eq!(a100, direct, max_relative = 1e-12);
        let ratio = |n: usize| petrov_asymptote(&s, n, PetrovVariant::Nonlattice).unwrap() / normal_sf(0.5 * (n as f64).sqrt());
        assert!((ratio(100) - 1.0).abs() < 0.1);
        assert!((ratio(400) - 1.0).abs() < 0.03);
        let mut prev = ratio(25);
        for n in [100, 400, 1600] {
            let r = ratio(n);
            assert!((r - 1.0).abs() < (prev - 1.0).abs());
            prev = r;
        }
        assert!(petrov_asymptote(&s, 10, PetrovVariant::LatticeGeq).is_err());
    }

    #[test]
    fn ratio_law() {
        let s = solve_tilt(&Distribution::Bernoulli { p: 0.3 }, 0.6).unwrap();
        for v in [PetrovVariant::LatticeGeq, PetrovVariant::LatticeStrict] {
            for n in [1, 10, 100] {
                let r = petrov_asymptote(&s, n + 1, v).unwrap() / petrov_asymptote(&s, n, v).unwrap();
                let nf = n as f64;
                assert_relative_eq!(r, s.rho * (nf / (nf + 1.0)).sqrt(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn verdicts() {
        let g = Distribution::gaussian(0.0, 1.0);
        assert_eq!(eventual_decrease_verdict(&g, 0.5).unwrap(), TailVerdict::EventuallyDecreasing);
        let b = Distribution::Bernoulli { p: 0.35 };
        assert_eq!(
            eventual_decrease_verdict(&b, 0.15).unwrap(),
            TailVerdict::AssumptionsViolated(Violation::NoAtomAtThreshold)
        );
        let c = Distribution::Cauchy { location: 0.0, scale: 1.0 };
        assert_eq!(
            eventual_decrease_verdict(&c, 1.0).unwrap(),
            TailVerdict::AssumptionsViolated(Violation::MgfNotEverywhereFinite)
        );
        assert_eq!(
            eventual_decrease_verdict(&b, 0.65).unwrap(),
            TailVerdict::AssumptionsViolated(Violation::ThresholdAtOrAboveSupport)
        );
        assert_eq!(Violation::NoAtomAtThreshold.code(), "3bis");
    }

    #[test]
    fn condorcet_sequence() {
        let s = bernoulli_sequence(0.35, 0.15, 201).unwrap();
        assert_relative_eq!(s.values[0], 0.35, max_relative = 1e-14);
        for (got, want) in s.values[1..4].iter().zip([0.5775, 0.28175, 0.43701875]) {
            assert_relative_eq!(*got, want, max_relative = 1e-13);
        }
        assert!(!s.increasing_steps().is_empty());
        let odd: Vec<f64> = s.values.iter().step_by(2).copied().collect();
        assert!(odd.windows(2).all(|w| w[1] < w[0]));
        // binomial sums against the convolution oracle
        let dp = lattice_tail_sequence(&Distribution::Bernoulli { p: 0.35 }, 0.5, 201, false).unwrap();
        for (a, b) in s.values.iter().zip(&dp.values) {
            assert_relative_eq!(*a, *b, max_relative = 1e-10);
        }
    }

    #[test]
    fn bernoulli_edge_cases() {
        let s = bernoulli_sequence(0.5, 0.5, 30).unwrap();
        for (i, v) in s.values.iter().enumerate() {
            assert_relative_eq!(*v, 0.5f64.powi(i as i32 + 1), max_relative = 1e-12);
        }
        assert_relative_eq!(bernoulli_sequence(0.9, 0.05, 1).unwrap().values[0], 0.9, max_relative = 1e-14);
    }

    #[test]
    fn mass_restored_instance() {
        let m = mass_restored_lattice(0.55, 0.1).unwrap();
        for w in m.masses {
            assert_relative_eq!(w, 1.0 / 3.0, max_relative = 1e-14);
        }
        assert_relative_eq!(m.effective_mean, 0.55, max_relative = 1e-14);
        assert_eq!(m.verdict, TailVerdict::EventuallyDecreasing);
        let l = m.distribution.lattice_data().unwrap();
        assert_relative_eq!(l.span, 0.05, max_relative = 1e-14);
        assert!(mass_restored_lattice(0.3, 0.1).is_err());
    }

    #[test]
    fn mass_restored_asymptote_matches_dp() {
        let m = mass_restored_lattice(0.55, 0.1).unwrap();
        let sol = solve_tilt(&m.distribution, m.atom).unwrap();
        assert_relative_eq!(sol.h, 0.619_039_208_406_223, max_relative = 1e-9);
        assert_relative_eq!(sol.rate, 0.030_233_803_044_065_3, max_relative = 1e-9);
        assert_relative_eq!(sol.sigma_h, 0.386_443_948_951_05, max_relative = 1e-9);
        for strict in [false, true] {
            let seq = lattice_tail_sequence(&m.distribution, m.atom, 800, strict).unwrap();
            let v = if strict { PetrovVariant::LatticeStrict } else { PetrovVariant::LatticeGeq };
            for n in [400, 800] {
                let r = petrov_asymptote(&sol, n, v).unwrap() / seq.values[n - 1];
                assert!((r - 1.0).abs() < 0.05, "n={n} strict={strict} ratio {r}");
            }
            assert!(seq.strict_decrease_onset().is_some());
        }
    }

    #[test]
    fn stable_sequences() {
        let l = stable_counterexample(StableFamily::Levy, 1.0, 10).unwrap();
        assert_relative_eq!(l.values[0], 0.682_689_492_137_085_9, epsilon = 1e-12);
        assert_relative_eq!(l.values[3], 0.954_499_736_103_641_6, epsilon = 1e-12);
        assert!(l.values.windows(2).all(|w| w[1] > w[0]));
        let c = stable_counterexample(StableFamily::Cauchy, 1.0, 10).unwrap();
        assert!(c.values.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let g = stable_counterexample(StableFamily::Gaussian, 1.0, 10).unwrap();
        assert!(g.values.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(g.strict_decrease_onset(), Some(1));
    }

    #[test]
    fn multivariate_identity() {
        let (ld, a50) = gaussian_multivariate_ld(&[0.0, 0.0], &DMatrix::identity(2, 2), &[1.0, 1.0], 50).unwrap();
        assert_relative_eq!(ld.tau[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(ld.tau[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(ld.rate, 1.0, epsilon = 1e-14);
        let exact = normal_sf(50f64.sqrt()).powi(2);
        assert!((a50 / exact - 1.0).abs() < 0.1);
        assert!((ld.asymptote(200) / normal_sf(200f64.sqrt()).powi(2) - 1.0).abs() < 0.04);
        assert!(ld.cone.positivity_condition);
    }

    #[test]
    fn multivariate_negative_tilt() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        match gaussian_multivariate_ld(&[0.0, 0.0], &s, &[1.0, 0.05], 10) {
            Err(Error::TiltOutsideOrthant { index, value }) => {
                assert_eq!(index, 1);
                assert_relative_eq!(value, (0.05 - 0.9) / 0.19, max_relative = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cone_examples() {
        let c = cone_condition(&[1.0, 3.0], 2.0, 2.0).unwrap();
        assert!(c.positivity_condition);
        let e = [std::f64::consts::FRAC_1_SQRT_2; 2];
        assert!(cone_condition(&e, 0.9, 1.0).unwrap().positivity_condition);
        let e8 = [1.0; 8];
        assert!(!cone_condition(&e8, 0.5, 1.0).unwrap().positivity_condition);
        assert_relative_eq!((2.0 * (1.0 - 0.5f64.sqrt())).sqrt(), 0.7654, epsilon = 1e-4);
    }

    #[test]
    fn rational_lattice_placement() {
        assert_eq!(rational_approx(0.65), Some((13, 20)));
        assert_eq!(rational_approx(0.5), Some((1, 2)));
    }
}
