//! Exact curves: closed forms, Gauss–Hermite / Cauchy quadrature, lattice
//! enumeration, and permutation enumeration of reordered lists.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::distributions::{Distribution, SumSequence};
use crate::ensembles::{EnsembleSource, EnsembleSpec, Structure};
use crate::error::{invalid, Error, Result};
use crate::losses::LossFunction;
use crate::quadrature::{cauchy_expectation, gaussian_expectation};
use crate::special::{cauchy_sf, levy_sf, normal_cdf, normal_sf};

use super::{CurveEntry, LossCurve, Method};

/// Largest list length for permutation enumeration (6! = 720).
pub const MAX_ENUMERATED: usize = 6;

/// Σ wₖ² of the member weights in ȳ_K.
fn weight_square_sum(structure: Structure, k: usize) -> f64 {
    match (structure, k) {
        (Structure::DuplicateThird, 3) => 5.0 / 9.0,
        _ => 1.0 / k as f64,
    }
}

/// Exact E[L(ȳ_K)] for K = 1..=kmax, when an exact regime applies.
pub fn exact_curve(loss: &LossFunction, spec: &EnsembleSpec, kmax: usize) -> Result<LossCurve> {
    loss.validate()?;
    let sized = EnsembleSpec {
        size: kmax,
        ..spec.clone()
    };
    sized.validate()?;
    let entries = match &sized.source {
        EnsembleSource::Distribution(d) => distribution_curve(loss, d, sized.structure, kmax)?,
        EnsembleSource::Fixed(list) => list_curve(loss, list, kmax)?,
    };
    Ok(LossCurve {
        entries,
        loss: loss.name().to_string(),
        spec: Some(sized),
        seed: None,
        replications: None,
    })
}

fn constant(kmax: usize, value: f64, method: Method) -> Vec<CurveEntry> {
    (1..=kmax).map(|k| CurveEntry::exact(k, value, method)).collect()
}

fn distribution_curve(
    loss: &LossFunction,
    d: &Distribution,
    structure: Structure,
    kmax: usize,
) -> Result<Vec<CurveEntry>> {
    if let Distribution::PointMass { value } = d {
        return Ok(constant(kmax, loss.eval(&value.to_vec())?, Method::ExactClosedForm));
    }
    if let LossFunction::Squared { y } = loss {
        if let (Some(mean), Some(tr)) = (d.mean(), d.total_variance()) {
            let y = y.as_slice();
            if mean.len() != y.len() {
                return Err(Error::Dimension {
                    expected: y.len(),
                    got: mean.len(),
                });
            }
            let bias: f64 = mean.iter().zip(y).map(|(m, t)| (m - t) * (m - t)).sum();
            return Ok((1..=kmax)
                .map(|k| {
                    let v = bias + tr * weight_square_sum(structure, k);
                    CurveEntry::exact(k, v, Method::ExactClosedForm)
                })
                .collect());
        }
    }
    if d.dim() != 1 {
        return Err(Error::UnsupportedRegime(format!(
            "{} over a {}-dimensional {} base",
            loss.name(),
            d.dim(),
            d.name()
        )));
    }
    if let Some((mean, cov)) = d.as_gaussian() {
        let (mu, var) = (mean[0], cov[(0, 0)]);
        return (1..=kmax)
            .map(|k| {
                let sd = (var * weight_square_sum(structure, k)).sqrt();
                gaussian_point(loss, k, mu, sd)
            })
            .collect();
    }
    if structure != Structure::Iid {
        return Err(Error::UnsupportedRegime(format!(
            "{structure:?} ensembles of a {} base",
            d.name()
        )));
    }
    if let Some(lattice) = d.lattice_data() {
        let mut seq = SumSequence::new(&lattice)?;
        let mut out = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            let law = seq.next_sum()?;
            let kf = k as f64;
            let mut terms = Vec::with_capacity(law.masses.len());
            for (j, &m) in law.masses.iter().enumerate() {
                if m > 0.0 {
                    let x = law.point(j) / kf;
                    terms.push(m * loss.eval(&[x])?);
                }
            }
            out.push(CurveEntry::exact(k, neumaier(terms), Method::ExactEnumeration));
        }
        return Ok(out);
    }
    match d {
        Distribution::Cauchy { location, scale } => {
            // the mean of i.i.d. Cauchy variables has the same law
            let v = match binary_zero_one(loss) {
                Some(class) => {
                    let up = cauchy_sf(0.5, *location, *scale);
                    if class == 1 {
                        up
                    } else {
                        1.0 - up
                    }
                }
                None => {
                    let failure = std::cell::Cell::new(None);
                    let q = cauchy_expectation(
                        |x| {
                            loss.eval(&[x]).unwrap_or_else(|e| {
                                failure.set(Some(e));
                                0.0
                            })
                        },
                        *location,
                        *scale,
                    )?;
                    if let Some(e) = failure.take() {
                        return Err(e);
                    }
                    q.value
                }
            };
            Ok(constant(kmax, v, Method::Quadrature))
        }
        Distribution::Levy { scale } => match binary_zero_one(loss) {
            Some(class) => Ok((1..=kmax)
                .map(|k| {
                    let up = levy_sf(0.5, k as f64 * scale);
                    let v = if class == 1 { up } else { 1.0 - up };
                    CurveEntry::exact(k, v, Method::ExactClosedForm)
                })
                .collect()),
            None => Err(Error::UnsupportedRegime(format!("{} over a levy base", loss.name()))),
        },
        _ => Err(Error::UnsupportedRegime(format!(
            "{} over a {} base",
            loss.name(),
            d.name()
        ))),
    }
}

/// True class of a two-class zero-one loss on scalar predictions.
fn binary_zero_one(loss: &LossFunction) -> Option<usize> {
    match loss {
        LossFunction::ZeroOne { class, classes: 2 } => Some(*class),
        _ => None,
    }
}

fn gaussian_point(loss: &LossFunction, k: usize, mu: f64, sd: f64) -> Result<CurveEntry> {
    if sd == 0.0 {
        return Ok(CurveEntry::exact(k, loss.eval(&[mu])?, Method::ExactClosedForm));
    }
    if let Some(class) = binary_zero_one(loss) {
        // class 1 errs iff ȳ ≥ ½, class 2 iff ȳ ≤ ½
        let z = (0.5 - mu) / sd;
        let v = if class == 1 { normal_sf(z) } else { normal_cdf(z) };
        return Ok(CurveEntry::exact(k, v, Method::ExactClosedForm));
    }
    let failure = std::cell::Cell::new(None);
    let q = gaussian_expectation(
        |x| {
            loss.eval(&[x]).unwrap_or_else(|e| {
                failure.set(Some(e));
                0.0
            })
        },
        mu,
        sd,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(CurveEntry::exact(k, q.value, Method::Quadrature))
}

fn list_curve(loss: &LossFunction, list: &[Vec<f64>], kmax: usize) -> Result<Vec<CurveEntry>> {
    let n = list.len();
    if let LossFunction::Squared { y } = loss {
        if n >= 2 {
            return Ok(squared_list_closed_form(y.as_slice(), list, kmax));
        }
    }
    if n <= MAX_ENUMERATED {
        return Ok(enumerate_permutations(loss, list, kmax)?.entries);
    }
    Err(Error::UnsupportedRegime(format!(
        "reordered lists of length {n} (> {MAX_ENUMERATED}) under {}",
        loss.name()
    )))
}

/// ‖μ − y‖² + tr(Σ)(1 + (K−1)ρ)/K with μ, Σ the list's mean and population
/// covariance and ρ = −1/(n−1) for a uniformly reordered list.
fn squared_list_closed_form(y: &[f64], list: &[Vec<f64>], kmax: usize) -> Vec<CurveEntry> {
    let n = list.len() as f64;
    let d = y.len();
    let mean: Vec<f64> = (0..d).map(|i| list.iter().map(|x| x[i]).sum::<f64>() / n).collect();
    let bias: f64 = mean.iter().zip(y).map(|(m, t)| (m - t) * (m - t)).sum();
    let tr: f64 = list
        .iter()
        .map(|x| x.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
        .sum::<f64>()
        / n;
    let rho = -1.0 / (n - 1.0);
    (1..=kmax)
        .map(|k| {
            let kf = k as f64;
            let v = bias + tr * (1.0 + (kf - 1.0) * rho) / kf;
            CurveEntry::exact(k, v, Method::ExactClosedForm)
        })
        .collect()
}

fn neumaier(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

/// The loss in exact rational arithmetic, for losses built from field
/// operations, absolute values and comparisons.
fn rational_loss(loss: &LossFunction, m: &[BigRational]) -> Option<BigRational> {
    let sq = |r: BigRational| &r * &r;
    let two = || BigRational::from_integer(BigInt::from(2));
    Some(match loss {
        LossFunction::Squared { y } => m
            .iter()
            .zip(y.as_slice())
            .map(|(a, &t)| sq(a - rational(t)))
            .fold(BigRational::zero(), |acc, v| acc + v),
        LossFunction::Absolute { y } => m
            .iter()
            .zip(y.as_slice())
            .map(|(a, &t)| (a - rational(t)).abs())
            .fold(BigRational::zero(), |acc, v| acc + v),
        LossFunction::Huber { y, delta } => {
            let dl = rational(*delta);
            m.iter()
                .zip(y.as_slice())
                .map(|(a, &t)| {
                    let r = (a - rational(t)).abs();
                    if r <= dl {
                        sq(r) / two()
                    } else {
                        &dl * (r - &dl / two())
                    }
                })
                .fold(BigRational::zero(), |acc, v| acc + v)
        }
        LossFunction::Brier { class, .. } => m
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let e = if i + 1 == *class { 1.0 } else { 0.0 };
                sq(a - rational(e))
            })
            .fold(BigRational::zero(), |acc, v| acc + v),
        LossFunction::Polynomial { coeffs } => coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, &a| acc * &m[0] + rational(a)),
        LossFunction::ZeroOne { class, .. } => {
            let scores: Vec<BigRational> = if m.len() == 1 {
                vec![BigRational::from_integer(1.into()) - &m[0], m[0].clone()]
            } else {
                m.to_vec()
            };
            let own = &scores[class - 1];
            let beaten = scores
                .iter()
                .enumerate()
                .all(|(i, s)| i == class - 1 || own > s);
            BigRational::from_integer(BigInt::from(u8::from(!beaten)))
        }
        _ => return None,
    })
}

/// Averages L over the prefix means of all n! orderings of `list`.
///
/// Walks every permutation (Heap's algorithm) and tallies how often each
/// member subset appears as a K-prefix; the loss is evaluated once per
/// subset. Losses expressible with field operations are evaluated and
/// summed in exact rational arithmetic, so the returned values are the
/// exact expectations rounded once; other losses are summed with
/// compensated summation.
pub fn enumerate_permutations(loss: &LossFunction, list: &[Vec<f64>], kmax: usize) -> Result<LossCurve> {
    let n = list.len();
    if n == 0 {
        return Err(Error::Empty("prediction list"));
    }
    if n > MAX_ENUMERATED {
        return Err(Error::UnsupportedRegime(format!(
            "permutation enumeration of {n} members"
        )));
    }
    if kmax == 0 || kmax > n {
        return Err(invalid(format!("kmax must be in 1..={n}")));
    }
    let d = list[0].len();
    if list.iter().any(|x| x.len() != d) {
        return Err(invalid("list members must share one dimension"));
    }
    let counts = prefix_subset_counts(n, kmax);
    let exact_list: Vec<Vec<BigRational>> =
        list.iter().map(|x| x.iter().map(|&v| rational(v)).collect()).collect();
    let use_rational = rational_loss(loss, &exact_list[0]).is_some();
    let mut entries = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let kf = k as f64;
        let mut exact_total = BigRational::zero();
        let mut float_terms = Vec::new();
        let mut weight_total: u64 = 0;
        for (mask, &count) in counts.iter().enumerate() {
            if count == 0 || mask.count_ones() as usize != k {
                continue;
            }
            weight_total += count;
            let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let float_mean: Vec<f64> = (0..d)
                .map(|c| members.iter().map(|&i| list[i][c]).sum::<f64>() / kf)
                .collect();
            // domain checks (simplex, finiteness) on the floating mean
            let lf = loss.eval(&float_mean)?;
            if use_rational {
                let kq = BigRational::from_integer(BigInt::from(k));
                let mean: Vec<BigRational> = (0..d)
                    .map(|c| {
                        members
                            .iter()
                            .fold(BigRational::zero(), |acc, &i| acc + &exact_list[i][c])
                            / &kq
                    })
                    .collect();
                let l = rational_loss(loss, &mean).expect("rational loss");
                exact_total += l * BigRational::from_integer(BigInt::from(count));
            } else {
                float_terms.push(lf * count as f64);
            }
        }
        let value = if use_rational {
            (exact_total / BigRational::from_integer(BigInt::from(weight_total)))
                .to_f64()
                .expect("finite")
        } else {
            neumaier(float_terms) / weight_total as f64
        };
        entries.push(CurveEntry::exact(k, value, Method::ExactEnumeration));
    }
    Ok(LossCurve {
        entries,
        loss: loss.name().to_string(),
        spec: Some(EnsembleSpec {
            size: kmax,
            ..EnsembleSpec::reordered(list.to_vec())
        }),
        seed: None,
        replications: None,
    })
}

/// For every subset bitmask, the number of permutations of 0..n whose
/// first |mask| entries form that subset (restricted to |mask| ≤ kmax).
fn prefix_subset_counts(n: usize, kmax: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut tally = |p: &[usize]| {
        let mut mask = 0usize;
        for &i in &p[..kmax] {
            mask |= 1 << i;
            counts[mask] += 1;
        }
    };
    // Heap's algorithm, iterative form
    let mut c = vec![0usize; n];
    tally(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            tally(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Target;
    use approx::assert_relative_eq;

    fn sq() -> LossFunction {
        LossFunction::Squared { y: Target::Scalar(0.0) }
    }

    #[test]
    fn squared_iid_is_inverse_k() {
        let spec = EnsembleSpec::iid(Distribution::gaussian(0.0, 1.0), 1);
        let c = exact_curve(&sq(), &spec, 100).unwrap();
        for e in &c.entries {
            assert_relative_eq!(e.value, 1.0 / e.k as f64, max_relative = 1e-15);
            assert_eq!(e.method, Method::ExactClosedForm);
        }
    }

    #[test]
    fn duplicate_counterexample() {
        let spec = EnsembleSpec::duplicate_third(Distribution::gaussian(0.0, 1.0));
        let c = exact_curve(&sq(), &spec, 3).unwrap();
        assert_relative_eq!(c.entries[1].value, 0.5, max_relative = 1e-15);
        assert_relative_eq!(c.entries[2].value, 5.0 / 9.0, max_relative = 1e-15);
    }

    #[test]
    fn condorcet_votes_by_enumeration() {
        let zo = LossFunction::ZeroOne { class: 1, classes: 2 };
        let spec = EnsembleSpec::iid(Distribution::Bernoulli { p: 0.35 }, 1);
        let c = exact_curve(&zo, &spec, 4).unwrap();
        let want = [0.35, 0.5775, 0.28175, 0.43701875];
        for (e, w) in c.entries.iter().zip(want) {
            assert_relative_eq!(e.value, w, max_relative = 1e-13);
        }
    }

    #[test]
    fn prefix_counts_are_uniform_over_subsets() {
        let counts = prefix_subset_counts(5, 5);
        for (mask, &c) in counts.iter().enumerate().skip(1) {
            let k = mask.count_ones() as u64;
            let fact = |m: u64| (1..=m).product::<u64>();
            assert_eq!(c, fact(k) * fact(5 - k), "mask {mask:b}");
        }
    }

    #[test]
    fn exchangeable_squared_formula_matches_enumeration() {
        let list = vec![vec![0.3, -1.0], vec![2.0, 0.5], vec![-0.7, 0.25], vec![1.1, 1.0], vec![0.0, -2.0]];
        let loss = LossFunction::Squared { y: Target::Vector(vec![0.5, 0.0]) };
        let closed = exact_curve(&loss, &EnsembleSpec::reordered(list.clone()), 5).unwrap();
        let enumerated = enumerate_permutations(&loss, &list, 5).unwrap();
        for (a, b) in closed.entries.iter().zip(&enumerated.entries) {
            assert_relative_eq!(a.value, b.value, max_relative = 1e-13);
        }
    }

    #[test]
    fn gaussian_quadrature_regime() {
        let loss = LossFunction::Sigmoid { label: 0, scale: 0.1 };
        let spec = EnsembleSpec::iid(Distribution::gaussian(0.3, 0.01), 1);
        let c = exact_curve(&loss, &spec, 200).unwrap();
        assert_relative_eq!(c.entries[9].value, 0.123_172_989_311_211_06, max_relative = 1e-9);
        assert_relative_eq!(c.entries[199].value, 0.119_402_763_048_158_68, max_relative = 1e-9);
        assert!(c.entries.iter().all(|e| e.method == Method::Quadrature));
    }

    #[test]
    fn cauchy_curves_are_flat() {
        let spec = EnsembleSpec::iid(Distribution::Cauchy { location: 0.0, scale: 1.0 }, 1);
        let zo = LossFunction::ZeroOne { class: 2, classes: 2 };
        let c = exact_curve(&zo, &spec, 5).unwrap();
        for e in &c.entries {
            assert_relative_eq!(e.value, 0.5 + (0.5f64).atan() / std::f64::consts::PI, epsilon = 1e-15);
        }
        let sig = LossFunction::Sigmoid { label: 0, scale: 0.5 };
        let c = exact_curve(&sig, &spec, 4).unwrap();
        let v = c.values();
        assert!(v.iter().all(|&x| x == v[0]));
    }

    #[test]
    fn unsupported_regimes() {
        let spec = EnsembleSpec::iid(Distribution::Dirichlet { alpha: vec![1.0, 1.0] }, 1);
        let ce = LossFunction::CrossEntropy { class: 1, classes: 2 };
        assert!(matches!(exact_curve(&ce, &spec, 3), Err(Error::UnsupportedRegime(_))));
        let long: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        let abs = LossFunction::Absolute { y: Target::Scalar(0.0) };
        assert!(matches!(
            exact_curve(&abs, &EnsembleSpec::reordered(long), 7),
            Err(Error::UnsupportedRegime(_))
        ));
    }
}
