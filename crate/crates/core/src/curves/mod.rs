//! Expected-loss curves K ↦ E[L(ȳ_K)]: Monte Carlo and exact computation,
//! the strong-convexity bound check and monotonicity classification.

mod exact;
mod mc;

use serde::{Deserialize, Serialize};

use crate::ensembles::EnsembleSpec;
use crate::error::{invalid, Error, Result};
use crate::losses::LossFunction;
use crate::quadrature::QUAD_TOL;

pub use exact::{enumerate_permutations, exact_curve};
pub use mc::{estimate_curve_mc, CHUNK};

/// Significance threshold, in paired standard errors, for MC steps.
pub const Z_STEP: f64 = 3.0;
/// Relative rounding allowance for exact values.
pub const EXACT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    ExactClosedForm,
    ExactEnumeration,
    Quadrature,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::ExactClosedForm => "exact_closed_form",
            Method::ExactEnumeration => "exact_enumeration",
            Method::Quadrature => "quadrature",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Method::Mc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub k: usize,
    pub value: f64,
    pub std_err: f64,
    pub method: Method,
    /// Paired standard error of value(k) − value(previous k), MC only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_std_err: Option<f64>,
}

impl CurveEntry {
    pub fn exact(k: usize, value: f64, method: Method) -> Self {
        CurveEntry {
            k,
            value,
            std_err: 0.0,
            method,
            step_std_err: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub entries: Vec<CurveEntry>,
    pub loss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<EnsembleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
}

impl LossCurve {
    /// An exact curve from consecutive values starting at `first_k`.
    pub fn from_values(label: &str, first_k: usize, values: &[f64], method: Method) -> Self {
        LossCurve {
            entries: values
                .iter()
                .enumerate()
                .map(|(i, &v)| CurveEntry::exact(first_k + i, v, method))
                .collect(),
            loss: label.to_string(),
            spec: None,
            seed: None,
            replications: None,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn get(&self, k: usize) -> Option<&CurveEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// CSV with header `K,value,std_err,method`, floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("K,value,std_err,method\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{}\n",
                e.k,
                fmt_g17(e.value),
                fmt_g17(e.std_err),
                e.method.as_str()
            ));
        }
        s
    }
}

/// `%.17g` formatting: 17 significant digits, trailing zeros trimmed,
/// exponent form outside [1e-5, 1e17).
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let mant = trim_zeros(mant.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: usize,
    /// value(K)
    pub lhs: f64,
    /// value(K−1) − μ(1−ρ)tr(Σ)/(K(K−1))
    pub rhs: f64,
    pub satisfied: bool,
    pub slack: f64,
}

/// Checks value(K) ≤ value(K−1) − μ(1−ρ)tr(Σ)/(K(K−1)) at every K ≥ 2
/// present with its predecessor. Exact entries allow a 1e-12 relative
/// rounding margin, MC entries `Z_STEP` paired standard errors.
pub fn strong_bound_check(curve: &LossCurve, mu: f64, tr_sigma: f64, rho: f64) -> Result<Vec<BoundRow>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(format!("modulus must be nonnegative, got {mu}")));
    }
    if !(tr_sigma >= 0.0 && tr_sigma.is_finite()) {
        return Err(invalid("trace of the covariance must be finite and nonnegative"));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    let mut rows = Vec::new();
    for w in curve.entries.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        if cur.k != prev.k + 1 || cur.k < 2 {
            continue;
        }
        let k = cur.k as f64;
        let rhs = prev.value - mu * (1.0 - rho) * tr_sigma / (k * (k - 1.0));
        let slack = rhs - cur.value;
        let allowance = if cur.method.is_exact() && prev.method.is_exact() {
            let quad = if cur.method == Method::Quadrature { 2.0 * QUAD_TOL } else { 0.0 };
            EXACT_REL_TOL * rhs.abs().max(cur.value.abs()).max(1.0) + quad
        } else {
            Z_STEP * step_error(prev, cur)
        };
        rows.push(BoundRow {
            k: cur.k,
            lhs: cur.value,
            rhs,
            satisfied: slack >= -allowance,
            slack,
        });
    }
    Ok(rows)
}

fn step_error(prev: &CurveEntry, cur: &CurveEntry) -> f64 {
    cur.step_std_err
        .unwrap_or_else(|| (cur.std_err.powi(2) + prev.std_err.powi(2)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Decreasing,
    Increasing,
    Flat,
    NonMonotone,
    EventuallyDecreasing { k0: usize },
    EventuallyIncreasing { k0: usize },
    Undetermined,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Decreasing => "decreasing",
            Verdict::Increasing => "increasing",
            Verdict::Flat => "flat",
            Verdict::NonMonotone => "non_monotone",
            Verdict::EventuallyDecreasing { .. } => "eventually_decreasing",
            Verdict::EventuallyIncreasing { .. } => "eventually_increasing",
            Verdict::Undetermined => "undetermined",
        }
    }

    /// Direction of the monotone tail: −1 decreasing, +1 increasing, 0 flat.
    pub fn direction(&self) -> Option<i8> {
        match self {
            Verdict::Decreasing | Verdict::EventuallyDecreasing { .. } => Some(-1),
            Verdict::Increasing | Verdict::EventuallyIncreasing { .. } => Some(1),
            Verdict::Flat => Some(0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// The later K of the pair.
    pub k: usize,
    pub diff: f64,
    pub std_err: f64,
    pub tolerance: f64,
    /// −1, 0 or +1 after applying the tolerance.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    #[serde(flatten)]
    pub verdict: Verdict,
    /// First K of the monotone tail, when the verdict has one.
    pub k0: Option<usize>,
    pub steps: Vec<Step>,
}

fn step_tolerance(prev: &CurveEntry, cur: &CurveEntry) -> f64 {
    if prev.method.is_exact() && cur.method.is_exact() {
        let quad = if prev.method == Method::Quadrature || cur.method == Method::Quadrature {
            2.0 * QUAD_TOL
        } else {
            0.0
        };
        EXACT_REL_TOL * prev.value.abs().max(cur.value.abs()) + quad
    } else {
        Z_STEP * step_error(prev, cur)
    }
}

/// Classifies a curve from the signs of its consecutive differences.
///
/// An eventual verdict needs a monotone tail of at least two steps that
/// covers at least a quarter of the steps; shorter tails are reported as
/// non-monotone.
pub fn monotonicity_report(curve: &LossCurve) -> MonotonicityReport {
    let steps: Vec<Step> = curve
        .entries
        .windows(2)
        .map(|w| {
            let (prev, cur) = (&w[0], &w[1]);
            let diff = cur.value - prev.value;
            let tolerance = step_tolerance(prev, cur);
            let sign = if diff > tolerance {
                1
            } else if diff < -tolerance {
                -1
            } else {
                0
            };
            Step {
                k: cur.k,
                diff,
                std_err: if prev.method.is_exact() && cur.method.is_exact() {
                    0.0
                } else {
                    step_error(prev, cur)
                },
                tolerance,
                sign,
            }
        })
        .collect();
    let (verdict, k0) = classify(curve, &steps);
    MonotonicityReport { verdict, k0, steps }
}

fn classify(curve: &LossCurve, steps: &[Step]) -> (Verdict, Option<usize>) {
    if curve.entries.len() < 3 {
        return (Verdict::Undetermined, None);
    }
    let first_k = curve.entries[0].k;
    let ups = steps.iter().filter(|s| s.sign > 0).count();
    let downs = steps.iter().filter(|s| s.sign < 0).count();
    match (ups, downs) {
        (0, 0) => {
            let all_exact = curve.entries.iter().all(|e| e.method.is_exact() || e.std_err == 0.0);
            if all_exact {
                (Verdict::Flat, Some(first_k))
            } else {
                (Verdict::Undetermined, None)
            }
        }
        (0, _) => (Verdict::Decreasing, Some(first_k)),
        (_, 0) => (Verdict::Increasing, Some(first_k)),
        _ => {
            let last = steps.iter().rev().find(|s| s.sign != 0).expect("nonzero step").sign;
            let cut = steps.iter().rposition(|s| s.sign == -last).expect("opposite step");
            let tail = steps.len() - cut - 1;
            // the tail starts at the later entry of the last opposite step
            let k0 = steps[cut].k;
            if tail >= 2 && 4 * tail >= steps.len() {
                let v = if last < 0 {
                    Verdict::EventuallyDecreasing { k0 }
                } else {
                    Verdict::EventuallyIncreasing { k0 }
                };
                (v, Some(k0))
            } else {
                (Verdict::NonMonotone, None)
            }
        }
    }
}

/// L(mean) against the leave-one-out means: returns
/// (1/K)·Σⱼ L(mean without j) − L(mean), nonnegative for convex losses.
pub fn leave_one_out_gap(loss: &LossFunction, list: &[Vec<f64>]) -> Result<f64> {
    let k = list.len();
    if k < 2 {
        return Err(invalid("leave-one-out needs at least two members"));
    }
    let d = list[0].len();
    let total: Vec<f64> = (0..d).map(|i| list.iter().map(|x| x[i]).sum()).collect();
    let full: Vec<f64> = total.iter().map(|s| s / k as f64).collect();
    let mut loo = 0.0;
    for x in list {
        let m: Vec<f64> = (0..d).map(|i| (total[i] - x[i]) / (k - 1) as f64).collect();
        loo += loss.eval(&m)?;
    }
    Ok(loo / k as f64 - loss.eval(&full)?)
}

/// (L(mean), average member loss, worst member loss) for one list.
pub fn warm_up(loss: &LossFunction, list: &[Vec<f64>]) -> Result<(f64, f64, f64)> {
    let means = crate::ensembles::prefix_means(list)?;
    let l_mean = loss.eval(means.last().expect("nonempty"))?;
    let member: Vec<f64> = list.iter().map(|x| loss.eval(x)).collect::<Result<_>>()?;
    let avg = member.iter().sum::<f64>() / member.len() as f64;
    let worst = member.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((l_mean, avg, worst))
}

pub(crate) fn replicate_error(replicate: u64, e: Error) -> Error {
    Error::Replicate {
        replicate,
        source: Box::new(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(fmt_g17(0.5), "0.5");
        assert_eq!(fmt_g17(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(2.0), "2");
        assert_eq!(fmt_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(-2.5e20), "-2.5e+20");
        for v in [0.1, 1.0 / 3.0, 2.974e-7, 12345.678, 7.6e-24] {
            assert_eq!(fmt_g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn inverse_k_is_decreasing_from_one() {
        let v: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
        let r = monotonicity_report(&LossCurve::from_values("t", 1, &v, Method::ExactClosedForm));
        assert_eq!(r.verdict, Verdict::Decreasing);
        assert_eq!(r.k0, Some(1));
    }

    #[test]
    fn alternating_is_non_monotone() {
        let v: Vec<f64> = (1..=30).map(|k| if k % 2 == 0 { 0.5 } else { 0.3 } + 1.0 / k as f64).collect();
        let r = monotonicity_report(&LossCurve::from_values("t", 1, &v, Method::ExactEnumeration));
        assert_eq!(r.verdict, Verdict::NonMonotone);
    }

    #[test]
    fn eventual_onset() {
        let v = [1.0, 2.0, 3.0, 2.5, 2.0, 1.5, 1.0, 0.5];
        let r = monotonicity_report(&LossCurve::from_values("t", 1, &v, Method::ExactEnumeration));
        assert_eq!(r.verdict, Verdict::EventuallyDecreasing { k0: 3 });
        assert_eq!(r.k0, Some(3));
    }

    #[test]
    fn flat_and_undetermined() {
        let r = monotonicity_report(&LossCurve::from_values("t", 1, &[0.25; 5], Method::ExactClosedForm));
        assert_eq!(r.verdict, Verdict::Flat);
        let mut noisy = LossCurve::from_values("t", 1, &[0.25, 0.2501, 0.2499], Method::Mc);
        for e in &mut noisy.entries {
            e.std_err = 0.01;
        }
        assert_eq!(monotonicity_report(&noisy).verdict, Verdict::Undetermined);
        let short = LossCurve::from_values("t", 1, &[1.0, 0.5], Method::ExactClosedForm);
        assert_eq!(monotonicity_report(&short).verdict, Verdict::Undetermined);
    }

    #[test]
    fn strong_bound_duplicated_ensemble() {
        // ρ = 1: rhs = value(K−1), a flat curve meets it with zero slack
        let c = LossCurve::from_values("t", 1, &[0.7; 6], Method::ExactClosedForm);
        for row in strong_bound_check(&c, 1.0, 2.0, 1.0).unwrap() {
            assert_eq!(row.slack, 0.0);
            assert!(row.satisfied);
        }
    }
}
