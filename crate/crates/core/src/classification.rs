//! Multiclass zero-one error through the margin vector
//! X = ŷ⁽ᵗ⁾·1 − ŷ⁽⁻ᵗ⁾ of the true class t against every other class.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curves::{estimate_curve_mc, replicate_error, CurveEntry, LossCurve, Method, CHUNK};
use crate::distributions::Distribution;
use crate::ensembles::{running_update, EnsembleSpec};
use crate::error::{invalid, Error, Result};
use crate::ldp::{eventual_decrease_verdict, multivariate_hypotheses, MultivariateHypotheses, TailVerdict};
use crate::losses::LossFunction;
use crate::rng::stream;
use crate::special::{bvn_upper, normal_cdf};

/// Margins of `scores` for a 1-based `true_class`, in the order of the
/// remaining classes.
pub fn margin_transform(scores: &[f64], true_class: usize) -> Result<Vec<f64>> {
    if scores.len() < 2 {
        return Err(invalid("margins need at least two class scores"));
    }
    if true_class == 0 || true_class > scores.len() {
        return Err(Error::ClassIndex {
            index: true_class,
            classes: scores.len(),
        });
    }
    let own = scores[true_class - 1];
    Ok(scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != true_class - 1)
        .map(|(_, &s)| own - s)
        .collect())
}

/// (n−1)×n matrix mapping scores to margins.
fn margin_matrix(n_classes: usize, true_class: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n_classes - 1, n_classes);
    let t = true_class - 1;
    for (row, j) in (0..n_classes).filter(|&j| j != t).enumerate() {
        m[(row, t)] = 1.0;
        m[(row, j)] = -1.0;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginModel {
    pub n_classes: usize,
    /// Law of one member's score vector.
    pub score_distribution: Distribution,
    /// 1-based.
    #[serde(default = "first_class")]
    pub true_class: usize,
}

fn first_class() -> usize {
    1
}

impl MarginModel {
    pub fn new(score_distribution: Distribution, true_class: usize) -> Result<Self> {
        let m = MarginModel {
            n_classes: score_distribution.dim(),
            score_distribution,
            true_class,
        };
        m.validate()?;
        Ok(m)
    }

    /// Two classes with scores (X/2, −X/2), X ~ N(mean, sd²), so the margin
    /// is X itself.
    pub fn binary_gaussian(margin_mean: f64, margin_sd: f64) -> Result<Self> {
        Self::new(
            Distribution::Affine {
                base: Box::new(Distribution::gaussian(margin_mean, margin_sd * margin_sd)),
                matrix: vec![vec![0.5], vec![-0.5]],
                shift: vec![0.0, 0.0],
            },
            1,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(invalid("margin models need at least two classes"));
        }
        if self.score_distribution.dim() != self.n_classes {
            return Err(Error::Dimension {
                expected: self.n_classes,
                got: self.score_distribution.dim(),
            });
        }
        if self.true_class == 0 || self.true_class > self.n_classes {
            return Err(Error::ClassIndex {
                index: self.true_class,
                classes: self.n_classes,
            });
        }
        self.score_distribution.validate()
    }

    fn matrix(&self) -> DMatrix<f64> {
        margin_matrix(self.n_classes, self.true_class)
    }

    /// Law of the margin vector; Gaussian score models give a Gaussian.
    pub fn margin_distribution(&self) -> Distribution {
        self.signed_margin_distribution(1.0)
    }

    /// Law of sign·X, kept Gaussian when the scores are.
    fn signed_margin_distribution(&self, sign: f64) -> Distribution {
        let m = self.matrix() * sign;
        if let Some((mu, s)) = self.score_distribution.as_gaussian() {
            let mean = &m * mu;
            let cov = &m * s * m.transpose();
            let k = mean.len();
            return Distribution::gaussian_mv(
                mean.iter().copied().collect(),
                (0..k).map(|i| cov.row(i).iter().copied().collect()).collect(),
            );
        }
        Distribution::Affine {
            base: Box::new(self.score_distribution.clone()),
            matrix: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            shift: vec![0.0; m.nrows()],
        }
    }

    /// ε = E[X].
    pub fn expected_margins(&self) -> Result<Vec<f64>> {
        let mu = self
            .score_distribution
            .mean()
            .ok_or_else(|| Error::Unsupported(format!("{} has no mean", self.score_distribution.name())))?;
        Ok((self.matrix() * DVector::from_vec(mu)).iter().copied().collect())
    }

    fn zero_one(&self) -> LossFunction {
        LossFunction::ZeroOne {
            class: self.true_class,
            classes: self.n_classes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ErrorMethod {
    Mc { reps: u64, seed: u64 },
    ExactGaussian,
}

/// value(K) = 1 − P(X̄_K > 0 coordinatewise); ties count as errors.
pub fn error_curve(model: &MarginModel, kmax: usize, method: ErrorMethod) -> Result<LossCurve> {
    model.validate()?;
    if kmax == 0 {
        return Err(invalid("kmax must be at least 1"));
    }
    match method {
        ErrorMethod::Mc { reps, seed } => estimate_curve_mc(
            &model.zero_one(),
            &EnsembleSpec::iid(model.score_distribution.clone(), kmax),
            kmax,
            reps,
            seed,
        ),
        ErrorMethod::ExactGaussian => exact_gaussian_error(model, kmax),
    }
}

fn exact_gaussian_error(model: &MarginModel, kmax: usize) -> Result<LossCurve> {
    let margins = model.margin_distribution();
    let (m, s) = margins.as_gaussian().ok_or_else(|| {
        Error::UnsupportedRegime(format!(
            "exact error curves need gaussian scores, not {}",
            model.score_distribution.name()
        ))
    })?;
    let entries = match m.len() {
        1 => (1..=kmax)
            .map(|k| {
                let sd = s[(0, 0)].sqrt();
                let v = if sd == 0.0 {
                    f64::from(u8::from(m[0] <= 0.0))
                } else {
                    normal_cdf(-(k as f64).sqrt() * m[0] / sd)
                };
                CurveEntry::exact(k, v, Method::ExactClosedForm)
            })
            .collect(),
        2 => {
            let (s1, s2) = (s[(0, 0)].sqrt(), s[(1, 1)].sqrt());
            if s1 == 0.0 || s2 == 0.0 {
                return Err(Error::UnsupportedRegime(
                    "degenerate margin variance in the three-class case".into(),
                ));
            }
            let r = (s[(0, 1)] / (s1 * s2)).clamp(-1.0, 1.0);
            (1..=kmax)
                .map(|k| {
                    let sk = (k as f64).sqrt();
                    let ok = bvn_upper(-sk * m[0] / s1, -sk * m[1] / s2, r);
                    CurveEntry::exact(k, 1.0 - ok, Method::Quadrature)
                })
                .collect()
        }
        d => {
            return Err(Error::UnsupportedRegime(format!(
                "exact error curves for {} classes",
                d + 1
            )))
        }
    };
    Ok(LossCurve {
        entries,
        loss: "zero_one".into(),
        spec: Some(EnsembleSpec::iid(model.score_distribution.clone(), kmax)),
        seed: None,
        replications: None,
    })
}

/// MC estimate of 1 − P(X̄_K > 0) from running means of sampled margins,
/// with the same streams as [`error_curve`]'s MC path.
pub fn margin_positivity_curve(model: &MarginModel, kmax: usize, reps: u64, seed: u64) -> Result<LossCurve> {
    model.validate()?;
    if reps < 100 || kmax == 0 {
        return Err(invalid("need kmax >= 1 and at least 100 replicates"));
    }
    let sampler = model.score_distribution.sampler()?;
    let n = model.n_classes;
    let mut ones = vec![0u64; kmax];
    let mut scores = vec![0.0; n];
    let mut mean = vec![0.0; n];
    for c in 0..reps.div_ceil(CHUNK) {
        let mut rng = stream(seed, c);
        for r in 0..CHUNK.min(reps - c * CHUNK) {
            mean.iter_mut().for_each(|m| *m = 0.0);
            for k in 0..kmax {
                sampler.draw(&mut rng, &mut scores);
                running_update(&mut mean, &scores, k + 1);
                let x = margin_transform(&mean, model.true_class)
                    .map_err(|e| replicate_error(c * CHUNK + r, e))?;
                if x.iter().any(|&v| !(v > 0.0)) {
                    ones[k] += 1;
                }
            }
        }
    }
    let rf = reps as f64;
    let entries = ones
        .iter()
        .enumerate()
        .map(|(k, &o)| {
            let p = o as f64 / rf;
            CurveEntry {
                k: k + 1,
                value: p,
                std_err: (p * (1.0 - p) / (rf - 1.0)).sqrt(),
                method: Method::Mc,
                step_std_err: None,
            }
        })
        .collect();
    Ok(LossCurve {
        entries,
        loss: "margin_positivity".into(),
        spec: Some(EnsembleSpec::iid(model.score_distribution.clone(), kmax)),
        seed: Some(seed),
        replications: Some(reps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// Every expected margin is positive.
    Correct,
    /// Every expected margin is negative.
    CompletelyIncorrect,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularity {
    /// Tail hypotheses for the scalar ∓X at threshold |ε|.
    Univariate { verdict: TailVerdict },
    /// Hypotheses of the multivariate theorem for ∓X.
    Multivariate { hypotheses: MultivariateHypotheses },
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub expected_margins: Vec<f64>,
    /// 0/1 loss of the asymptotic prediction E[ŷ].
    pub asymptotic_loss: u8,
    pub regularity: Regularity,
}

pub fn assumption_classify(model: &MarginModel) -> Result<AssumptionReport> {
    model.validate()?;
    let eps = model.expected_margins()?;
    let assumption = if eps.iter().all(|&e| e > 0.0) {
        Assumption::Correct
    } else if eps.iter().all(|&e| e < 0.0) {
        Assumption::CompletelyIncorrect
    } else {
        Assumption::Mixed
    };
    let mean_scores = model.score_distribution.mean().expect("expected margins exist");
    let asymptotic_loss = crate::losses::zero_one_error(&mean_scores, model.true_class)?;
    let regularity = match assumption {
        Assumption::Mixed => Regularity::NotApplicable,
        _ => {
            // error for correct models is P(−X̄ ≥ 0); accuracy for the
            // completely incorrect ones is P(X̄ > 0)
            let sign = if assumption == Assumption::Correct { -1.0 } else { 1.0 };
            let d = eps.len();
            let flipped = model.signed_margin_distribution(sign);
            let abs: Vec<f64> = eps.iter().map(|e| e.abs()).collect();
            if d == 1 {
                Regularity::Univariate {
                    verdict: eventual_decrease_verdict(&flipped, abs[0])?,
                }
            } else {
                Regularity::Multivariate {
                    hypotheses: multivariate_hypotheses(&flipped, &abs)?,
                }
            }
        }
    };
    Ok(AssumptionReport {
        assumption,
        expected_margins: eps,
        asymptotic_loss,
        regularity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::monotonicity_report;
    use crate::special::normal_cdf;
    use approx::assert_relative_eq;

    fn point_scores(s: &[f64]) -> MarginModel {
        MarginModel::new(Distribution::PointMass { value: crate::distributions::VectorSpec::Vector(s.to_vec()) }, 1).unwrap()
    }

    #[test]
    fn margin_examples() {
        assert_relative_eq!(margin_transform(&[0.7, 0.3], 1).unwrap()[0], 0.4, epsilon = 1e-15);
        let m = margin_transform(&[0.2, 0.5, 0.3], 1).unwrap();
        assert_relative_eq!(m[0], -0.3, epsilon = 1e-15);
        assert_relative_eq!(m[1], -0.1, epsilon = 1e-15);
        assert!(margin_transform(&[0.2, 0.5], 3).is_err());
        let p = margin_transform(&[0.2, 0.3, 0.5], 1).unwrap();
        assert_eq!(p, vec![m[1], m[0]]);
    }

    #[test]
    fn binary_exact_curves() {
        let up = MarginModel::binary_gaussian(0.5, 1.0).unwrap();
        let c = error_curve(&up, 20, ErrorMethod::ExactGaussian).unwrap();
        assert_relative_eq!(c.entries[0].value, 0.308_537_538_725_986_9, max_relative = 1e-12);
        assert_relative_eq!(c.entries[3].value, 0.158_655_253_931_457_05, max_relative = 1e-12);
        assert!(c.values().windows(2).all(|w| w[1] < w[0]));
        let down = MarginModel::binary_gaussian(-0.5, 1.0).unwrap();
        let c = error_curve(&down, 20, ErrorMethod::ExactGaussian).unwrap();
        for e in &c.entries {
            assert_relative_eq!(e.value, normal_cdf(0.5 * (e.k as f64).sqrt()), max_relative = 1e-12);
        }
        assert!(c.values().windows(2).all(|w| w[1] > w[0]));
        let flat = MarginModel::binary_gaussian(0.0, 1.0).unwrap();
        let c = error_curve(&flat, 5, ErrorMethod::ExactGaussian).unwrap();
        assert!(c.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn three_class_exact_matches_mc() {
        let scores = Distribution::gaussian_mv(
            vec![0.5, 0.3, 0.2],
            vec![vec![0.3, 0.0, 0.0], vec![0.0, 0.2, 0.05], vec![0.0, 0.05, 0.25]],
        );
        let model = MarginModel::new(scores, 1).unwrap();
        let exact = error_curve(&model, 12, ErrorMethod::ExactGaussian).unwrap();
        let mc = error_curve(&model, 12, ErrorMethod::Mc { reps: 100_000, seed: 7 }).unwrap();
        for (e, m) in exact.entries.iter().zip(&mc.entries) {
            assert!((e.value - m.value).abs() < 4.0 * m.std_err, "K={} {} {}", e.k, e.value, m.value);
        }
        let direct = margin_positivity_curve(&model, 12, 100_000, 7).unwrap();
        for (a, b) in direct.entries.iter().zip(&mc.entries) {
            assert!((a.value - b.value).abs() <= 3.0 * b.std_err);
        }
        assert_eq!(monotonicity_report(&exact).verdict.label(), "decreasing");
    }

    #[test]
    fn exact_needs_gaussian() {
        let model = MarginModel::new(Distribution::Dirichlet { alpha: vec![2.0, 1.0] }, 1).unwrap();
        assert!(matches!(
            error_curve(&model, 3, ErrorMethod::ExactGaussian),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn assumptions() {
        assert_eq!(assumption_classify(&point_scores(&[0.6, 0.4])).unwrap().assumption, Assumption::Correct);
        let r = assumption_classify(&point_scores(&[0.2, 0.5, 0.3])).unwrap();
        assert_eq!(r.assumption, Assumption::CompletelyIncorrect);
        assert_eq!(r.asymptotic_loss, 1);
        let r = assumption_classify(&point_scores(&[0.4, 0.5, 0.1])).unwrap();
        assert_eq!(r.assumption, Assumption::Mixed);
        assert_eq!(r.regularity, Regularity::NotApplicable);
    }

    #[test]
    fn regularity_report() {
        let r = assumption_classify(&MarginModel::binary_gaussian(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(r.asymptotic_loss, 0);
        assert_eq!(r.regularity, Regularity::Univariate { verdict: TailVerdict::EventuallyDecreasing });
        let scores = Distribution::gaussian_mv(vec![0.5, 0.3, 0.2], vec![vec![0.1, 0.0, 0.0], vec![0.0, 0.1, 0.0], vec![0.0, 0.0, 0.1]]);
        let r = assumption_classify(&MarginModel::new(scores, 1).unwrap()).unwrap();
        match r.regularity {
            Regularity::Multivariate { hypotheses } => {
                assert!(hypotheses.mgf_finite && hypotheses.covariance_positive_definite && hypotheses.tilt_positive);
            }
            other => panic!("{other:?}"),
        }
    }
}
