//! Loss catalog: values, derivative tensors up to order 4 and local
//! convexity classification.
//!
//! Multiclass losses take a 1-based `class` index (class 1 is the first
//! coordinate). Binary probabilistic losses take a scalar prediction `ŷ`
//! (the probability, or score, of label 1) and a `label` in {0, 1}.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, invalid, Error, Result};
use crate::jet::{Jet, Real};
use crate::tensor::Tensor;

/// Lower clamp applied to probabilities before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-12;
/// Tolerance for simplex membership.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Inflection point of the binary spherical score for label 0.
pub fn spherical_inflection() -> f64 {
    0.125 + 17f64.sqrt() / 8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prediction(pub Vec<f64>);

impl Prediction {
    pub fn scalar(x: f64) -> Self {
        Prediction(vec![x])
    }
}

impl Deref for Prediction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Prediction {
    fn from(v: Vec<f64>) -> Self {
        Prediction(v)
    }
}

/// Regression target: a scalar or a vector response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Default for Target {
    fn default() -> Self {
        Target::Scalar(0.0)
    }
}

impl Target {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Target::Scalar(y) => std::slice::from_ref(y),
            Target::Vector(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexityTag {
    /// Convex everywhere with strong-convexity modulus `mu` (0 if merely convex).
    GloballyConvex { mu: f64 },
    /// Convex, but only piecewise smooth (kinks).
    Piecewise,
    NonconvexSmooth,
    ZeroOne,
}

impl ConvexityTag {
    pub fn is_convex(&self) -> bool {
        matches!(self, ConvexityTag::GloballyConvex { .. } | ConvexityTag::Piecewise)
    }

    pub fn modulus(&self) -> f64 {
        match self {
            ConvexityTag::GloballyConvex { mu } => *mu,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalShape {
    LocallyConvex,
    LocallyConcave,
    Indefinite,
}

fn default_scale() -> f64 {
    0.1
}

fn default_cutoff() -> f64 {
    10.0
}

fn default_nu() -> f64 {
    1.0
}

/// Barron shape parameter; `-inf` (Welsch) is written as the string "-inf".
fn de_alpha<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Alpha {
        Num(f64),
        Text(String),
    }
    match Alpha::deserialize(d)? {
        Alpha::Num(x) => Ok(x),
        Alpha::Text(s) => match s.as_str() {
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => Err(serde::de::Error::custom(format!("invalid alpha `{other}`"))),
        },
    }
}

fn ser_alpha<S: Serializer>(a: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if a.is_infinite() && *a < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossFunction {
    /// ‖ŷ − y‖²
    Squared {
        #[serde(default)]
        y: Target,
    },
    /// Σ |ŷᵢ − yᵢ|
    Absolute {
        #[serde(default)]
        y: Target,
    },
    /// Σ huber_δ(ŷᵢ − yᵢ) with quadratic part r²/2.
    Huber {
        #[serde(default)]
        y: Target,
        delta: f64,
    },
    /// −log p_class on the simplex.
    CrossEntropy { class: usize, classes: usize },
    /// Σ (p_c − e_c)² on the simplex.
    Brier { class: usize, classes: usize },
    /// Cross-entropy of softmax(z) for logits z.
    SoftmaxCrossEntropy { class: usize, classes: usize },
    /// Logistic bump 1/(1+exp(−(ŷ−½)/s)) for label 0, mirrored for label 1.
    Sigmoid {
        label: u8,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// 1/(1+eᵛ)² with v = (½−ŷ)/s − ln 2 for label 0, mirrored for label 1.
    Savage {
        label: u8,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// (2·arctan(v) − 1)² with margin v = −ŷ for label 0, v = ŷ for label 1.
    Tangent { label: u8 },
    /// Binary spherical score, −p_label/‖(1−ŷ, ŷ)‖ with ŷ ∈ [0, 1].
    Spherical { label: u8 },
    /// Barron's general robust loss, scaled so the convexity cutoff of the
    /// residual is (ŷ − y)² = c when α < 1.
    Barron {
        #[serde(default)]
        y: Target,
        #[serde(deserialize_with = "de_alpha", serialize_with = "ser_alpha")]
        alpha: f64,
        #[serde(default = "default_cutoff")]
        c: f64,
    },
    /// Student-t negative log-likelihood ((ν+1)/2)·log(1 + r²/c), cutoff c.
    StudentT {
        #[serde(default)]
        y: Target,
        #[serde(default = "default_nu")]
        nu: f64,
        #[serde(default = "default_cutoff")]
        c: f64,
    },
    /// Σ aₖ ŷᵏ on scalars.
    Polynomial { coeffs: Vec<f64> },
    /// 1 iff the true class's score does not strictly beat every other score.
    /// With two classes a scalar ŷ is read as the score pair (1 − ŷ, ŷ), so
    /// class 1 errs iff ŷ ≥ ½.
    ZeroOne { class: usize, classes: usize },
}

/// Whether `p` lies on the probability simplex within [`SIMPLEX_TOL`].
pub fn on_simplex(p: &[f64]) -> bool {
    let sum: f64 = p.iter().sum();
    p.iter().all(|&x| (-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&x))
        && (sum - 1.0).abs() <= SIMPLEX_TOL
}

/// Zero-one error of `scores` for a 1-based `true_class`; ties are errors.
pub fn zero_one_error(scores: &[f64], true_class: usize) -> Result<u8> {
    if scores.len() < 2 {
        return Err(invalid("zero-one error needs at least two class scores"));
    }
    if true_class == 0 || true_class > scores.len() {
        return Err(Error::ClassIndex {
            index: true_class,
            classes: scores.len(),
        });
    }
    let own = scores[true_class - 1];
    let rival = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != true_class - 1)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(u8::from(own <= rival))
}

fn barron<T: Real>(r: T, alpha: f64, c: f64) -> T {
    let s2 = if alpha < 1.0 && alpha.is_finite() {
        c * (1.0 - alpha) / (2.0 - alpha)
    } else {
        c
    };
    let q = r.square() / T::cst(s2);
    if alpha == f64::NEG_INFINITY {
        T::cst(1.0) - (q.scale(-0.5)).exp()
    } else if alpha == 0.0 {
        (q.scale(0.5) + T::cst(1.0)).ln()
    } else if alpha == 2.0 {
        q.scale(0.5)
    } else {
        let b = (alpha - 2.0).abs();
        ((q / T::cst(b) + T::cst(1.0)).powf(alpha / 2.0) - T::cst(1.0)).scale(b / alpha)
    }
}

impl LossFunction {
    pub fn name(&self) -> &'static str {
        match self {
            LossFunction::Squared { .. } => "squared",
            LossFunction::Absolute { .. } => "absolute",
            LossFunction::Huber { .. } => "huber",
            LossFunction::CrossEntropy { .. } => "cross_entropy",
            LossFunction::Brier { .. } => "brier",
            LossFunction::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
            LossFunction::Sigmoid { .. } => "sigmoid",
            LossFunction::Savage { .. } => "savage",
            LossFunction::Tangent { .. } => "tangent",
            LossFunction::Spherical { .. } => "spherical",
            LossFunction::Barron { .. } => "barron",
            LossFunction::StudentT { .. } => "student_t",
            LossFunction::Polynomial { .. } => "polynomial",
            LossFunction::ZeroOne { .. } => "zero_one",
        }
    }

    /// Input dimension.
    pub fn arity(&self) -> usize {
        use LossFunction::*;
        match self {
            Squared { y } | Absolute { y } | Huber { y, .. } | Barron { y, .. } | StudentT { y, .. } => {
                y.as_slice().len()
            }
            CrossEntropy { classes, .. }
            | Brier { classes, .. }
            | SoftmaxCrossEntropy { classes, .. }
            | ZeroOne { classes, .. } => *classes,
            Sigmoid { .. } | Savage { .. } | Tangent { .. } | Spherical { .. } | Polynomial { .. } => 1,
        }
    }

    pub fn convexity_tag(&self) -> ConvexityTag {
        use LossFunction::*;
        match self {
            Squared { .. } | Brier { .. } => ConvexityTag::GloballyConvex { mu: 1.0 },
            CrossEntropy { .. } | SoftmaxCrossEntropy { .. } => ConvexityTag::GloballyConvex { mu: 0.0 },
            Absolute { .. } | Huber { .. } => ConvexityTag::Piecewise,
            Barron { alpha, c, .. } if *alpha >= 1.0 => ConvexityTag::GloballyConvex {
                mu: if *alpha == 2.0 { 0.5 / c } else { 0.0 },
            },
            Polynomial { coeffs } if coeffs.len() <= 3 && coeffs.get(2).is_none_or(|&a| a >= 0.0) => {
                ConvexityTag::GloballyConvex {
                    mu: coeffs.get(2).copied().unwrap_or(0.0),
                }
            }
            ZeroOne { .. } => ConvexityTag::ZeroOne,
            _ => ConvexityTag::NonconvexSmooth,
        }
    }

    /// Highest derivative order available in closed form (away from kinks).
    pub fn smoothness_order(&self) -> usize {
        match self {
            LossFunction::ZeroOne { .. } => 0,
            _ => crate::jet::ORDER,
        }
    }

    /// Checks the parameters themselves (not a prediction).
    pub fn validate(&self) -> Result<()> {
        use LossFunction::*;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let class_ok = |class: usize, classes: usize| {
            if classes < 2 {
                Err(invalid("at least two classes are required"))
            } else if class == 0 || class > classes {
                Err(Error::ClassIndex { index: class, classes })
            } else {
                Ok(())
            }
        };
        let label_ok = |label: u8| {
            if label <= 1 {
                Ok(())
            } else {
                Err(invalid(format!("binary label must be 0 or 1, got {label}")))
            }
        };
        let target_ok = |y: &Target| {
            if y.as_slice().is_empty() || y.as_slice().iter().any(|v| !v.is_finite()) {
                Err(invalid("target must be a nonempty finite vector"))
            } else {
                Ok(())
            }
        };
        match self {
            Squared { y } | Absolute { y } => target_ok(y),
            Huber { y, delta } => target_ok(y).and(positive("delta", *delta)),
            CrossEntropy { class, classes }
            | Brier { class, classes }
            | SoftmaxCrossEntropy { class, classes }
            | ZeroOne { class, classes } => class_ok(*class, *classes),
            Sigmoid { label, scale } | Savage { label, scale } => {
                label_ok(*label).and(positive("scale", *scale))
            }
            Tangent { label } | Spherical { label } => label_ok(*label),
            Barron { y, alpha, c } => {
                target_ok(y)?;
                positive("c", *c)?;
                if alpha.is_nan() || *alpha == f64::INFINITY {
                    Err(invalid("alpha must be a real number or -inf"))
                } else {
                    Ok(())
                }
            }
            StudentT { y, nu, c } => target_ok(y).and(positive("nu", *nu)).and(positive("c", *c)),
            Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|a| !a.is_finite()) {
                    Err(invalid("polynomial needs finite coefficients"))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        use LossFunction::*;
        if x.len() != self.arity() && !self.accepts_binary_scalar(x) {
            return Err(Error::Dimension {
                expected: self.arity(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain(self.name(), "non-finite prediction"));
        }
        match self {
            CrossEntropy { .. } | Brier { .. } if !on_simplex(x) => {
                Err(domain(self.name(), "prediction is not on the probability simplex"))
            }
            Spherical { .. } if !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&x[0]) => {
                Err(domain(self.name(), "probability outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    fn accepts_binary_scalar(&self, x: &[f64]) -> bool {
        matches!(self, LossFunction::ZeroOne { classes: 2, .. }) && x.len() == 1
    }

    /// Per-coordinate summand of a separable loss, written generically so it
    /// can be evaluated on jets. `None` for non-separable losses.
    fn coordinate<T: Real>(&self, i: usize, x: T) -> Option<T> {
        use LossFunction::*;
        Some(match self {
            Squared { y } => (x - T::cst(y.as_slice()[i])).square(),
            Absolute { y } => {
                let r = x - T::cst(y.as_slice()[i]);
                if r.value() >= 0.0 {
                    r
                } else {
                    -r
                }
            }
            Huber { y, delta } => {
                let r = x - T::cst(y.as_slice()[i]);
                let a = r.value().abs();
                if a <= *delta {
                    r.square().scale(0.5)
                } else {
                    let abs = if r.value() >= 0.0 { r } else { -r };
                    (abs - T::cst(delta / 2.0)).scale(*delta)
                }
            }
            CrossEntropy { class, .. } => {
                if i + 1 == *class {
                    -x.ln()
                } else {
                    T::cst(0.0)
                }
            }
            Brier { class, .. } => {
                let e = if i + 1 == *class { 1.0 } else { 0.0 };
                (x - T::cst(e)).square()
            }
            Sigmoid { label, scale } => {
                let z = (x - T::cst(0.5)).scale(1.0 / scale);
                if *label == 0 {
                    z.logistic()
                } else {
                    (-z).logistic()
                }
            }
            Savage { label, scale } => {
                let d = (T::cst(0.5) - x).scale(1.0 / scale);
                let v = if *label == 0 { d } else { -d } - T::cst(std::f64::consts::LN_2);
                (v.exp() + T::cst(1.0)).square().recip()
            }
            Tangent { label } => {
                let v = if *label == 0 { -x } else { x };
                (v.atan().scale(2.0) - T::cst(1.0)).square()
            }
            Spherical { label } => {
                let q = T::cst(1.0) - x;
                let norm = (x.square() + q.square()).sqrt();
                let p = if *label == 0 { q } else { x };
                -(p / norm)
            }
            Barron { y, alpha, c } => barron(x - T::cst(y.as_slice()[i]), *alpha, *c),
            StudentT { y, nu, c } => {
                let r = x - T::cst(y.as_slice()[i]);
                (r.square() / T::cst(*c) + T::cst(1.0)).ln().scale((nu + 1.0) / 2.0)
            }
            Polynomial { coeffs } => {
                coeffs
                    .iter()
                    .rev()
                    .fold(T::cst(0.0), |acc, &a| acc * x + T::cst(a))
            }
            SoftmaxCrossEntropy { .. } | ZeroOne { .. } => return None,
        })
    }

    fn softmax(z: &[f64]) -> Vec<f64> {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    /// Loss value at a prediction in the admissible domain.
    pub fn eval(&self, pred: &[f64]) -> Result<f64> {
        self.check_point(pred)?;
        use LossFunction::*;
        let v = match self {
            CrossEntropy { class, .. } => -pred[class - 1].max(LOG_CLAMP).ln(),
            SoftmaxCrossEntropy { class, .. } => {
                let m = pred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + pred.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                lse - pred[class - 1]
            }
            ZeroOne { class, .. } if pred.len() == 1 => {
                f64::from(zero_one_error(&[1.0 - pred[0], pred[0]], *class)?)
            }
            ZeroOne { class, .. } => f64::from(zero_one_error(pred, *class)?),
            _ => self.ambient_value(pred),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(self.name(), "non-finite loss value"))
        }
    }

    /// Smooth extension of the loss evaluated without domain checks (no
    /// simplex projection, no clamping). Used by finite-difference oracles.
    pub fn ambient_value(&self, x: &[f64]) -> f64 {
        use LossFunction::*;
        match self {
            SoftmaxCrossEntropy { class, .. } => {
                let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - x[class - 1]
            }
            ZeroOne { class, .. } => zero_one_error(x, *class).map_or(f64::NAN, f64::from),
            _ => (0..x.len())
                .map(|i| self.coordinate(i, x[i]).expect("separable loss"))
                .sum(),
        }
    }

    /// Derivative tensors of orders 1..=max_order at `point`.
    pub fn derivatives(&self, point: &[f64], max_order: usize) -> Result<Vec<Tensor>> {
        use LossFunction::*;
        if matches!(self, ZeroOne { .. }) {
            return Err(Error::Unsupported(
                "zero-one loss has no derivatives".into(),
            ));
        }
        if max_order > crate::jet::ORDER {
            return Err(invalid(format!("derivative order {max_order} exceeds 4")));
        }
        if point.len() != self.arity() {
            return Err(Error::Dimension {
                expected: self.arity(),
                got: point.len(),
            });
        }
        if let Spherical { .. } = self {
            self.check_point(point)?;
        }
        self.check_smooth(point, max_order)?;
        let d = point.len();
        if let SoftmaxCrossEntropy { class, .. } = self {
            return Ok(softmax_ce_tensors(&Self::softmax(point), class - 1, max_order));
        }
        let mut out: Vec<Tensor> = (1..=max_order).map(|k| Tensor::zeros(k, d)).collect();
        for i in 0..d {
            let jet = self
                .coordinate(i, Jet::variable(point[i]))
                .expect("separable loss");
            for (k, t) in out.iter_mut().enumerate() {
                let order = k + 1;
                let idx = vec![i; order];
                t.set(&idx, jet.derivative(order));
            }
        }
        if out.iter().any(|t| t.data.iter().any(|v| !v.is_finite())) {
            return Err(domain(self.name(), "non-finite derivative"));
        }
        Ok(out)
    }

    fn check_smooth(&self, point: &[f64], max_order: usize) -> Result<()> {
        use LossFunction::*;
        match self {
            Absolute { y } if max_order >= 1 => {
                if point.iter().zip(y.as_slice()).any(|(x, y)| x == y) {
                    return Err(domain(self.name(), "kink at zero residual"));
                }
            }
            Huber { y, delta } if max_order >= 2 => {
                if point.iter().zip(y.as_slice()).any(|(x, y)| (x - y).abs() == *delta) {
                    return Err(domain(self.name(), "second derivative jumps at |r| = delta"));
                }
            }
            CrossEntropy { class, .. } if point[class - 1] <= 0.0 => {
                return Err(domain(self.name(), "log of a nonpositive probability"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Hessian as a dense matrix.
    pub fn hessian(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let t = self.derivatives(point, 2)?.pop().expect("order 2");
        let d = point.len();
        Ok(DMatrix::from_row_slice(d, d, &t.data))
    }

    /// Classifies the Hessian spectrum against `tol`.
    pub fn convexity_at(&self, point: &[f64], tol: f64) -> Result<LocalShape> {
        let eig = SymmetricEigen::new(self.hessian(point)?).eigenvalues;
        Ok(if eig.iter().all(|&l| l > tol) {
            LocalShape::LocallyConvex
        } else if eig.iter().all(|&l| l < -tol) {
            LocalShape::LocallyConcave
        } else {
            LocalShape::Indefinite
        })
    }
}

/// Derivatives of log-sum-exp are the cumulant tensors of the one-hot
/// categorical with probabilities `p`; the gradient subtracts the target.
fn softmax_ce_tensors(p: &[f64], target: usize, max_order: usize) -> Vec<Tensor> {
    let d = p.len();
    // central moments of the one-hot vector e_J, J ~ p
    let central = |idx: &[usize]| -> f64 {
        (0..d)
            .map(|j| {
                p[j] * idx
                    .iter()
                    .map(|&i| f64::from(u8::from(i == j)) - p[i])
                    .product::<f64>()
            })
            .sum()
    };
    let mut out = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let t = match order {
            1 => Tensor::from_fn(1, d, |i| p[i[0]] - f64::from(u8::from(i[0] == target))),
            2 | 3 => Tensor::from_fn(order, d, central),
            _ => Tensor::from_fn(4, d, |i| {
                let c = |a: usize, b: usize| central(&[a, b]);
                central(i)
                    - c(i[0], i[1]) * c(i[2], i[3])
                    - c(i[0], i[2]) * c(i[1], i[3])
                    - c(i[0], i[3]) * c(i[1], i[2])
            }),
        };
        out.push(t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numdiff;
    use approx::assert_relative_eq;

    fn sigmoid0() -> LossFunction {
        LossFunction::Sigmoid { label: 0, scale: 0.1 }
    }

    #[test]
    fn eval_examples() {
        let sq = LossFunction::Squared { y: Target::Scalar(0.0) };
        assert_eq!(sq.eval(&[0.0]).unwrap(), 0.0);
        let sph = LossFunction::Spherical { label: 0 };
        assert_eq!(sph.eval(&[0.0]).unwrap(), -1.0);
        let ce = LossFunction::CrossEntropy { class: 1, classes: 2 };
        assert_relative_eq!(ce.eval(&[0.5, 0.5]).unwrap(), std::f64::consts::LN_2, max_relative = 1e-15);
    }

    #[test]
    fn cross_entropy_clamps_and_rejects_off_simplex() {
        let ce = LossFunction::CrossEntropy { class: 1, classes: 2 };
        assert_relative_eq!(ce.eval(&[0.0, 1.0]).unwrap(), -(LOG_CLAMP.ln()));
        assert!(matches!(ce.eval(&[0.4, 0.4]), Err(Error::Domain { .. })));
        assert!(matches!(ce.derivatives(&[0.0, 1.0], 1), Err(Error::Domain { .. })));
    }

    #[test]
    fn zero_one_examples_and_ties() {
        assert_eq!(zero_one_error(&[0.7, 0.3], 1).unwrap(), 0);
        assert_eq!(zero_one_error(&[0.5, 0.5], 1).unwrap(), 1);
        assert_eq!(zero_one_error(&[0.2, 0.5, 0.3], 1).unwrap(), 1);
        assert!(matches!(zero_one_error(&[0.2, 0.8], 3), Err(Error::ClassIndex { .. })));
        assert!(matches!(zero_one_error(&[0.2, 0.8], 0), Err(Error::ClassIndex { .. })));
        let zo = LossFunction::ZeroOne { class: 2, classes: 2 };
        assert!(matches!(zo.derivatives(&[0.2, 0.8], 1), Err(Error::Unsupported(_))));
        let binary = LossFunction::ZeroOne { class: 1, classes: 2 };
        assert_eq!(binary.eval(&[0.5]).unwrap(), 1.0);
        assert_eq!(binary.eval(&[0.49]).unwrap(), 0.0);
    }

    #[test]
    fn squared_hessian_is_two() {
        let sq = LossFunction::Squared { y: Target::Scalar(1.5) };
        for x in [-3.0, 0.0, 7.25] {
            let d = sq.derivatives(&[x], 2).unwrap();
            assert_eq!(d[1].data, vec![2.0]);
        }
    }

    #[test]
    fn spherical_inflection_point() {
        let sph = LossFunction::Spherical { label: 0 };
        let h = sph.derivatives(&[spherical_inflection()], 2).unwrap();
        assert!(h[1].data[0].abs() < 1e-9);
        assert_eq!(sph.convexity_at(&[0.7], 1e-9).unwrap(), LocalShape::LocallyConcave);
        assert_eq!(sph.convexity_at(&[0.3], 1e-9).unwrap(), LocalShape::LocallyConvex);
    }

    #[test]
    fn spherical_second_derivative_closed_form() {
        // (−4x² + x + 1)/(2(x−1)x + 1)^{5/2}
        let sph = LossFunction::Spherical { label: 0 };
        for x in [0.05, 0.3, 0.5, 0.8, 0.95] {
            let want = (-4.0 * x * x + x + 1.0) / (2.0 * (x - 1.0) * x + 1.0f64).powf(2.5);
            let got = sph.derivatives(&[x], 2).unwrap()[1].data[0];
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn sigmoid_third_derivative_matches_fd_of_second() {
        let loss = sigmoid0();
        let second = |x: &[f64]| loss.derivatives(x, 2).unwrap()[1].clone();
        let fd = numdiff::differentiate(second, &[0.3]);
        let exact = loss.derivatives(&[0.3], 3).unwrap()[2].data[0];
        assert_relative_eq!(fd.data[0], exact, max_relative = 1e-4);
    }

    #[test]
    fn sigmoid_local_shape() {
        let loss = sigmoid0();
        assert_eq!(loss.convexity_at(&[0.3], 1e-9).unwrap(), LocalShape::LocallyConvex);
        assert_eq!(loss.convexity_at(&[0.7], 1e-9).unwrap(), LocalShape::LocallyConcave);
    }

    #[test]
    fn savage_changes_shape_at_half() {
        let loss = LossFunction::Savage { label: 0, scale: 0.1 };
        let h = loss.derivatives(&[0.5], 2).unwrap()[1].data[0];
        assert!(h.abs() < 1e-10);
        assert_eq!(loss.convexity_at(&[0.4], 0.0).unwrap(), LocalShape::LocallyConvex);
        assert_eq!(loss.convexity_at(&[0.6], 0.0).unwrap(), LocalShape::LocallyConcave);
    }

    #[test]
    fn robust_losses_change_shape_at_cutoff() {
        let c = 10.0;
        let losses = [
            LossFunction::Barron { y: Target::Scalar(0.0), alpha: 0.0, c },
            LossFunction::Barron { y: Target::Scalar(0.0), alpha: -2.0, c },
            LossFunction::Barron { y: Target::Scalar(0.0), alpha: f64::NEG_INFINITY, c },
            LossFunction::Barron { y: Target::Scalar(0.0), alpha: 0.5, c },
            LossFunction::StudentT { y: Target::Scalar(0.0), nu: 3.0, c },
        ];
        for loss in &losses {
            let at = |r: f64| loss.derivatives(&[r], 2).unwrap()[1].data[0];
            assert!(at(c.sqrt()).abs() < 1e-10, "{loss:?}");
            assert!(at(2.0) > 0.0 && at(-3.0) > 0.0, "{loss:?}");
            assert!(at(3.5) < 0.0 && at(-5.0) < 0.0, "{loss:?}");
        }
    }

    #[test]
    fn barron_special_cases_are_continuous_in_alpha() {
        let base = |alpha| LossFunction::Barron { y: Target::Scalar(0.0), alpha, c: 4.0 };
        for (special, near) in [(0.0, 1e-7), (2.0, 2.0 - 1e-7)] {
            let a = base(special).eval(&[1.3]).unwrap();
            let b = base(near).eval(&[1.3]).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-5);
        }
    }

    #[test]
    fn softmax_ce_matches_nested_finite_differences() {
        let loss = LossFunction::SoftmaxCrossEntropy { class: 2, classes: 3 };
        let z = [0.3, -0.2, 0.8];
        let exact = loss.derivatives(&z, 4).unwrap();
        for order in 1..=3 {
            let fd = numdiff::differentiate(
                |x| {
                    if order == 1 {
                        Tensor { order: 0, dim: 3, data: vec![loss.ambient_value(x)] }
                    } else {
                        loss.derivatives(x, order - 1).unwrap().pop().unwrap()
                    }
                },
                &z,
            );
            for (a, b) in fd.data.iter().zip(&exact[order - 1].data) {
                assert!((a - b).abs() < 1e-6, "order {order}: {a} vs {b}");
            }
        }
        let fd4 = numdiff::differentiate(|x| loss.derivatives(x, 3).unwrap().pop().unwrap(), &z);
        for (a, b) in fd4.data.iter().zip(&exact[3].data) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(exact[3].asymmetry() < 1e-12);
    }

    #[test]
    fn json_catalog_names() {
        let l: LossFunction =
            serde_json::from_str(r#"{"loss":"barron","alpha":1.0,"c":10.0}"#).unwrap();
        assert_eq!(l, LossFunction::Barron { y: Target::Scalar(0.0), alpha: 1.0, c: 10.0 });
        let w: LossFunction = serde_json::from_str(r#"{"loss":"barron","alpha":"-inf"}"#).unwrap();
        assert_eq!(w.eval(&[0.0]).unwrap(), 0.0);
        let back = serde_json::to_string(&w).unwrap();
        assert_eq!(serde_json::from_str::<LossFunction>(&back).unwrap(), w);
        assert!(serde_json::from_str::<LossFunction>(r#"{"loss":"squared","z":1}"#).is_err());
        assert!(serde_json::from_str::<LossFunction>(r#"{"loss":"nope"}"#).is_err());
    }
}
