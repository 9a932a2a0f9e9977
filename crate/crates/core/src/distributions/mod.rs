//! Base prediction distributions: samplers plus the analytic descriptors
//! (moments, CGF, lattice structure, tails) consumed by the theorems.

mod lattice;
mod moments;
mod sampling;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::{cauchy_sf, levy_sf, normal_sf};

pub use lattice::{LatticeData, SumSequence, MAX_SUPPORT, ON_LATTICE_TOL};
pub use sampling::Sampler;

/// A vector written in JSON as a number or an array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl VectorSpec {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            VectorSpec::Scalar(x) => vec![*x],
            VectorSpec::Vector(v) => v.clone(),
        }
    }
}

impl From<f64> for VectorSpec {
    fn from(x: f64) -> Self {
        VectorSpec::Scalar(x)
    }
}

impl From<Vec<f64>> for VectorSpec {
    fn from(v: Vec<f64>) -> Self {
        VectorSpec::Vector(v)
    }
}

/// A covariance written as a variance (isotropic σ²·I) or as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovSpec {
    Isotropic(f64),
    Matrix(Vec<Vec<f64>>),
}

impl From<f64> for CovSpec {
    fn from(x: f64) -> Self {
        CovSpec::Isotropic(x)
    }
}

impl From<Vec<Vec<f64>>> for CovSpec {
    fn from(rows: Vec<Vec<f64>>) -> Self {
        CovSpec::Matrix(rows)
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(invalid("matrix rows must be nonempty and of equal length"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Gaussian { mean: VectorSpec, cov: CovSpec },
    Bernoulli { p: f64 },
    Lattice { offset: f64, span: f64, masses: Vec<f64> },
    Cauchy { location: f64, scale: f64 },
    /// Lévy(0, scale), α = ½, β = 1.
    Levy { scale: f64 },
    PointMass { value: VectorSpec },
    /// Probability vectors on the simplex.
    Dirichlet { alpha: Vec<f64> },
    /// Independent blocks stacked into one vector.
    Product { components: Vec<Distribution> },
    /// matrix · X + shift for X drawn from `base`.
    Affine {
        base: Box<Distribution>,
        matrix: Vec<Vec<f64>>,
        shift: Vec<f64>,
    },
}

/// Log-MGF data at a tilt h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgfPoint {
    pub h: f64,
    pub log_r: f64,
    /// Tilted mean m(h).
    pub m: f64,
    /// Tilted variance σ²(h) = m′(h).
    pub sigma2: f64,
}

impl Distribution {
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        Distribution::Gaussian {
            mean: VectorSpec::Scalar(mean),
            cov: CovSpec::Isotropic(variance),
        }
    }

    pub fn gaussian_mv(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Self {
        Distribution::Gaussian {
            mean: VectorSpec::Vector(mean),
            cov: CovSpec::Matrix(cov),
        }
    }

    pub fn point(value: f64) -> Self {
        Distribution::PointMass {
            value: VectorSpec::Scalar(value),
        }
    }

    pub fn lattice(data: LatticeData) -> Self {
        Distribution::Lattice {
            offset: data.offset,
            span: data.span,
            masses: data.masses,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Gaussian { .. } => "gaussian",
            Distribution::Bernoulli { .. } => "bernoulli",
            Distribution::Lattice { .. } => "lattice",
            Distribution::Cauchy { .. } => "cauchy",
            Distribution::Levy { .. } => "levy",
            Distribution::PointMass { .. } => "point_mass",
            Distribution::Dirichlet { .. } => "dirichlet",
            Distribution::Product { .. } => "product",
            Distribution::Affine { .. } => "affine",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Gaussian { mean, .. } => mean.to_vec().len(),
            Distribution::PointMass { value } => value.to_vec().len(),
            Distribution::Dirichlet { alpha } => alpha.len(),
            Distribution::Product { components } => components.iter().map(Distribution::dim).sum(),
            Distribution::Affine { matrix, .. } => matrix.len(),
            _ => 1,
        }
    }

    /// Gaussian mean and covariance as nalgebra objects.
    pub(crate) fn gaussian_parts(&self) -> Option<Result<(DVector<f64>, DMatrix<f64>)>> {
        let Distribution::Gaussian { mean, cov } = self else {
            return None;
        };
        let mu = DVector::from_vec(mean.to_vec());
        let d = mu.len();
        let sigma = match cov {
            CovSpec::Isotropic(v) => Ok(DMatrix::identity(d, d) * *v),
            CovSpec::Matrix(rows) => rows_to_matrix(rows),
        };
        Some(sigma.map(|s| (mu, s)))
    }

    /// Mean and covariance when the law is Gaussian, possibly degenerate:
    /// Gaussians, point masses, and products / affine images of those.
    pub fn as_gaussian(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        match self {
            Distribution::Gaussian { .. } => self.gaussian_parts()?.ok(),
            Distribution::PointMass { value } => {
                let v = value.to_vec();
                let d = v.len();
                Some((DVector::from_vec(v), DMatrix::zeros(d, d)))
            }
            Distribution::Product { components } => {
                let parts: Vec<_> = components.iter().map(Distribution::as_gaussian).collect::<Option<_>>()?;
                let d: usize = parts.iter().map(|(m, _)| m.len()).sum();
                let mut mean = DVector::zeros(d);
                let mut cov = DMatrix::zeros(d, d);
                let mut at = 0;
                for (m, c) in parts {
                    let k = m.len();
                    mean.rows_mut(at, k).copy_from(&m);
                    cov.view_mut((at, at), (k, k)).copy_from(&c);
                    at += k;
                }
                Some((mean, cov))
            }
            Distribution::Affine { base, matrix, shift } => {
                let (m, c) = base.as_gaussian()?;
                let a = rows_to_matrix(matrix).ok()?;
                let mean = &a * m + DVector::from_column_slice(shift);
                let cov = &a * c * a.transpose();
                Some((mean, cov))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Distribution::Gaussian { cov, .. } => {
                let (mu, sigma) = self.gaussian_parts().expect("gaussian")?;
                if mu.is_empty() || mu.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("gaussian mean must be a finite nonempty vector"));
                }
                if let CovSpec::Isotropic(v) = cov {
                    if !(*v >= 0.0 && v.is_finite()) {
                        return Err(invalid("variance must be nonnegative"));
                    }
                }
                if sigma.nrows() != mu.len() || sigma.ncols() != mu.len() {
                    return Err(Error::Dimension {
                        expected: mu.len(),
                        got: sigma.nrows(),
                    });
                }
                let asym = (&sigma - sigma.transpose()).abs().max();
                if asym > 1e-12 * sigma.abs().max().max(1.0) {
                    return Err(invalid("covariance must be symmetric"));
                }
                let eig = nalgebra::SymmetricEigen::new(sigma.clone()).eigenvalues;
                if eig.iter().any(|&l| l < -1e-12 * sigma.abs().max().max(1.0)) {
                    return Err(Error::NotPositiveDefinite);
                }
                Ok(())
            }
            Distribution::Bernoulli { p } => {
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(invalid(format!("bernoulli p = {p} outside [0, 1]")))
                }
            }
            Distribution::Lattice { offset, span, masses } => LatticeData {
                offset: *offset,
                span: *span,
                masses: masses.clone(),
            }
            .validate(),
            Distribution::Cauchy { location, scale } => {
                if !location.is_finite() {
                    return Err(invalid("cauchy location must be finite"));
                }
                positive("cauchy scale", *scale)
            }
            Distribution::Levy { scale } => positive("levy scale", *scale),
            Distribution::PointMass { value } => {
                let v = value.to_vec();
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    Err(invalid("point mass must be a finite nonempty vector"))
                } else {
                    Ok(())
                }
            }
            Distribution::Dirichlet { alpha } => {
                if alpha.len() < 2 {
                    return Err(invalid("dirichlet needs at least two concentrations"));
                }
                alpha.iter().try_for_each(|&a| positive("dirichlet concentration", a))
            }
            Distribution::Product { components } => {
                if components.is_empty() {
                    return Err(Error::Empty("product components"));
                }
                components.iter().try_for_each(Distribution::validate)
            }
            Distribution::Affine { base, matrix, shift } => {
                base.validate()?;
                let a = rows_to_matrix(matrix)?;
                if a.ncols() != base.dim() {
                    return Err(Error::Dimension {
                        expected: base.dim(),
                        got: a.ncols(),
                    });
                }
                if shift.len() != a.nrows() {
                    return Err(Error::Dimension {
                        expected: a.nrows(),
                        got: shift.len(),
                    });
                }
                if a.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
                    return Err(invalid("affine map must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Lattice description with the minimal span, for lattice-valued laws.
    pub fn lattice_data(&self) -> Option<LatticeData> {
        match self {
            Distribution::Bernoulli { p } => Some(LatticeData {
                offset: 0.0,
                span: 1.0,
                masses: vec![1.0 - p, *p],
            }),
            Distribution::Lattice { offset, span, masses } => Some(LatticeData {
                offset: *offset,
                span: *span,
                masses: masses.clone(),
            }),
            Distribution::PointMass { value } => match value.to_vec().as_slice() {
                [x] => Some(LatticeData {
                    offset: *x,
                    span: 1.0,
                    masses: vec![1.0],
                }),
                _ => None,
            },
            Distribution::Affine { base, matrix, shift } if matrix.len() == 1 && base.dim() == 1 => {
                let a = matrix[0][0];
                let l = base.lattice_data()?;
                if a > 0.0 {
                    Some(LatticeData {
                        offset: a * l.offset + shift[0],
                        span: a * l.span,
                        masses: l.masses,
                    })
                } else if a < 0.0 {
                    let top = l.point(l.masses.len() - 1);
                    Some(LatticeData {
                        offset: a * top + shift[0],
                        span: -a * l.span,
                        masses: l.masses.into_iter().rev().collect(),
                    })
                } else {
                    Some(LatticeData {
                        offset: shift[0],
                        span: 1.0,
                        masses: vec![1.0],
                    })
                }
            }
            Distribution::Product { components } if components.len() == 1 => {
                components[0].lattice_data()
            }
            _ => None,
        }
        .map(|l| l.minimal())
    }

    pub fn is_lattice(&self) -> bool {
        self.lattice_data().is_some()
    }

    /// Whether the law has a density with respect to Lebesgue measure.
    pub fn is_absolutely_continuous(&self) -> bool {
        match self {
            Distribution::Gaussian { .. } => match self.gaussian_parts() {
                Some(Ok((_, s))) => s.clone().cholesky().is_some(),
                _ => false,
            },
            Distribution::Cauchy { .. } | Distribution::Levy { .. } => true,
            // the simplex is a null set of the ambient space
            Distribution::Dirichlet { .. } => false,
            Distribution::Product { components } => {
                components.iter().all(Distribution::is_absolutely_continuous)
            }
            Distribution::Affine { base, matrix, .. } => {
                base.is_absolutely_continuous()
                    && rows_to_matrix(matrix)
                        .ok()
                        .filter(|a| a.is_square())
                        .is_some_and(|a| a.determinant().abs() > 0.0)
            }
            _ => false,
        }
    }

    pub fn mean(&self) -> Option<Vec<f64>> {
        match self {
            Distribution::Gaussian { mean, .. } => Some(mean.to_vec()),
            Distribution::Bernoulli { p } => Some(vec![*p]),
            Distribution::Lattice { .. } => Some(vec![self.lattice_data()?.mean()]),
            Distribution::Cauchy { .. } | Distribution::Levy { .. } => None,
            Distribution::PointMass { value } => Some(value.to_vec()),
            Distribution::Dirichlet { alpha } => {
                let a0: f64 = alpha.iter().sum();
                Some(alpha.iter().map(|a| a / a0).collect())
            }
            Distribution::Product { components } => {
                let mut out = Vec::with_capacity(self.dim());
                for c in components {
                    out.extend(c.mean()?);
                }
                Some(out)
            }
            Distribution::Affine { base, matrix, shift } => {
                let a = rows_to_matrix(matrix).ok()?;
                let m = a * DVector::from_vec(base.mean()?) + DVector::from_column_slice(shift);
                Some(m.iter().copied().collect())
            }
        }
    }

    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let d = self.dim();
        let t = self.central_moments(2)?;
        Some(DMatrix::from_row_slice(d, d, &t.data))
    }

    /// Trace of the covariance.
    pub fn total_variance(&self) -> Option<f64> {
        self.covariance().map(|c| c.trace())
    }

    /// Bound B of the MGF domain: R(h) finite for |h| < B.
    pub fn mgf_domain_bound(&self) -> f64 {
        match self {
            Distribution::Cauchy { .. } | Distribution::Levy { .. } => 0.0,
            Distribution::Product { components } => components
                .iter()
                .map(Distribution::mgf_domain_bound)
                .fold(f64::INFINITY, f64::min),
            Distribution::Affine { base, .. } => {
                if base.mgf_domain_bound() == f64::INFINITY {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Supremum A of the support (univariate laws).
    pub fn support_sup(&self) -> Result<f64> {
        self.require_univariate()?;
        Ok(match self {
            Distribution::Gaussian { cov, .. } => {
                let var = match cov {
                    CovSpec::Isotropic(v) => *v,
                    CovSpec::Matrix(rows) => rows[0][0],
                };
                if var > 0.0 {
                    f64::INFINITY
                } else {
                    self.mean().expect("gaussian mean")[0]
                }
            }
            Distribution::Cauchy { .. } | Distribution::Levy { .. } => f64::INFINITY,
            Distribution::Affine { base, matrix, shift } if base.dim() == 1 => {
                let a = matrix[0][0];
                if a > 0.0 {
                    a * base.support_sup()? + shift[0]
                } else if a == 0.0 {
                    shift[0]
                } else {
                    match base.lattice_data() {
                        Some(l) => a * l.offset + shift[0],
                        None if base.is_absolutely_continuous() => f64::INFINITY,
                        None => return Err(Error::Unsupported("support of this affine law".into())),
                    }
                }
            }
            _ => match self.lattice_data() {
                Some(l) => l.point(l.masses.len() - 1),
                None => return Err(Error::Unsupported(format!("support of {}", self.name()))),
            },
        })
    }

    /// Limit A₀ of the tilted mean m(h) as h grows. Equals A whenever the
    /// MGF is finite everywhere.
    pub fn tilted_mean_limit(&self) -> Result<f64> {
        if self.mgf_domain_bound() == f64::INFINITY {
            self.support_sup()
        } else {
            Err(Error::NoMgf(self.name().into()))
        }
    }

    fn require_univariate(&self) -> Result<()> {
        if self.dim() == 1 {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: 1,
                got: self.dim(),
            })
        }
    }

    /// log R(h), m(h) and σ²(h) of a univariate law.
    pub fn cgf_point(&self, h: f64) -> Result<CgfPoint> {
        self.require_univariate()?;
        match self {
            Distribution::Cauchy { .. } | Distribution::Levy { .. } => {
                Err(Error::NoMgf(self.name().into()))
            }
            Distribution::Gaussian { .. } => {
                let (mu, s) = self.gaussian_parts().expect("gaussian")?;
                let (mu, v) = (mu[0], s[(0, 0)]);
                Ok(CgfPoint {
                    h,
                    log_r: mu * h + 0.5 * v * h * h,
                    m: mu + v * h,
                    sigma2: v,
                })
            }
            Distribution::Affine { base, matrix, shift } => {
                let a = matrix[0][0];
                let b = shift[0];
                let inner = base.cgf_point(a * h)?;
                Ok(CgfPoint {
                    h,
                    log_r: b * h + inner.log_r,
                    m: b + a * inner.m,
                    sigma2: a * a * inner.sigma2,
                })
            }
            Distribution::Product { components } => {
                let mut p = components[0].cgf_point(h)?;
                p.h = h;
                Ok(p)
            }
            Distribution::Dirichlet { .. } => Err(Error::Unsupported(
                "cgf of a dirichlet law".into(),
            )),
            _ => {
                let l = self.lattice_data().expect("lattice-valued");
                Ok(lattice_cgf(&l, h))
            }
        }
    }

    /// Exact law of X₁ + … + Xₙ for lattice-valued laws.
    pub fn exact_sum_distribution(&self, n: usize) -> Result<Distribution> {
        let l = self
            .lattice_data()
            .ok_or_else(|| Error::Unsupported(format!("exact sums of {}", self.name())))?;
        Ok(Distribution::lattice(l.sum_of(n)?))
    }

    /// P(X̄ₙ ≥ threshold), or P(X̄ₙ > threshold) when `strict`.
    pub fn tail_probability(&self, n: usize, threshold: f64, strict: bool) -> Result<f64> {
        if n == 0 {
            return Err(invalid("tail probability needs n >= 1"));
        }
        self.require_univariate()?;
        let nf = n as f64;
        match self {
            Distribution::Gaussian { .. } => {
                let (mu, s) = self.gaussian_parts().expect("gaussian")?;
                let sd = s[(0, 0)].sqrt();
                if sd == 0.0 {
                    Ok(point_tail(mu[0], threshold, strict))
                } else {
                    Ok(normal_sf((threshold - mu[0]) * nf.sqrt() / sd))
                }
            }
            Distribution::Cauchy { location, scale } => Ok(cauchy_sf(threshold, *location, *scale)),
            Distribution::Levy { scale } => Ok(levy_sf(threshold, nf * scale)),
            _ => match self.lattice_data() {
                Some(l) => Ok(l.sum_of(n)?.upper_tail(nf * threshold, strict)),
                None => Err(Error::Unsupported(format!(
                    "exact tail probabilities of {}",
                    self.name()
                ))),
            },
        }
    }

    /// Sampler with precomputed factorizations.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Sampler::new(self)
    }

    /// `n` draws from the sub-stream 0 of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let sampler = self.sampler()?;
        let mut rng = crate::rng::stream(seed, 0);
        Ok((0..n)
            .map(|_| {
                let mut out = vec![0.0; sampler.dim()];
                sampler.draw(&mut rng, &mut out);
                out
            })
            .collect())
    }
}

fn point_tail(x: f64, threshold: f64, strict: bool) -> f64 {
    if x > threshold || (!strict && x == threshold) {
        1.0
    } else {
        0.0
    }
}

fn lattice_cgf(l: &LatticeData, h: f64) -> CgfPoint {
    let atoms: Vec<(f64, f64)> = l.atoms().collect();
    let top = atoms
        .iter()
        .map(|&(x, m)| h * x + m.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = atoms.iter().map(|&(x, m)| (h * x + m.ln() - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let m = atoms.iter().zip(&weights).map(|(&(x, _), w)| w * x).sum::<f64>() / total;
    let sigma2 = atoms
        .iter()
        .zip(&weights)
        .map(|(&(x, _), w)| w * (x - m) * (x - m))
        .sum::<f64>()
        / total;
    CgfPoint {
        h,
        log_r: top + total.ln(),
        m,
        sigma2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_cgf() {
        let p = Distribution::gaussian(0.0, 1.0).cgf_point(1.0).unwrap();
        assert_eq!((p.log_r, p.m, p.sigma2), (0.5, 1.0, 1.0));
    }

    #[test]
    fn bernoulli_untilted_moments() {
        let p = Distribution::Bernoulli { p: 0.5 }.cgf_point(0.0).unwrap();
        assert_relative_eq!(p.m, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.sigma2, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn two_point_lattice_tilt() {
        let d = Distribution::Lattice { offset: 0.0, span: 1.0, masses: vec![0.5, 0.5] };
        let p = d.cgf_point(3f64.ln()).unwrap();
        assert_relative_eq!(p.m, 0.75, max_relative = 1e-14);
    }

    #[test]
    fn cgf_derivative_consistency() {
        let dists = [
            Distribution::gaussian(0.2, 2.0),
            Distribution::Bernoulli { p: 0.3 },
            Distribution::Lattice { offset: -1.0, span: 0.5, masses: vec![0.2, 0.3, 0.0, 0.5] },
        ];
        let delta = 1e-4;
        for d in &dists {
            for h in [-1.5, 0.0, 0.7] {
                let up = d.cgf_point(h + delta).unwrap().log_r;
                let down = d.cgf_point(h - delta).unwrap().log_r;
                assert!(((up - down) / (2.0 * delta) - d.cgf_point(h).unwrap().m).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn heavy_tails_have_no_mgf() {
        let c = Distribution::Cauchy { location: 0.0, scale: 1.0 };
        assert!(matches!(c.cgf_point(0.1), Err(Error::NoMgf(_))));
        assert!(matches!(Distribution::Levy { scale: 1.0 }.cgf_point(0.1), Err(Error::NoMgf(_))));
    }

    #[test]
    fn tail_examples() {
        let c = Distribution::Cauchy { location: 0.0, scale: 1.0 };
        for n in [1, 7, 1000] {
            assert_relative_eq!(c.tail_probability(n, 1.0, false).unwrap(), 0.25, epsilon = 1e-15);
        }
        let l = Distribution::Levy { scale: 1.0 };
        assert_relative_eq!(l.tail_probability(1, 1.0, false).unwrap(), 0.682_689_492_137_085_9, max_relative = 1e-12);
        assert_relative_eq!(l.tail_probability(4, 1.0, false).unwrap(), 0.954_499_736_103_641_6, max_relative = 1e-12);
        let b = Distribution::Bernoulli { p: 0.35 };
        let want = [0.5775, 0.28175, 0.43701875];
        for (n, w) in (2..=4).zip(want) {
            assert_relative_eq!(b.tail_probability(n, 0.5, false).unwrap(), w, max_relative = 1e-13);
        }
    }

    #[test]
    fn levy_stable_scaling() {
        // mean of n Lévy(c) is Lévy(n c): tail at ε equals single tail at ε/n = n^{1−1/α} ε
        let l = Distribution::Levy { scale: 1.0 };
        for n in [2usize, 5, 40] {
            let a = l.tail_probability(n, 0.8, false).unwrap();
            let b = l.tail_probability(1, 0.8 / n as f64, false).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_sums() {
        let b = Distribution::Bernoulli { p: 0.35 };
        let s = b.exact_sum_distribution(3).unwrap().lattice_data().unwrap();
        assert_relative_eq!(s.masses[3], 0.042_875, max_relative = 1e-13);
        let p = Distribution::point(1.0).exact_sum_distribution(7).unwrap();
        assert_eq!(p.mean().unwrap(), vec![7.0]);
        assert!(Distribution::gaussian(0.0, 1.0).exact_sum_distribution(2).is_err());
    }

    #[test]
    fn descriptors() {
        let g = Distribution::gaussian(0.0, 1.0);
        assert_eq!(g.mgf_domain_bound(), f64::INFINITY);
        assert_eq!(g.support_sup().unwrap(), f64::INFINITY);
        let l = Distribution::Lattice { offset: 0.0, span: 0.5, masses: vec![0.5, 0.5, 0.0] };
        assert_eq!(l.mgf_domain_bound(), f64::INFINITY);
        assert_eq!(l.support_sup().unwrap(), 0.5);
        assert_eq!(l.tilted_mean_limit().unwrap(), 0.5);
        assert_eq!(Distribution::Cauchy { location: 0.0, scale: 1.0 }.mgf_domain_bound(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(Distribution::Lattice { offset: 0.0, span: 1.0, masses: vec![0.5, 0.4] }.validate().is_err());
        assert!(Distribution::Lattice { offset: 0.0, span: 1.0, masses: vec![-0.1, 1.1] }.validate().is_err());
        assert!(Distribution::gaussian_mv(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]).validate().is_err());
        assert!(Distribution::Bernoulli { p: 1.2 }.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let d: Distribution = serde_json::from_str(
            r#"{"family":"affine","base":{"family":"gaussian","mean":[0.5,0.2],"cov":[[1,0.1],[0.1,1]]},"matrix":[[1,-1]],"shift":[0]}"#,
        )
        .unwrap();
        d.validate().unwrap();
        let back: Distribution = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<Distribution>(r#"{"family":"bernoulli","p":0.3,"q":1}"#).is_err());
    }
}
