//! Draw generation with factorizations precomputed once per distribution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal};

use crate::error::{invalid, Result};

use super::{rows_to_matrix, Distribution};

const STACK: usize = 32;

#[derive(Debug, Clone)]
enum Kind {
    Normal1 { mean: f64, sd: f64 },
    Normal { mean: DVector<f64>, factor: DMatrix<f64> },
    Bernoulli(f64),
    Lattice { offset: f64, span: f64, cumulative: Vec<f64>, index: Vec<usize> },
    Cauchy { location: f64, scale: f64 },
    Levy(f64),
    Point(Vec<f64>),
    Dirichlet(Vec<Gamma<f64>>),
    Product(Vec<Sampler>),
    Affine { base: Box<Sampler>, matrix: DMatrix<f64>, shift: Vec<f64> },
}

/// Draws one vector from a distribution into a caller-owned buffer.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: Kind,
    dim: usize,
}

/// A square factor F with F Fᵀ = Σ; Cholesky when definite, otherwise the
/// eigen square root (singular covariances are allowed).
fn covariance_factor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = sigma.clone().cholesky() {
        return ch.l();
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root)
}

impl Sampler {
    pub(crate) fn new(dist: &Distribution) -> Result<Sampler> {
        let dim = dist.dim();
        let kind = match dist {
            Distribution::Gaussian { .. } => {
                let (mean, sigma) = dist.gaussian_parts().expect("gaussian")?;
                if dim == 1 {
                    Kind::Normal1 {
                        mean: mean[0],
                        sd: sigma[(0, 0)].sqrt(),
                    }
                } else {
                    Kind::Normal {
                        mean,
                        factor: covariance_factor(&sigma),
                    }
                }
            }
            Distribution::Bernoulli { p } => Kind::Bernoulli(*p),
            Distribution::Lattice { offset, span, masses } => {
                let mut cumulative = Vec::new();
                let mut index = Vec::new();
                let mut acc = 0.0;
                for (k, &m) in masses.iter().enumerate() {
                    if m > 0.0 {
                        acc += m;
                        cumulative.push(acc);
                        index.push(k);
                    }
                }
                *cumulative.last_mut().expect("validated lattice") = f64::INFINITY;
                Kind::Lattice {
                    offset: *offset,
                    span: *span,
                    cumulative,
                    index,
                }
            }
            Distribution::Cauchy { location, scale } => Kind::Cauchy {
                location: *location,
                scale: *scale,
            },
            Distribution::Levy { scale } => Kind::Levy(*scale),
            Distribution::PointMass { value } => Kind::Point(value.to_vec()),
            Distribution::Dirichlet { alpha } => Kind::Dirichlet(
                alpha
                    .iter()
                    .map(|&a| Gamma::new(a, 1.0).map_err(|e| invalid(e.to_string())))
                    .collect::<Result<_>>()?,
            ),
            Distribution::Product { components } => {
                Kind::Product(components.iter().map(Sampler::new).collect::<Result<_>>()?)
            }
            Distribution::Affine { base, matrix, shift } => Kind::Affine {
                base: Box::new(Sampler::new(base)?),
                matrix: rows_to_matrix(matrix)?,
                shift: shift.clone(),
            },
        };
        Ok(Sampler { kind, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fills `out` (length `dim`) with one draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            Kind::Normal1 { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                out[0] = mean + sd * z;
            }
            Kind::Normal { mean, factor } => {
                let mut z = [0.0f64; STACK];
                let mut heap;
                let z: &mut [f64] = if self.dim <= STACK {
                    &mut z[..self.dim]
                } else {
                    heap = vec![0.0; self.dim];
                    &mut heap
                };
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
                for i in 0..self.dim {
                    let mut acc = mean[i];
                    for (j, zj) in z.iter().enumerate() {
                        acc += factor[(i, j)] * zj;
                    }
                    out[i] = acc;
                }
            }
            Kind::Bernoulli(p) => {
                let u: f64 = rng.random();
                out[0] = if u < *p { 1.0 } else { 0.0 };
            }
            Kind::Lattice { offset, span, cumulative, index } => {
                let u: f64 = rng.random();
                let pos = cumulative.partition_point(|&c| c <= u);
                out[0] = offset + index[pos] as f64 * span;
            }
            Kind::Cauchy { location, scale } => {
                let u: f64 = rng.random();
                out[0] = location + scale * (std::f64::consts::PI * (u - 0.5)).tan();
            }
            Kind::Levy(c) => {
                let z: f64 = StandardNormal.sample(rng);
                out[0] = c / (z * z);
            }
            Kind::Point(v) => out.copy_from_slice(v),
            Kind::Dirichlet(gammas) => {
                let mut total = 0.0;
                for (o, g) in out.iter_mut().zip(gammas) {
                    *o = g.sample(rng);
                    total += *o;
                }
                for o in out.iter_mut() {
                    *o /= total;
                }
            }
            Kind::Product(parts) => {
                let mut start = 0;
                for p in parts {
                    p.draw(rng, &mut out[start..start + p.dim]);
                    start += p.dim;
                }
            }
            Kind::Affine { base, matrix, shift } => {
                let mut x = [0.0f64; STACK];
                let mut heap;
                let x: &mut [f64] = if base.dim <= STACK {
                    &mut x[..base.dim]
                } else {
                    heap = vec![0.0; base.dim];
                    &mut heap
                };
                base.draw(rng, x);
                for i in 0..self.dim {
                    let mut acc = shift[i];
                    for (j, xj) in x.iter().enumerate() {
                        acc += matrix[(i, j)] * xj;
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(draws: &[Vec<f64>], coord: usize) -> (f64, f64) {
        let n = draws.len() as f64;
        let m = draws.iter().map(|d| d[coord]).sum::<f64>() / n;
        let v = draws.iter().map(|d| (d[coord] - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn gaussian_law_of_large_numbers() {
        let draws = Distribution::gaussian(0.0, 1.0).sample(1_000_000, 11).unwrap();
        let (m, _) = mean_and_se(&draws, 0);
        assert!(m.abs() < 4e-3);
    }

    #[test]
    fn bernoulli_mean() {
        let draws = Distribution::Bernoulli { p: 0.35 }.sample(1_000_000, 5).unwrap();
        let (m, se) = mean_and_se(&draws, 0);
        assert!((m - 0.35).abs() < 4.0 * se);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Distribution::Dirichlet { alpha: vec![0.5, 1.0, 2.0] };
        assert_eq!(d.sample(100, 3).unwrap(), d.sample(100, 3).unwrap());
        assert_ne!(d.sample(100, 3).unwrap(), d.sample(100, 4).unwrap());
    }

    #[test]
    fn declared_moments_match_samples() {
        let dists = [
            Distribution::gaussian_mv(vec![1.0, -2.0], vec![vec![2.0, 0.6], vec![0.6, 0.5]]),
            Distribution::Lattice { offset: -1.0, span: 0.5, masses: vec![0.2, 0.3, 0.0, 0.5] },
            Distribution::Dirichlet { alpha: vec![1.0, 2.0, 3.0] },
            Distribution::Affine {
                base: Box::new(Distribution::gaussian_mv(vec![0.5, 0.1, 0.0], vec![
                    vec![1.0, 0.2, 0.0],
                    vec![0.2, 1.0, 0.3],
                    vec![0.0, 0.3, 1.0],
                ])),
                matrix: vec![vec![1.0, -1.0, 0.0], vec![1.0, 0.0, -1.0]],
                shift: vec![0.0, 0.0],
            },
        ];
        for d in &dists {
            let draws = d.sample(1_000_000, 17).unwrap();
            let mean = d.mean().unwrap();
            let cov = d.covariance().unwrap();
            for i in 0..d.dim() {
                let (m, se) = mean_and_se(&draws, i);
                assert!((m - mean[i]).abs() < 4.0 * se, "{d:?} mean {i}");
                let dev: Vec<f64> = draws.iter().map(|x| (x[i] - mean[i]).powi(2)).collect();
                let n = dev.len() as f64;
                let vm = dev.iter().sum::<f64>() / n;
                let vse = (dev.iter().map(|v| (v - vm).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
                assert!((vm - cov[(i, i)]).abs() < 4.0 * vse.max(1e-15), "{d:?} var {i}");
            }
        }
    }
}
