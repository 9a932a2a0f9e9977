//! Central moment tensors up to order 4.

use crate::tensor::Tensor;

use super::{rows_to_matrix, Distribution};

fn rising(a: f64, k: usize) -> f64 {
    (0..k).map(|j| a + j as f64).product()
}

/// E[∏ (X_s − μ_s)] from raw mixed moments, by expanding the product over
/// subsets of the index list.
fn central_from_raw(idx: &[usize], mean: &[f64], raw: impl Fn(&[usize]) -> f64) -> f64 {
    let k = idx.len();
    let mut total = 0.0;
    let mut subset = Vec::with_capacity(k);
    for mask in 0u32..(1 << k) {
        subset.clear();
        let mut coef = 1.0;
        for (bit, &i) in idx.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                subset.push(i);
            } else {
                coef *= -mean[i];
            }
        }
        if coef != 0.0 {
            total += coef * raw(&subset);
        }
    }
    total
}

impl Distribution {
    /// Central moment E[∏ₖ (X_{iₖ} − μ_{iₖ})] for an index list of length
    /// ≤ 4. `None` when the moment is infinite or undefined.
    pub fn central_moment(&self, idx: &[usize]) -> Option<f64> {
        assert!(idx.len() <= 4, "central moments are tracked to order 4");
        if idx.is_empty() {
            return Some(1.0);
        }
        match self {
            Distribution::Cauchy { .. } | Distribution::Levy { .. } => None,
            Distribution::PointMass { .. } => Some(0.0),
            Distribution::Gaussian { .. } => {
                let (_, s) = self.gaussian_parts()?.ok()?;
                Some(match idx {
                    [_] | [_, _, _] => 0.0,
                    [a, b] => s[(*a, *b)],
                    [a, b, c, d] => {
                        s[(*a, *b)] * s[(*c, *d)] + s[(*a, *c)] * s[(*b, *d)] + s[(*a, *d)] * s[(*b, *c)]
                    }
                    _ => unreachable!(),
                })
            }
            Distribution::Bernoulli { .. } | Distribution::Lattice { .. } => {
                let l = self.lattice_data()?;
                Some(l.central_moment(idx.len() as u32))
            }
            Distribution::Dirichlet { alpha } => {
                let a0: f64 = alpha.iter().sum();
                let mean: Vec<f64> = alpha.iter().map(|a| a / a0).collect();
                let raw = |s: &[usize]| {
                    let mut counts = vec![0usize; alpha.len()];
                    for &i in s {
                        counts[i] += 1;
                    }
                    counts
                        .iter()
                        .zip(alpha)
                        .map(|(&c, &a)| rising(a, c))
                        .product::<f64>()
                        / rising(a0, s.len())
                };
                Some(central_from_raw(idx, &mean, raw))
            }
            Distribution::Product { components } => {
                // moments of independent blocks factorize
                let mut start = 0;
                let mut value = 1.0;
                for c in components {
                    let d = c.dim();
                    let local: Vec<usize> = idx
                        .iter()
                        .filter(|&&i| (start..start + d).contains(&i))
                        .map(|&i| i - start)
                        .collect();
                    if !local.is_empty() {
                        value *= c.central_moment(&local)?;
                    }
                    start += d;
                }
                Some(value)
            }
            Distribution::Affine { base, matrix, .. } => {
                let a = rows_to_matrix(matrix).ok()?;
                let t = base.central_moments(idx.len())?;
                let d = base.dim();
                let mut total = 0.0;
                let mut j = vec![0usize; idx.len()];
                for (flat, &m) in t.data.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    crate::tensor::unflatten(flat, d, &mut j);
                    let coef: f64 = idx.iter().zip(&j).map(|(&i, &jj)| a[(i, jj)]).product();
                    total += coef * m;
                }
                Some(total)
            }
        }
    }

    /// Full central moment tensor of the given order (≤ 4).
    pub fn central_moments(&self, order: usize) -> Option<Tensor> {
        let d = self.dim();
        let mut failed = false;
        let t = Tensor::from_fn(order, d, |idx| match self.central_moment(idx) {
            Some(v) => v,
            None => {
                failed = true;
                f64::NAN
            }
        });
        (!failed).then_some(t)
    }
}
