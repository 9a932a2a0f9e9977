//! Central finite differences for derivative tensors.
//!
//! Step per coordinate is `h = cbrt(ε)·max(1, |xᵢ|)`; higher orders are
//! obtained by nesting the first-order stencil.

use crate::tensor::{unflatten, Tensor};

pub fn step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Differentiates a tensor-valued map once, appending one index.
pub fn differentiate<G>(g: G, x: &[f64]) -> Tensor
where
    G: Fn(&[f64]) -> Tensor,
{
    let dim = x.len();
    let base = g(x);
    let order = base.order + 1;
    let mut out = Tensor::zeros(order, dim);
    let mut xp = x.to_vec();
    for j in 0..dim {
        let h = step(x[j]);
        xp[j] = x[j] + h;
        let up = g(&xp);
        xp[j] = x[j] - h;
        let down = g(&xp);
        xp[j] = x[j];
        let mut idx = vec![0usize; order];
        for flat in 0..base.data.len() {
            unflatten(flat, dim, &mut idx[..base.order]);
            idx[base.order] = j;
            let v = (up.data[flat] - down.data[flat]) / (2.0 * h);
            out.set(&idx, v);
        }
    }
    out
}

/// Derivative tensor of order `order` of a scalar function by nested central
/// differences.
pub fn derivative_tensor<F>(f: &F, x: &[f64], order: usize) -> Tensor
where
    F: Fn(&[f64]) -> f64,
{
    if order == 0 {
        return Tensor {
            order: 0,
            dim: x.len(),
            data: vec![f(x)],
        };
    }
    differentiate(|p| derivative_tensor(f, p, order - 1), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradient_and_hessian_of_quadratic_form() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1];
        let g = derivative_tensor(&f, &[1.0, 2.0], 1);
        assert_relative_eq!(g.get(&[0]), 8.0, max_relative = 1e-8);
        assert_relative_eq!(g.get(&[1]), -1.0, max_relative = 1e-8);
        let h = derivative_tensor(&f, &[1.0, 2.0], 2);
        assert_relative_eq!(h.get(&[0, 1]), 3.0, max_relative = 1e-5);
        assert_relative_eq!(h.get(&[1, 1]), -2.0, max_relative = 1e-5);
        assert!(h.asymmetry() < 1e-5);
    }
}
