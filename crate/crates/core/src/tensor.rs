//! Dense symmetric derivative / moment tensors stored row-major.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub order: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Tensor {
            order,
            dim,
            data: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn scalar_power(order: usize, value: f64) -> Self {
        Tensor {
            order,
            dim: 1,
            data: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(order, dim);
        let mut idx = vec![0usize; order];
        for flat in 0..t.data.len() {
            unflatten(flat, dim, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let i = self.flat_index(idx);
        self.data[i] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest deviation from symmetry under index permutations, relative to
    /// the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut idx = vec![0usize; self.order];
        let mut worst = 0.0f64;
        for flat in 0..self.data.len() {
            unflatten(flat, self.dim, &mut idx);
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            let d = (self.data[flat] - self.get(&sorted)).abs();
            worst = worst.max(d / scale);
        }
        worst
    }
}

pub(crate) fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}
