//! Finite lattice distributions and exact convolution of their sums.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest support size an exact sum may reach before we refuse.
pub const MAX_SUPPORT: usize = 50_000_000;

/// Distance, in lattice units, under which a threshold counts as an atom.
pub const ON_LATTICE_TOL: f64 = 1e-9;

/// Masses at `offset + k·span`, k = 0, 1, …
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeData {
    pub offset: f64,
    pub span: f64,
    pub masses: Vec<f64>,
}

impl LatticeData {
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span.is_finite()) || !self.offset.is_finite() {
            return Err(invalid("lattice needs a finite offset and a positive span"));
        }
        if self.masses.is_empty() {
            return Err(Error::Empty("lattice masses"));
        }
        if self.masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(invalid("lattice masses must be nonnegative"));
        }
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("lattice masses sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn point(&self, k: usize) -> f64 {
        self.offset + k as f64 * self.span
    }

    /// (point, mass) pairs with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(k, &m)| (self.point(k), m))
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(x, m)| x * m).sum()
    }

    pub fn central_moment(&self, order: u32) -> f64 {
        let mu = self.mean();
        self.atoms().map(|(x, m)| m * (x - mu).powi(order as i32)).sum()
    }

    /// Same law on the coarsest lattice carrying it: zero masses trimmed
    /// from both ends and the span multiplied by the gcd of the gaps.
    pub fn minimal(&self) -> LatticeData {
        let first = self.masses.iter().position(|&m| m > 0.0).unwrap_or(0);
        let last = self.masses.iter().rposition(|&m| m > 0.0).unwrap_or(0);
        let g = (first..=last)
            .filter(|&k| self.masses[k] > 0.0)
            .map(|k| k - first)
            .fold(0usize, gcd);
        let g = g.max(1);
        let masses = (first..=last).step_by(g).map(|k| self.masses[k]).collect();
        LatticeData {
            offset: self.point(first),
            span: self.span * g as f64,
            masses,
        }
    }

    /// Convolution with another lattice sharing the same span.
    pub fn convolve(&self, other: &LatticeData) -> Result<LatticeData> {
        if (self.span - other.span).abs() > 1e-15 * self.span.max(other.span) {
            return Err(invalid("convolution needs equal spans"));
        }
        let len = self.masses.len() + other.masses.len() - 1;
        if len > MAX_SUPPORT {
            return Err(Error::SupportOverflow(len));
        }
        let mut out = vec![0.0; len];
        for (i, &a) in self.masses.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.masses.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(LatticeData {
            offset: self.offset + other.offset,
            span: self.span,
            masses: out,
        })
    }

    /// Exact law of X₁ + … + Xₙ.
    pub fn sum_of(&self, n: usize) -> Result<LatticeData> {
        if n == 0 {
            return Err(invalid("sum of zero variables"));
        }
        let mut seq = SumSequence::new(self)?;
        let mut last = None;
        for _ in 0..n {
            last = Some(seq.next_sum()?);
        }
        Ok(last.expect("n >= 1"))
    }

    /// Smallest index k with the point at or past `x` (`strict`: past),
    /// treating points within [`ON_LATTICE_TOL`] lattice units as equal.
    pub fn first_index_at_or_above(&self, x: f64, strict: bool) -> Option<usize> {
        first_index(self.offset, self.span, self.masses.len(), x, strict)
    }

    /// P(X ≥ x) (or > x), summed from the top for accuracy in the tail.
    pub fn upper_tail(&self, x: f64, strict: bool) -> f64 {
        LatticeView {
            offset: self.offset,
            span: self.span,
            masses: &self.masses,
        }
        .upper_tail(x, strict)
    }

    /// Whether `x` is (within tolerance) a lattice point carrying mass.
    pub fn has_atom_at(&self, x: f64) -> bool {
        let q = (x - self.offset) / self.span;
        let r = q.round();
        (q - r).abs() < ON_LATTICE_TOL
            && r >= 0.0
            && (r as usize) < self.masses.len()
            && self.masses[r as usize] > 0.0
    }
}

fn first_index(offset: f64, span: f64, len: usize, x: f64, strict: bool) -> Option<usize> {
    let q = (x - offset) / span;
    let r = q.round();
    let k = if (q - r).abs() < ON_LATTICE_TOL {
        if strict {
            r + 1.0
        } else {
            r
        }
    } else {
        q.ceil()
    };
    if k <= 0.0 {
        Some(0)
    } else if k >= len as f64 {
        None
    } else {
        Some(k as usize)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Successive exact laws of S₁, S₂, … by repeated convolution with the
/// base law's nonzero atoms.
#[derive(Debug, Clone)]
pub struct SumSequence {
    base: Vec<(usize, f64)>,
    base_len: usize,
    offset: f64,
    span: f64,
    current: Vec<f64>,
    n: usize,
}

impl SumSequence {
    pub fn new(base: &LatticeData) -> Result<Self> {
        base.validate()?;
        Ok(SumSequence {
            base: base
                .masses
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0.0)
                .map(|(k, &m)| (k, m))
                .collect(),
            base_len: base.masses.len(),
            offset: base.offset,
            span: base.span,
            current: vec![1.0],
            n: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Advances to S_{n+1} and returns its law.
    pub fn next_sum(&mut self) -> Result<LatticeData> {
        let len = self.current.len() + self.base_len - 1;
        if len > MAX_SUPPORT {
            return Err(Error::SupportOverflow(len));
        }
        let mut next = vec![0.0; len];
        for (i, &a) in self.current.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &(k, m) in &self.base {
                next[i + k] += a * m;
            }
        }
        self.current = next;
        self.n += 1;
        Ok(self.law())
    }

    /// Law of the current sum S_n (n ≥ 1).
    pub fn law(&self) -> LatticeData {
        LatticeData {
            offset: self.n as f64 * self.offset,
            span: self.span,
            masses: self.current.clone(),
        }
    }

    /// Advances and returns P(S_{n+1}/(n+1) ≥ t) (or >) without cloning the law.
    pub fn next_mean_tail(&mut self, t: f64, strict: bool) -> Result<f64> {
        self.next_sum()?;
        let n = self.n as f64;
        Ok(self.tail_of_current(n * t, strict))
    }

    fn tail_of_current(&self, x: f64, strict: bool) -> f64 {
        let view = LatticeView {
            offset: self.n as f64 * self.offset,
            span: self.span,
            masses: &self.current,
        };
        view.upper_tail(x, strict)
    }
}

struct LatticeView<'a> {
    offset: f64,
    span: f64,
    masses: &'a [f64],
}

impl LatticeView<'_> {
    fn upper_tail(&self, x: f64, strict: bool) -> f64 {
        match first_index(self.offset, self.span, self.masses.len(), x, strict) {
            Some(k) => self.masses[k..].iter().rev().sum(),
            None => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bern(p: f64) -> LatticeData {
        LatticeData { offset: 0.0, span: 1.0, masses: vec![1.0 - p, p] }
    }

    #[test]
    fn bernoulli_cube() {
        let s = bern(0.35).sum_of(3).unwrap();
        assert_relative_eq!(s.masses[3], 0.042_875, max_relative = 1e-14);
        assert_relative_eq!(s.masses.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_sum() {
        let one = LatticeData { offset: 1.0, span: 1.0, masses: vec![1.0] };
        let s = one.sum_of(7).unwrap();
        assert_eq!(s.atoms().collect::<Vec<_>>(), vec![(7.0, 1.0)]);
    }

    #[test]
    fn uniform_three_point_pair() {
        let u = LatticeData { offset: 0.0, span: 1.0, masses: vec![1.0 / 3.0; 3] };
        let s = u.sum_of(2).unwrap();
        assert_relative_eq!(s.masses[2], 3.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn minimal_span_uses_gcd() {
        let l = LatticeData { offset: 0.0, span: 0.05, masses: {
            let mut m = vec![0.0; 21];
            m[0] = 0.25;
            m[12] = 0.5;
            m[20] = 0.25;
            m
        } };
        let min = l.minimal();
        assert_relative_eq!(min.span, 0.2, max_relative = 1e-14);
        assert_eq!(min.masses, vec![0.25, 0.0, 0.0, 0.5, 0.0, 0.25]);
    }

    #[test]
    fn tails_respect_strictness() {
        let s = bern(0.35).sum_of(2).unwrap();
        // S₂ ≥ 1 vs S₂ > 1
        assert_relative_eq!(s.upper_tail(1.0, false), 1.0 - 0.65 * 0.65, max_relative = 1e-14);
        assert_relative_eq!(s.upper_tail(1.0, true), 0.35 * 0.35, max_relative = 1e-14);
        assert_relative_eq!(s.upper_tail(0.5, true), s.upper_tail(0.5, false));
    }

    #[test]
    fn sequence_matches_sum_of() {
        let base = bern(0.3);
        let mut seq = SumSequence::new(&base).unwrap();
        for n in 1..=6 {
            let a = seq.next_sum().unwrap();
            let b = base.sum_of(n).unwrap();
            assert_eq!(a, b);
        }
    }
}
