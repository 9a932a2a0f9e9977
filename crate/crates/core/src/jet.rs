//! Truncated Taylor arithmetic for univariate derivatives up to order 4.
//!
//! A [`Jet`] stores the normalized Taylor coefficients `f(x₀ + t) = Σ cₖ tᵏ`
//! for k ≤ 4. Evaluating a loss written against [`Real`] on a seeded jet
//! yields its value and first four derivatives without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 4;
const N: usize = ORDER + 1;

/// Scalar operations the loss catalog is written against.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, r: f64) -> Self;
    fn atan(self) -> Self;

    fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    fn square(self) -> Self {
        self * self
    }

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }

    /// 1 / (1 + e^{−x})
    fn logistic(self) -> Self {
        ((-self).exp() + Self::cst(1.0)).recip()
    }

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, r: f64) -> Self {
        f64::powf(self, r)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; N],
}

impl Jet {
    /// The identity jet at `x`: value `x`, unit first derivative.
    pub fn variable(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        Jet { c }
    }

    /// Derivative of order `k` (k! · cₖ).
    pub fn derivative(&self, k: usize) -> f64 {
        const FACT: [f64; N] = [1.0, 1.0, 2.0, 6.0, 24.0];
        self.c[k] * FACT[k]
    }

    /// All derivatives, orders 0 through 4.
    pub fn derivatives(&self) -> [f64; N] {
        std::array::from_fn(|k| self.derivative(k))
    }

    fn deriv_series(&self) -> [f64; N] {
        // coefficients of f′ as a series, truncated to order 3
        let mut d = [0.0; N];
        for k in 0..ORDER {
            d[k] = (k + 1) as f64 * self.c[k + 1];
        }
        d
    }

    fn integrate_series(d: &[f64; N], c0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = c0;
        for k in 1..N {
            c[k] = d[k - 1] / k as f64;
        }
        Jet { c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { c: std::array::from_fn(|k| self.c[k] + o.c[k]) }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { c: std::array::from_fn(|k| self.c[k] - o.c[k]) }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.map(|x| -x) }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = (0..=k).map(|j| self.c[j] * o.c[k - j]).sum();
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut c = [0.0; N];
        for k in 0..N {
            let acc: f64 = (1..=k).map(|j| o.c[j] * c[k - j]).sum();
            c[k] = (self.c[k] - acc) / o.c[0];
        }
        Jet { c }
    }
}

impl Real for Jet {
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }

    fn value(self) -> f64 {
        self.c[0]
    }

    fn exp(self) -> Self {
        let mut b = [0.0; N];
        b[0] = self.c[0].exp();
        for k in 1..N {
            let acc: f64 = (1..=k).map(|j| j as f64 * self.c[j] * b[k - j]).sum();
            b[k] = acc / k as f64;
        }
        Jet { c: b }
    }

    fn ln(self) -> Self {
        let a = &self.c;
        let mut b = [0.0; N];
        b[0] = a[0].ln();
        for k in 1..N {
            let acc: f64 = (1..k).map(|j| j as f64 * b[j] * a[k - j]).sum();
            b[k] = (a[k] - acc / k as f64) / a[0];
        }
        Jet { c: b }
    }

    fn powf(self, r: f64) -> Self {
        let a = &self.c;
        let mut b = [0.0; N];
        b[0] = a[0].powf(r);
        for k in 1..N {
            let acc: f64 = (1..=k)
                .map(|j| ((r + 1.0) * j as f64 - k as f64) * a[j] * b[k - j])
                .sum();
            b[k] = acc / (k as f64 * a[0]);
        }
        Jet { c: b }
    }

    fn atan(self) -> Self {
        // atan(a)′ = a′ / (1 + a²)
        let q = self * self + Jet::constant(1.0);
        let d = Jet { c: self.deriv_series() } / q;
        Jet::integrate_series(&d.c, self.c[0].atan())
    }
}
