//! Second-order forward-mode differentiation for closed-form metric charts.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to up to [`MAX_DIM`] chart coordinates. Builtin metric families
//! write their components once, generically over [`Scalar`], and obtain exact
//! first and second derivatives by evaluating on jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const MAX_DIM: usize = 4;

/// Arithmetic needed by closed-form metric components.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn powi(self, k: i32) -> Self;
    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value()`.
    fn lift(self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn lift(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; MAX_DIM],
    pub h: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, d: [0.0; MAX_DIM], h: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    /// The coordinate function `x_i` evaluated at `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut j = Jet::constant(v);
        j.d[i] = 1.0;
        j
    }

    /// Coordinate jets for a whole point.
    pub fn point(x: &[f64]) -> Vec<Jet> {
        assert!(x.len() <= MAX_DIM, "jets support at most {MAX_DIM} coordinates");
        x.iter().enumerate().map(|(i, &xi)| Jet::variable(xi, i)).collect()
    }

    /// Compose with a scalar function given its value and first two derivatives.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Jet {
        let mut out = Jet::constant(f0);
        for i in 0..MAX_DIM {
            out.d[i] = f1 * self.d[i];
            for j in 0..MAX_DIM {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.d[i] * self.d[j];
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for i in 0..MAX_DIM {
            self.d[i] += o.d[i];
            for j in 0..MAX_DIM {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..MAX_DIM {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..MAX_DIM {
                out.h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.v.recip();
        self * o.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.v += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.v -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, o: f64) -> Jet {
        self.v *= o;
        for i in 0..MAX_DIM {
            self.d[i] *= o;
            for j in 0..MAX_DIM {
                self.h[i][j] *= o;
            }
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self * o.recip()
    }
}

impl Scalar for Jet {
    fn constant(v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }
    fn powi(self, k: i32) -> Self {
        let kf = k as f64;
        let f0 = self.v.powi(k);
        let f1 = if k == 0 { 0.0 } else { kf * self.v.powi(k - 1) };
        let f2 = if k == 0 || k == 1 { 0.0 } else { kf * (kf - 1.0) * self.v.powi(k - 2) };
        self.chain(f0, f1, f2)
    }
    fn lift(self, f0: f64, f1: f64, f2: f64) -> Self {
        self.chain(f0, f1, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_and_quotient_rules() {
        let p = Jet::point(&[0.3, -1.2]);
        // f = x² y / (1 + x y)
        let f = p[0].powi(2) * p[1] / (p[0] * p[1] + 1.0);
        let g = |x: f64, y: f64| x * x * y / (1.0 + x * y);
        let h = 1e-4;
        let (x, y) = (0.3, -1.2);
        let fx = (g(x + h, y) - g(x - h, y)) / (2.0 * h);
        let fxy = (g(x + h, y + h) - g(x + h, y - h) - g(x - h, y + h) + g(x - h, y - h)) / (4.0 * h * h);
        let fyy = (g(x, y + h) - 2.0 * g(x, y) + g(x, y - h)) / (h * h);
        assert_abs_diff_eq!(f.v, g(x, y), epsilon = 1e-15);
        assert_abs_diff_eq!(f.d[0], fx, epsilon = 1e-7);
        assert_abs_diff_eq!(f.h[0][1], fxy, epsilon = 1e-5);
        assert_abs_diff_eq!(f.h[1][0], fxy, epsilon = 1e-5);
        assert_abs_diff_eq!(f.h[1][1], fyy, epsilon = 1e-5);
    }

    #[test]
    fn transcendental_second_derivatives() {
        let t = Jet::variable(0.7, 0);
        assert_abs_diff_eq!(t.cosh().h[0][0], 0.7f64.cosh(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.sin().h[0][0], -0.7f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!((t * 2.0).exp().h[0][0], 4.0 * 1.4f64.exp(), epsilon = 1e-13);
        assert_abs_diff_eq!(t.cos().d[0], -0.7f64.sin(), epsilon = 1e-15);
    }
}
