//! Forward-mode automatic differentiation with scalar dual numbers.
//!
//! The rod right-hand side is written generically over [`Real`] so it can be
//! evaluated both with plain `f64` (integration, inference) and with [`Dual`]
//! (exact state Jacobians for the physics loss).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by `f64` and [`Dual`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    /// Primal part of the value.
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
}

/// First-order dual number `re + eps * d` with `d^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    /// Constant (zero tangent).
    pub const fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }

    /// Seeded variable (unit tangent).
    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.re;
        Dual::new(
            self.re * inv,
            (self.eps - self.re * rhs.eps * inv) * inv,
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl Real for Dual {
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }
    fn value(self) -> f64 {
        self.re
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.re.cos() * self.eps)
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -self.re.sin() * self.eps)
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, 0.5 / r * self.eps)
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, (1.0 - t * t) * self.eps)
    }
}
