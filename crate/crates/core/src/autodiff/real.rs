use std::ops::{Add, Div, Mul, Neg, Sub};

use super::tape::Var;

/// Scalar arithmetic shared by `f64` and tape variables, so that network
/// forward passes and analytic fields can be written once and evaluated
/// either plainly or on a [`super::Tape`].
pub trait Real:
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
    /// A constant living in the same arithmetic context as `self`.
    fn lift(&self, c: f64) -> Self;
    fn val(&self) -> f64;
    fn tanh(self) -> Self;
    fn relu(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn square(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn val(&self) -> f64 {
        *self
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
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
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

impl<'t> Real for Var<'t> {
    fn lift(&self, c: f64) -> Self {
        self.constant(c)
    }
    fn val(&self) -> f64 {
        self.value()
    }
    fn tanh(self) -> Self {
        Var::tanh(self)
    }
    fn relu(self) -> Self {
        Var::relu(self)
    }
    fn exp(self) -> Self {
        Var::exp(self)
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn ln(self) -> Self {
        Var::ln(self)
    }
    fn sqrt(self) -> Self {
        Var::sqrt(self)
    }
    fn abs(self) -> Self {
        Var::abs(self)
    }
    fn powf(self, p: f64) -> Self {
        Var::powf(self, p)
    }
}
