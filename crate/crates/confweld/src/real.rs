//! Scalar abstraction shared by the numeric modules.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{Signed, ToPrimitive};

/// Real scalar usable throughout the crate.
///
/// The bound on [`RealField`] gives transcendental functions for both `T` and
/// `Complex<T>`; `Signed` makes the type acceptable to the FFT planner.
pub trait Real: RealField + Copy + ToPrimitive + Signed + Default {
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self;

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T: RealField + Copy + ToPrimitive + Signed + Default> Real for T {
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }
}

pub type Cx<T> = Complex<T>;

pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// `e^{i theta}`.
pub fn cis<T: Real>(theta: T) -> Cx<T> {
    Complex::new(theta.cos(), theta.sin())
}

pub fn polar<T: Real>(r: T, theta: T) -> Cx<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

pub fn cabs<T: Real>(z: Cx<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn carg<T: Real>(z: Cx<T>) -> T {
    z.im.atan2(z.re)
}

/// Integer power, negative exponents included.
pub fn cpowi<T: Real>(z: Cx<T>, n: i32) -> Cx<T> {
    let mut base = if n < 0 { Complex::new(T::one(), T::zero()) / z } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = Complex::new(T::one(), T::zero());
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

pub fn two_pi<T: Real>() -> T {
    T::two_pi()
}

pub fn is_finite<T: Real>(z: Cx<T>) -> bool {
    z.re.f64().is_finite() && z.im.f64().is_finite()
}

/// Principal complex square root.
pub fn csqrt<T: Real>(z: Cx<T>) -> Cx<T> {
    ComplexField::sqrt(z)
}

/// Complex NaN, used to poison values that could not be evaluated.
pub fn cnan<T: Real>() -> Cx<T> {
    Complex::new(T::lit(f64::NAN), T::lit(f64::NAN))
}
