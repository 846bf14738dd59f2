//! Exact scalars in `Q(i, sqrt 2)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Gaussian rational `re + i im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gauss {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    fn add(&self, o: &Self) -> Self {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        Self::new(&self.re + &o.re, &self.im + &o.im)
    }

    fn sub(&self, o: &Self) -> Self {
        Self::new(&self.re - &o.re, &self.im - &o.im)
    }

    fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if self.im.is_zero() && o.im.is_zero() {
            return Self::new(&self.re * &o.re, BigRational::zero());
        }
        Self::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    fn inv(&self) -> Option<Self> {
        let n = &self.re * &self.re + &self.im * &self.im;
        if n.is_zero() {
            return None;
        }
        Some(Self::new(&self.re / &n, -&self.im / &n))
    }

    fn scale(&self, k: &BigRational) -> Self {
        Self::new(&self.re * k, &self.im * k)
    }
}

/// Element `a + b sqrt 2` with `a, b` Gaussian rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Scalar {
    pub a: Gauss,
    pub b: Gauss,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Scalar {
    pub fn zero() -> Self {
        Self { a: Gauss::zero(), b: Gauss::zero() }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(rat(n, 1))
    }

    pub fn from_frac(n: i64, d: i64) -> Self {
        Self::from_rat(rat(n, d))
    }

    pub fn from_rat(r: BigRational) -> Self {
        Self { a: Gauss::new(r, BigRational::zero()), b: Gauss::zero() }
    }

    /// `re + i im` with rational parts.
    pub fn gauss(re: BigRational, im: BigRational) -> Self {
        Self { a: Gauss::new(re, im), b: Gauss::zero() }
    }

    pub fn i() -> Self {
        Self::gauss(BigRational::zero(), BigRational::one())
    }

    pub fn sqrt2() -> Self {
        Self { a: Gauss::zero(), b: Gauss::new(BigRational::one(), BigRational::zero()) }
    }

    /// `i / sqrt 2`, the Heisenberg annihilation prefactor.
    pub fn i_over_sqrt2() -> Self {
        Self { a: Gauss::zero(), b: Gauss::new(BigRational::zero(), rat(1, 2)) }
    }

    /// `sqrt 2 / i`, the Heisenberg creation prefactor.
    pub fn sqrt2_over_i() -> Self {
        Self { a: Gauss::zero(), b: Gauss::new(BigRational::zero(), rat(-1, 1)) }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Complex conjugation (`sqrt 2` is real).
    pub fn conj(&self) -> Self {
        Self { a: self.a.conj(), b: self.b.conj() }
    }

    pub fn scale_rat(&self, k: &BigRational) -> Self {
        Self { a: self.a.scale(k), b: self.b.scale(k) }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale_rat(&rat(k, 1))
    }

    pub fn inv(&self) -> Option<Self> {
        // (a + b r)^{-1} = (a - b r) / (a^2 - 2 b^2)
        let two = Gauss::new(rat(2, 1), BigRational::zero());
        let norm = self.a.mul(&self.a).sub(&two.mul(&self.b.mul(&self.b)));
        let ni = norm.inv()?;
        Some(Self { a: self.a.mul(&ni), b: Gauss::zero().sub(&self.b).mul(&ni) })
    }

    /// Floating approximation `(re, im)`.
    pub fn to_f64(&self) -> (f64, f64) {
        let f = |r: &BigRational| {
            let n: f64 = r.numer().to_string().parse().unwrap_or(f64::NAN);
            let d: f64 = r.denom().to_string().parse().unwrap_or(f64::NAN);
            n / d
        };
        let s = std::f64::consts::SQRT_2;
        (f(&self.a.re) + s * f(&self.b.re), f(&self.a.im) + s * f(&self.b.im))
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        Scalar { a: self.a.add(&o.a), b: self.b.add(&o.b) }
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        *self = &*self + o;
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        Scalar { a: self.a.sub(&o.a), b: self.b.sub(&o.b) }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        if self.b.is_zero() && o.b.is_zero() {
            return Scalar { a: self.a.mul(&o.a), b: Gauss::zero() };
        }
        let two = Gauss::new(rat(2, 1), BigRational::zero());
        Scalar {
            a: self.a.mul(&o.a).add(&two.mul(&self.b.mul(&o.b))),
            b: self.a.mul(&o.b).add(&self.b.mul(&o.a)),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.scale_int(-1)
    }
}

fn fmt_gauss(g: &Gauss, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match (g.re.is_zero(), g.im.is_zero()) {
        (_, true) => write!(f, "{}", g.re),
        (true, false) => write!(f, "{}i", g.im),
        (false, false) => {
            let sign = if g.im.is_negative() { "-" } else { "+" };
            write!(f, "({} {} {}i)", g.re, sign, g.im.abs())
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return fmt_gauss(&self.a, f);
        }
        if !self.a.is_zero() {
            fmt_gauss(&self.a, f)?;
            write!(f, " + ")?;
        }
        fmt_gauss(&self.b, f)?;
        write!(f, "*sqrt2")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_relations() {
        let i = Scalar::i();
        let r = Scalar::sqrt2();
        assert_eq!(&i * &i, Scalar::from_int(-1));
        assert_eq!(&r * &r, Scalar::from_int(2));
        assert_eq!(&Scalar::i_over_sqrt2() * &Scalar::sqrt2_over_i(), Scalar::one());
    }

    #[test]
    fn inverse() {
        let x = &(&Scalar::from_frac(3, 7) + &Scalar::i()) + &Scalar::sqrt2();
        let y = x.inv().unwrap();
        assert_eq!(&x * &y, Scalar::one());
        assert!(Scalar::zero().inv().is_none());
    }
}
