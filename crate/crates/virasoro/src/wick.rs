//! Gaussian moments of mode polynomials.

use crate::poly::{ModePoly, Var};
use crate::scalar::Scalar;
use crate::VirasoroError;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// Law of the modes: independent complex Gaussians with `E|phi_m|^2 = sigma_m^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WickLaw {
    /// Covariance `-2 log|z - w|`: `sigma_m^2 = 1/m`.
    NeumannDot,
    /// Covariance `-log|z - w|`: `sigma_m^2 = 1/(2m)`.
    Circle,
}

impl WickLaw {
    pub fn variance(self, m: u32) -> BigRational {
        let d = match self {
            WickLaw::NeumannDot => m,
            WickLaw::Circle => 2 * m,
        };
        BigRational::new(BigInt::one(), BigInt::from(d))
    }
}

fn factorial(n: u16) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `E[p]` using `E[phi_m^a phibar_m^b] = delta_ab a! sigma_m^{2a}`; parameters are kept.
pub fn wick_expectation(p: &ModePoly, law: WickLaw) -> Result<ModePoly, VirasoroError> {
    let mut r = ModePoly::zero();
    'terms: for (mono, s) in p.terms() {
        let (modes, params) = mono.split();
        let mut w = BigRational::one();
        let top = p.max_mode();
        if modes.exp(Var::c()) > 0 {
            return Err(VirasoroError::ZeroModeInExpectation);
        }
        for m in 1..=top {
            let a = modes.exp(Var::phi(m));
            let b = modes.exp(Var::phibar(m));
            if a != b {
                continue 'terms;
            }
            if a > 0 {
                let var = law.variance(m);
                let mut f = BigRational::from_integer(factorial(a));
                for _ in 0..a {
                    f *= &var;
                }
                w *= f;
            }
        }
        r.add_term(params, s.scale_rat(&w));
    }
    Ok(r)
}

/// `<F, G> = E[F conj(G)]`.
pub fn inner(f: &ModePoly, g: &ModePoly, law: WickLaw) -> Result<ModePoly, VirasoroError> {
    wick_expectation(&f.mul(&g.conj()), law)
}

/// Orthogonal projection onto holomorphic polynomials:
/// `phi_m^a phibar_m^b -> a!/(a-b)! sigma_m^{2b} phi_m^{a-b}` (zero if `b > a`).
pub fn holomorphic_projection(p: &ModePoly, law: WickLaw) -> ModePoly {
    let mut r = ModePoly::zero();
    let top = p.max_mode();
    'terms: for (mono, s) in p.terms() {
        let mut out = mono.clone();
        let mut w = BigRational::one();
        for m in 1..=top {
            let a = mono.exp(Var::phi(m));
            let b = mono.exp(Var::phibar(m));
            if b == 0 {
                continue;
            }
            if b > a {
                continue 'terms;
            }
            let var = law.variance(m);
            let mut f = BigRational::from_integer(factorial(a) / factorial(a - b));
            for _ in 0..b {
                f *= &var;
            }
            w *= f;
            out = out.with(Var::phi(m), a - b).with(Var::phibar(m), 0);
        }
        r.add_term(out, s.scale_rat(&w));
    }
    r
}

/// Exact scalar of a variable-free expectation.
pub fn scalar_expectation(p: &ModePoly, law: WickLaw) -> Result<Scalar, VirasoroError> {
    wick_expectation(p, law)?
        .as_constant()
        .ok_or(VirasoroError::NotConstant)
}
