//! Sparse polynomials in the modes `c, phi_m, phibar_m` and the symbols `Q, alpha, alphabar`.

use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::fmt;

/// A polynomial variable.
///
/// `Mode(k)` follows the bookkeeping `phi_0 = c`, `phi_{-k} = phibar_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Mode(i32),
    Q,
    Alpha,
    AlphaBar,
}

impl Var {
    pub fn c() -> Self {
        Var::Mode(0)
    }

    pub fn phi(m: u32) -> Self {
        Var::Mode(m as i32)
    }

    pub fn phibar(m: u32) -> Self {
        Var::Mode(-(m as i32))
    }

    fn slot(self) -> usize {
        match self {
            Var::Mode(0) => 0,
            Var::Q => 1,
            Var::Alpha => 2,
            Var::AlphaBar => 3,
            Var::Mode(k) if k > 0 => 4 + 2 * (k as usize - 1),
            Var::Mode(k) => 5 + 2 * ((-k) as usize - 1),
        }
    }

    fn from_slot(s: usize) -> Self {
        match s {
            0 => Var::Mode(0),
            1 => Var::Q,
            2 => Var::Alpha,
            3 => Var::AlphaBar,
            _ => {
                let m = ((s - 4) / 2 + 1) as i32;
                if (s - 4) % 2 == 0 {
                    Var::Mode(m)
                } else {
                    Var::Mode(-m)
                }
            }
        }
    }

    /// Image under complex conjugation.
    pub fn conj(self) -> Self {
        match self {
            Var::Mode(k) => Var::Mode(-k),
            Var::Q => Var::Q,
            Var::Alpha => Var::AlphaBar,
            Var::AlphaBar => Var::Alpha,
        }
    }

    pub fn is_param(self) -> bool {
        !matches!(self, Var::Mode(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Mode(0) => write!(f, "c"),
            Var::Mode(k) if *k > 0 => write!(f, "p{k}"),
            Var::Mode(k) => write!(f, "pb{}", -k),
            Var::Q => write!(f, "Q"),
            Var::Alpha => write!(f, "a"),
            Var::AlphaBar => write!(f, "ab"),
        }
    }
}

/// Exponent vector with trailing zeros trimmed, so equality is structural.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Self::one().with(v, 1)
    }

    fn trim(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn exp(&self, v: Var) -> u16 {
        self.0.get(v.slot()).copied().unwrap_or(0)
    }

    pub fn with(mut self, v: Var, e: u16) -> Self {
        let s = v.slot();
        if self.0.len() <= s {
            self.0.resize(s + 1, 0);
        }
        self.0[s] = e;
        self.trim()
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let n = self.0.len().max(o.0.len());
        let mut e = vec![0u16; n];
        for (i, x) in self.0.iter().enumerate() {
            e[i] += x;
        }
        for (i, x) in o.0.iter().enumerate() {
            e[i] += x;
        }
        Monomial(e)
    }

    /// Variables with nonzero exponent.
    pub fn vars(&self) -> impl Iterator<Item = (Var, u16)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0)
            .map(|(s, e)| (Var::from_slot(s), *e))
    }

    pub fn conj(&self) -> Monomial {
        let mut m = Monomial::one();
        for (v, e) in self.vars() {
            m = m.with(v.conj(), e);
        }
        m
    }

    /// Total degree in the mode variables (parameters excluded).
    pub fn mode_degree(&self) -> u32 {
        self.vars().filter(|(v, _)| !v.is_param()).map(|(_, e)| e as u32).sum()
    }

    pub fn is_param_only(&self) -> bool {
        self.vars().all(|(v, _)| v.is_param())
    }

    /// Split into (mode part, parameter part).
    pub fn split(&self) -> (Monomial, Monomial) {
        let mut modes = Monomial::one();
        let mut params = Monomial::one();
        for (v, e) in self.vars() {
            if v.is_param() {
                params = params.with(v, e);
            } else {
                modes = modes.with(v, e);
            }
        }
        (modes, params)
    }
}

/// Sparse polynomial with exact coefficients; zero terms are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModePoly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl ModePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn constant(s: Scalar) -> Self {
        Self::term(Monomial::one(), s)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Scalar::from_int(n))
    }

    pub fn var(v: Var) -> Self {
        Self::term(Monomial::var(v), Scalar::one())
    }

    pub fn term(m: Monomial, s: Scalar) -> Self {
        let mut p = Self::zero();
        p.add_term(m, s);
        p
    }

    pub fn q() -> Self {
        Self::var(Var::Q)
    }

    pub fn alpha() -> Self {
        Self::var(Var::Alpha)
    }

    pub fn alpha_bar() -> Self {
        Self::var(Var::AlphaBar)
    }

    pub fn phi(m: u32) -> Self {
        Self::var(Var::phi(m))
    }

    pub fn phibar(m: u32) -> Self {
        Self::var(Var::phibar(m))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, s: Scalar) {
        if s.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(c) => {
                *c += &s;
                if c.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, s);
            }
        }
    }

    pub fn add(&self, o: &ModePoly) -> ModePoly {
        let mut r = self.clone();
        for (m, s) in &o.terms {
            r.add_term(m.clone(), s.clone());
        }
        r
    }

    pub fn sub(&self, o: &ModePoly) -> ModePoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> ModePoly {
        self.scale(&Scalar::from_int(-1))
    }

    pub fn scale(&self, k: &Scalar) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m, s) in &self.terms {
            r.add_term(m.clone(), s * k);
        }
        r
    }

    pub fn scale_int(&self, k: i64) -> ModePoly {
        self.scale(&Scalar::from_int(k))
    }

    pub fn mul(&self, o: &ModePoly) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m1, s1) in &self.terms {
            for (m2, s2) in &o.terms {
                r.add_term(m1.mul(m2), s1 * s2);
            }
        }
        r
    }

    pub fn mul_var(&self, v: Var) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m, s) in &self.terms {
            let e = m.exp(v);
            r.add_term(m.clone().with(v, e + 1), s.clone());
        }
        r
    }

    pub fn pow(&self, k: u32) -> ModePoly {
        (0..k).fold(ModePoly::one(), |acc, _| acc.mul(self))
    }

    /// Partial derivative in `v`.
    pub fn deriv(&self, v: Var) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m, s) in &self.terms {
            let e = m.exp(v);
            if e > 0 {
                r.add_term(m.clone().with(v, e - 1), s.scale_int(e as i64));
            }
        }
        r
    }

    /// Ring involution: conjugates scalars, swaps `phi_m <-> phibar_m` and `alpha <-> alphabar`.
    pub fn conj(&self) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m, s) in &self.terms {
            r.add_term(m.conj(), s.conj());
        }
        r
    }

    /// Largest `|k|` among mode variables `phi_k` present.
    pub fn max_mode(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.vars().collect::<Vec<_>>())
            .filter_map(|(v, _)| match v {
                Var::Mode(k) => Some(k.unsigned_abs()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Mode variables appearing in some monomial.
    pub fn mode_vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self
            .terms
            .keys()
            .flat_map(|m| m.vars().map(|(v, _)| v).collect::<Vec<_>>())
            .filter(|v| !v.is_param())
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn is_param_only(&self) -> bool {
        self.terms.keys().all(|m| m.is_param_only())
    }

    pub fn max_mode_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.mode_degree()).max().unwrap_or(0)
    }

    /// Substitute `Q, alpha, alphabar` by exact scalars.
    pub fn eval_params(&self, q: &Scalar, alpha: &Scalar, alpha_bar: &Scalar) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m, s) in &self.terms {
            let (modes, params) = m.split();
            let mut c = s.clone();
            for (v, e) in params.vars() {
                let x = match v {
                    Var::Q => q,
                    Var::Alpha => alpha,
                    _ => alpha_bar,
                };
                for _ in 0..e {
                    c = &c * x;
                }
            }
            r.add_term(modes, c);
        }
        r
    }

    /// Value of a polynomial without variables.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, s) = self.terms.iter().next()?;
                (m == &Monomial::one()).then(|| s.clone())
            }
            _ => None,
        }
    }

    /// Substitute a polynomial for a parameter variable.
    pub fn substitute(&self, v: Var, by: &ModePoly) -> ModePoly {
        let mut r = ModePoly::zero();
        for (m, s) in &self.terms {
            let e = m.exp(v);
            let rest = ModePoly::term(m.clone().with(v, 0), s.clone());
            r = r.add(&rest.mul(&by.pow(e as u32)));
        }
        r
    }
}

impl fmt::Display for ModePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{s}")?;
            for (v, e) in m.vars() {
                if e == 1 {
                    write!(f, "*{v}")?;
                } else {
                    write!(f, "*{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_roundtrip() {
        for v in [Var::c(), Var::Q, Var::Alpha, Var::AlphaBar, Var::phi(3), Var::phibar(5)] {
            assert_eq!(Var::from_slot(v.slot()), v);
        }
    }

    #[test]
    fn cancellation_prunes() {
        let p = ModePoly::phi(1).add(&ModePoly::phi(1).neg());
        assert!(p.is_zero());
    }

    #[test]
    fn conj_is_involution() {
        let p = ModePoly::phi(2)
            .mul(&ModePoly::alpha())
            .scale(&Scalar::i())
            .add(&ModePoly::phibar(1).mul(&ModePoly::q()));
        assert_eq!(p.conj().conj(), p);
        assert_ne!(p.conj(), p);
    }

    #[test]
    fn derivative_of_power() {
        let p = ModePoly::phi(1).pow(3);
        assert_eq!(p.deriv(Var::phi(1)), ModePoly::phi(1).pow(2).scale_int(3));
    }
}
