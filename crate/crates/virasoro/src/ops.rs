//! Heisenberg, Feigin-Fuchs and Witt operators acting on [`ModePoly`].

use crate::poly::{ModePoly, Var};
use crate::scalar::Scalar;
use crate::VirasoroError;
use std::collections::BTreeMap;

/// First-order differential operator `mult + sum_v coeff_v d_v`.
///
/// `forbidden` lists variables whose coefficient would need a mode beyond the
/// truncation; applying the operator to a polynomial containing one of them is
/// a truncation error rather than a silent drop.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorExpr {
    pub mult: ModePoly,
    pub derivs: BTreeMap<Var, ModePoly>,
    pub forbidden: Vec<Var>,
}

impl OperatorExpr {
    pub fn apply(&self, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
        let vars = p.mode_vars();
        if let Some(v) = vars.iter().find(|v| self.forbidden.contains(v)) {
            return Err(VirasoroError::Truncation { var: v.to_string() });
        }
        let mut r = self.mult.mul(p);
        for v in vars {
            if let Some(c) = self.derivs.get(&v) {
                r = r.add(&c.mul(&p.deriv(v)));
            }
        }
        Ok(r)
    }

    /// Derivation part only, applied to a coefficient polynomial.
    fn derive(&self, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
        let mut bare = self.clone();
        bare.mult = ModePoly::zero();
        bare.apply(p)
    }

    /// `[self, other]`, again a first-order operator.
    pub fn commutator(&self, o: &OperatorExpr) -> Result<OperatorExpr, VirasoroError> {
        let mut derivs = BTreeMap::new();
        let keys: Vec<Var> = self.derivs.keys().chain(o.derivs.keys()).copied().collect();
        for v in keys {
            if derivs.contains_key(&v) {
                continue;
            }
            let zero = ModePoly::zero();
            let a = self.derive(o.derivs.get(&v).unwrap_or(&zero))?;
            let b = o.derive(self.derivs.get(&v).unwrap_or(&zero))?;
            let c = a.sub(&b);
            if !c.is_zero() {
                derivs.insert(v, c);
            }
        }
        let mult = self.derive(&o.mult)?.sub(&o.derive(&self.mult)?);
        let mut forbidden = self.forbidden.clone();
        forbidden.extend(o.forbidden.iter().copied());
        forbidden.sort();
        forbidden.dedup();
        Ok(OperatorExpr { mult, derivs, forbidden })
    }

    pub fn add(&self, o: &OperatorExpr) -> OperatorExpr {
        let mut r = self.clone();
        r.mult = r.mult.add(&o.mult);
        for (v, c) in &o.derivs {
            let e = r.derivs.entry(*v).or_default();
            *e = e.add(c);
        }
        r.derivs.retain(|_, c| !c.is_zero());
        r.forbidden.extend(o.forbidden.iter().copied());
        r.forbidden.sort();
        r.forbidden.dedup();
        r
    }

    pub fn scale(&self, k: &Scalar) -> OperatorExpr {
        OperatorExpr {
            mult: self.mult.scale(k),
            derivs: self
                .derivs
                .iter()
                .map(|(v, c)| (*v, c.scale(k)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
            forbidden: self.forbidden.clone(),
        }
    }
}

/// Operator engine with mode truncation `M`: only `phi_1..phi_M` exist.
#[derive(Clone, Copy, Debug)]
pub struct Engine {
    pub m_max: u32,
}

impl Default for Engine {
    fn default() -> Self {
        Self { m_max: 12 }
    }
}

fn half() -> Scalar {
    Scalar::from_frac(1, 2)
}

impl Engine {
    pub fn new(m_max: u32) -> Self {
        Self { m_max }
    }

    fn check(&self, k: i32) -> Result<(), VirasoroError> {
        if k.unsigned_abs() > self.m_max {
            Err(VirasoroError::Truncation { var: Var::Mode(k).to_string() })
        } else {
            Ok(())
        }
    }

    fn check_poly(&self, p: &ModePoly) -> Result<(), VirasoroError> {
        if p.max_mode() > self.m_max {
            return Err(VirasoroError::Truncation { var: format!("mode {}", p.max_mode()) });
        }
        Ok(())
    }

    /// Witt operator `D_n` as an [`OperatorExpr`], with `phi_0 = c` and `phi_{-k} = phibar_k`:
    /// `D_n = sum_k [(k-n) phi_{k-n} + Q n delta_{k,n}] d_{phi_k}`.
    pub fn witt_op(&self, n: i32) -> OperatorExpr {
        let m = self.m_max as i32;
        let mut op = OperatorExpr::default();
        for k in -m..=m {
            let j = k - n;
            if j.abs() > m {
                if j != 0 {
                    op.forbidden.push(Var::Mode(k));
                }
                continue;
            }
            let mut c = ModePoly::var(Var::Mode(j)).scale_int((k - n) as i64);
            if k == n {
                c = c.add(&ModePoly::q().scale_int(n as i64));
            }
            if !c.is_zero() {
                op.derivs.insert(Var::Mode(k), c);
            }
        }
        op
    }

    pub fn witt_apply(&self, n: i32, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
        self.check(n)?;
        self.check_poly(p)?;
        self.witt_op(n).apply(p)
    }

    /// `D_{n,alpha}`: `D_n` with `d_c` replaced by multiplication by `alpha / 2`.
    pub fn d_alpha_op(&self, n: i32, alpha: &ModePoly) -> OperatorExpr {
        let mut op = self.witt_op(n);
        if let Some(c) = op.derivs.remove(&Var::c()) {
            op.mult = c.mul(alpha).scale(&half());
        }
        op.forbidden.retain(|v| *v != Var::c());
        op
    }

    pub fn d_alpha_apply(&self, n: i32, alpha: &ModePoly, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
        self.check(n)?;
        self.check_poly(p)?;
        self.d_alpha_op(n, alpha).apply(p)
    }

    /// Heisenberg mode `A_n`; `alpha` only enters through `A_0 = (i/sqrt2)(Q - alpha)`.
    pub fn heisenberg_apply(&self, n: i32, alpha: &ModePoly, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
        self.check(n)?;
        self.check_poly(p)?;
        Ok(match n {
            0 => p.mul(&ModePoly::q().sub(alpha)).scale(&Scalar::i_over_sqrt2()),
            n if n > 0 => p.deriv(Var::phi(n as u32)).scale(&Scalar::i_over_sqrt2()),
            n => p
                .mul_var(Var::phi((-n) as u32))
                .scale(&Scalar::sqrt2_over_i().scale_int((-n) as i64)),
        })
    }

    /// Highest weight `Delta_alpha = (alpha/2)(Q - alpha/2)`.
    pub fn delta(alpha: &ModePoly) -> ModePoly {
        alpha
            .scale(&half())
            .mul(&ModePoly::q().sub(&alpha.scale(&half())))
    }

    /// Central charge `1 + 6 Q^2`.
    pub fn central_charge() -> ModePoly {
        ModePoly::one().add(&ModePoly::q().pow(2).scale_int(6))
    }

    /// Feigin-Fuchs generator `L_{n,alpha}`, normal ordered so only finitely many
    /// terms act on `p`.
    pub fn ff_apply(&self, n: i32, alpha: &ModePoly, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
        self.check(n)?;
        self.check_poly(p)?;
        let a = |k: i32, x: &ModePoly| self.heisenberg_apply(k, alpha, x);
        let top = p.max_mode() as i32;
        let mut r = ModePoly::zero();
        if n == 0 {
            r = p.mul(&Self::delta(alpha));
            for m in 1..=top {
                r = r.add(&a(-m, &a(m, p)?)?);
            }
            return Ok(r);
        }
        r = r.add(&a(n, p)?.mul(&ModePoly::q()).scale(&Scalar::i_over_sqrt2().scale_int(n as i64)));
        // Pairs (j, n - j) with j > max(0, n): annihilator j acts first, counted twice.
        for j in (n.max(0) + 1)..=top {
            r = r.add(&a(n - j, &a(j, p)?)?);
        }
        // A_0 A_n appears twice in the symmetric sum.
        r = r.add(&a(0, &a(n, p)?)?);
        // Both indices strictly between 0 and n.
        let (lo, hi) = if n > 0 { (1, n - 1) } else { (n + 1, -1) };
        let mut inner = ModePoly::zero();
        for j in lo..=hi {
            inner = inner.add(&a(j, &a(n - j, p)?)?);
        }
        r = r.add(&inner.scale(&half()));
        Ok(r)
    }

    /// Stress-tensor pairing `(T phi, v_{-n})` for `n >= 0`:
    /// `sum_{a+b=n, a,b>=1} a b phi_a phi_b - Q n (n-1) phi_n`.
    pub fn stress_mode_poly(&self, n: u32) -> Result<ModePoly, VirasoroError> {
        if n + 2 > self.m_max {
            return Err(VirasoroError::Truncation { var: format!("stress mode {n}") });
        }
        let mut r = ModePoly::zero();
        for a in 1..n {
            let b = n - a;
            r = r.add(&ModePoly::phi(a).mul(&ModePoly::phi(b)).scale_int((a * b) as i64));
        }
        if n >= 2 {
            let k = (n * (n - 1)) as i64;
            r = r.sub(&ModePoly::phi(n).mul(&ModePoly::q()).scale_int(k));
        }
        Ok(r)
    }

    /// `L_{-k,alpha} 1`, applying `L_{-1}` first (partition read in reverse).
    pub fn basis_state(&self, alpha: &ModePoly, k: &crate::Partition) -> Result<ModePoly, VirasoroError> {
        let mut s = ModePoly::one();
        for (i, &mult) in k.0.iter().enumerate() {
            for _ in 0..mult {
                s = self.ff_apply(-((i + 1) as i32), alpha, &s)?;
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e() -> Engine {
        Engine::new(12)
    }

    #[test]
    fn witt_zero_is_grading() {
        for m in 1..5 {
            let p = ModePoly::phi(m);
            assert_eq!(e().witt_apply(0, &p).unwrap(), p.scale_int(m as i64));
        }
    }

    #[test]
    fn witt_one_on_phi1_is_q() {
        assert_eq!(e().witt_apply(1, &ModePoly::phi(1)).unwrap(), ModePoly::q());
    }

    #[test]
    fn d_alpha_on_constants() {
        let a = ModePoly::alpha();
        let one = ModePoly::one();
        assert_eq!(
            e().d_alpha_apply(1, &a, &one).unwrap(),
            a.mul(&ModePoly::phibar(1)).scale(&Scalar::from_frac(-1, 2))
        );
        assert_eq!(
            e().d_alpha_apply(-1, &a, &one).unwrap(),
            a.mul(&ModePoly::phi(1)).scale(&Scalar::from_frac(1, 2))
        );
    }

    #[test]
    fn heisenberg_values() {
        let a = ModePoly::alpha();
        assert_eq!(
            e().heisenberg_apply(1, &a, &ModePoly::phi(1)).unwrap(),
            ModePoly::constant(Scalar::i_over_sqrt2())
        );
        assert_eq!(
            e().heisenberg_apply(0, &a, &ModePoly::one()).unwrap(),
            ModePoly::q().sub(&a).scale(&Scalar::i_over_sqrt2())
        );
    }

    #[test]
    fn l_minus_one_on_vacuum() {
        // Hand expansion: only A_0 A_{-1} and the Q-term survive, giving -alpha phi_1.
        let a = ModePoly::alpha();
        let r = e().ff_apply(-1, &a, &ModePoly::one()).unwrap();
        assert_eq!(r, a.mul(&ModePoly::phi(1)).neg());
    }

    #[test]
    fn l0_on_vacuum() {
        let a = ModePoly::alpha();
        assert_eq!(e().ff_apply(0, &a, &ModePoly::one()).unwrap(), Engine::delta(&a));
    }

    #[test]
    fn truncation_is_reported() {
        let eng = Engine::new(3);
        assert!(eng.witt_apply(-3, &ModePoly::phi(1)).is_err());
        assert!(eng.witt_apply(2, &ModePoly::phi(3)).is_ok());
        assert!(eng.witt_apply(4, &ModePoly::one()).is_err());
    }

    #[test]
    fn stress_modes() {
        assert!(e().stress_mode_poly(0).unwrap().is_zero());
        assert!(e().stress_mode_poly(1).unwrap().is_zero());
        let t2 = e().stress_mode_poly(2).unwrap();
        let phi1_part = ModePoly::phi(1).pow(2);
        assert_eq!(t2, phi1_part.sub(&ModePoly::phi(2).mul(&ModePoly::q()).scale_int(2)));
    }
}
