//! Abstract highest-weight computations and the Kac table.

use crate::ops::Engine;
use crate::poly::ModePoly;
use crate::wick::{inner, WickLaw};
use crate::{Partition, VirasoroError};
use num_complex::Complex64;
use std::collections::HashMap;

/// Coefficient of the highest-weight vector in `L_{w_0} ... L_{w_last} 1`, using only
/// the Virasoro relations, `L_n 1 = 0` for `n > 0` and `L_0 1 = Delta 1`.
pub struct VacuumReducer {
    delta: ModePoly,
    c12: ModePoly,
    memo: HashMap<Vec<i32>, ModePoly>,
}

impl VacuumReducer {
    pub fn new(alpha: &ModePoly) -> Self {
        let c12 = Engine::central_charge().scale(&crate::Scalar::from_frac(1, 12));
        Self { delta: Engine::delta(alpha), c12, memo: HashMap::new() }
    }

    pub fn vev(&mut self, word: &[i32]) -> ModePoly {
        if word.is_empty() {
            return ModePoly::one();
        }
        if word.iter().sum::<i32>() != 0 {
            return ModePoly::zero();
        }
        if let Some(v) = self.memo.get(word) {
            return v.clone();
        }
        let last = word[word.len() - 1];
        let first = word[0];
        let r = if last > 0 || first < 0 {
            ModePoly::zero()
        } else if last == 0 {
            let d = self.delta.clone();
            self.vev(&word[..word.len() - 1]).mul(&d)
        } else if first == 0 {
            let d = self.delta.clone();
            self.vev(&word[1..]).mul(&d)
        } else {
            // Move the rightmost raising-index operator one step to the right.
            let j = word.iter().rposition(|&x| x > 0).expect("first > 0");
            let (a, b) = (word[j], word[j + 1]);
            let mut swapped = word.to_vec();
            swapped.swap(j, j + 1);
            let mut r = self.vev(&swapped);
            let mut merged = word[..j].to_vec();
            merged.push(a + b);
            merged.extend_from_slice(&word[j + 2..]);
            r = r.add(&self.vev(&merged).scale_int((a - b) as i64));
            if a + b == 0 {
                let mut dropped = word[..j].to_vec();
                dropped.extend_from_slice(&word[j + 2..]);
                let k = (a * a * a - a) as i64;
                let cc = self.c12.scale_int(k);
                r = r.add(&self.vev(&dropped).mul(&cc));
            }
            r
        };
        self.memo.insert(word.to_vec(), r.clone());
        r
    }
}

/// Word of `L_{k2} L_{-k}`: `(L_1)^{k_1} (L_2)^{k_2} ...` followed by `... (L_{-2})^{k_2} (L_{-1})^{k_1}`.
pub fn gram_word(k: &Partition, k2: &Partition) -> Vec<i32> {
    let mut w = Vec::new();
    for (i, &m) in k2.0.iter().enumerate() {
        w.extend(std::iter::repeat((i + 1) as i32).take(m as usize));
    }
    for (i, &m) in k.0.iter().enumerate().rev() {
        w.extend(std::iter::repeat(-((i + 1) as i32)).take(m as usize));
    }
    w
}

/// Gram constant `B_alpha(k, k2)` from commutators.
pub fn gram_commutator(alpha: &ModePoly, k: &Partition, k2: &Partition) -> ModePoly {
    VacuumReducer::new(alpha).vev(&gram_word(k, k2))
}

/// `<Psi_{alpha,k}, Psi_{2Q - alphabar, k2}>` under the circle law.
pub fn gram_wick(engine: &Engine, alpha: &ModePoly, k: &Partition, k2: &Partition) -> Result<ModePoly, VirasoroError> {
    let psi = engine.basis_state(alpha, k)?;
    let dual = ModePoly::q().scale_int(2).sub(&alpha.conj());
    let psi2 = engine.basis_state(&dual, k2)?;
    inner(&psi, &psi2, WickLaw::Circle)
}

/// Basis state together with its Gram constant, computed both ways.
pub fn basis_state_gram(
    engine: &Engine,
    alpha: &ModePoly,
    k: &Partition,
    k2: &Partition,
) -> Result<(ModePoly, ModePoly), VirasoroError> {
    if k.weight() > 6 || k2.weight() > 6 {
        return Err(VirasoroError::PartitionOverflow(k.weight().max(k2.weight())));
    }
    let state = engine.basis_state(alpha, k)?;
    let a = gram_commutator(alpha, k, k2);
    let b = gram_wick(engine, alpha, k, k2)?;
    if a != b {
        return Err(VirasoroError::GramMismatch { commutator: a.to_string(), wick: b.to_string() });
    }
    Ok((state, a))
}

/// Determinant of a small square matrix of polynomials (cofactor expansion).
pub fn det(m: &[Vec<ModePoly>]) -> ModePoly {
    let n = m.len();
    if n == 0 {
        return ModePoly::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut r = ModePoly::zero();
    for j in 0..n {
        let minor: Vec<Vec<ModePoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let t = m[0][j].mul(&det(&minor));
        r = if j % 2 == 0 { r.add(&t) } else { r.sub(&t) };
    }
    r
}

/// Gram matrix at a given level over all partitions of that weight.
pub fn gram_matrix(alpha: &ModePoly, level: u32) -> (Vec<Partition>, Vec<Vec<ModePoly>>) {
    let parts = Partition::all_of_weight(level);
    let mut red = VacuumReducer::new(alpha);
    let m = parts
        .iter()
        .map(|k| parts.iter().map(|k2| red.vev(&gram_word(k, k2))).collect())
        .collect();
    (parts, m)
}

/// Membership in the Kac sets `(1 +- r) gamma/2 + (1 +- s) 2/gamma`, `r, s >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KacClass {
    InPlus { r: u32, s: u32 },
    InMinus { r: u32, s: u32 },
    Outside,
}

pub fn kac_membership(alpha: Complex64, gamma: f64, tol: f64) -> KacClass {
    if alpha.im.abs() > tol {
        return KacClass::Outside;
    }
    let a = alpha.re;
    let rmax = (2.0 * a.abs() / gamma).ceil() as u32 + 2;
    let smax = (gamma * a.abs() / 2.0).ceil() as u32 + 2;
    for sign in [-1.0, 1.0] {
        for r in 1..=rmax {
            for s in 1..=smax {
                let v = (1.0 + sign * r as f64) * gamma / 2.0 + (1.0 + sign * s as f64) * 2.0 / gamma;
                if (v - a).abs() <= tol {
                    return if sign < 0.0 { KacClass::InMinus { r, s } } else { KacClass::InPlus { r, s } };
                }
            }
        }
    }
    KacClass::Outside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_gram_is_two_delta() {
        let a = ModePoly::alpha();
        let k = Partition(vec![1]);
        assert_eq!(gram_commutator(&a, &k, &k), Engine::delta(&a).scale_int(2));
    }

    #[test]
    fn kac_examples() {
        let g = 1.3;
        assert_eq!(kac_membership(Complex64::new(0.0, 0.0), g, 1e-12), KacClass::InMinus { r: 1, s: 1 });
        assert_eq!(kac_membership(Complex64::new(g + 4.0 / g, 0.0), g, 1e-12), KacClass::InPlus { r: 1, s: 1 });
        let q = g / 2.0 + 2.0 / g;
        assert_eq!(kac_membership(Complex64::new(q, 0.1), g, 1e-12), KacClass::Outside);
    }
}
