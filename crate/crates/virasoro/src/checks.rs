//! Exhaustive relation checks over small test matrices.

use crate::ops::Engine;
use crate::poly::{ModePoly, Monomial, Var};
use crate::verma::{gram_commutator, gram_wick};
use crate::wick::{inner, WickLaw};
use crate::{Partition, Scalar, VirasoroError};
use rayon::prelude::*;

/// Outcome of an exact check: number of cases and the failing ones.
#[derive(Clone, Debug, Default)]
pub struct RelationReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }

    fn merge(mut self, o: RelationReport) -> RelationReport {
        self.checked += o.checked;
        self.failures.extend(o.failures);
        self
    }
}

/// All monomials of degree `<= deg` in the given variables.
pub fn monomials(vars: &[Var], deg: u32) -> Vec<ModePoly> {
    fn rec(vars: &[Var], start: usize, left: u32, cur: Monomial, out: &mut Vec<ModePoly>) {
        out.push(ModePoly::term(cur.clone(), Scalar::one()));
        if left == 0 {
            return;
        }
        for i in start..vars.len() {
            let e = cur.exp(vars[i]);
            rec(vars, i, left - 1, cur.clone().with(vars[i], e + 1), out);
        }
    }
    let mut out = Vec::new();
    rec(vars, 0, deg, Monomial::one(), &mut out);
    out
}

/// Variables `phi_1..phi_k`, optionally with `phibar_1..phibar_k` and `c`.
pub fn mode_vars(k: u32, antiholomorphic: bool, zero_mode: bool) -> Vec<Var> {
    let mut v = Vec::new();
    if zero_mode {
        v.push(Var::c());
    }
    for m in 1..=k {
        v.push(Var::phi(m));
        if antiholomorphic {
            v.push(Var::phibar(m));
        }
    }
    v
}

fn collect<F>(cases: Vec<(i32, i32, ModePoly)>, f: F) -> RelationReport
where
    F: Fn(i32, i32, &ModePoly) -> Result<ModePoly, VirasoroError> + Sync,
{
    cases
        .par_iter()
        .map(|(n, m, p)| {
            let mut r = RelationReport { checked: 1, failures: Vec::new() };
            match f(*n, *m, p) {
                Ok(res) if res.is_zero() => {}
                Ok(res) => r.failures.push(format!("n={n} m={m} p={p}: residual {res}")),
                Err(e) => r.failures.push(format!("n={n} m={m} p={p}: {e}")),
            }
            r
        })
        .reduce(RelationReport::default, RelationReport::merge)
}

fn grid(nmax: i32, polys: &[ModePoly]) -> Vec<(i32, i32, ModePoly)> {
    let mut cases = Vec::new();
    for n in -nmax..=nmax {
        for m in -nmax..=nmax {
            for p in polys {
                cases.push((n, m, p.clone()));
            }
        }
    }
    cases
}

/// `[D_n, D_m] = (n - m) D_{n+m}` on monomials of degree `<= 3` in `c, phi, phibar` up to mode `k`.
pub fn witt_relations(engine: &Engine, nmax: i32, k: u32) -> RelationReport {
    if 2 * nmax.unsigned_abs() > engine.m_max || k > engine.m_max {
        let failures = vec![VirasoroError::Truncation { var: format!("D_{}", 2 * nmax) }.to_string()];
        return RelationReport { checked: 0, failures };
    }
    let polys = monomials(&mode_vars(k, true, true), 3);
    // witt_apply rebuilds the operator each call, so build each D_j once
    let ops: std::collections::HashMap<i32, _> = (-2 * nmax..=2 * nmax).map(|j| (j, engine.witt_op(j))).collect();
    collect(grid(nmax, &polys), |n, m, p| {
        let d = |j: i32, x: &ModePoly| ops[&j].apply(x);
        let lhs = d(n, &d(m, p)?)?.sub(&d(m, &d(n, p)?)?);
        let rhs = d(n + m, p)?.scale_int((n - m) as i64);
        Ok(lhs.sub(&rhs))
    })
}

/// Virasoro relations with central charge `1 + 6Q^2` for symbolic `Q, alpha`.
pub fn virasoro_relations(engine: &Engine, nmax: i32, k: u32) -> RelationReport {
    let polys = monomials(&mode_vars(k, false, false), 3);
    let alpha = ModePoly::alpha();
    let c12 = Engine::central_charge().scale(&Scalar::from_frac(1, 12));
    collect(grid(nmax, &polys), |n, m, p| {
        let l = |j: i32, x: &ModePoly| engine.ff_apply(j, &alpha, x);
        let lhs = l(n, &l(m, p)?)?.sub(&l(m, &l(n, p)?)?);
        let mut rhs = l(n + m, p)?.scale_int((n - m) as i64);
        if n == -m {
            rhs = rhs.add(&p.mul(&c12).scale_int((n * n * n - n) as i64));
        }
        Ok(lhs.sub(&rhs))
    })
}

/// `<D_{n,alphabar} F, G> - <F, (D_{-n, 2Q - alpha} - T_n) G>` under the Neumann law.
pub fn adjoint_residual(
    engine: &Engine,
    n: i32,
    alpha: &ModePoly,
    f: &ModePoly,
    g: &ModePoly,
) -> Result<ModePoly, VirasoroError> {
    let law = WickLaw::NeumannDot;
    let lhs = inner(&engine.d_alpha_apply(n, &alpha.conj(), f)?, g, law)?;
    let dual = ModePoly::q().scale_int(2).sub(alpha);
    let t = engine.stress_mode_poly(n as u32)?;
    let g2 = engine.d_alpha_apply(-n, &dual, g)?.sub(&t.mul(g));
    Ok(lhs.sub(&inner(f, &g2, law)?))
}

/// Adjoint relations for `1 <= n <= nmax` over all pairs of test monomials.
pub fn adjoint_relations(engine: &Engine, nmax: i32, k: u32, deg: u32) -> RelationReport {
    let polys = monomials(&mode_vars(k, true, false), deg);
    let alpha = ModePoly::alpha();
    let law = WickLaw::NeumannDot;
    let dual = ModePoly::q().scale_int(2).sub(&alpha);
    let mut report = RelationReport::default();
    for n in 1..=nmax {
        let prep = |p: &ModePoly| -> Result<(ModePoly, ModePoly), VirasoroError> {
            let left = engine.d_alpha_apply(n, &alpha.conj(), p)?;
            let t = engine.stress_mode_poly(n as u32)?;
            let right = engine.d_alpha_apply(-n, &dual, p)?.sub(&t.mul(p));
            Ok((left, right))
        };
        let images: Vec<_> = polys.par_iter().map(prep).collect();
        let r = (0..polys.len())
            .into_par_iter()
            .map(|i| {
                let mut r = RelationReport::default();
                for j in 0..polys.len() {
                    r.checked += 1;
                    let res = match (&images[i], &images[j]) {
                        (Ok((lf, _)), Ok((_, rg))) => inner(lf, &polys[j], law)
                            .and_then(|a| Ok(a.sub(&inner(&polys[i], rg, law)?))),
                        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                    };
                    match res {
                        Ok(x) if x.is_zero() => {}
                        Ok(x) => r.failures.push(format!("n={n} F={} G={}: {x}", polys[i], polys[j])),
                        Err(e) => r.failures.push(format!("n={n}: {e}")),
                    }
                }
                r
            })
            .reduce(RelationReport::default, RelationReport::merge);
        report = report.merge(r);
    }
    report
}

/// Commutator-reduced and Wick-computed Gram constants agree for all weights `<= wmax`.
pub fn gram_consistency(engine: &Engine, wmax: u32) -> RelationReport {
    let alpha = ModePoly::alpha();
    let parts: Vec<Partition> = (0..=wmax).flat_map(Partition::all_of_weight).collect();
    let pairs: Vec<(Partition, Partition)> = parts
        .iter()
        .flat_map(|a| parts.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    pairs
        .par_iter()
        .map(|(k, k2)| {
            let mut r = RelationReport { checked: 1, failures: Vec::new() };
            let a = gram_commutator(&alpha, k, k2);
            match gram_wick(engine, &alpha, k, k2) {
                Ok(b) if a == b => {}
                Ok(b) => r.failures.push(format!("{k:?},{k2:?}: {a} vs {b}")),
                Err(e) => r.failures.push(format!("{k:?},{k2:?}: {e}")),
            }
            r
        })
        .reduce(RelationReport::default, RelationReport::merge)
}

/// Sign flip `phi -> -phi` on holomorphic polynomials.
pub fn parity(p: &ModePoly) -> ModePoly {
    let mut r = ModePoly::zero();
    for (m, s) in p.terms() {
        let odd = m.mode_degree() % 2 == 1;
        r.add_term(m.clone(), if odd { -s } else { s.clone() });
    }
    r
}

/// Holomorphic form of the adjoint `D_{n,2 alpha}^*`, i.e. `D_{-n, 2Q - 2 alphabar} - T_n`.
pub fn d_star_hol(engine: &Engine, n: i32, alpha: &ModePoly, p: &ModePoly) -> Result<ModePoly, VirasoroError> {
    let dual = ModePoly::q().scale_int(2).sub(&alpha.conj().scale_int(2));
    let t = engine.stress_mode_poly(n as u32)?;
    Ok(engine.d_alpha_apply(-n, &dual, p)?.sub(&t.mul(p)))
}

/// `D_{n,2 alpha}^* = P L_{-n, Q - alphabar} P` on holomorphic monomials, with `P` the parity map.
pub fn coincidence(engine: &Engine, nmax: i32, k: u32) -> RelationReport {
    let polys = monomials(&mode_vars(k, false, false), 3);
    let alpha = ModePoly::alpha();
    let shifted = ModePoly::q().sub(&alpha.conj());
    let mut cases = Vec::new();
    for n in 1..=nmax {
        for p in &polys {
            cases.push((n, 0, p.clone()));
        }
    }
    collect(cases, |n, _, p| {
        let lhs = d_star_hol(engine, n, &alpha, p)?;
        let rhs = parity(&engine.ff_apply(-n, &shifted, &parity(p))?);
        Ok(lhs.sub(&rhs))
    })
}

/// Level-two Gram determinant at exact `Q` and `alpha` values.
pub fn level2_det_at(q: &Scalar, alpha: &Scalar) -> Scalar {
    let (_, m) = crate::verma::gram_matrix(&ModePoly::alpha(), 2);
    let d = crate::verma::det(&m);
    d.eval_params(q, alpha, &alpha.conj()).as_constant().unwrap_or_else(Scalar::zero)
}
