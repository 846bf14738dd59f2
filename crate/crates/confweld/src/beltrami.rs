//! First-order quasiconformal deformations: Beltrami differentials, their
//! Cauchy transforms, normalized flows, pullbacks and the ghost kernel.

use crate::conformal::{schwarzian_from_derivs, MapKind, PowerSeriesMap};
use crate::quadrature::{annulus_integral, annulus_integral_vec, annulus_nodes, Annulus, Estimate, QuadOptions};
use crate::real::{cabs, cnan, cpowi, polar, Cx, Real};
use crate::ConfError;
use num_complex::Complex;
use std::sync::Arc;

type Evaluator<T> = Arc<dyn Fn(Cx<T>) -> Cx<T> + Send + Sync>;

fn zero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// Beltrami differential `mu(z) dzbar/dz` supported on an annulus.
#[derive(Clone)]
pub struct BeltramiSpec<T> {
    evaluator: Option<Evaluator<T>>,
    pub support: Annulus<T>,
    pub sup_norm: T,
}

impl<T: Real> std::fmt::Debug for BeltramiSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BeltramiSpec")
            .field("support", &self.support)
            .field("sup_norm", &self.sup_norm)
            .field("zero", &self.is_zero())
            .finish()
    }
}

impl<T: Real> BeltramiSpec<T> {
    /// `f` is only consulted on the support; outside it the differential is 0.
    pub fn new(support: Annulus<T>, sup_norm: T, f: impl Fn(Cx<T>) -> Cx<T> + Send + Sync + 'static) -> Self {
        BeltramiSpec { evaluator: Some(Arc::new(f)), support, sup_norm }
    }

    pub fn zero() -> Self {
        BeltramiSpec { evaluator: None, support: Annulus::new(T::zero(), Some(T::zero())), sup_norm: T::zero() }
    }

    /// Constant `c` on the annulus.
    pub fn constant(support: Annulus<T>, c: Cx<T>) -> Self {
        Self::new(support, cabs(c), move |_| c)
    }

    /// Laurent mode `mu_n(z) = n 4^n z zbar^{-n-1}` on `|z| > 2`.
    ///
    /// Its Cauchy transform restricted to the unit circle is `-z^{n+1}` up to
    /// the affine part fixed by the normalization.
    pub fn laurent(n: i32) -> Result<Self, ConfError> {
        if n < 1 {
            return Err(ConfError::Domain(format!("Laurent mode n = {n} must be positive")));
        }
        let c = T::lit(n as f64) * T::lit(4.0).powi(n);
        let sup = c / T::lit(2.0).powi(n);
        Ok(Self::new(Annulus::exterior(T::lit(2.0)), sup, move |z: Cx<T>| z * cpowi(z.conj(), -n - 1) * c))
    }

    pub fn is_zero(&self) -> bool {
        self.evaluator.is_none()
    }

    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        match &self.evaluator {
            Some(f) if self.support.contains(z) => f(z),
            _ => zero(),
        }
    }

    pub fn scaled(&self, s: Cx<T>) -> Self {
        match &self.evaluator {
            None => Self::zero(),
            Some(f) => {
                let f = f.clone();
                BeltramiSpec { evaluator: Some(Arc::new(move |z| f(z) * s)), support: self.support, sup_norm: self.sup_norm * cabs(s) }
            }
        }
    }

    /// Pointwise sum; the support is the smallest annulus containing both.
    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let (a, b) = (self.clone(), o.clone());
        let r_in = a.support.r_in.min(b.support.r_in);
        let r_out = match (a.support.r_out, b.support.r_out) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        let sup = a.sup_norm + b.sup_norm;
        Self::new(Annulus::new(r_in, r_out), sup, move |z| a.eval(z) + b.eval(z))
    }
}

/// `iota^* mu(z) = (z / zbar)^2 conj(mu(1 / zbar))`, the reflection across the unit circle.
pub fn iota_pullback<T: Real>(mu: &BeltramiSpec<T>) -> BeltramiSpec<T> {
    if mu.is_zero() {
        return BeltramiSpec::zero();
    }
    let r_in = mu.support.r_out.map_or(T::zero(), |o| if o > T::zero() { T::one() / o } else { T::zero() });
    let r_out = if mu.support.r_in > T::zero() { Some(T::one() / mu.support.r_in) } else { None };
    let m = mu.clone();
    BeltramiSpec::new(Annulus::new(r_in, r_out), mu.sup_norm, move |z: Cx<T>| {
        if z == zero() {
            return zero();
        }
        let ratio = z / z.conj();
        ratio * ratio * m.eval(Complex::new(T::one(), T::zero()) / z.conj()).conj()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Push,
    Pull,
}

/// Smallest and largest modulus of `f` on the circle `|z| = r`.
fn circle_extent<T: Real>(f: impl Fn(Cx<T>) -> Result<Cx<T>, ConfError>, r: T) -> Result<(T, T), ConfError> {
    let mut lo = T::max_value().unwrap_or(T::lit(1e300));
    let mut hi = T::zero();
    for j in 0..256 {
        let w = cabs(f(polar(r, T::two_pi() * T::lit(j as f64 / 256.0)))?);
        lo = lo.min(w);
        hi = hi.max(w);
    }
    Ok((lo, hi))
}

/// Winding number of `f` around `c` on `|z| = r`, counted from 512 samples.
fn winding<T: Real>(f: &PowerSeriesMap<T>, r: T, c: Cx<T>) -> Result<i64, ConfError> {
    let n = 512;
    let mut total = T::zero();
    let mut prev = f.eval(polar(r, T::zero()))? - c;
    for j in 1..=n {
        let cur = f.eval(polar(r, T::two_pi() * T::lit(j as f64 / n as f64)))? - c;
        total += crate::real::carg(cur / prev);
        prev = cur;
    }
    Ok((total / T::two_pi()).f64().round() as i64)
}

/// Pushforward `f_* mu` or pullback `f^* mu` by a conformal series map.
pub fn pushforward_beltrami<T: Real>(f: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>, direction: Direction) -> Result<BeltramiSpec<T>, ConfError> {
    if mu.is_zero() {
        return Ok(BeltramiSpec::zero());
    }
    let pad = T::lit(1e-9);
    let check_injective = |radii: &[T]| -> Result<(), ConfError> {
        let center = match f.kind() {
            MapKind::Interior => f.eval(zero())?,
            MapKind::Exterior => f.coeffs().get(1).copied().unwrap_or_else(zero),
        };
        for &r in radii {
            if r > T::zero() && winding(f, r, center)? != 1 {
                return Err(ConfError::Domain(format!("map is not injective on |z| = {}", r.f64())));
            }
        }
        Ok(())
    };
    match direction {
        Direction::Push => {
            let mut radii = vec![mu.support.r_in];
            if let Some(o) = mu.support.r_out {
                radii.push(o);
            }
            check_injective(&radii)?;
            let r_in = if mu.support.r_in > T::zero() {
                circle_extent(|z| f.eval(z), mu.support.r_in)?.0 * (T::one() - pad)
            } else {
                T::zero()
            };
            let r_out = match mu.support.r_out {
                Some(o) => Some(circle_extent(|z| f.eval(z), o)?.1 * (T::one() + pad)),
                None => None,
            };
            let (m, fm) = (mu.clone(), f.clone());
            Ok(BeltramiSpec::new(Annulus::new(r_in, r_out), mu.sup_norm, move |w| {
                let Ok(z) = fm.invert_point(w, None) else {
                    return cnan();
                };
                if !m.support.contains(z) {
                    return zero();
                }
                let d = fm.deriv(z).unwrap_or_else(|_| cnan());
                m.eval(z) * d / d.conj()
            }))
        }
        Direction::Pull => {
            let inv = |w: Cx<T>| f.invert_point(w, None);
            let r_in = if mu.support.r_in > T::zero() {
                circle_extent(inv, mu.support.r_in)?.0 * (T::one() - pad)
            } else {
                T::zero()
            };
            let r_out = match mu.support.r_out {
                Some(o) => Some(circle_extent(inv, o)?.1 * (T::one() + pad)),
                None => None,
            };
            let mut radii = vec![r_in];
            if let Some(o) = r_out {
                radii.push(o);
            }
            check_injective(&radii)?;
            let (m, fm) = (mu.clone(), f.clone());
            Ok(BeltramiSpec::new(Annulus::new(r_in, r_out), mu.sup_norm, move |z| {
                let Ok(d) = fm.eval_derivs(z, 1) else {
                    return cnan();
                };
                m.eval(d[0]) * d[1].conj() / d[1]
            }))
        }
    }
}

/// Value of the Cauchy transform at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformValue<T> {
    /// `w_mu(z)`.
    pub w: Cx<T>,
    /// `v_mu(z) = i z w_mu(z)`.
    pub v: Cx<T>,
    pub error: T,
    /// Set when `z` lies inside the support and the singular part was split off.
    pub principal: bool,
}

/// `chi(s) = 1` for `s <= 1/2`, `0` for `s >= 1`, smooth in between.
fn bump<T: Real>(s: T) -> T {
    let h = |x: T| if x <= T::zero() { T::zero() } else { (-T::one() / x).exp() };
    let x = T::lit(2.0) * s - T::one();
    if x <= T::zero() {
        return T::one();
    }
    if x >= T::one() {
        return T::zero();
    }
    let a = h(T::one() - x);
    a / (a + h(x))
}

fn strictly_inside<T: Real>(ann: &Annulus<T>, p: Cx<T>) -> bool {
    let r = cabs(p);
    (r > ann.r_in || (ann.r_in == T::zero() && r == T::zero())) && ann.r_out.map_or(true, |o| r < o)
}

fn on_boundary<T: Real>(ann: &Annulus<T>, p: Cx<T>) -> bool {
    let r = cabs(p);
    let tol = T::lit(1e-12) * (T::one() + r);
    (ann.r_in > T::zero() && (r - ann.r_in).abs() <= tol) || ann.r_out.map_or(false, |o| (r - o).abs() <= tol)
}

/// `int mu(zeta) k(zeta) dA` where `k` has simple poles at `poles` (with residues
/// already folded in by the caller). Poles inside the support are cut out with a
/// smooth partition of unity and integrated in polar coordinates around them.
fn singular_integral<T, K>(mu: &BeltramiSpec<T>, kernel: K, poles: &[Cx<T>], opts: QuadOptions<T>) -> Result<(Estimate<T>, bool), ConfError>
where
    T: Real,
    K: Fn(Cx<T>) -> Cx<T> + Sync,
{
    let s = mu.support;
    let inner: Vec<Cx<T>> = poles.iter().copied().filter(|&p| p != zero() && strictly_inside(&s, p)).collect();
    if inner.is_empty() {
        let e = annulus_integral(|z| mu.eval(z) * kernel(z), zero(), s, opts)?;
        return Ok((e, false));
    }
    let mut radii = Vec::with_capacity(inner.len());
    for (i, &p) in inner.iter().enumerate() {
        let r = cabs(p);
        let mut rho = (r - s.r_in).min(r);
        if let Some(o) = s.r_out {
            rho = rho.min(o - r);
        }
        for (j, &q) in poles.iter().enumerate() {
            if j != i && q != p {
                rho = rho.min(cabs(q - p));
            }
        }
        radii.push(rho * T::lit(0.45));
    }
    let cut = |z: Cx<T>| -> T {
        let mut c = T::zero();
        for (p, rho) in inner.iter().zip(&radii) {
            c += bump(cabs(z - *p) / *rho);
        }
        c
    };
    let mut total = annulus_integral(|z| mu.eval(z) * kernel(z) * (T::one() - cut(z)), zero(), s, opts)?;
    for (p, rho) in inner.iter().zip(&radii) {
        let (p, rho) = (*p, *rho);
        let e = annulus_integral(
            |z| {
                if z == p {
                    return zero();
                }
                mu.eval(z) * kernel(z) * bump(cabs(z - p) / rho)
            },
            p,
            Annulus::disc(rho),
            opts,
        )?;
        total = total.add(e);
    }
    Ok((total, true))
}

/// Cauchy transform `w_mu(z)`, normalized by `w(0) = w(1) = 0`.
pub fn cauchy_transform<T: Real>(mu: &BeltramiSpec<T>, z: Cx<T>) -> Result<TransformValue<T>, ConfError> {
    cauchy_transform_with(mu, z, QuadOptions::default())
}

pub fn cauchy_transform_with<T: Real>(mu: &BeltramiSpec<T>, z: Cx<T>, opts: QuadOptions<T>) -> Result<TransformValue<T>, ConfError> {
    let one = re(T::one());
    let i = Complex::new(T::zero(), T::one());
    if mu.is_zero() || z == one {
        return Ok(TransformValue { w: zero(), v: zero(), error: T::zero(), principal: false });
    }
    if on_boundary(&mu.support, z) {
        return Err(ConfError::Domain("z on the boundary of the support".into()));
    }
    let pi = T::pi();
    if z == zero() {
        // w(0) = v'(0) / i
        let (e, principal) = singular_integral(mu, |s| one / (s * s * (s - one)), &[zero(), one], degrade(opts, false))?;
        let d = e.value / pi;
        return Ok(TransformValue { w: d / i, v: zero(), error: e.error / pi, principal });
    }
    let principal_needed = strictly_inside(&mu.support, z) || strictly_inside(&mu.support, one);
    let (e, principal) = singular_integral(mu, |s| z * (z - one) / (s * (s - one) * (s - z)), &[zero(), one, z], degrade(opts, principal_needed))?;
    let v = -e.value / pi;
    Ok(TransformValue { w: v / (i * z), v, error: e.error / pi, principal })
}

fn degrade<T: Real>(opts: QuadOptions<T>, principal: bool) -> QuadOptions<T> {
    if principal {
        QuadOptions { abs_tol: opts.abs_tol.max(T::lit(1e-9)), rel_tol: opts.rel_tol.max(T::lit(1e-8)), ..opts }
    } else {
        opts
    }
}

/// `v'(0) = (1/pi) int mu / (zeta^2 (zeta - 1))`; needs `mu` to vanish near 0.
pub fn transform_derivative_at_zero<T: Real>(mu: &BeltramiSpec<T>, opts: QuadOptions<T>) -> Result<Estimate<T>, ConfError> {
    let one = re(T::one());
    let (e, _) = singular_integral(mu, |s| one / (s * s * (s - one)), &[one], opts)?;
    Ok(e.scale(re(T::one() / T::pi())))
}

/// `v'(infinity) = lim v(z)/z = (1/pi) int mu / (zeta (zeta - 1))`; needs bounded support.
pub fn transform_derivative_at_infinity<T: Real>(mu: &BeltramiSpec<T>, opts: QuadOptions<T>) -> Result<Estimate<T>, ConfError> {
    let one = re(T::one());
    let (e, _) = singular_integral(mu, |s| one / (s * (s - one)), &[zero(), one], opts)?;
    Ok(e.scale(re(T::one() / T::pi())))
}

/// Cauchy transform sampled through a fixed quadrature rule.
///
/// The rule is chosen once by refining until the transform converges at the
/// probe points; afterwards each evaluation is a plain weighted sum. Only valid
/// away from the support.
#[derive(Clone, Debug)]
pub struct CauchyRule<T> {
    nodes: Vec<(Cx<T>, Cx<T>)>,
    pub error: T,
}

impl<T: Real> CauchyRule<T> {
    pub fn new(mu: &BeltramiSpec<T>, probes: &[Cx<T>], opts: QuadOptions<T>) -> Result<Self, ConfError> {
        if mu.is_zero() {
            return Ok(CauchyRule { nodes: Vec::new(), error: T::zero() });
        }
        for &p in probes {
            if mu.support.contains(p) {
                return Err(ConfError::Domain("probe point inside the support".into()));
            }
        }
        let build = |panels: usize, angular: usize| -> Vec<(Cx<T>, Cx<T>)> {
            annulus_nodes(zero(), &mu.support, opts.order, panels, angular)
                .into_iter()
                .map(|(z, w)| (z, mu.eval(z) * w))
                .filter(|(_, m)| *m != zero())
                .collect()
        };
        let (mut panels, mut angular) = (opts.panels, opts.angular);
        let mut prev = CauchyRule { nodes: build(panels, angular), error: T::zero() };
        let mut err = T::zero();
        for _ in 0..opts.max_level {
            panels *= 2;
            angular *= 2;
            let cur = CauchyRule { nodes: build(panels, angular), error: T::zero() };
            err = T::zero();
            let mut scale = T::zero();
            for &p in probes {
                let (a, b) = (cur.v(p), prev.v(p));
                err = err.max(cabs(a - b));
                scale = scale.max(cabs(a));
            }
            if err <= opts.abs_tol.max(opts.rel_tol * scale) {
                return Ok(CauchyRule { error: err, ..cur });
            }
            prev = cur;
        }
        Err(ConfError::Accuracy { estimate: err.f64(), value: f64::NAN })
    }

    /// `v_mu(z) = i z w_mu(z)`.
    pub fn v(&self, z: Cx<T>) -> Cx<T> {
        let one = re(T::one());
        let mut acc = zero::<T>();
        for &(s, m) in &self.nodes {
            acc += m / (s * (s - one) * (s - z));
        }
        -acc * z * (z - one) / T::pi()
    }

    pub fn w(&self, z: Cx<T>) -> Cx<T> {
        if z == zero() {
            let one = re(T::one());
            let mut acc = zero::<T>();
            for &(s, m) in &self.nodes {
                acc += m / (s * s * (s - one));
            }
            return acc / Complex::new(T::zero(), T::pi());
        }
        self.v(z) / (Complex::new(T::zero(), T::one()) * z)
    }

    pub fn derivative_at_zero(&self) -> Cx<T> {
        self.w(zero()) * Complex::new(T::zero(), T::one())
    }

    pub fn derivative_at_infinity(&self) -> Cx<T> {
        let one = re(T::one());
        let mut acc = zero::<T>();
        for &(s, m) in &self.nodes {
            acc += m / (s * (s - one));
        }
        acc / T::pi()
    }
}

/// Which three conditions pin down the first-order flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Fixes 0, 1 and infinity.
    Fix01Inf,
    /// Fixes 0 and infinity with derivative 1 at infinity.
    Fix0InfDerivInf,
    /// Fixes 0 and infinity with derivative 1 at 0.
    Fix0Deriv0Inf,
}

#[derive(Clone)]
pub struct FlowSpec<T> {
    pub normalization: Normalization,
    pub mu: BeltramiSpec<T>,
    /// Adds the reflected term `tbar iota^* mu`.
    pub symmetric: bool,
}

impl<T: Real> std::fmt::Debug for FlowSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowSpec")
            .field("normalization", &self.normalization)
            .field("mu", &self.mu)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

impl<T: Real> FlowSpec<T> {
    pub fn new(normalization: Normalization, mu: BeltramiSpec<T>, symmetric: bool) -> Self {
        FlowSpec { normalization, mu, symmetric }
    }

    fn check(&self) -> Result<(), ConfError> {
        let parts = if self.symmetric { vec![self.mu.clone(), iota_pullback(&self.mu)] } else { vec![self.mu.clone()] };
        for m in parts.iter().filter(|m| !m.is_zero()) {
            match self.normalization {
                Normalization::Fix01Inf => {}
                Normalization::Fix0Deriv0Inf if m.support.r_in <= T::zero() => {
                    return Err(ConfError::Configuration("derivative at 0 fixed but mu does not vanish near 0".into()));
                }
                Normalization::Fix0InfDerivInf if !m.support.is_bounded() => {
                    return Err(ConfError::Configuration("derivative at infinity fixed but mu does not vanish near infinity".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// First-order displaced point `Phi_t(z)`.
pub fn first_order_flow<T: Real>(spec: &FlowSpec<T>, t: Cx<T>, z: Cx<T>) -> Result<Cx<T>, ConfError> {
    spec.check()?;
    if cabs(t) * spec.mu.sup_norm > T::lit(0.1) {
        return Err(ConfError::Configuration("|t| sup|mu| exceeds 0.1".into()));
    }
    if t == zero() {
        return Ok(z);
    }
    let opts = QuadOptions::default();
    let field = |m: &BeltramiSpec<T>| -> Result<Cx<T>, ConfError> {
        if m.is_zero() {
            return Ok(zero());
        }
        let v = cauchy_transform_with(m, z, opts)?.v;
        Ok(match spec.normalization {
            Normalization::Fix01Inf => v,
            Normalization::Fix0Deriv0Inf => v - z * transform_derivative_at_zero(m, opts)?.value,
            Normalization::Fix0InfDerivInf => v - z * transform_derivative_at_infinity(m, opts)?.value,
        })
    };
    let mut out = z + t * field(&spec.mu)?;
    if spec.symmetric {
        out += t.conj() * field(&iota_pullback(&spec.mu))?;
    }
    Ok(out)
}

/// Precomputed first-order flow for repeated evaluation away from the support.
#[derive(Clone, Debug)]
pub struct Flow<T> {
    spec_norm: Normalization,
    sup_norm: T,
    direct: CauchyRule<T>,
    mirror: Option<CauchyRule<T>>,
    shift: (Cx<T>, Cx<T>),
}

impl<T: Real> Flow<T> {
    pub fn new(spec: &FlowSpec<T>, probes: &[Cx<T>], opts: QuadOptions<T>) -> Result<Self, ConfError> {
        spec.check()?;
        let direct = CauchyRule::new(&spec.mu, probes, opts)?;
        let mirror = if spec.symmetric { Some(CauchyRule::new(&iota_pullback(&spec.mu), probes, opts)?) } else { None };
        let slope = |r: &CauchyRule<T>| match spec.normalization {
            Normalization::Fix01Inf => zero(),
            Normalization::Fix0Deriv0Inf => r.derivative_at_zero(),
            Normalization::Fix0InfDerivInf => r.derivative_at_infinity(),
        };
        let shift = (slope(&direct), mirror.as_ref().map_or(zero(), slope));
        Ok(Flow { spec_norm: spec.normalization, sup_norm: spec.mu.sup_norm, direct, mirror, shift })
    }

    pub fn normalization(&self) -> Normalization {
        self.spec_norm
    }

    /// Velocity pair: `Phi_t(z) = z + t a + tbar b`.
    pub fn velocity(&self, z: Cx<T>) -> (Cx<T>, Cx<T>) {
        let a = self.direct.v(z) - z * self.shift.0;
        let b = self.mirror.as_ref().map_or(zero(), |m| m.v(z) - z * self.shift.1);
        (a, b)
    }

    pub fn apply(&self, t: Cx<T>, z: Cx<T>) -> Result<Cx<T>, ConfError> {
        if cabs(t) * self.sup_norm > T::lit(0.1) {
            return Err(ConfError::Configuration("|t| sup|mu| exceeds 0.1".into()));
        }
        let (a, b) = self.velocity(z);
        Ok(z + t * a + t.conj() * b)
    }

    pub fn error(&self) -> T {
        self.direct.error + self.mirror.as_ref().map_or(T::zero(), |m| m.error)
    }
}

/// `beta_{-1}, ..., beta_{n_max}` with the fitted geometric decay rate.
#[derive(Clone, Debug)]
pub struct BetaCoefficients<T> {
    /// Entry `k` holds `beta_{k-1}`.
    pub values: Vec<Cx<T>>,
    pub decay_rate: T,
    pub error: T,
}

impl<T: Real> BetaCoefficients<T> {
    pub fn get(&self, n: i32) -> Cx<T> {
        self.values[(n + 1) as usize]
    }
}

fn check_exterior_support<T: Real>(g: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>) -> Result<(), ConfError> {
    if g.kind() != MapKind::Exterior {
        return Err(ConfError::Domain("expected an exterior map".into()));
    }
    if !mu.is_zero() && mu.support.r_in < g.domain_radius().max(T::one()) {
        return Err(ConfError::Domain("support of mu leaves the domain of g".into()));
    }
    Ok(())
}

/// `beta_n = -(1/pi) int mu g^{-n-2} g'^2 dA` for `n = -1..=n_max`.
pub fn beta_coefficients<T: Real>(g: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>, n_max: usize) -> Result<BetaCoefficients<T>, ConfError> {
    check_exterior_support(g, mu)?;
    let len = n_max + 2;
    if mu.is_zero() {
        return Ok(BetaCoefficients { values: vec![zero(); len], decay_rate: T::zero(), error: T::zero() });
    }
    let c = -T::one() / T::pi();
    let (values, error) = annulus_integral_vec(
        |z| {
            let mut out = vec![zero::<T>(); len];
            let Ok(d) = g.eval_derivs(z, 1) else {
                return vec![cnan(); len];
            };
            let inv = Complex::new(T::one(), T::zero()) / d[0];
            let mut p = mu.eval(z) * d[1] * d[1] * inv * c;
            for slot in out.iter_mut() {
                *slot = p;
                p *= inv;
            }
            out
        },
        len,
        zero(),
        mu.support,
        QuadOptions::default().with_tol(1e-12, 1e-10),
    )?;
    let decay_rate = fit_decay(&values, error * T::lit(100.0));
    if decay_rate >= T::one() {
        return Err(ConfError::Convergence { rate: decay_rate.f64() });
    }
    Ok(BetaCoefficients { values, decay_rate, error })
}

/// Geometric rate from a least-squares line through `log |a_k|` over the upper
/// half of the entries above `floor`. Returns 0 when fewer than three remain,
/// which covers sequences that terminate.
fn fit_decay<T: Real>(a: &[Cx<T>], floor: T) -> T {
    let peak = a.iter().map(|z| cabs(*z)).fold(T::zero(), |x, y| x.max(y));
    let floor = floor.max(peak * T::lit(1e-12));
    let pts: Vec<(f64, f64)> = a
        .iter()
        .enumerate()
        .skip(a.len() / 2)
        .filter(|(_, z)| cabs(**z) > floor)
        .map(|(k, z)| (k as f64, cabs(*z).f64().ln()))
        .collect();
    if pts.len() < 3 {
        return T::zero();
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    T::lit((sxy / sxx).exp())
}

/// Finite-difference checks of how the beta coefficients transform: the
/// dilation derivative of `beta_0` and the derivative of `beta_{-1}` along
/// `g -> g - t`, returned with `beta_0` itself.
pub fn beta_weight_derivatives<T: Real>(g: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>, h: T) -> Result<(Cx<T>, Cx<T>, Cx<T>), ConfError> {
    let beta = |m: &PowerSeriesMap<T>| beta_coefficients(m, mu, 2);
    let b0 = beta(g)?.get(0);
    let dil = |t: T| g.scaled(re(t.exp()));
    let d_scale = (beta(&dil(h))?.get(0) - beta(&dil(-h))?.get(0)) / (h * T::lit(2.0));
    let shift = |t: T| {
        let mut c = g.coeffs().to_vec();
        c[1] -= re(t);
        PowerSeriesMap::from_laurent_exterior(c, g.domain_radius())
    };
    let d_shift = (beta(&shift(h))?.get(-1) - beta(&shift(-h))?.get(-1)) / (h * T::lit(2.0));
    Ok((d_scale, d_shift, b0))
}

/// Ghost kernel `K_psi(z, zeta) = psi'(zeta)^2 / (psi'(z)(psi(z) - psi(zeta))) - 1/(z - zeta)`.
///
/// Close to the diagonal the difference is formed algebraically from the
/// derivatives of `psi` at `zeta`, which avoids the cancellation.
pub fn psi_kernel<T: Real>(psi: &PowerSeriesMap<T>, z: Cx<T>, zeta: Cx<T>) -> Result<Cx<T>, ConfError> {
    let d = z - zeta;
    let near = cabs(d) < T::lit(1e-3) * cabs(z).max(T::lit(1e-3));
    if near {
        let dz = psi.eval_derivs(zeta, 4)?;
        if dz[1] == zero() {
            return Err(ConfError::SingularMap("psi' = 0".into()));
        }
        // psi(z) - psi(zeta) = psi'(zeta) d (1 + P),  psi'(z) = psi'(zeta)(1 + Q)
        let p = [dz[2] / (dz[1] * T::lit(2.0)), dz[3] / (dz[1] * T::lit(6.0)), dz[4] / (dz[1] * T::lit(24.0))];
        let q = [dz[2] / dz[1], dz[3] / (dz[1] * T::lit(2.0)), dz[4] / (dz[1] * T::lit(6.0))];
        let pd = p[0] + d * (p[1] + d * p[2]);
        let qd = q[0] + d * (q[1] + d * q[2]);
        let big_p = pd * d;
        // E / d with (1 + Q)(1 + P) = 1 + E
        let e_over_d = qd + pd + qd * big_p;
        let e = e_over_d * d;
        return Ok(-e_over_d / (Complex::new(T::one(), T::zero()) + e));
    }
    let a = psi.eval_derivs(z, 1)?;
    let b = psi.eval_derivs(zeta, 1)?;
    let diff = a[0] - b[0];
    if cabs(diff) <= T::lit(1e-14) * (T::one() + cabs(a[0])) {
        return Err(ConfError::Injectivity);
    }
    Ok(b[1] * b[1] / (a[1] * diff) - Complex::new(T::one(), T::zero()) / d)
}

/// `(d_z K, d_zeta K)` on the diagonal at `z0`, read off as first Taylor
/// coefficients of kernel samples on a circle of radius `rho`.
pub fn kernel_diagonal_fit<T: Real>(psi: &PowerSeriesMap<T>, z0: Cx<T>, rho: T, samples: usize) -> Result<(Cx<T>, Cx<T>), ConfError> {
    let mut dz = zero::<T>();
    let mut dzeta = zero::<T>();
    for j in 0..samples {
        let u = crate::real::cis(T::two_pi() * T::lit(j as f64 / samples as f64));
        let p = z0 + u * rho;
        dz += psi_kernel(psi, p, z0)? * u.conj();
        dzeta += psi_kernel(psi, z0, p)? * u.conj();
    }
    let s = T::lit(samples as f64) * rho;
    Ok((dz / s, dzeta / s))
}

/// Result of [`ghost_sum_check`].
#[derive(Clone, Debug)]
pub struct GhostSum<T> {
    pub lhs: Cx<T>,
    pub rhs: Cx<T>,
    /// Entry `k` is the `n = k - 1` term.
    pub terms: Vec<Cx<T>>,
    pub truncation_bound: T,
    pub quadrature_error: T,
    pub contour_radius: T,
}

#[derive(Clone, Copy, Debug)]
pub struct GhostOptions<T> {
    /// Overrides the geometric mean of the admissible window.
    pub contour_radius: Option<T>,
    pub contour_points: usize,
    pub quad: QuadOptions<T>,
}

impl<T: Real> Default for GhostOptions<T> {
    fn default() -> Self {
        GhostOptions { contour_radius: None, contour_points: 256, quad: QuadOptions::default().with_tol(1e-9, 1e-8) }
    }
}

/// Admissible contour radii `(lo, hi)`: `|u| > max(1, domain radius)` and
/// `sup_{|u| = r} |g(u)| < inf_{supp mu} |g|`.
pub fn ghost_window<T: Real>(g: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>) -> Result<(T, T), ConfError> {
    let lo = g.domain_radius().max(T::one());
    let (gmin, _) = circle_extent(|z| g.eval(z), mu.support.r_in)?;
    let top = |r: T| circle_extent(|z| g.eval(z), r).map(|e| e.1);
    if top(lo)? >= gmin {
        return Err(ConfError::Configuration("contour radius window is empty".into()));
    }
    let (mut a, mut b) = (lo, mu.support.r_in);
    for _ in 0..60 {
        let m = (a + b) * T::lit(0.5);
        if top(m)? < gmin {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((lo, a))
}

pub fn ghost_sum_check<T: Real>(g: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>, n_max: usize) -> Result<GhostSum<T>, ConfError> {
    ghost_sum_check_with(g, mu, n_max, GhostOptions::default())
}

/// Truncated sum over `n = -1..=n_max` of the two double integrals pairing
/// `mu` against the expanded ghost kernel, and `(13 / 6 pi) int mu S g`.
pub fn ghost_sum_check_with<T: Real>(g: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>, n_max: usize, opts: GhostOptions<T>) -> Result<GhostSum<T>, ConfError> {
    check_exterior_support(g, mu)?;
    let len = n_max + 2;
    if mu.is_zero() {
        return Ok(GhostSum {
            lhs: zero(),
            rhs: zero(),
            terms: vec![zero(); len],
            truncation_bound: T::zero(),
            quadrature_error: T::zero(),
            contour_radius: T::one(),
        });
    }
    let (lo, hi) = ghost_window(g, mu)?;
    let r = match opts.contour_radius {
        Some(r) if r > lo && r < hi => r,
        Some(r) => return Err(ConfError::Configuration(format!("contour radius {} outside ({}, {})", r.f64(), lo.f64(), hi.f64()))),
        None => (lo * hi).sqrt(),
    };
    let m = opts.contour_points;
    let mut contour = Vec::with_capacity(m);
    for j in 0..m {
        let u = polar(r, T::two_pi() * T::lit(j as f64 / m as f64));
        let d = g.eval_derivs(u, 1)?;
        // d zeta = g'(u) i u dphi
        let dzeta = d[1] * Complex::new(T::zero(), T::one()) * u * (T::two_pi() / T::lit(m as f64));
        contour.push((u, d[0], d[1], dzeta));
    }
    let i = Complex::new(T::zero(), T::one());
    let pi2 = T::pi() * T::pi();
    let c1 = Complex::new(T::one(), T::zero()) / (i * pi2);
    let c2 = Complex::new(T::one(), T::zero()) / (i * pi2 * T::lit(2.0));
    let integrand = |z: Cx<T>| -> Vec<Cx<T>> {
        let mut out = vec![zero::<T>(); len];
        let Ok(d) = g.eval_derivs(z, 2) else {
            return vec![cnan(); len];
        };
        let mz = mu.eval(z);
        if mz == zero() {
            return out;
        }
        let (gz, g1, g2) = (d[0], d[1], d[2]);
        let inv_g = Complex::new(T::one(), T::zero()) / gz;
        let mut a_sum = vec![zero::<T>(); len];
        let mut b_sum = vec![zero::<T>(); len];
        for &(u, gu, g1u, dzeta) in &contour {
            let h = z - u;
            let gd = gz - gu;
            let k = g1 / (g1u * g1u * h) - Complex::new(T::one(), T::zero()) / gd;
            let dk = (g2 * h - g1) / (g1u * g1u * h * h) + g1 / (gd * gd);
            let a = c1 * mz * g1 * dk * inv_g * dzeta;
            let b = c2 * mz * g1 * g1 * k * inv_g * inv_g * dzeta;
            let x = gu * inv_g;
            let mut xp = Complex::new(T::one(), T::zero());
            for idx in 0..len {
                a_sum[idx] += a * xp;
                b_sum[idx] += b * xp;
                xp *= x;
            }
        }
        for idx in 0..len {
            // idx = n + 1, weight n + 2 = idx + 1
            out[idx] = a_sum[idx] - b_sum[idx] * T::lit((idx + 1) as f64);
        }
        out
    };
    let (terms, qerr) = annulus_integral_vec(integrand, len, zero(), mu.support, opts.quad)?;
    let lhs = terms.iter().fold(zero::<T>(), |a, b| a + *b);
    let rhs_e = annulus_integral(
        |z| {
            let Ok(d) = g.eval_derivs(z, 3) else {
                return cnan();
            };
            match schwarzian_from_derivs(&d) {
                Ok((_, s)) => mu.eval(z) * s,
                Err(_) => cnan(),
            }
        },
        zero(),
        mu.support,
        opts.quad,
    )?;
    let rhs = rhs_e.value * (T::lit(13.0) / (T::lit(6.0) * T::pi()));
    Ok(GhostSum {
        lhs,
        rhs,
        truncation_bound: tail_bound(&terms),
        terms,
        quadrature_error: qerr + rhs_e.error * T::lit(13.0) / (T::lit(6.0) * T::pi()),
        contour_radius: r,
    })
}

/// Geometric tail estimate from the last few terms.
fn tail_bound<T: Real>(terms: &[Cx<T>]) -> T {
    let n = terms.len();
    if n < 4 {
        return terms.last().map_or(T::zero(), |t| cabs(*t));
    }
    let last = cabs(terms[n - 1]);
    let q = fit_decay(&terms[n - 8.min(n)..], T::zero()).min(T::lit(0.999));
    if q == T::zero() {
        return last;
    }
    last * q / (T::one() - q)
}

#[cfg(test)]
mod tests {
    use super::*;
    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    #[test]
    fn zero_mu_transforms_to_zero() {
        let v = cauchy_transform(&BeltramiSpec::<f64>::zero(), c(0.3, 0.4)).unwrap();
        assert_eq!(v.w, c(0.0, 0.0));
    }

    #[test]
    fn bump_is_a_partition() {
        assert_eq!(bump(0.3f64), 1.0);
        assert_eq!(bump(1.2f64), 0.0);
        assert!((bump(0.75f64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn iota_is_an_involution() {
        let mu = BeltramiSpec::<f64>::laurent(2).unwrap();
        let back = iota_pullback(&iota_pullback(&mu));
        for z in [c(2.5, 0.3), c(-1.0, 3.0), c(0.0, -4.0)] {
            assert!((back.eval(z) - mu.eval(z)).norm() < 1e-12 * mu.eval(z).norm());
        }
        let im = iota_pullback(&mu);
        assert_eq!(im.support.r_in, 0.0);
        assert_eq!(im.support.r_out, Some(0.5));
    }

    #[test]
    fn beta_of_laurent_mode_for_identity() {
        let g = PowerSeriesMap::<f64>::identity(MapKind::Exterior);
        let mu = BeltramiSpec::laurent(2).unwrap();
        let b = beta_coefficients(&g, &mu, 5).unwrap();
        for n in -1..=5 {
            // int 32 r^{-2} e^{4 i theta} e^{-i(n+2) theta} r^{-n-2} r dr dtheta vanishes unless n = 2
            let expect = if n == 2 { c(-1.0, 0.0) } else { c(0.0, 0.0) };
            assert!((b.get(n) - expect).norm() < 1e-9, "n = {n}: {}", b.get(n));
        }
    }

    #[test]
    fn kernel_vanishes_for_identity() {
        let id = PowerSeriesMap::<f64>::identity(MapKind::Interior);
        assert_eq!(psi_kernel(&id, c(0.2, 0.1), c(-0.3, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(psi_kernel(&id, c(0.2, 0.1), c(0.2, 0.1)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn kernel_branches_agree_near_the_switch() {
        let psi = PowerSeriesMap::interior(&[c(0.1, 0.05), c(0.02, 0.0)]);
        let z = c(0.2, 0.1);
        let h = c(1.0e-3, 0.0) * z.norm();
        let inner = psi_kernel(&psi, z + h * 0.999, z).unwrap();
        let outer = psi_kernel(&psi, z + h * 1.001, z).unwrap();
        assert!((inner - outer).norm() < 1e-6);
    }
}
