//! Series-represented conformal maps, Schwarzian calculus and the two tensor
//! pairings between quadratic differentials, Beltrami differentials and vector
//! fields.

use crate::beltrami::BeltramiSpec;
use crate::quadrature::{annulus_integral, circle_mean, Annulus, Estimate, QuadOptions};
use crate::real::{cabs, cpowi, cx, Cx, Real};
use crate::ConfError;
use num_complex::Complex;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Coupling constants derived from `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants<T> {
    pub kappa: T,
    pub gamma: T,
    pub q: T,
    pub c_m: T,
    pub c_l: T,
}

impl<T: Real> Constants<T> {
    pub fn from_kappa(kappa: T) -> Result<Self, ConfError> {
        if !(kappa > T::zero() && kappa <= T::lit(4.0)) {
            return Err(ConfError::Domain(format!("kappa = {} outside (0, 4]", kappa.f64())));
        }
        let gamma = kappa.sqrt();
        let two = T::lit(2.0);
        let q = gamma / two + two / gamma;
        let c_l = T::one() + T::lit(6.0) * q * q;
        let d = two / gamma - gamma / two;
        let c_m = T::one() - T::lit(6.0) * d * d;
        Ok(Constants { kappa, gamma, q, c_m, c_l })
    }

    pub fn from_gamma(gamma: T) -> Result<Self, ConfError> {
        Self::from_kappa(gamma * gamma)
    }
}

/// Which side of the unit circle a series lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    /// `f(z) = sum_{k >= 0} c_k z^k`, convergent for `|z| <= domain_radius`.
    Interior,
    /// `g(z) = b_{-1} z + b_0 + sum_{m >= 1} b_m z^{-m}`, convergent for `|z| >= domain_radius`.
    Exterior,
}

/// Truncated power or Laurent series of a conformal map.
///
/// Interior coefficients are stored by ascending power starting at `z^0`;
/// exterior coefficients by descending power starting at `z^1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeriesMap<T> {
    kind: MapKind,
    coeffs: Vec<Cx<T>>,
    domain_radius: T,
}

fn zero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

fn one<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

impl<T: Real> PowerSeriesMap<T> {
    /// `f(z) = z (1 + sum a_m z^m)`, so that `f(0) = 0` and `f'(0) = 1`.
    pub fn interior(a: &[Cx<T>]) -> Self {
        let mut coeffs = vec![zero(), one()];
        coeffs.extend_from_slice(a);
        PowerSeriesMap { kind: MapKind::Interior, coeffs, domain_radius: T::one() }
    }

    /// Interior series from raw Taylor coefficients `c_0, c_1, ...`.
    pub fn from_taylor(coeffs: Vec<Cx<T>>, domain_radius: T) -> Self {
        PowerSeriesMap { kind: MapKind::Interior, coeffs, domain_radius }
    }

    /// `g(z) = b_{-1} z + b_0 + sum b_m z^{-m}`.
    pub fn exterior(b_minus1: Cx<T>, b0: Cx<T>, b: &[Cx<T>]) -> Self {
        let mut coeffs = vec![b_minus1, b0];
        coeffs.extend_from_slice(b);
        PowerSeriesMap { kind: MapKind::Exterior, coeffs, domain_radius: T::one() }
    }

    /// Exterior series from coefficients of `z^1, z^0, z^{-1}, ...`.
    pub fn from_laurent_exterior(coeffs: Vec<Cx<T>>, domain_radius: T) -> Self {
        PowerSeriesMap { kind: MapKind::Exterior, coeffs, domain_radius }
    }

    pub fn identity(kind: MapKind) -> Self {
        match kind {
            MapKind::Interior => Self::interior(&[]),
            MapKind::Exterior => Self::exterior(one(), zero(), &[]),
        }
    }

    /// Dilation `z -> lambda z`.
    pub fn dilation(kind: MapKind, lambda: Cx<T>) -> Self {
        let mut m = Self::identity(kind);
        m.coeffs = match kind {
            MapKind::Interior => vec![zero(), lambda],
            MapKind::Exterior => vec![lambda, zero()],
        };
        m
    }

    /// Truncated Taylor series of the disc automorphism `(z - a) / (1 - conj(a) z)`.
    pub fn disc_mobius(a: Cx<T>, order: usize) -> Self {
        let ab = a.conj();
        let mut coeffs = vec![-a];
        let mut p = one::<T>();
        for _ in 1..=order {
            // (z - a) sum (ab z)^k: coefficient of z^k is ab^{k-1} - a ab^k
            let next = p * ab;
            coeffs.push(p - a * next);
            p = next;
        }
        let r = if cabs(a) > T::zero() { T::one() / cabs(a) } else { T::lit(1e6) };
        PowerSeriesMap { kind: MapKind::Interior, coeffs, domain_radius: r }
    }

    pub fn with_domain_radius(mut self, r: T) -> Self {
        self.domain_radius = r;
        self
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn domain_radius(&self) -> T {
        self.domain_radius
    }

    /// Truncation order: highest power kept (interior) or highest inverse power (exterior).
    pub fn truncation(&self) -> usize {
        match self.kind {
            MapKind::Interior => self.coeffs.len().saturating_sub(1),
            MapKind::Exterior => self.coeffs.len().saturating_sub(2),
        }
    }

    /// `f'(0)` for interior maps, `g'(infinity) = b_{-1}` for exterior maps.
    pub fn lead(&self) -> Cx<T> {
        match self.kind {
            MapKind::Interior => self.coeffs.get(1).copied().unwrap_or_else(zero),
            MapKind::Exterior => self.coeffs[0],
        }
    }

    /// Power carried by coefficient `k`.
    pub fn power(&self, k: usize) -> i32 {
        match self.kind {
            MapKind::Interior => k as i32,
            MapKind::Exterior => 1 - k as i32,
        }
    }

    fn check_domain(&self, z: Cx<T>) -> Result<(), ConfError> {
        let r = cabs(z);
        let tol = T::lit(1e-12) * (T::one() + self.domain_radius);
        let ok = match self.kind {
            MapKind::Interior => r <= self.domain_radius + tol,
            MapKind::Exterior => r + tol >= self.domain_radius,
        };
        if ok {
            Ok(())
        } else {
            Err(ConfError::Domain(format!("|z| = {} outside series domain (radius {})", r.f64(), self.domain_radius.f64())))
        }
    }

    /// `f(z), f'(z), ..., f^{(order)}(z)` by term-wise differentiation.
    pub fn eval_derivs(&self, z: Cx<T>, order: usize) -> Result<Vec<Cx<T>>, ConfError> {
        if order > 4 {
            return Err(ConfError::Domain(format!("derivative order {order} > 4")));
        }
        self.check_domain(z)?;
        let mut out = vec![zero::<T>(); order + 1];
        let is_origin = z == zero();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == zero() {
                continue;
            }
            let p = self.power(k);
            for (j, slot) in out.iter_mut().enumerate() {
                let mut ff = 1i64;
                for i in 0..j as i64 {
                    ff *= p as i64 - i;
                }
                if ff == 0 {
                    continue;
                }
                let e = p - j as i32;
                let zp = if is_origin {
                    if e == 0 {
                        one()
                    } else if e > 0 {
                        zero()
                    } else {
                        return Err(ConfError::SingularMap("negative power at the origin".into()));
                    }
                } else {
                    cpowi(z, e)
                };
                *slot += c * zp * T::lit(ff as f64);
            }
        }
        if self.coeffs.len() >= 16 && !is_origin {
            let n = self.coeffs.len();
            let tail = (n - 3..n).map(|k| cabs(self.coeffs[k] * cpowi(z, self.power(k)))).fold(T::zero(), |a, b| a.max(b));
            let scale = T::one().max(cabs(out[0]));
            if tail > T::lit(1e-6) * scale {
                return Err(ConfError::SeriesDivergence { tail: tail.f64() });
            }
        }
        Ok(out)
    }

    pub fn eval(&self, z: Cx<T>) -> Result<Cx<T>, ConfError> {
        Ok(self.eval_derivs(z, 0)?[0])
    }

    pub fn deriv(&self, z: Cx<T>) -> Result<Cx<T>, ConfError> {
        Ok(self.eval_derivs(z, 1)?[1])
    }

    /// `(f, f', f'')` by Horner's scheme, without domain or tail checks.
    pub fn horner(&self, z: Cx<T>) -> [Cx<T>; 3] {
        let (mut p, mut d1, mut d2) = (zero::<T>(), zero::<T>(), zero::<T>());
        match self.kind {
            MapKind::Interior => {
                for &c in self.coeffs.iter().rev() {
                    d2 = d2 * z + d1 * T::lit(2.0);
                    d1 = d1 * z + p;
                    p = p * z + c;
                }
                [p, d1, d2]
            }
            MapKind::Exterior => {
                // g = b z + P(w) with w = 1/z and P(w) = sum_{k >= 1} coeffs[k] w^{k-1}
                let w = one::<T>() / z;
                for &c in self.coeffs.iter().skip(1).rev() {
                    d2 = d2 * w + d1 * T::lit(2.0);
                    d1 = d1 * w + p;
                    p = p * w + c;
                }
                let w2 = w * w;
                let b = self.coeffs[0];
                [b * z + p, b - d1 * w2, d2 * w2 * w2 + d1 * w2 * w * T::lit(2.0)]
            }
        }
    }

    /// Drops trailing coefficients below `tol` times the largest one.
    pub fn trimmed(mut self, tol: T) -> Self {
        let peak = self.coeffs.iter().map(|c| cabs(*c)).fold(T::zero(), |a, b| a.max(b));
        while self.coeffs.len() > 2 && cabs(*self.coeffs.last().unwrap()) <= tol * peak {
            self.coeffs.pop();
        }
        self
    }

    /// Multiplies the map by a constant (post-composition with a dilation).
    pub fn scaled(&self, s: Cx<T>) -> Self {
        let mut m = self.clone();
        for c in &mut m.coeffs {
            *c *= s;
        }
        m
    }

    /// Pre-composition with the rotation `z -> e^{i theta} z`.
    pub fn pre_rotated(&self, theta: T) -> Self {
        let mut m = self.clone();
        for k in 0..m.coeffs.len() {
            let p = m.power(k);
            m.coeffs[k] *= crate::real::cis(theta * T::lit(p as f64));
        }
        m
    }
}

impl<T: Real> PowerSeriesMap<T> {
    /// Solves `f(z) = w` by damped Newton iteration.
    pub fn invert_point(&self, w: Cx<T>, guess: Option<Cx<T>>) -> Result<Cx<T>, ConfError> {
        let mut z = guess.unwrap_or_else(|| match self.kind {
            MapKind::Interior => (w - self.coeffs[0]) / self.lead(),
            MapKind::Exterior => (w - self.coeffs.get(1).copied().unwrap_or_else(zero)) / self.lead(),
        });
        let scale = T::one().max(cabs(w));
        let mut res = cabs(direct_eval(self, z) - w);
        for _ in 0..100 {
            if res <= T::lit(1e-15) * scale {
                return Ok(z);
            }
            let d = self.eval_derivs(z, 1).or_else(|_| Ok::<_, ConfError>(vec![direct_eval(self, z), zero()]))?;
            if d[1] == zero() {
                return Err(ConfError::SingularMap("f' = 0 during inversion".into()));
            }
            let step = (d[0] - w) / d[1];
            let mut lambda = T::one();
            loop {
                let cand = z - step * lambda;
                let r = cabs(direct_eval(self, cand) - w);
                if r < res || lambda < T::lit(1e-6) {
                    z = cand;
                    res = r;
                    break;
                }
                lambda *= T::lit(0.5);
            }
        }
        if res <= T::lit(1e-12) * scale {
            Ok(z)
        } else {
            Err(ConfError::Domain(format!("no preimage found (residual {})", res.f64())))
        }
    }
}

/// Pre-Schwarzian `f''/f'` and Schwarzian `(f''/f')' - (f''/f')^2 / 2` at `z`.
pub fn schwarzian<T: Real>(f: &PowerSeriesMap<T>, z: Cx<T>) -> Result<(Cx<T>, Cx<T>), ConfError> {
    let d = f.eval_derivs(z, 3)?;
    schwarzian_from_derivs(&d)
}

pub(crate) fn schwarzian_from_derivs<T: Real>(d: &[Cx<T>]) -> Result<(Cx<T>, Cx<T>), ConfError> {
    if cabs(d[1]) == T::zero() {
        return Err(ConfError::SingularMap("f'(z) = 0".into()));
    }
    let a = d[2] / d[1];
    let s = d[3] / d[1] - a * a * T::lit(1.5);
    Ok((a, s))
}

/// `g^k` truncated, for `k = 0..=m`, of an interior series with `g(0) = 0`.
fn power_table<T: Real>(g: &[Cx<T>], m: usize) -> Vec<Vec<Cx<T>>> {
    let mut gk = vec![vec![zero::<T>(); m + 1]; m + 1];
    gk[0][0] = one();
    for k in 1..=m {
        for n in k..=m {
            let mut acc = zero::<T>();
            for i in 1..=n - (k - 1) {
                if i < g.len() {
                    acc += g[i] * gk[k - 1][n - i];
                }
            }
            gk[k][n] = acc;
        }
    }
    gk
}

fn reciprocal<T: Real>(p: &[Cx<T>], m: usize) -> Result<Vec<Cx<T>>, ConfError> {
    if p.is_empty() || p[0] == zero() {
        return Err(ConfError::SingularMap("series reciprocal of a series vanishing at 0".into()));
    }
    let mut r = vec![zero::<T>(); m + 1];
    r[0] = one::<T>() / p[0];
    for n in 1..=m {
        let mut acc = zero::<T>();
        for k in 1..=n.min(p.len() - 1) {
            acc += p[k] * r[n - k];
        }
        r[n] = -acc * r[0];
    }
    Ok(r)
}

/// `f o g` truncated at order `m`, both interior with `g(0) = 0`.
fn compose_interior<T: Real>(f: &[Cx<T>], g: &[Cx<T>], m: usize) -> Vec<Cx<T>> {
    let gk = power_table(g, m);
    let mut out = vec![zero::<T>(); m + 1];
    for (k, &c) in f.iter().enumerate().take(m + 1) {
        for n in 0..=m {
            out[n] += c * gk[k][n];
        }
    }
    out
}

/// Compositional inverse of an interior series with `f(0) = 0`, order by order.
fn invert_interior<T: Real>(f: &[Cx<T>], m: usize) -> Result<Vec<Cx<T>>, ConfError> {
    let c1 = f.get(1).copied().unwrap_or_else(zero);
    if cabs(c1) == T::zero() || f[0] != zero() {
        return Err(ConfError::SingularMap("inversion requires f(0) = 0 and f'(0) != 0".into()));
    }
    let mut h = vec![zero::<T>(); m + 1];
    // p[k][n] = [z^n] h^k
    let mut p = vec![vec![zero::<T>(); m + 1]; m + 1];
    p[0][0] = one();
    for n in 1..=m {
        let mut acc = zero::<T>();
        for k in 2..=n {
            let mut s = zero::<T>();
            for i in 1..n {
                s += h[i] * p[k - 1][n - i];
            }
            p[k][n] = s;
            if k < f.len() {
                acc += f[k] * s;
            }
        }
        h[n] = if n == 1 { one::<T>() / c1 } else { -acc / c1 };
        p[1][n] = h[n];
    }
    Ok(h)
}

impl<T: Real> PowerSeriesMap<T> {
    /// `1 / g(1/z)` for an exterior map: an interior series vanishing at 0.
    fn exterior_conjugate(&self, m: usize) -> Result<Vec<Cx<T>>, ConfError> {
        let r = reciprocal(&self.coeffs, m)?;
        let mut out = vec![zero::<T>(); m + 1];
        out[1..=m].copy_from_slice(&r[..m]);
        Ok(out)
    }

    fn from_exterior_conjugate(h: &[Cx<T>], m: usize, radius: T) -> Result<Self, ConfError> {
        // 1/H(1/w) with H(u) = u R(u): w / R(1/w)
        let r = reciprocal(&h[1..], m)?;
        Ok(PowerSeriesMap::from_laurent_exterior(r, radius))
    }
}

/// Truncated composition `f o g`, or the compositional inverse of `f` when `g` is `None`.
pub fn series_compose_invert<T: Real>(f: &PowerSeriesMap<T>, g: Option<&PowerSeriesMap<T>>) -> Result<PowerSeriesMap<T>, ConfError> {
    let m = f.truncation().max(g.map_or(0, |g| g.truncation())).max(1);
    match (f.kind, g) {
        (MapKind::Interior, Some(g)) => {
            if g.kind != MapKind::Interior || g.coeffs[0] != zero() {
                return Err(ConfError::Domain("inner map must be interior with g(0) = 0".into()));
            }
            let gr = g.domain_radius;
            let gmax = (0..64)
                .map(|j| cabs(g.eval(crate::real::polar(gr, T::two_pi() * T::lit(j as f64 / 64.0))).unwrap_or_else(|_| zero())))
                .fold(T::zero(), |a, b| a.max(b));
            let radius = if gmax <= f.domain_radius { gr } else { gr * f.domain_radius / gmax };
            Ok(PowerSeriesMap::from_taylor(compose_interior(&f.coeffs, &g.coeffs, m), radius))
        }
        (MapKind::Exterior, Some(g)) => {
            if g.kind != MapKind::Exterior {
                return Err(ConfError::Domain("exterior maps compose with exterior maps".into()));
            }
            let fi = f.exterior_conjugate(m)?;
            let gi = g.exterior_conjugate(m)?;
            let c = compose_interior(&fi, &gi, m);
            PowerSeriesMap::from_exterior_conjugate(&c, m, g.domain_radius.max(f.domain_radius))
        }
        (MapKind::Interior, None) => {
            let h = invert_interior(&f.coeffs, m)?;
            let lead = cabs(f.lead());
            Ok(PowerSeriesMap::from_taylor(h, f.domain_radius * lead * T::lit(0.5)))
        }
        (MapKind::Exterior, None) => {
            let fi = f.exterior_conjugate(m)?;
            let h = invert_interior(&fi, m)?;
            PowerSeriesMap::from_exterior_conjugate(&h, m, f.domain_radius * T::lit(2.0) * cabs(f.lead()))
        }
    }
}

/// Interior inverse validated by `sup |f(f^{-1}(z)) - z| < tol` on `|z| = radius`,
/// doubling the truncation up to 512.
pub fn invert_validated<T: Real>(f: &PowerSeriesMap<T>, radius: T, tol: T) -> Result<PowerSeriesMap<T>, ConfError> {
    let mut m = f.truncation().max(64);
    loop {
        let mut padded = f.clone();
        padded.coeffs.resize(m + 1, zero());
        let inv = series_compose_invert(&padded, None)?.with_domain_radius(radius);
        let mut worst = T::zero();
        for j in 0..64 {
            let z = crate::real::polar(radius, T::two_pi() * T::lit(j as f64 / 64.0));
            let w = direct_eval(&inv, z);
            let back = direct_eval(f, w);
            worst = worst.max(cabs(back - z));
        }
        if worst < tol {
            return Ok(inv);
        }
        if m >= 512 {
            return Err(ConfError::Accuracy { estimate: worst.f64(), value: tol.f64() });
        }
        m *= 2;
    }
}

/// Plain evaluation without domain or tail checks.
pub(crate) fn direct_eval<T: Real>(f: &PowerSeriesMap<T>, z: Cx<T>) -> Cx<T> {
    let mut acc = zero::<T>();
    match f.kind {
        MapKind::Interior => {
            for &c in f.coeffs.iter().rev() {
                acc = acc * z + c;
            }
            acc
        }
        MapKind::Exterior => {
            let u = one::<T>() / z;
            for &c in f.coeffs[1..].iter().rev() {
                acc = acc * u + c;
            }
            acc + f.coeffs[0] * z
        }
    }
}

/// Holomorphic quadratic differential `q(z) dz^2` on an annulus.
#[derive(Clone)]
pub struct QuadDiffFn<T> {
    eval: Arc<dyn Fn(Cx<T>) -> Cx<T> + Send + Sync>,
    pub domain: Annulus<T>,
}

impl<T: Real> std::fmt::Debug for QuadDiffFn<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadDiffFn").field("domain", &self.domain).finish()
    }
}

impl<T: Real> QuadDiffFn<T> {
    pub fn new(domain: Annulus<T>, eval: impl Fn(Cx<T>) -> Cx<T> + Send + Sync + 'static) -> Self {
        QuadDiffFn { eval: Arc::new(eval), domain }
    }

    /// `c z^k` on the punctured plane.
    pub fn monomial(c: Cx<T>, k: i32) -> Self {
        Self::new(Annulus::new(T::zero(), None), move |z| c * cpowi(z, k))
    }

    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        (self.eval)(z)
    }

    /// Largest Cauchy-Riemann defect `|d q/d zbar|` estimated by central differences.
    pub fn cauchy_riemann_defect(&self, points: &[Cx<T>], h: T) -> T {
        let mut worst = T::zero();
        for &z in points {
            let dx = (self.eval(z + cx(h, T::zero())) - self.eval(z - cx(h, T::zero()))) / (h * T::lit(2.0));
            let dy = (self.eval(z + cx(T::zero(), h)) - self.eval(z - cx(T::zero(), h))) / (h * T::lit(2.0));
            // d/dzbar = (d/dx + i d/dy) / 2
            let dbar = (dx + Complex::new(-dy.im, dy.re)) * T::lit(0.5);
            worst = worst.max(cabs(dbar));
        }
        worst
    }
}

/// Laurent vector field `v(z) d/dz`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorFieldSeries<T> {
    pub coeffs: BTreeMap<i32, Cx<T>>,
}

impl<T: Real> VectorFieldSeries<T> {
    /// Basis field `v_n = -z^{n+1} d/dz`.
    pub fn basis(n: i32) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(n + 1, -one::<T>());
        VectorFieldSeries { coeffs }
    }

    pub fn eval(&self, z: Cx<T>) -> Cx<T> {
        self.coeffs.iter().fold(zero(), |a, (&k, &c)| a + c * cpowi(z, k))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (&k, &c) in &o.coeffs {
            *r.coeffs.entry(k).or_insert_with(zero) += c;
        }
        r
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        VectorFieldSeries { coeffs: self.coeffs.iter().map(|(&k, &c)| (k, c * s)).collect() }
    }
}

/// `(q, mu) = (1/pi) int q mu |dz|^2` over the support of `mu`.
pub fn pair_q_beltrami<T: Real>(q: &QuadDiffFn<T>, mu: &BeltramiSpec<T>) -> Result<Estimate<T>, ConfError> {
    pair_q_beltrami_with(q, mu, QuadOptions::default())
}

pub fn pair_q_beltrami_with<T: Real>(q: &QuadDiffFn<T>, mu: &BeltramiSpec<T>, opts: QuadOptions<T>) -> Result<Estimate<T>, ConfError> {
    if mu.is_zero() {
        return Ok(Estimate::zero());
    }
    let s = mu.support;
    let inside = s.r_in >= q.domain.r_in
        && match (s.r_out, q.domain.r_out) {
            (_, None) => true,
            (Some(a), Some(b)) => a <= b,
            (None, Some(_)) => false,
        };
    if !inside {
        return Err(ConfError::Domain("support of mu not inside the domain of q".into()));
    }
    let e = annulus_integral(|z| q.eval(z) * mu.eval(z), zero(), s, opts)?;
    Ok(e.scale(Complex::new(T::one() / T::pi(), T::zero())))
}

/// `(q, v) = (1/2 pi i) oint_{|z| = radius} q v dz`.
pub fn pair_q_vector<T: Real>(q: &QuadDiffFn<T>, v: &VectorFieldSeries<T>, radius: T) -> Result<Estimate<T>, ConfError> {
    circle_mean(|z| q.eval(z) * v.eval(z) * z, zero(), radius, T::lit(1e-14))
}

#[cfg(test)]
mod tests {
    use super::*;
    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    #[test]
    fn constants_at_kappa_four() {
        let k = Constants::from_kappa(4.0).unwrap();
        assert_eq!((k.gamma, k.q, k.c_l, k.c_m), (2.0, 2.0, 25.0, 1.0));
        assert!(Constants::from_kappa(4.5).is_err());
        assert!(Constants::from_kappa(0.0).is_err());
    }

    #[test]
    fn identity_has_zero_schwarzian() {
        let f = PowerSeriesMap::<f64>::interior(&[]);
        let (a, s) = schwarzian(&f, c(0.3, -0.2)).unwrap();
        assert_eq!((a, s), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn derivs_read_off_coefficients() {
        let f = PowerSeriesMap::interior(&[c(0.1, 0.0)]);
        let d = f.eval_derivs(c(0.0, 0.0), 2).unwrap();
        assert_eq!(d, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.2, 0.0)]);
        let id = PowerSeriesMap::<f64>::interior(&[]);
        assert_eq!(id.eval_derivs(c(0.5, 0.0), 2).unwrap(), vec![c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn lagrange_inversion_to_third_order() {
        let a = c(0.3, 0.1);
        let f = PowerSeriesMap::interior(&[a]);
        let inv = series_compose_invert(&f, None).unwrap();
        let h = inv.coeffs();
        assert!((h[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((h[2] + a).norm() < 1e-15);
        let mut padded = f.clone();
        padded.coeffs.resize(4, c(0.0, 0.0));
        let h3 = series_compose_invert(&padded, None).unwrap();
        assert!((h3.coeffs()[3] - a * a * 2.0).norm() < 1e-15);
    }

    #[test]
    fn exterior_inverse_roundtrip() {
        let g = PowerSeriesMap::exterior(c(1.2, 0.0), c(0.05, 0.0), &[c(0.1, 0.02), c(-0.03, 0.0)]);
        let mut padded = g.clone();
        padded.coeffs.resize(40, c(0.0, 0.0));
        let inv = series_compose_invert(&padded, None).unwrap();
        let z = c(3.0, 1.0);
        let w = direct_eval(&g, z);
        assert!((direct_eval(&inv, w) - z).norm() < 1e-12);
    }

    #[test]
    fn vector_pairings_by_residues() {
        let phi1 = c(0.4, -0.7);
        let q = QuadDiffFn::new(Annulus::new(0.0, None), move |_| -phi1 * phi1);
        let e = pair_q_vector(&q, &VectorFieldSeries::basis(-2), 1.0).unwrap();
        assert!((e.value - phi1 * phi1).norm() < 1e-14);
        let q2 = QuadDiffFn::monomial(c(1.0, 0.0), -2);
        let e2 = pair_q_vector(&q2, &VectorFieldSeries::basis(0), 1.0).unwrap();
        assert!((e2.value + c(1.0, 0.0)).norm() < 1e-14);
    }
}
