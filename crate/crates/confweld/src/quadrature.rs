//! Polar tensor quadrature on annuli and trapezoidal contour rules.
//!
//! Radial direction: Gauss-Legendre panels. Angular direction: the trapezoid
//! rule, which is spectrally accurate for smooth periodic integrands. Both are
//! refined together and the difference between consecutive levels is the
//! reported error.

use crate::real::{polar, Cx, Real};
use crate::ConfError;
use num_complex::Complex;
use rayon::prelude::*;

/// Quadrature value with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: Cx<T>,
    pub error: T,
}

impl<T: Real> Estimate<T> {
    pub fn zero() -> Self {
        Estimate { value: Complex::new(T::zero(), T::zero()), error: T::zero() }
    }

    pub fn scale(self, s: Cx<T>) -> Self {
        Estimate { value: self.value * s, error: self.error * crate::real::cabs(s) }
    }

    pub fn add(self, o: Self) -> Self {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let pi = T::pi();
    let half = T::lit(0.5);
    for i in 0..(n + 1) / 2 {
        let mut x = (pi * (T::lit(i as f64) + T::lit(0.75)) / (T::lit(n as f64) + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < T::lit(1e-15) {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != T::zero() {
            dp = d;
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::lit(n as f64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Refinement controls for [`annulus_integral`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub order: usize,
    pub panels: usize,
    pub angular: usize,
    pub max_level: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        QuadOptions {
            abs_tol: T::lit(1e-11),
            rel_tol: T::lit(1e-10),
            order: 16,
            panels: 2,
            angular: 64,
            max_level: 6,
        }
    }
}

impl<T: Real> QuadOptions<T> {
    pub fn with_tol(mut self, abs: f64, rel: f64) -> Self {
        self.abs_tol = T::lit(abs);
        self.rel_tol = T::lit(rel);
        self
    }
}

/// Radial extent of an annulus. `None` as outer radius means infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus<T> {
    pub r_in: T,
    pub r_out: Option<T>,
}

impl<T: Real> Annulus<T> {
    pub fn new(r_in: T, r_out: Option<T>) -> Self {
        Annulus { r_in, r_out }
    }

    pub fn disc(r: T) -> Self {
        Annulus { r_in: T::zero(), r_out: Some(r) }
    }

    pub fn exterior(r: T) -> Self {
        Annulus { r_in: r, r_out: None }
    }

    pub fn contains(&self, z: Cx<T>) -> bool {
        let r = crate::real::cabs(z);
        r >= self.r_in && self.r_out.map_or(true, |o| r <= o)
    }

    pub fn is_bounded(&self) -> bool {
        self.r_out.is_some()
    }
}

/// Radial nodes `(r, weight)` such that `sum w F(r) ~ int F(r) r dr`.
fn radial_rule<T: Real>(ann: &Annulus<T>, order: usize, panels: usize) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre::<T>(order);
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(order * panels);
    let (a, b, inverted) = match ann.r_out {
        Some(b) => (ann.r_in, b, false),
        None => (T::zero(), T::one() / ann.r_in, true),
    };
    let h = (b - a) / T::lit(panels as f64);
    for p in 0..panels {
        let lo = a + h * T::lit(p as f64);
        for k in 0..order {
            let s = lo + h * half * (x[k] + T::one());
            let ws = h * half * w[k];
            if inverted {
                // r = 1/s, r dr = s^{-3} ds
                out.push((T::one() / s, ws / (s * s * s)));
            } else {
                out.push((s, ws * s));
            }
        }
    }
    out
}

fn tensor_sum<T, F>(f: &F, center: Cx<T>, ann: &Annulus<T>, order: usize, panels: usize, angular: usize) -> Cx<T>
where
    T: Real,
    F: Fn(Cx<T>) -> Cx<T> + Sync,
{
    let rule = radial_rule(ann, order, panels);
    let dth = T::two_pi() / T::lit(angular as f64);
    let rows: Vec<Cx<T>> = rule
        .par_iter()
        .map(|&(r, w)| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..angular {
                let th = dth * T::lit(j as f64);
                acc += f(center + polar(r, th));
            }
            acc * (w * dth)
        })
        .collect();
    rows.into_iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// `int int f(center + r e^{i theta}) r dr dtheta` over the annulus, refined until
/// consecutive levels agree.
pub fn annulus_integral<T, F>(f: F, center: Cx<T>, ann: Annulus<T>, opts: QuadOptions<T>) -> Result<Estimate<T>, ConfError>
where
    T: Real,
    F: Fn(Cx<T>) -> Cx<T> + Sync,
{
    let mut panels = opts.panels;
    let mut angular = opts.angular;
    let mut prev = tensor_sum(&f, center, &ann, opts.order, panels, angular);
    let mut err = T::zero();
    for _ in 0..opts.max_level {
        panels *= 2;
        angular *= 2;
        let cur = tensor_sum(&f, center, &ann, opts.order, panels, angular);
        err = crate::real::cabs(cur - prev);
        if !crate::real::is_finite(cur) {
            return Err(ConfError::Evaluation("non-finite integrand".into()));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * crate::real::cabs(cur)) {
            return Ok(Estimate { value: cur, error: err });
        }
        prev = cur;
    }
    Err(ConfError::Accuracy { estimate: err.f64(), value: crate::real::cabs(prev).f64() })
}

/// Same as [`annulus_integral`] but returns the last level instead of failing.
pub fn annulus_integral_best<T, F>(f: F, center: Cx<T>, ann: Annulus<T>, opts: QuadOptions<T>) -> Estimate<T>
where
    T: Real,
    F: Fn(Cx<T>) -> Cx<T> + Sync,
{
    let mut panels = opts.panels;
    let mut angular = opts.angular;
    let mut prev = tensor_sum(&f, center, &ann, opts.order, panels, angular);
    let mut err = T::zero();
    for _ in 0..opts.max_level {
        panels *= 2;
        angular *= 2;
        let cur = tensor_sum(&f, center, &ann, opts.order, panels, angular);
        err = crate::real::cabs(cur - prev);
        prev = cur;
        if err <= opts.abs_tol.max(opts.rel_tol * crate::real::cabs(cur)) {
            break;
        }
    }
    Estimate { value: prev, error: err }
}

/// Tensor nodes `(z, weight)` with weights including the area element.
pub fn annulus_nodes<T: Real>(center: Cx<T>, ann: &Annulus<T>, order: usize, panels: usize, angular: usize) -> Vec<(Cx<T>, T)> {
    let rule = radial_rule(ann, order, panels);
    let dth = T::two_pi() / T::lit(angular as f64);
    let mut out = Vec::with_capacity(rule.len() * angular);
    for &(r, w) in &rule {
        for j in 0..angular {
            out.push((center + polar(r, dth * T::lit(j as f64)), w * dth));
        }
    }
    out
}

fn vec_sum<T, F>(f: &F, len: usize, center: Cx<T>, ann: &Annulus<T>, order: usize, panels: usize, angular: usize) -> Vec<Cx<T>>
where
    T: Real,
    F: Fn(Cx<T>) -> Vec<Cx<T>> + Sync,
{
    let nodes = annulus_nodes(center, ann, order, panels, angular);
    let parts: Vec<Vec<Cx<T>>> = nodes
        .par_chunks(256)
        .map(|chunk| {
            let mut acc = vec![Complex::new(T::zero(), T::zero()); len];
            for &(z, w) in chunk {
                for (a, v) in acc.iter_mut().zip(f(z)) {
                    *a += v * w;
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![Complex::new(T::zero(), T::zero()); len];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

/// Vector-valued version of [`annulus_integral`]; the error is the largest
/// component difference between the last two levels.
pub fn annulus_integral_vec<T, F>(f: F, len: usize, center: Cx<T>, ann: Annulus<T>, opts: QuadOptions<T>) -> Result<(Vec<Cx<T>>, T), ConfError>
where
    T: Real,
    F: Fn(Cx<T>) -> Vec<Cx<T>> + Sync,
{
    let mut panels = opts.panels;
    let mut angular = opts.angular;
    let mut prev = vec_sum(&f, len, center, &ann, opts.order, panels, angular);
    let mut err = T::zero();
    for _ in 0..opts.max_level {
        panels *= 2;
        angular *= 2;
        let cur = vec_sum(&f, len, center, &ann, opts.order, panels, angular);
        err = T::zero();
        let mut scale = T::zero();
        for (a, b) in cur.iter().zip(&prev) {
            err = err.max(crate::real::cabs(*a - *b));
            scale = scale.max(crate::real::cabs(*a));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok((cur, err));
        }
        prev = cur;
    }
    Err(ConfError::Accuracy { estimate: err.f64(), value: f64::NAN })
}

/// `(1/2 pi) int_0^{2 pi} f(center + r e^{i theta}) dtheta` by the trapezoid rule,
/// doubling `n` until two levels agree to `tol`.
pub fn circle_mean<T, F>(f: F, center: Cx<T>, radius: T, tol: T) -> Result<Estimate<T>, ConfError>
where
    T: Real,
    F: Fn(Cx<T>) -> Cx<T>,
{
    let rule = |n: usize| {
        let dth = T::two_pi() / T::lit(n as f64);
        let mut acc = Complex::new(T::zero(), T::zero());
        for j in 0..n {
            acc += f(center + polar(radius, dth * T::lit(j as f64)));
        }
        acc / T::lit(n as f64)
    };
    let mut n = 32;
    let mut prev = rule(n);
    if !crate::real::is_finite(prev) {
        return Err(ConfError::Evaluation("non-finite value on contour".into()));
    }
    while n < 1 << 16 {
        n *= 2;
        let cur = rule(n);
        if !crate::real::is_finite(cur) {
            return Err(ConfError::Evaluation("non-finite value on contour".into()));
        }
        let err = crate::real::cabs(cur - prev);
        if err <= tol.max(tol * crate::real::cabs(cur)) {
            return Ok(Estimate { value: cur, error: err });
        }
        prev = cur;
    }
    Err(ConfError::Accuracy { estimate: f64::NAN, value: crate::real::cabs(prev).f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn area_of_annulus() {
        let one = |_: Cx<f64>| Complex::new(1.0, 0.0);
        let e = annulus_integral(one, Complex::new(0.0, 0.0), Annulus::new(1.0, Some(2.0)), QuadOptions::default()).unwrap();
        assert!((e.value.re - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn exterior_power_decay() {
        // int_{|z|>2} |z|^{-6} dA = 2 pi * 2^{-4} / 4
        let f = |z: Cx<f64>| Complex::new(z.norm().powi(-6), 0.0);
        let e = annulus_integral(f, Complex::new(0.0, 0.0), Annulus::exterior(2.0), QuadOptions::default()).unwrap();
        let exact = 2.0 * std::f64::consts::PI / 64.0;
        assert!((e.value.re - exact).abs() < 1e-12);
    }
}
