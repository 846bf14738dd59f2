//! Welding homeomorphisms of the circle: construction from boundary measures,
//! numerical conformal welding, Riemann maps of curves, and the functionals
//! `K`, `S_1`, `Omega` and the curve Liouville action.
//!
//! Two welding solvers are provided. [`zipper_weld`] glues the circle pairwise
//! with tilted-slit maps and accepts rough homeomorphisms. [`spectral_weld`]
//! solves the linear collocation problem `f(e^{i theta}) = g(e^{i h(theta)})` for
//! truncated series and is accurate to near machine precision for analytic
//! homeomorphisms.

use crate::beltrami::{beta_coefficients, BeltramiSpec, CauchyRule};
use crate::conformal::{pair_q_beltrami_with, schwarzian, Constants, MapKind, PowerSeriesMap, QuadDiffFn};
pub use crate::curve::CurvePolyline;
use crate::fields::{dirichlet_energy, liouville_action_disc, FieldVariant, FourierField, GmcMeasure, Side};
use crate::quadrature::{Annulus, QuadOptions};
use crate::real::{cabs, carg, cis, csqrt, polar, Cx, Real};
use crate::spectral::{conjugate, fft, grid, TrigSeries};
use crate::ConfError;
use nalgebra::DMatrix;
use num_complex::Complex;

fn zero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// How a [`CircleHomeo`] is evaluated between knots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Piecewise cubic Hermite with PCHIP slopes; preserves monotonicity.
    MonotoneCubic,
    /// Trigonometric interpolation of `h(theta) - theta`; needs the uniform grid.
    Spectral,
}

/// Increasing homeomorphism of the circle stored as a lift through the knots
/// `(knots[i], values[i])`, extended by `h(theta + 2 pi) = h(theta) + 2 pi`.
///
/// Both knot sequences are strictly increasing and span less than one turn.
/// Homeomorphisms built by [`CircleHomeo::from_values`] use the uniform grid
/// `theta_i = 2 pi i / n`; inverses swap the two sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleHomeo<T> {
    knots: Vec<T>,
    values: Vec<T>,
    interpolation: Interpolation,
    slopes: Vec<T>,
    shift: Option<TrigSeries<T>>,
}

fn check_lift<T: Real>(x: &[T], what: &str) -> Result<(), ConfError> {
    let n = x.len();
    if x.iter().any(|v| !v.f64().is_finite()) {
        return Err(ConfError::Domain(format!("non-finite {what}")));
    }
    for i in 0..n {
        let next = if i + 1 < n { x[i + 1] } else { x[0] + T::two_pi() };
        if !(next > x[i]) {
            return Err(ConfError::Domain(format!("{what} not strictly increasing at index {i}")));
        }
    }
    Ok(())
}

/// PCHIP slopes for periodic data with period `2 pi` in both coordinates.
fn pchip_slopes<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let tau = T::two_pi();
    let width = |i: usize| if i + 1 < n { x[i + 1] - x[i] } else { x[0] + tau - x[i] };
    let rise = |i: usize| if i + 1 < n { y[i + 1] - y[i] } else { y[0] + tau - y[i] };
    (0..n)
        .map(|i| {
            let j = (i + n - 1) % n;
            let (h0, h1) = (width(j), width(i));
            let (d0, d1) = (rise(j) / h0, rise(i) / h1);
            let (w0, w1) = (T::lit(2.0) * h1 + h0, h1 + T::lit(2.0) * h0);
            (w0 + w1) / (w0 / d0 + w1 / d1)
        })
        .collect()
}

impl<T: Real> CircleHomeo<T> {
    /// Values on the uniform grid.
    pub fn from_values(values: Vec<T>, interpolation: Interpolation) -> Result<Self, ConfError> {
        Self::from_knots(grid::<T>(values.len()), values, interpolation)
    }

    pub fn from_knots(knots: Vec<T>, values: Vec<T>, interpolation: Interpolation) -> Result<Self, ConfError> {
        let n = values.len();
        if n < 4 {
            return Err(ConfError::Resolution(format!("{n} knots")));
        }
        if knots.len() != n {
            return Err(ConfError::Domain(format!("{} knots for {n} values", knots.len())));
        }
        check_lift(&knots, "knots")?;
        check_lift(&values, "lift")?;
        let shift = if interpolation == Interpolation::Spectral {
            let th = grid::<T>(n);
            let tol = T::lit(1e-12);
            if knots.iter().zip(&th).any(|(&a, &b)| (a - b).abs() > tol) {
                return Err(ConfError::Configuration("spectral interpolation needs the uniform grid".into()));
            }
            let d: Vec<T> = values.iter().zip(&th).map(|(&v, &t)| v - t).collect();
            Some(TrigSeries::from_samples(&d))
        } else {
            None
        };
        let slopes = pchip_slopes(&knots, &values);
        Ok(CircleHomeo { knots, values, interpolation, slopes, shift })
    }

    pub fn from_fn(n: usize, h: impl Fn(T) -> T, interpolation: Interpolation) -> Result<Self, ConfError> {
        Self::from_values(grid::<T>(n).into_iter().map(h).collect(), interpolation)
    }

    /// `theta -> theta + alpha`.
    pub fn rotation(n: usize, alpha: T) -> Self {
        let values = grid::<T>(n).into_iter().map(|t| t + alpha).collect();
        Self::from_values(values, Interpolation::Linear).expect("rotation lift is increasing")
    }

    pub fn identity(n: usize) -> Self {
        Self::rotation(n, T::zero())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Same knots with another interpolation; spectral re-samples onto the uniform grid.
    pub fn with_interpolation(self, interpolation: Interpolation) -> Self {
        if interpolation == Interpolation::Spectral && self.shift.is_none() {
            let n = self.len();
            return Self::from_fn(n, |t| self.eval(t), interpolation).expect("resampling keeps the lift increasing");
        }
        Self::from_knots(self.knots, self.values, interpolation).expect("knots already validated")
    }

    fn knot(&self, i: usize) -> (T, T) {
        let n = self.len();
        if i < n {
            (self.knots[i], self.values[i])
        } else {
            (self.knots[i - n] + T::two_pi(), self.values[i - n] + T::two_pi())
        }
    }

    /// Cell index and number of whole turns for `theta`.
    fn locate(&self, theta: T) -> (usize, T, T) {
        let tau = T::two_pi();
        let turns = ((theta - self.knots[0]) / tau).floor();
        let y = theta - turns * tau;
        let i = self.knots.partition_point(|&k| k <= y).max(1) - 1;
        (i, y, turns)
    }

    fn hermite(&self, i: usize, y: T) -> (T, T) {
        let n = self.len();
        let ((x0, y0), (x1, y1)) = (self.knot(i), self.knot(i + 1));
        let h = x1 - x0;
        let u = (y - x0) / h;
        if self.interpolation == Interpolation::Linear {
            return (y0 + (y1 - y0) * u, (y1 - y0) / h);
        }
        let (m0, m1) = (self.slopes[i] * h, self.slopes[(i + 1) % n] * h);
        let (u2, u3) = (u * u, u * u * u);
        let (two, three, six) = (T::lit(2.0), T::lit(3.0), T::lit(6.0));
        let v = y0 * (two * u3 - three * u2 + T::one()) + m0 * (u3 - two * u2 + u) + y1 * (three * u2 - two * u3) + m1 * (u3 - u2);
        let d = y0 * (six * u2 - six * u) + m0 * (three * u2 - T::lit(4.0) * u + T::one()) + y1 * (six * u - six * u2) + m1 * (three * u2 - two * u);
        (v, d / h)
    }

    /// Lifted value `h(theta)`.
    pub fn eval(&self, theta: T) -> T {
        if let Some(s) = &self.shift {
            return theta + s.eval(theta);
        }
        let (i, y, turns) = self.locate(theta);
        self.hermite(i, y).0 + turns * T::two_pi()
    }

    pub fn deriv(&self, theta: T) -> T {
        if let Some(s) = &self.shift {
            return T::one() + s.deriv(theta);
        }
        let (i, y, _) = self.locate(theta);
        self.hermite(i, y).1
    }

    pub fn point(&self, theta: T) -> Cx<T> {
        cis(self.eval(theta))
    }

    /// Post-composition with the rotation by `beta`.
    pub fn rotated_left(&self, beta: T) -> Self {
        let values = self.values.iter().map(|&v| v + beta).collect();
        Self::from_knots(self.knots.clone(), values, self.interpolation).expect("rotation keeps the lift increasing")
    }

    /// Pre-composition with the rotation by `beta`.
    pub fn rotated_right(&self, beta: T) -> Self {
        if self.shift.is_some() {
            return Self::from_fn(self.len(), |t| self.eval(t + beta), self.interpolation).expect("rotation keeps the lift increasing");
        }
        let knots = self.knots.iter().map(|&k| k - beta).collect();
        Self::from_knots(knots, self.values.clone(), self.interpolation).expect("rotation keeps the lift increasing")
    }

    /// `self o other`, at the knots of `other`.
    pub fn compose(&self, other: &Self) -> Result<Self, ConfError> {
        let values = other.values.iter().map(|&v| self.eval(v)).collect();
        Self::from_knots(other.knots.clone(), values, other.interpolation)
    }

    /// `max |self - other|` over the knots of both.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.knots.iter().chain(&other.knots).map(|&t| (self.eval(t) - other.eval(t)).abs()).fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest `|h(theta) - theta - c|` over the knots, minimised over the constant `c`.
    pub fn distance_to_rotation(&self) -> T {
        let d = self.knots.iter().zip(&self.values).map(|(&t, &v)| v - t);
        let (lo, hi) = d.fold((T::lit(f64::INFINITY), T::lit(f64::NEG_INFINITY)), |(lo, hi), x| (lo.min(x), hi.max(x)));
        (hi - lo) / T::lit(2.0)
    }
}

/// Inverse homeomorphism. Knot-based interpolations swap knots and values, so
/// inverting twice returns the original exactly; spectral ones are re-sampled
/// on the uniform grid by Newton iteration on the trigonometric interpolant.
pub fn invert_homeo<T: Real>(h: &CircleHomeo<T>) -> CircleHomeo<T> {
    match &h.shift {
        None => CircleHomeo::from_knots(h.values.clone(), h.knots.clone(), h.interpolation).expect("inverse of an increasing lift is increasing"),
        Some(s) => {
            let values = grid::<T>(h.len())
                .into_iter()
                .map(|psi| s.invert_shift(psi).map(|p| p.0))
                .collect::<Result<Vec<T>, _>>()
                .expect("spectral homeomorphism has positive derivative");
            CircleHomeo::from_values(values, Interpolation::Spectral).expect("inverse of an increasing lift is increasing")
        }
    }
}

/// Piecewise-linear distribution function of a cell measure, normalised and lifted.
struct Cdf<'a, T> {
    m: &'a GmcMeasure<T>,
    mass: T,
}

impl<T: Real> Cdf<'_, T> {
    fn before(&self, i: usize) -> T {
        if i == 0 {
            T::zero()
        } else {
            self.m.cdf[i - 1]
        }
    }

    fn forward(&self, x: T) -> T {
        let n = self.m.weights.len();
        let tau = T::two_pi();
        let turns = (x / tau).floor();
        let x0 = x - turns * tau;
        let u = x0 * T::lit(n as f64) / tau;
        let i = u.floor().to_usize().unwrap_or(0).min(n - 1);
        let frac = u - T::lit(i as f64);
        turns + (self.before(i) + self.m.weights[i] * frac) / self.mass
    }

    fn inverse(&self, u: T) -> T {
        let n = self.m.weights.len();
        let turns = u.floor();
        let target = (u - turns) * self.mass;
        let i = self.m.cdf.partition_point(|&c| c <= target).min(n - 1);
        let w = self.m.weights[i];
        let frac = if w > T::zero() { ((target - self.before(i)) / w).max(T::zero()).min(T::one()) } else { T::zero() };
        (turns + (T::lit(i as f64) + frac) / T::lit(n as f64)) * T::two_pi()
    }
}

/// The homeomorphism sending `1` to `e^{-i alpha}` whose pullback of the
/// normalised `m1` is the normalised `m2`.
pub fn homeo_from_measures<T: Real>(m1: &GmcMeasure<T>, m2: &GmcMeasure<T>, alpha: T) -> Result<CircleHomeo<T>, ConfError> {
    let n = m1.weights.len();
    if n != m2.weights.len() {
        return Err(ConfError::Domain(format!("grid sizes differ ({n} and {})", m2.weights.len())));
    }
    if n < 4 {
        return Err(ConfError::Resolution(format!("{n} cells")));
    }
    let (a, b) = (m1.total_mass(), m2.total_mass());
    if !(a > T::zero() && b > T::zero()) {
        return Err(ConfError::Degenerate("measure with zero mass".into()));
    }
    let c1 = Cdf { m: m1, mass: a };
    let c2 = Cdf { m: m2, mass: b };
    let base = c1.forward(-alpha);
    let values = (0..n).map(|i| c1.inverse(base + c2.before(i) / b)).collect();
    CircleHomeo::from_values(values, Interpolation::MonotoneCubic)
}

/// A homeomorphism together with the maps and curve that weld it.
#[derive(Clone, Debug)]
pub struct WeldingTriple<T> {
    pub h: CircleHomeo<T>,
    /// Interior map with `f(0) = 0`.
    pub f: PowerSeriesMap<T>,
    /// Exterior map with `g(infinity) = infinity`.
    pub g: PowerSeriesMap<T>,
    pub curve: CurvePolyline<T>,
    /// Largest angular mismatch `|f - g o h| / |g'|` on the grid.
    pub residual: T,
}

impl<T: Real> WeldingTriple<T> {
    /// Post-composes both maps with `z -> z / f'(0)`, so that `f'(0) = 1`.
    pub fn normalized(&self) -> Self {
        let s = Complex::new(T::one(), T::zero()) / self.f.lead();
        WeldingTriple {
            h: self.h.clone(),
            f: self.f.scaled(s),
            g: self.g.scaled(s),
            curve: self.curve.map(|p| p * s),
            residual: self.residual,
        }
    }

    /// Sup-norm of `g^{-1} o f - h` over the grid, measured through `|f - g o h| / |g'|`.
    pub fn welding_residual(&self) -> T {
        welding_mismatch(&self.f, &self.g, &self.h, self.h.len())
    }
}

fn welding_mismatch<T: Real>(f: &PowerSeriesMap<T>, g: &PowerSeriesMap<T>, h: &CircleHomeo<T>, n: usize) -> T {
    let half = T::lit(0.5) * T::two_pi() / T::lit(n as f64);
    grid::<T>(n)
        .into_iter()
        .map(|t| {
            let t = t + half;
            let a = f.horner(cis(t))[0];
            let b = g.horner(h.point(t));
            cabs(a - b[0]) / cabs(b[1])
        })
        .fold(T::zero(), |a, b| if b.f64().is_nan() { T::lit(f64::NAN) } else { a.max(b) })
}

/// Taylor coefficients (index `k` for `z^k`, `0 <= k < n/2`) from boundary samples, and the largest negative-frequency coefficient.
fn taylor_from_boundary<T: Real>(samples: &[Cx<T>]) -> (Vec<Cx<T>>, T) {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft(&mut buf);
    let inv = T::one() / T::lit(n as f64);
    // fft uses e^{-i k theta}, so bin k holds the coefficient of z^k
    let coeffs: Vec<Cx<T>> = (0..n / 2).map(|k| buf[k] * inv).collect();
    let defect = (n / 2 + 1..n).map(|k| cabs(buf[k]) * inv).fold(T::zero(), |a, b| a.max(b));
    (coeffs, defect)
}

/// Laurent coefficients of `z^1, z^0, z^{-1}, ...` and the largest coefficient of `z^k`, `k >= 2`.
fn laurent_from_boundary<T: Real>(samples: &[Cx<T>]) -> (Vec<Cx<T>>, T) {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft(&mut buf);
    let inv = T::one() / T::lit(n as f64);
    let mut coeffs = vec![buf[1] * inv, buf[0] * inv];
    coeffs.extend((1..n / 2).map(|k| buf[n - k] * inv));
    let defect = (2..n / 2).map(|k| cabs(buf[k]) * inv).fold(T::zero(), |a, b| a.max(b));
    (coeffs, defect)
}

/// Closed curve `sum_k c_k e^{iks}` for `k` in `kmin..kmin + modes.len()`.
#[derive(Clone, Debug)]
struct Periodic<T> {
    kmin: i64,
    modes: Vec<Cx<T>>,
}

impl<T: Real> Periodic<T> {
    fn from_points(points: &[Cx<T>]) -> Self {
        let n = points.len();
        let mut buf = points.to_vec();
        fft(&mut buf);
        let inv = T::one() / T::lit(n as f64);
        let top = ((n - 1) / 2) as i64;
        let modes = (-top..=top).map(|k| buf[k.rem_euclid(n as i64) as usize] * inv).collect();
        Periodic { kmin: -top, modes }.trimmed()
    }

    fn from_taylor(coeffs: &[Cx<T>]) -> Self {
        Periodic { kmin: 0, modes: coeffs.to_vec() }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        let peak = self.modes.iter().map(|c| cabs(*c)).fold(T::zero(), |a, b| a.max(b));
        let tol = T::lit(1e-15) * peak;
        while self.modes.len() > 1 && cabs(*self.modes.last().unwrap()) <= tol {
            self.modes.pop();
        }
        while self.modes.len() > 1 && cabs(self.modes[0]) <= tol {
            self.modes.remove(0);
            self.kmin += 1;
        }
        self
    }

    fn eval(&self, s: T) -> (Cx<T>, Cx<T>) {
        let step = cis(s);
        let mut e = cis(s * T::lit(self.kmin as f64));
        let (mut v, mut d) = (zero::<T>(), zero::<T>());
        for (j, &c) in self.modes.iter().enumerate() {
            let k = T::lit((self.kmin + j as i64) as f64);
            v += c * e;
            d += c * e * Complex::new(T::zero(), k);
            e *= step;
        }
        (v, d)
    }
}

/// Boundary correspondence `s(theta)` of the Riemann map onto the domain
/// bounded by `curve` that contains 0 (interior) or infinity (exterior), with
/// positive derivative at the centre. Requires the curve to be star-shaped
/// about 0.
fn theodorsen<T: Real>(curve: &Periodic<T>, n: usize, side: Side) -> Result<Vec<T>, ConfError> {
    let tau = T::two_pi();
    // lifted argument on a fine grid for the first guess
    let fine = (4 * n).max(1024);
    let mut args = Vec::with_capacity(fine + 1);
    let mut prev = carg(curve.eval(T::zero()).0);
    args.push(prev);
    for i in 1..=fine {
        let s = tau * T::lit(i as f64) / T::lit(fine as f64);
        let a = carg(curve.eval(s).0);
        let mut d = a - (prev - (prev / tau).floor() * tau);
        while d > T::pi() {
            d -= tau;
        }
        while d < -T::pi() {
            d += tau;
        }
        if !(d > T::zero()) {
            return Err(ConfError::Geometry("curve is not star-shaped about 0 with positive orientation".into()));
        }
        prev += d;
        args.push(prev);
    }
    let turn = args[fine] - args[0];
    if (turn - tau).abs() > T::lit(1e-6) {
        return Err(ConfError::Geometry("curve does not wind once around 0".into()));
    }
    let sign = match side {
        Side::Interior => T::one(),
        Side::Exterior => -T::one(),
    };
    let th = grid::<T>(n);
    let a0 = args[0];
    let mut s: Vec<T> = th
        .iter()
        .map(|&t| {
            let m = ((a0 - t) / tau).ceil();
            let y = t + m * tau;
            let i = args.partition_point(|&a| a <= y).clamp(1, fine) - 1;
            let frac = (y - args[i]) / (args[i + 1] - args[i]);
            tau * (T::lit(i as f64) + frac) / T::lit(fine as f64) - m * tau
        })
        .collect();
    let newton = |s0: T, target: T| -> Result<T, ConfError> {
        let mut x = s0;
        for _ in 0..60 {
            let (v, d) = curve.eval(x);
            let f = carg(v * cis(-target));
            let slope = (d / v).im;
            if !(slope > T::zero()) {
                return Err(ConfError::Geometry("curve is not star-shaped about 0".into()));
            }
            let step = (f / slope).max(-T::lit(0.5)).min(T::lit(0.5));
            x -= step;
            if step.abs() < T::lit(1e-15) {
                break;
            }
        }
        Ok(x)
    };
    // under-relaxation keeps the linearised iteration contracting when the
    // radial slope eps = sup |d log rho / d arg| exceeds 1
    let eps = (0..fine)
        .map(|i| {
            let (v, d) = curve.eval(tau * T::lit(i as f64) / T::lit(fine as f64));
            let r = d / v;
            (r.re / r.im).abs()
        })
        .fold(T::zero(), |a, b| a.max(b));
    let omega = if eps < T::lit(0.5) { T::one() } else { T::one() / (T::one() + eps * eps) };
    let mut last = T::lit(f64::INFINITY);
    for _ in 0..2000 {
        let rho: Vec<T> = s.iter().map(|&x| cabs(curve.eval(x).0).ln()).collect();
        let conj = conjugate(&rho);
        let mut delta = T::zero();
        for j in 0..n {
            let (v, _) = curve.eval(s[j]);
            let cur = th[j] + carg(v * cis(-th[j]));
            let target = cur + omega * (th[j] + sign * conj[j] - cur);
            let x = newton(s[j], target)?;
            delta = delta.max((x - s[j]).abs());
            s[j] = x;
        }
        delta /= omega;
        // stop at 1e-14 or where rounding noise stops further progress
        if delta < T::lit(1e-14) || (delta < T::lit(1e-11) && delta > last * T::lit(0.7)) {
            return Ok(s);
        }
        if delta > last * T::lit(1.5) && delta > T::lit(1e-6) {
            return Err(ConfError::Solver { residual: delta.f64(), detail: "boundary correspondence iteration diverges".into() });
        }
        last = delta;
    }
    if last < T::lit(1e-10) {
        Ok(s)
    } else {
        Err(ConfError::Solver { residual: last.f64(), detail: "boundary correspondence iteration did not converge".into() })
    }
}

/// Triple from the interior and exterior boundary correspondences of a curve.
fn triple_from_correspondence<T: Real>(curve: &Periodic<T>, s_int: &[T], s_ext: &[T]) -> Result<WeldingTriple<T>, ConfError> {
    let n = s_int.len();
    let th = grid::<T>(n);
    let fs: Vec<Cx<T>> = s_int.iter().map(|&s| curve.eval(s).0).collect();
    let gs: Vec<Cx<T>> = s_ext.iter().map(|&s| curve.eval(s).0).collect();
    let (mut fc, _) = taylor_from_boundary(&fs);
    fc[0] = zero();
    let f = PowerSeriesMap::from_taylor(fc, T::one()).trimmed(T::lit(1e-17));
    let (gc, _) = laurent_from_boundary(&gs);
    let g = PowerSeriesMap::from_laurent_exterior(gc, T::one()).trimmed(T::lit(1e-17));
    // h = s_ext^{-1} o s_int, with s_ext(psi) = psi + D(psi)
    let d: Vec<T> = s_ext.iter().zip(&th).map(|(&s, &t)| s - t).collect();
    let shift = TrigSeries::from_samples(&d);
    let values = s_int.iter().map(|&s| shift.invert_shift(s).map(|p| p.0)).collect::<Result<Vec<T>, _>>()?;
    let h = CircleHomeo::from_values(values, Interpolation::Spectral)?;
    let residual = welding_mismatch(&f, &g, &h, n);
    Ok(WeldingTriple { h, f, g, curve: CurvePolyline::new(fs, true), residual })
}

/// Largest Fourier coefficient of `s - theta` in the upper half of the spectrum, relative to the largest one.
fn correspondence_tail<T: Real>(s: &[T]) -> T {
    let d: Vec<T> = s.iter().zip(grid::<T>(s.len())).map(|(&x, t)| x - t).collect();
    let series = TrigSeries::from_samples(&d);
    let m = series.modes.len();
    let peak = series.modes.iter().map(|c| cabs(*c)).fold(T::zero(), |a, b| a.max(b));
    let tail = series.modes[m / 2..].iter().map(|c| cabs(*c)).fold(T::zero(), |a, b| a.max(b));
    tail / (T::one() + peak)
}

const MAX_GRID: usize = 1 << 15;

/// Boundary correspondences on the smallest grid `n * 2^j` that resolves them.
fn resolved_correspondence<T: Real>(
    curve: &Periodic<T>,
    n: usize,
    interior: bool,
) -> Result<(Vec<T>, Vec<T>), ConfError> {
    let mut m = n.max(16);
    loop {
        let s_int = if interior { theodorsen(curve, m, Side::Interior)? } else { grid::<T>(m) };
        let s_ext = theodorsen(curve, m, Side::Exterior)?;
        let tail = correspondence_tail(&s_int).max(correspondence_tail(&s_ext));
        if tail <= T::lit(1e-13) {
            return Ok((s_int, s_ext));
        }
        if 2 * m > MAX_GRID {
            return Err(ConfError::Resolution(format!("boundary correspondence tail {} at {m} points", tail.f64())));
        }
        m *= 2;
    }
}

/// Riemann maps and welding of a closed polyline, treated as samples of a
/// smooth curve at equally spaced parameter values. The curve must be simple,
/// separate 0 from infinity and be star-shaped about 0. `n` is the smallest
/// boundary grid; it is doubled until the boundary correspondences are resolved.
pub fn riemann_maps_of_curve<T: Real>(curve: &CurvePolyline<T>, n: usize) -> Result<WeldingTriple<T>, ConfError> {
    if !curve.closed || curve.len() < 8 {
        return Err(ConfError::Geometry("need a closed curve with at least 8 points".into()));
    }
    if !curve.is_simple() {
        return Err(ConfError::Geometry("curve is not simple".into()));
    }
    let wind = curve.winding_number(zero());
    if wind.abs() != 1 {
        return Err(ConfError::Geometry("curve does not separate 0 from infinity".into()));
    }
    let mut pts = curve.points.clone();
    if wind < 0 {
        pts.reverse();
    }
    let periodic = Periodic::from_points(&pts);
    let (s_int, s_ext) = resolved_correspondence(&periodic, n, true)?;
    triple_from_correspondence(&periodic, &s_int, &s_ext)
}

/// Welding of the curve `f(S^1)` for an interior map given as a series, on a
/// grid of at least `n` points (refined as in [`riemann_maps_of_curve`]).
pub fn welding_of_interior_map<T: Real>(f: &PowerSeriesMap<T>, n: usize) -> Result<WeldingTriple<T>, ConfError> {
    if f.kind() != MapKind::Interior {
        return Err(ConfError::Domain("expected an interior map".into()));
    }
    if f.domain_radius() < T::one() {
        return Err(ConfError::Domain("series does not reach the unit circle".into()));
    }
    let mut coeffs = f.coeffs().to_vec();
    if let Some(c) = coeffs.first_mut() {
        *c = zero();
    }
    let periodic = Periodic::from_taylor(&coeffs);
    let (s_int, s_ext) = resolved_correspondence(&periodic, n, false)?;
    let mut w = triple_from_correspondence(&periodic, &s_int, &s_ext)?;
    w.f = PowerSeriesMap::from_taylor(coeffs, T::one());
    w.residual = welding_mismatch(&w.f, &w.g, &w.h, s_int.len());
    Ok(w)
}

/// `(z - y)^a (z - x)^{1 - a}` on the closed upper half-plane, `x < 0 < y`,
/// `a = y / (y - x)`: maps `x` and `y` to 0 and the segment between them onto
/// a slit whose tip is the image of 0.
fn slit<T: Real>(z: Cx<T>, x: T, y: T, a: T) -> Cx<T> {
    let hlog = |w: Cx<T>| {
        let mut t = w.im.atan2(w.re);
        if t < -T::frac_pi_2() {
            t += T::two_pi();
        }
        Complex::new(cabs(w).ln(), t)
    };
    let l = hlog(z - re(y)) * a + hlog(z - re(x)) * (T::one() - a);
    polar(l.re.exp(), l.im)
}

fn slit_real<T: Real>(u: T, x: T, y: T, a: T) -> T {
    let b = T::one() - a;
    if u <= x {
        -((y - u).powf(a) * (x - u).powf(b))
    } else {
        (u - y).powf(a) * (u - x).powf(b)
    }
}

/// Conformal welding by the zipper: the circle pairs `(e^{i theta_k}, e^{i h(theta_k)})`
/// on a uniform grid of `n_points` are glued one at a time with tilted-slit maps.
///
/// The output is normalised by `f(0) = 0`, `f'(0) = 1` and `g(infinity) = infinity`.
pub fn zipper_weld<T: Real>(h: &CircleHomeo<T>, n_points: usize) -> Result<WeldingTriple<T>, ConfError> {
    let n = n_points;
    if n < 256 {
        return Err(ConfError::Configuration(format!("zipper needs at least 256 points, got {n}")));
    }
    let tau = T::two_pi();
    let two = T::lit(2.0);
    let th = grid::<T>(n);
    let psi: Vec<T> = th.iter().map(|&t| h.eval(t)).collect();
    for k in 1..n {
        if !(psi[k] > psi[k - 1]) || psi[n - 1] >= psi[0] + tau {
            return Err(ConfError::Domain("homeomorphism is not strictly increasing on the zipper grid".into()));
        }
    }
    // Each disc goes to a half-plane with the anchor pair at infinity and the
    // last pair at 0; the short arcs between them land on the positive axis.
    let half_plane = |t: &[T]| {
        let (a, b) = (t[n - 1], t[0]);
        let lambda = ((a - b + tau) / T::lit(4.0)).sin() / ((b + tau - a) / T::lit(4.0)).sin();
        let xs: Vec<T> = t.iter().map(|&s| lambda * ((s - a) / two).sin() / ((s - b) / two).sin()).collect();
        (xs, lambda, (a - b) / two)
    };
    let (xs, lam_in, ang_in) = half_plane(&th);
    let (ys, lam_ex, ang_ex) = half_plane(&psi);
    let i = Complex::new(T::zero(), T::one());
    // glue the two half-planes along the positive axis, then open up with i sqrt
    let mut xu: Vec<T> = xs.iter().map(|&x| -(-x).max(T::zero()).sqrt()).collect();
    let mut yu: Vec<T> = ys.iter().map(|&y| (-y).max(T::zero()).sqrt()).collect();
    let origin = i * csqrt(polar(lam_in, ang_in));
    let infinity = i * csqrt(polar(lam_ex, -ang_ex));
    // tracked[0], tracked[1]: images of 0 and infinity; tracked[2 + j]: curve point of pair n - 1 - j
    let mut tracked: Vec<Cx<T>> = vec![origin, infinity, zero()];
    for k in (1..n - 1).rev() {
        let (x, y) = (xu[k], yu[k]);
        if !(x < T::zero() && y > T::zero()) {
            return Err(ConfError::Solver { residual: f64::NAN, detail: format!("zipper lost the ordering at pair {k}") });
        }
        let a = y / (y - x);
        for p in tracked.iter_mut() {
            *p = slit(*p, x, y, a);
        }
        for j in 1..k {
            xu[j] = slit_real(xu[j], x, y, a);
            yu[j] = slit_real(yu[j], x, y, a);
        }
        tracked.push(zero());
    }
    // close the first arc by squaring, then send 0 and infinity home
    let (o, e) = (tracked[0] * tracked[0], tracked[1] * tracked[1]);
    let mut pts = vec![zero::<T>(); n];
    pts[0] = Complex::new(T::one(), T::zero());
    for (j, p) in tracked.iter().enumerate().skip(2) {
        let k = n - 1 - (j - 2);
        let w = *p * *p;
        pts[k] = (w - o) / (w - e);
    }
    if pts.iter().any(|p| !crate::real::is_finite(*p)) {
        return Err(ConfError::Solver { residual: f64::NAN, detail: "zipper produced non-finite points".into() });
    }
    let (mut fc, _) = taylor_from_boundary(&pts);
    let lead = fc[1];
    if cabs(lead) == T::zero() {
        return Err(ConfError::SingularMap("welded interior map has f'(0) = 0".into()));
    }
    let s = Complex::new(T::one(), T::zero()) / lead;
    for c in fc.iter_mut() {
        *c *= s;
    }
    fc[0] = zero();
    let pts: Vec<Cx<T>> = pts.into_iter().map(|p| p * s).collect();
    let f = PowerSeriesMap::from_taylor(fc, T::one()).trimmed(T::lit(1e-17));
    let hh = CircleHomeo::from_values(psi, h.interpolation)?;
    // exterior boundary values g(e^{i psi}) = f(e^{i h^{-1}(psi)}) on the uniform psi grid
    let inv = invert_homeo(&hh);
    let gs: Vec<Cx<T>> = grid::<T>(n).into_iter().map(|t| f.horner(cis(inv.eval(t)))[0]).collect();
    let (gc, _) = laurent_from_boundary(&gs);
    let g = PowerSeriesMap::from_laurent_exterior(gc, T::one()).trimmed(T::lit(1e-17));
    let residual = welding_mismatch(&f, &g, &hh, n);
    Ok(WeldingTriple { h: hh, f, g, curve: CurvePolyline::new(pts, true), residual })
}

/// Settings for [`spectral_weld`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeldOptions<T> {
    /// Number of Taylor and Laurent coefficients solved for.
    pub modes: usize,
    /// Largest accepted welding residual.
    pub tol: T,
}

impl<T: Real> Default for WeldOptions<T> {
    fn default() -> Self {
        WeldOptions { modes: 64, tol: T::lit(1e-9) }
    }
}

/// Conformal welding of an analytic homeomorphism by least-squares collocation
/// of `f(e^{i theta}) = g(e^{i h(theta)})` with `f(z) = z + sum_{k=2}^{M} a_k z^k`
/// and `g(z) = b_1 z + sum_{k=0}^{M} b_{-k} z^{-k}`.
pub fn spectral_weld<T: Real>(h: &CircleHomeo<T>, opts: WeldOptions<T>) -> Result<WeldingTriple<T>, ConfError> {
    let m = opts.modes;
    if m < 4 {
        return Err(ConfError::Configuration(format!("{m} modes")));
    }
    let n = (4 * m).next_power_of_two().max(256);
    let th = grid::<T>(n);
    let cols = 2 * m + 1;
    let mut a = DMatrix::<Cx<T>>::zeros(n, cols);
    let mut rhs = nalgebra::DVector::<Cx<T>>::zeros(n);
    for (j, &t) in th.iter().enumerate() {
        let z = cis(t);
        let w = h.point(t);
        let winv = w.conj();
        let mut zp = z;
        for k in 2..=m {
            zp *= z;
            a[(j, k - 2)] = zp;
        }
        a[(j, m - 1)] = -w;
        let mut wp = Complex::new(-T::one(), T::zero());
        for k in 0..=m {
            a[(j, m + k)] = wp;
            wp *= winv;
        }
        rhs[j] = -z;
    }
    let qr = a.qr();
    let y = qr.q().adjoint() * rhs;
    let x = qr
        .r()
        .solve_upper_triangular(&y)
        .ok_or_else(|| ConfError::Solver { residual: f64::NAN, detail: "singular collocation matrix".into() })?;
    let mut fc = vec![zero::<T>(), Complex::new(T::one(), T::zero())];
    fc.extend((0..m - 1).map(|k| x[k]));
    let gc: Vec<Cx<T>> = (m - 1..cols).map(|k| x[k]).collect();
    let f = PowerSeriesMap::from_taylor(fc, T::one());
    let g = PowerSeriesMap::from_laurent_exterior(gc, T::one());
    let residual = welding_mismatch(&f, &g, h, n);
    if !(residual <= opts.tol) {
        return Err(ConfError::Solver { residual: residual.f64(), detail: format!("spectral welding with {m} modes") });
    }
    let pts = th.iter().map(|&t| f.horner(cis(t))[0]).collect();
    Ok(WeldingTriple { h: h.clone(), f, g, curve: CurvePolyline::new(pts, true), residual })
}

/// `K` and `S_1` of a welding, with the two area integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeldingEnergies<T> {
    pub k: T,
    /// `+inf` when either area integral fails to converge.
    pub s1: T,
    /// `int_D |f''/f'|^2` (partial sum when not converged).
    pub interior: T,
    /// `int_{D*} |g''/g'|^2` (partial sum when not converged).
    pub exterior: T,
    pub converged: bool,
}

/// `int |F''/F'|^2` over the disc or its exterior, from the Fourier
/// coefficients of `F''/F'` on the unit circle: `sum pi |c_k|^2 / (k + 1)`
/// inside and `sum pi |d_k|^2 / (k - 1)` outside.
fn pre_schwarzian_energy<T: Real>(map: &PowerSeriesMap<T>) -> Result<(T, bool), ConfError> {
    let n = (8 * (map.truncation() + 2)).next_power_of_two().max(256);
    let mut buf: Vec<Cx<T>> = Vec::with_capacity(n);
    for t in grid::<T>(n) {
        let d = map.horner(cis(t));
        if cabs(d[1]) == T::zero() {
            return Err(ConfError::SingularMap("derivative vanishes on the circle".into()));
        }
        buf.push(d[2] / d[1]);
    }
    fft(&mut buf);
    let inv = T::one() / T::lit(n as f64);
    let c = |k: usize| cabs(buf[k % n] * inv);
    let pi = T::pi();
    let (mut total, mut tail, mut wrong) = (T::zero(), T::zero(), T::zero());
    for k in 0..n / 2 {
        let (term, other) = match map.kind() {
            MapKind::Interior => (pi * c(k).powi(2) / T::lit((k + 1) as f64), c(n - k - 1)),
            MapKind::Exterior => {
                if k < 2 {
                    (T::zero(), c(n - k))
                } else {
                    (pi * c(n - k).powi(2) / T::lit((k - 1) as f64), c(k))
                }
            }
        };
        total += term;
        if 4 * k >= n {
            tail += term;
        }
        wrong = wrong.max(other);
    }
    let scale = total + T::lit(1e-300);
    let converged = total.f64().is_finite() && tail <= T::lit(1e-12) * scale + T::lit(1e-24) && wrong * wrong <= T::lit(1e-12) * scale + T::lit(1e-24);
    Ok((total, converged))
}

pub fn welding_energies<T: Real>(w: &WeldingTriple<T>) -> Result<WeldingEnergies<T>, ConfError> {
    let (a, b) = (cabs(w.f.lead()), cabs(w.g.lead()));
    if a == T::zero() || b == T::zero() {
        return Err(ConfError::SingularMap("vanishing normalising derivative".into()));
    }
    let k = (b / a).ln();
    let (interior, c1) = pre_schwarzian_energy(&w.f)?;
    let (exterior, c2) = pre_schwarzian_energy(&w.g)?;
    let converged = c1 && c2;
    let s1 = if converged { interior + exterior - T::lit(4.0) * T::pi() * k } else { T::lit(f64::INFINITY) };
    Ok(WeldingEnergies { k, s1, interior, exterior, converged })
}

/// `S_1` by adaptive area quadrature, independent of the mode sums in [`welding_energies`].
pub fn s1_by_quadrature<T: Real>(w: &WeldingTriple<T>, opts: QuadOptions<T>) -> Result<T, ConfError> {
    let f = w.f.clone();
    let g = w.g.clone();
    let inner = crate::quadrature::annulus_integral(
        move |z| {
            let d = f.horner(z);
            re((d[2] / d[1]).norm_sqr())
        },
        zero(),
        Annulus::disc(T::one()),
        opts,
    )?;
    let outer = crate::quadrature::annulus_integral(
        move |z| {
            let d = g.horner(z);
            re((d[2] / d[1]).norm_sqr())
        },
        zero(),
        Annulus::exterior(T::one()),
        opts,
    )?;
    let k = (cabs(w.g.lead()) / cabs(w.f.lead())).ln();
    Ok(inner.value.re + outer.value.re - T::lit(4.0) * T::pi() * k)
}

/// `Omega(h2, h1) = c_L / (24 pi) (S_1(h2) - S_1(h1)) + 2 (K(h2) - K(h1))`.
pub fn omega<T: Real>(w2: &WeldingTriple<T>, w1: &WeldingTriple<T>, constants: &Constants<T>) -> Result<T, ConfError> {
    let (e2, e1) = (welding_energies(w2)?, welding_energies(w1)?);
    if !(e2.converged && e1.converged) {
        return Err(ConfError::Degenerate("infinite universal Liouville action".into()));
    }
    Ok(constants.c_l / (T::lit(24.0) * T::pi()) * (e2.s1 - e1.s1) + T::lit(2.0) * (e2.k - e1.k))
}

fn boundary_field<T: Real>(samples: Vec<T>) -> Result<FourierField<T>, ConfError> {
    let field = FourierField::from_samples(FieldVariant::NeumannDot, &samples, None);
    let peak = field.modes.iter().map(|c| cabs(*c)).fold(T::zero(), |a, b| a.max(b));
    let m = field.modes.len();
    let tail = field.modes[3 * m / 4..].iter().map(|c| cabs(*c)).fold(T::zero(), |a, b| a.max(b));
    if tail > T::lit(1e-10) * (peak + field.c.abs()) + T::lit(1e-14) {
        return Err(ConfError::Resolution(format!("field tail {} on a {}-point grid", tail.f64(), samples.len())));
    }
    Ok(field)
}

/// Runs `step` on grids `n, 2n, ...` until it stops reporting a resolution error.
fn refined<R>(n: usize, mut step: impl FnMut(usize) -> Result<R, ConfError>) -> Result<R, ConfError> {
    let mut m = n.max(16);
    loop {
        match step(m) {
            Err(ConfError::Resolution(_)) if 2 * m <= MAX_GRID => m *= 2,
            r => return r,
        }
    }
}

/// `phi o f` and `phi o g` on the `n`-point grid.
fn pulled_back<T: Real>(w: &WeldingTriple<T>, field: &impl Fn(Cx<T>) -> T, n: usize) -> (Vec<T>, Vec<T>, Vec<[Cx<T>; 3]>, Vec<[Cx<T>; 3]>) {
    let th = grid::<T>(n);
    let fd: Vec<[Cx<T>; 3]> = th.iter().map(|&t| w.f.horner(cis(t))).collect();
    let gd: Vec<[Cx<T>; 3]> = th.iter().map(|&t| w.g.horner(cis(t))).collect();
    let inner = fd.iter().map(|d| field(d[0])).collect();
    let outer = gd.iter().map(|d| field(d[0])).collect();
    (inner, outer, fd, gd)
}

/// `E_eta(phi) + 4 Q P_eta phi(infinity)`, with the Dirichlet energies of both
/// harmonic extensions computed in mode space after pulling back by `f` and `g`.
/// `n` is the smallest sampling grid; it is doubled until the pullbacks are resolved.
pub fn curve_liouville_action<T: Real>(w: &WeldingTriple<T>, field: impl Fn(Cx<T>) -> T, q: T, n: usize) -> Result<T, ConfError> {
    refined(n, |m| {
        let (inner, outer, _, _) = pulled_back(w, &field, m);
        let fi = boundary_field(inner)?;
        let fo = boundary_field(outer)?;
        Ok(dirichlet_energy(&fi, Side::Interior) + dirichlet_energy(&fo, Side::Exterior) + T::lit(4.0) * q * fo.c)
    })
}

/// Both sides of the decomposition of the curve Liouville action into disc
/// actions and the universal Liouville action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VwCheck<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> VwCheck<T> {
    pub fn residual(&self) -> T {
        (self.lhs - self.rhs).abs()
    }
}

/// Compares `S_eta(phi)` with `S_D(phi . f) + S_D*(phi . g) - Q^2 / (2 pi) S_1`.
///
/// On the exterior side the field is moved by `g` followed by the dilation
/// that makes `g'(infinity) = 1`, i.e. `phi . g = phi o g + Q log(|g'| / |g'(infinity)|^2)`.
/// With the plain `Q log |g'|` the two sides differ by `4 Q^2 log |g'(infinity)|`.
pub fn vw_residual<T: Real>(w: &WeldingTriple<T>, field: impl Fn(Cx<T>) -> T, q: T, n: usize) -> Result<VwCheck<T>, ConfError> {
    let lhs = curve_liouville_action(w, &field, q, n)?;
    let e = welding_energies(w)?;
    if !e.converged {
        return Err(ConfError::Degenerate("infinite universal Liouville action".into()));
    }
    let cap = T::lit(2.0) * cabs(w.g.lead()).ln();
    let discs = refined(n, |m| {
        let (inner, outer, fd, gd) = pulled_back(w, &field, m);
        let dot_f: Vec<T> = inner.iter().zip(&fd).map(|(&p, d)| p + q * cabs(d[1]).ln()).collect();
        let dot_g: Vec<T> = outer.iter().zip(&gd).map(|(&p, d)| p + q * (cabs(d[1]).ln() - cap)).collect();
        Ok(liouville_action_disc(&boundary_field(dot_f)?, Side::Interior, q) + liouville_action_disc(&boundary_field(dot_g)?, Side::Exterior, q))
    })?;
    Ok(VwCheck { lhs, rhs: discs - q * q / T::two_pi() * e.s1 })
}

/// Which side a circle diffeomorphism is composed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Composition {
    /// `Phi o h`, generated by `mu` supported outside the disc.
    Left,
    /// `h o Phi`, generated by `mu` supported inside the disc.
    Right,
}

/// Scalar functionals of a welding homeomorphism.
#[derive(Clone)]
pub enum Functional<T: Real> {
    K,
    S1,
    /// `c_L / (24 pi) S_1 + 2 K`; also the derivative of `Omega(., h)`.
    Potential { c_l: T },
    /// `beta_n(g, mu)` of the exterior map.
    Beta { n: i32, mu: BeltramiSpec<T> },
}

impl<T: Real> std::fmt::Debug for Functional<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Functional::K => write!(f, "K"),
            Functional::S1 => write!(f, "S1"),
            Functional::Potential { c_l } => write!(f, "Potential {{ c_l: {} }}", c_l.f64()),
            Functional::Beta { n, mu } => write!(f, "Beta {{ n: {n}, mu: {mu:?} }}"),
        }
    }
}

impl<T: Real> Functional<T> {
    fn eval(&self, w: &WeldingTriple<T>) -> Result<Cx<T>, ConfError> {
        let energies = || -> Result<WeldingEnergies<T>, ConfError> {
            let e = welding_energies(w)?;
            if e.converged {
                Ok(e)
            } else {
                Err(ConfError::Degenerate("infinite universal Liouville action".into()))
            }
        };
        Ok(match self {
            Functional::K => re(energies()?.k),
            Functional::S1 => re(energies()?.s1),
            Functional::Potential { c_l } => {
                let e = energies()?;
                re(*c_l / (T::lit(24.0) * T::pi()) * e.s1 + T::lit(2.0) * e.k)
            }
            Functional::Beta { n, mu } => {
                let g = w.g.clone().with_domain_radius(T::one());
                beta_coefficients(&g, mu, (*n).max(0) as usize)?.get(*n)
            }
        })
    }
}

/// Complex Lie derivatives `F(h_t) = F(h) + t D F + tbar Dbar F + o(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LieDerivative<T> {
    pub holomorphic: Cx<T>,
    pub antiholomorphic: Cx<T>,
    /// Difference between the estimates at steps `t` and `2t`.
    pub richardson_gap: T,
    /// Set when the step-size dependence is larger than the signal.
    pub unreliable: bool,
}

/// Angular velocity `theta -> 2 Re(t w_mu(e^{i theta}))` of the symmetric
/// first-order flow fixing 0, 1 and infinity, split as `Re t * a + Im t * b`.
fn circle_velocity<T: Real>(mu: &BeltramiSpec<T>, n: usize) -> Result<(TrigSeries<T>, TrigSeries<T>), ConfError> {
    let th = grid::<T>(n);
    let probes: Vec<Cx<T>> = th.iter().step_by((n / 16).max(1)).map(|&t| cis(t)).collect();
    let rule = CauchyRule::new(mu, &probes, QuadOptions::default().with_tol(1e-14, 1e-13))?;
    let w: Vec<Cx<T>> = th.iter().map(|&t| rule.w(cis(t))).collect();
    let a: Vec<T> = w.iter().map(|v| T::lit(2.0) * v.re).collect();
    let b: Vec<T> = w.iter().map(|v| -T::lit(2.0) * v.im).collect();
    Ok((TrigSeries::from_samples(&a).trimmed(T::lit(1e-17)), TrigSeries::from_samples(&b).trimmed(T::lit(1e-17))))
}

fn check_side<T: Real>(mu: &BeltramiSpec<T>, side: Composition) -> Result<(), ConfError> {
    let ok = match side {
        Composition::Right => mu.support.r_out.is_some_and(|o| o < T::one()),
        Composition::Left => mu.support.r_in > T::one(),
    };
    if mu.is_zero() || ok {
        Ok(())
    } else {
        Err(ConfError::Domain("support of mu on the wrong side of the circle".into()))
    }
}

/// Finite-difference Lie derivative of `functional` at `h` along the flow of
/// `mu`, composed on `side`. Symmetric differences at steps `t` and `2t` are
/// combined by Richardson extrapolation; each perturbed homeomorphism is
/// re-welded with [`spectral_weld`].
pub fn directional_derivative<T: Real>(
    functional: &Functional<T>,
    w: &WeldingTriple<T>,
    mu: &BeltramiSpec<T>,
    side: Composition,
    t_step: T,
    opts: WeldOptions<T>,
) -> Result<LieDerivative<T>, ConfError> {
    check_side(mu, side)?;
    if !(t_step > T::zero()) {
        return Err(ConfError::Configuration("step must be positive".into()));
    }
    if mu.is_zero() {
        return Ok(LieDerivative { holomorphic: zero(), antiholomorphic: zero(), richardson_gap: T::zero(), unreliable: false });
    }
    let n = w.h.len().max(4 * opts.modes);
    let (va, vb) = circle_velocity(mu, n)?;
    let base = w.h.clone().with_interpolation(Interpolation::Spectral);
    let value = |t: Cx<T>| -> Result<Cx<T>, ConfError> {
        let shift = |x: T| t.re * va.eval(x) + t.im * vb.eval(x);
        let moved = match side {
            Composition::Right => CircleHomeo::from_fn(n, |x| base.eval(x + shift(x)), Interpolation::Spectral)?,
            Composition::Left => CircleHomeo::from_fn(
                n,
                |x| {
                    let y = base.eval(x);
                    y + shift(y)
                },
                Interpolation::Spectral,
            )?,
        };
        functional.eval(&spectral_weld(&moved, opts)?)
    };
    let i = Complex::new(T::zero(), T::one());
    let diff = |s: T| -> Result<(Cx<T>, Cx<T>), ConfError> {
        let dr = (value(re(s))? - value(re(-s))?) / (T::lit(2.0) * s);
        let di = (value(i * s)? - value(-i * s)?) / (T::lit(2.0) * s);
        Ok((dr, di))
    };
    let (r1, i1) = diff(t_step)?;
    let (r2, i2) = diff(t_step * T::lit(2.0))?;
    let three = T::lit(3.0);
    let dr = (r1 * T::lit(4.0) - r2) / three;
    let di = (i1 * T::lit(4.0) - i2) / three;
    let half = T::lit(0.5);
    let holomorphic = (dr - i * di) * half;
    let antiholomorphic = (dr + i * di) * half;
    let gap = cabs(r1 - r2).max(cabs(i1 - i2));
    let signal = cabs(holomorphic).max(cabs(antiholomorphic));
    let unreliable = gap > T::lit(0.1) * signal && gap > T::lit(1e-6);
    Ok(LieDerivative { holomorphic, antiholomorphic, richardson_gap: gap, unreliable })
}

/// `-(1/pi) int S F mu` and `-(1/pi) int (F'^2/F^2 - 1/z^2) mu` for the map on the side of `mu`.
pub fn schwarzian_pairings<T: Real>(map: &PowerSeriesMap<T>, mu: &BeltramiSpec<T>) -> Result<(Cx<T>, Cx<T>), ConfError> {
    let domain = match map.kind() {
        MapKind::Interior => Annulus::new(T::zero(), Some(map.domain_radius())),
        MapKind::Exterior => Annulus::exterior(map.domain_radius()),
    };
    let opts = QuadOptions::default().with_tol(1e-12, 1e-11);
    let m1 = map.clone();
    let s = QuadDiffFn::new(domain, move |z| schwarzian(&m1, z).map_or(crate::real::cnan(), |p| p.1));
    let m2 = map.clone();
    let kind = map.kind();
    let log = QuadDiffFn::new(domain, move |z| {
        let d = m2.horner(z);
        match kind {
            // f = z p: (f'/f)^2 - 1/z^2 = 2 p'/(z p) + (p'/p)^2, which avoids the cancellation near 0
            MapKind::Interior => {
                let c = m2.coeffs();
                let mut p = zero::<T>();
                let mut dp = zero::<T>();
                for &ck in c.iter().skip(1).rev() {
                    dp = dp * z + p;
                    p = p * z + ck;
                }
                let r = dp / p;
                r * T::lit(2.0) / z + r * r
            }
            MapKind::Exterior => {
                let l = d[1] / d[0];
                l * l - Complex::new(T::one(), T::zero()) / (z * z)
            }
        }
    });
    let a = pair_q_beltrami_with(&s, mu, opts)?.value;
    let b = pair_q_beltrami_with(&log, mu, opts)?.value;
    Ok((-a, -b))
}

/// Both sides of the first-variation formula for `c_L / (24 pi) S_1 + 2 K`.
///
/// With the flow `theta -> theta + 2 Re(t w_mu)` and `vartheta`, `varpi` as
/// defined in [`schwarzian_pairings`], first-order perturbation of the welding
/// maps gives `R_mu K = varpi / 2` and `R_mu S_1 = 2 pi vartheta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tt06Check<T> {
    /// Finite-difference Lie derivative of the potential.
    pub finite_difference: Cx<T>,
    /// `c_L/12 vartheta + varpi` on the right, `-(c_L/12 vartheta~ + varpi~)` on the left.
    pub predicted: Cx<T>,
    pub derivative: LieDerivative<T>,
}

impl<T: Real> Tt06Check<T> {
    pub fn residual(&self) -> T {
        cabs(self.finite_difference - self.predicted)
    }
}

pub fn tt06_residual<T: Real>(
    w: &WeldingTriple<T>,
    mu: &BeltramiSpec<T>,
    side: Composition,
    t_step: T,
    constants: &Constants<T>,
    opts: WeldOptions<T>,
) -> Result<Tt06Check<T>, ConfError> {
    if !(t_step >= T::lit(1e-5) && t_step <= T::lit(1e-3)) {
        return Err(ConfError::Configuration(format!("step {} outside [1e-5, 1e-3]", t_step.f64())));
    }
    let d = directional_derivative(&Functional::Potential { c_l: constants.c_l }, w, mu, side, t_step, opts)?;
    let twelfth = constants.c_l / T::lit(12.0);
    let predicted = if mu.is_zero() {
        zero()
    } else {
        match side {
            Composition::Right => {
                let (th, va) = schwarzian_pairings(&w.f.clone().with_domain_radius(T::one()), mu)?;
                th * twelfth + va
            }
            Composition::Left => {
                let (th, va) = schwarzian_pairings(&w.g.clone().with_domain_radius(T::one()), mu)?;
                -(th * twelfth + va)
            }
        }
    };
    Ok(Tt06Check { finite_difference: d.holomorphic, predicted, derivative: d })
}

/// `iota(z) = 1 / conj(z)` applied to every point of the curve.
pub fn reflect_curve<T: Real>(curve: &CurvePolyline<T>) -> CurvePolyline<T> {
    curve.map(|p| Complex::new(T::one(), T::zero()) / p.conj())
}

/// Rotation-free comparison of two welding curves after `f'(0) = 1` normalisation.
pub fn normalized_hausdorff<T: Real>(a: &WeldingTriple<T>, b: &WeldingTriple<T>) -> T {
    a.normalized().curve.hausdorff(&b.normalized().curve)
}

