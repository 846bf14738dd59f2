//! Chordal Loewner traces from tilted-slit compositions, box-counting and
//! Minkowski-content estimators, and a Monte Carlo for Brownian occupation
//! of curve neighbourhoods.

use std::collections::HashSet;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curve::{CurvePolyline, SegmentIndex};
use crate::fields::rng_for;
use crate::real::{cabs, carg, cx, polar, Cx, Real};
use crate::ConfError;

/// Random stream used for driving functions, so that other samplers sharing a
/// seed stay independent.
const DRIVING_STREAM: u64 = 0x5e1e;
const BROWNIAN_STREAM: u64 = 0xb0b0;

/// Driving function sampled at increasing capacity times.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingPath<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// Diffusivity of the increments; 0 for deterministic paths.
    pub kappa: T,
}

impl<T: Real> DrivingPath<T> {
    pub fn new(times: Vec<T>, values: Vec<T>, kappa: T) -> Result<Self, ConfError> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(ConfError::Configuration("driving path needs matching times and values, at least two".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ConfError::Configuration("capacity times must increase".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConfError::Configuration("driving values must be finite".into()));
        }
        Ok(DrivingPath { times, values, kappa })
    }

    /// `W(t_i) = f(t_i)` on the grid `t_i = i dt`, `i = 0..=n`.
    pub fn deterministic(n: usize, dt: T, f: impl Fn(T) -> T) -> Result<Self, ConfError> {
        let times: Vec<T> = (0..=n).map(|i| T::lit(i as f64) * dt).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values, T::zero())
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn end_time(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// Same path translated by `c`.
    pub fn shifted(&self, c: T) -> Self {
        DrivingPath { values: self.values.iter().map(|&v| v + c).collect(), ..self.clone() }
    }

    /// Piecewise-linear interpolation, constant outside the sampled range.
    pub fn value_at(&self, t: T) -> T {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return self.values[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (w0, w1) = (self.values[i - 1], self.values[i]);
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }
}

/// `sqrt(kappa)` times a Brownian motion on `n` uniform steps of size `dt`, from 0.
pub fn sample_driving<T: Real>(kappa: T, n: usize, dt: T, seed: u64) -> Result<DrivingPath<T>, ConfError> {
    if n == 0 || !(dt > T::zero()) || !(kappa >= T::zero()) {
        return Err(ConfError::Configuration("need n >= 1, dt > 0 and kappa >= 0".into()));
    }
    let mut rng = rng_for(seed, DRIVING_STREAM);
    let sd = (kappa * dt).sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut w = T::zero();
    values.push(w);
    for _ in 0..n {
        let g: f64 = StandardNormal.sample(&mut rng);
        w += sd * T::lit(g);
        values.push(w);
    }
    let times = (0..=n).map(|i| T::lit(i as f64) * dt).collect();
    Ok(DrivingPath { times, values, kappa })
}

/// Slit map `z -> (z - x1)^a (z - x2)^(1 - a)` of one step. It sends the upper
/// half-plane onto itself minus a segment from 0 with angle `a pi`, the point 0
/// to the tip, and has the expansion `z + dw - 2 dt / z + ...`.
#[derive(Clone, Copy, Debug)]
struct TiltedSlit<T> {
    a: T,
    x1: T,
    x2: T,
}

impl<T: Real> TiltedSlit<T> {
    fn new(dw: T, dt: T) -> Self {
        let s = (dw * dw + T::lit(16.0) * dt).sqrt();
        let a = T::lit(0.5) - dw / (T::lit(2.0) * s);
        let x1 = T::lit(2.0) * (dt * a / (T::one() - a)).sqrt();
        let x2 = -T::lit(2.0) * (dt * (T::one() - a) / a).sqrt();
        TiltedSlit { a, x1, x2 }
    }

    fn log_terms(&self, z: Cx<T>) -> (Cx<T>, Cx<T>) {
        // keep arguments in [0, pi] for points that rounding pushed below the axis
        let z = cx(z.re, z.im.max(T::zero()));
        let ln = |w: Cx<T>| cx(cabs(w).ln(), carg(w));
        (ln(z - cx(self.x1, T::zero())), ln(z - cx(self.x2, T::zero())))
    }

    fn apply(&self, z: Cx<T>) -> Cx<T> {
        let (l1, l2) = self.log_terms(z);
        let l = l1 * self.a + l2 * (T::one() - self.a);
        polar(l.re.exp(), l.im)
    }

    /// Preimage in the closed upper half-plane by damped Newton iteration.
    fn invert(&self, w: Cx<T>) -> Result<Cx<T>, ConfError> {
        let shift = self.a * self.x1 + (T::one() - self.a) * self.x2;
        let mut u = w + cx(shift, T::zero());
        for _ in 0..200 {
            let f = self.apply(u);
            let r = f - w;
            if cabs(r) <= T::lit(1e-15) * (T::one() + cabs(w)) {
                return Ok(u);
            }
            let dlog = cx(self.a, T::zero()) / (u - cx(self.x1, T::zero())) + cx(T::one() - self.a, T::zero()) / (u - cx(self.x2, T::zero()));
            let mut step = r / (f * dlog);
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            while (u - step).im < T::zero() && cabs(step) > T::lit(1e-300) {
                step = step * T::lit(0.5);
            }
            u -= step;
        }
        let f = self.apply(u);
        if cabs(f - w) <= T::lit(1e-9) * (T::one() + cabs(w)) {
            Ok(u)
        } else {
            Err(ConfError::Solver { residual: cabs(f - w).f64(), detail: "slit map inverse".into() })
        }
    }
}

/// Bookkeeping of a trace computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStats<T> {
    pub steps: usize,
    /// Longest polyline segment, the resolution of the trace.
    pub max_segment: T,
    /// Smallest imaginary part after the base point.
    pub min_height: T,
}

#[derive(Clone, Debug)]
pub struct TraceResult<T> {
    pub curve: CurvePolyline<T>,
    /// Capacity times of the vertices, half-plane capacity `2 t`.
    pub times: Vec<T>,
    pub stats: TraceStats<T>,
    slits: Vec<TiltedSlit<T>>,
    driving: Vec<T>,
}

impl<T: Real> TraceResult<T> {
    /// Point of the discretized trace at fraction `s` of step `k` (1-based):
    /// the image of `W_{k-1} + s * tip_k`, at capacity time `t_{k-1} + s^2 dt_k`.
    fn point_on_step(&self, k: usize, s: T) -> Cx<T> {
        let tip = self.slits[k - 1].apply(cx(T::zero(), T::zero()));
        let mut z = cx(self.driving[k - 1], T::zero()) + tip * s;
        for j in (0..k - 1).rev() {
            z = cx(self.driving[j], T::zero()) + self.slits[j].apply(z - cx(self.driving[j + 1], T::zero()));
        }
        z
    }

    /// The same trace with extra vertices on the step slits, so that no
    /// segment is longer than `max_len` (up to 2^20 pieces per step).
    pub fn refined(&self, max_len: T) -> Result<TraceResult<T>, ConfError> {
        if !(max_len > T::zero()) {
            return Err(ConfError::Configuration("segment bound must be positive".into()));
        }
        let pts = &self.curve.points;
        let mut points = vec![pts[0]];
        let mut times = vec![self.times[0]];
        for k in 1..pts.len() {
            let (t0, dt) = (self.times[k - 1], self.times[k] - self.times[k - 1]);
            // (s, point) pairs, refined by bisection of the slit parameter
            let mut stack = vec![(T::one(), pts[k])];
            let mut left = (T::zero(), pts[k - 1]);
            while let Some(right) = stack.pop() {
                if cabs(right.1 - left.1) <= max_len || right.0 - left.0 < T::lit(1.0 / (1u64 << 20) as f64) {
                    points.push(right.1);
                    times.push(t0 + right.0 * right.0 * dt);
                    left = right;
                } else {
                    let s = (left.0 + right.0) * T::lit(0.5);
                    stack.push(right);
                    stack.push((s, self.point_on_step(k, s)));
                }
            }
        }
        let curve = CurvePolyline::new(points, false);
        let stats = TraceStats { steps: self.stats.steps, max_segment: curve.max_segment(), min_height: self.stats.min_height };
        Ok(TraceResult { curve, times, stats, slits: self.slits.clone(), driving: self.driving.clone() })
    }

    /// `g_{t_k}(z)`, the composition of the first `k` step maps applied to `z`.
    pub fn forward_map(&self, z: Cx<T>, k: usize) -> Result<Cx<T>, ConfError> {
        if k > self.slits.len() {
            return Err(ConfError::Domain(format!("step {k} beyond the {} computed", self.slits.len())));
        }
        let mut w = z;
        for j in 0..k {
            // step j maps z to W_{j+1} + slit_j^{-1}(z - W_j)
            let u = self.slits[j].invert(w - cx(self.driving[j], T::zero()))?;
            w = u + cx(self.driving[j + 1], T::zero());
        }
        Ok(w)
    }
}

/// Chordal trace driven by `path`: the `k`-th vertex is
/// `G_1^{-1} o ... o G_k^{-1}(W_k)` with `G_j^{-1}(z) = W_{j-1} + slit_j(z - W_j)`,
/// so each vertex is evaluated by the reverse flow from its own driving value.
pub fn loewner_trace<T: Real>(path: &DrivingPath<T>) -> Result<TraceResult<T>, ConfError> {
    let n = path.steps();
    let slits: Vec<TiltedSlit<T>> = (0..n)
        .map(|j| TiltedSlit::new(path.values[j + 1] - path.values[j], path.times[j + 1] - path.times[j]))
        .collect();
    let mut points = Vec::with_capacity(n + 1);
    points.push(cx(path.values[0], T::zero()));
    for k in 1..=n {
        let mut z = cx(path.values[k], T::zero());
        for j in (0..k).rev() {
            z = cx(path.values[j], T::zero()) + slits[j].apply(z - cx(path.values[j + 1], T::zero()));
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(ConfError::Solver { residual: f64::NAN, detail: format!("trace vertex {k} is not finite") });
        }
        points.push(z);
    }
    let min_height = points[1..].iter().map(|p| p.im).fold(T::lit(f64::INFINITY), |a, b| a.min(b));
    let curve = CurvePolyline::new(points, false);
    Ok(TraceResult {
        stats: TraceStats { steps: n, max_segment: curve.max_segment(), min_height },
        curve,
        times: path.times.clone(),
        slits,
        driving: path.values.clone(),
    })
}

/// Traces for several seeds in parallel, in seed order.
pub fn trace_ensemble<T: Real>(kappa: T, n: usize, dt: T, seeds: &[u64]) -> Vec<Result<TraceResult<T>, ConfError>> {
    seeds.par_iter().map(|&s| sample_driving(kappa, n, dt, s).and_then(|p| loewner_trace(&p))).collect()
}

/// Solution of `dg/dt = 2 / (g - W(t))` from `g(0) = z` to `t_end`, with `W`
/// interpolated linearly and `substeps` RK4 steps per driving step.
pub fn loewner_flow<T: Real>(path: &DrivingPath<T>, z: Cx<T>, t_end: T, substeps: usize) -> Result<Cx<T>, ConfError> {
    let rhs = |t: T, g: Cx<T>| cx(T::lit(2.0), T::zero()) / (g - cx(path.value_at(t), T::zero()));
    let mut g = z;
    let m = substeps.max(1);
    for k in 0..path.steps() {
        let (t0, t1) = (path.times[k], path.times[k + 1].min(t_end));
        if t0 >= t_end {
            break;
        }
        let h = (t1 - t0) / T::lit(m as f64);
        for i in 0..m {
            let t = t0 + h * T::lit(i as f64);
            let half = h * T::lit(0.5);
            let k1 = rhs(t, g);
            let k2 = rhs(t + half, g + k1 * half);
            let k3 = rhs(t + half, g + k2 * half);
            let k4 = rhs(t + h, g + k3 * h);
            g += (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (h / T::lit(6.0));
        }
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(ConfError::Solver { residual: f64::NAN, detail: "point swallowed by the hull".into() });
        }
    }
    Ok(g)
}

fn check_scales<T: Real>(scales: &[T]) -> Result<(), ConfError> {
    if scales.len() < 4 || scales.iter().any(|&r| !(r > T::zero())) {
        return Err(ConfError::Configuration("need at least four positive scales".into()));
    }
    let lo = scales.iter().fold(T::lit(f64::INFINITY), |a, &b| a.min(b));
    let hi = scales.iter().fold(T::zero(), |a, &b| a.max(b));
    if (hi / lo).log10() < T::lit(1.5) {
        return Err(ConfError::Configuration("scales must span at least 1.5 decades".into()));
    }
    Ok(())
}

/// Number of grid squares of side `r` (aligned with the origin) met by the
/// polyline or containing one of `points`, for each `r`.
pub fn box_counts<T: Real>(curve: &CurvePolyline<T>, points: &[Cx<T>], scales: &[T]) -> Vec<usize> {
    scales
        .par_iter()
        .map(|&r| {
            let key = |p: Cx<T>| ((p.re / r).floor().to_i64().unwrap_or(0), (p.im / r).floor().to_i64().unwrap_or(0));
            let mut cells = HashSet::new();
            for i in 0..curve.segment_count() {
                let (a, b) = curve.segment(i);
                // sampling at r/8 can only miss squares clipped by a corner
                let pieces = (cabs(b - a) * T::lit(8.0) / r).ceil().to_usize().unwrap_or(1).max(1);
                for j in 0..=pieces {
                    cells.insert(key(a + (b - a) * (T::lit(j as f64) / T::lit(pieces as f64))));
                }
            }
            if curve.len() == 1 {
                cells.insert(key(curve.points[0]));
            }
            cells.extend(points.iter().map(|&p| key(p)));
            cells.len()
        })
        .collect()
}

/// Least-squares slope of `log N(r)` against `log(1 / r)`.
pub fn box_dimension<T: Real>(curve: &CurvePolyline<T>, scales: &[T]) -> Result<T, ConfError> {
    box_dimension_with(curve, &[], scales)
}

/// [`box_dimension`] of the union of the polyline and a point set.
pub fn box_dimension_with<T: Real>(curve: &CurvePolyline<T>, points: &[Cx<T>], scales: &[T]) -> Result<T, ConfError> {
    check_scales(scales)?;
    if curve.is_empty() && points.is_empty() {
        return Err(ConfError::Degenerate("empty set".into()));
    }
    let counts = box_counts(curve, points, scales);
    let xs: Vec<T> = scales.iter().map(|&r| -r.ln()).collect();
    let ys: Vec<T> = counts.iter().map(|&c| T::lit(c as f64).ln()).collect();
    let m = T::lit(xs.len() as f64);
    let (mx, my) = (xs.iter().fold(T::zero(), |a, &b| a + b) / m, ys.iter().fold(T::zero(), |a, &b| a + b) / m);
    let sxx = xs.iter().fold(T::zero(), |a, &x| a + (x - mx) * (x - mx));
    let sxy = xs.iter().zip(&ys).fold(T::zero(), |a, (&x, &y)| a + (x - mx) * (y - my));
    if !(sxx > T::zero()) {
        return Err(ConfError::Degenerate("scales do not vary".into()));
    }
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(ConfError::Degenerate("non-finite slope".into()));
    }
    Ok(slope)
}

/// Area of the `r`-neighbourhood of the polyline, counting cells of side
/// `r / cells_per_r` whose centres lie within distance `r`.
pub fn neighbourhood_area<T: Real>(curve: &CurvePolyline<T>, index: &SegmentIndex<T>, r: T, cells_per_r: usize) -> T {
    let h = r / T::lit(cells_per_r as f64);
    let key = |x: T| (x / h).floor().to_i64().unwrap_or(0);
    // cells within the r-padded bounding boxes of the segments
    let mut candidates = HashSet::new();
    let boxes: Vec<(Cx<T>, Cx<T>)> = if curve.segment_count() == 0 {
        curve.points.iter().map(|&p| (p, p)).collect()
    } else {
        (0..curve.segment_count()).map(|i| curve.segment(i)).collect()
    };
    for (a, b) in boxes {
        for i in key(a.re.min(b.re) - r)..=key(a.re.max(b.re) + r) {
            for j in key(a.im.min(b.im) - r)..=key(a.im.max(b.im) + r) {
                candidates.insert((i, j));
            }
        }
    }
    let candidates: Vec<(i64, i64)> = candidates.into_iter().collect();
    let count = candidates
        .par_iter()
        .filter(|&&(i, j)| {
            let c = cx((T::lit(i as f64) + T::lit(0.5)) * h, (T::lit(j as f64) + T::lit(0.5)) * h);
            index.distance_within(c, r).is_some()
        })
        .count();
    T::lit(count as f64) * h * h
}

/// `r^(alpha - 2)` times the area of the `r`-neighbourhood, for decreasing `r`.
pub fn minkowski_content<T: Real>(curve: &CurvePolyline<T>, r_list: &[T], alpha: T) -> Result<Vec<T>, ConfError> {
    if curve.segment_count() == 0 {
        return Err(ConfError::Degenerate("curve has no segments".into()));
    }
    if r_list.is_empty() || r_list.windows(2).any(|w| !(w[1] < w[0])) || !(r_list[r_list.len() - 1] > T::zero()) {
        return Err(ConfError::Configuration("radii must be positive and decreasing".into()));
    }
    let resolution = curve.max_segment();
    if r_list[r_list.len() - 1] < resolution {
        return Err(ConfError::Resolution(format!("radius below the longest segment {}", resolution.f64())));
    }
    Ok(r_list
        .iter()
        .map(|&r| neighbourhood_area(curve, &curve.index_with_cell(r * T::lit(0.5)), r, 16) * r.powf(alpha - T::lit(2.0)))
        .collect())
}

/// Monte Carlo summary of the occupation functional
/// `eps^(alpha - 2) |{t < T : dist(B_t, curve) < eps}|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalTimeEstimate<T> {
    pub mean: T,
    pub stderr: T,
    /// Fraction of paths with a positive functional.
    pub positive_fraction: T,
}

/// Brownian runs shared between the `eps` and `eps / 2` estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalTimePair<T> {
    pub coarse: LocalTimeEstimate<T>,
    pub fine: LocalTimeEstimate<T>,
    /// `|mean(I_eps - I_{eps/2})| / mean(I_eps)` over the paired runs.
    pub stability: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalTimeOptions<T> {
    pub horizon: T,
    pub eps: T,
    /// Exponent of the Minkowski gauge, `1 + kappa / 8` for SLE.
    pub alpha: T,
    pub n_mc: usize,
    /// Euler step; must satisfy `dt <= r^2 / 25` for the smallest radius `r`
    /// in use, so that a typical step moves less than a fifth of it.
    pub dt: T,
    pub seed: u64,
}

fn summarize<T: Real>(values: &[T]) -> LocalTimeEstimate<T> {
    let n = T::lit(values.len() as f64);
    let mean = values.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = values.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / (n - T::one()).max(T::one());
    let positive = values.iter().filter(|&&v| v > T::zero()).count();
    LocalTimeEstimate { mean, stderr: (var / n).sqrt(), positive_fraction: T::lit(positive as f64) / n }
}

/// Gauged occupation times of the `radii`-neighbourhoods (decreasing radii)
/// for each of `n_mc` Brownian paths.
fn occupations<T: Real>(curve: &CurvePolyline<T>, x: Cx<T>, radii: &[T], opts: &LocalTimeOptions<T>) -> Result<Vec<Vec<T>>, ConfError> {
    let LocalTimeOptions { horizon, alpha, n_mc, dt, seed, .. } = *opts;
    if n_mc < 100 {
        return Err(ConfError::Configuration("need at least 100 Brownian paths".into()));
    }
    let (outer, inner) = (radii[0], radii[radii.len() - 1]);
    if !(horizon > T::zero() && inner > T::zero() && dt > T::zero()) {
        return Err(ConfError::Configuration("horizon, eps and dt must be positive".into()));
    }
    if dt > inner * inner / T::lit(25.0) {
        return Err(ConfError::Configuration(format!("Euler step {} is coarse against eps^2", dt.f64())));
    }
    if curve.segment_count() == 0 {
        return Err(ConfError::Degenerate("curve has no segments".into()));
    }
    let resolution = curve.max_segment();
    if inner < resolution {
        return Err(ConfError::Resolution(format!("eps below the longest segment {}", resolution.f64())));
    }
    let index = curve.index_with_cell(outer * T::lit(0.5));
    let steps = (horizon / dt).ceil().to_usize().unwrap_or(0).max(1);
    let h = horizon / T::lit(steps as f64);
    let sd = h.sqrt();
    let gauge: Vec<T> = radii.iter().map(|&r| h * r.powf(alpha - T::lit(2.0))).collect();
    Ok((0..n_mc)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed ^ BROWNIAN_STREAM, i as u64);
            let mut b = x;
            let mut hits = vec![0usize; radii.len()];
            for _ in 0..steps {
                if let Some(d) = index.distance_within(b, outer) {
                    for (n, &r) in hits.iter_mut().zip(radii) {
                        if d < r {
                            *n += 1;
                        }
                    }
                }
                let (g1, g2): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                b += cx(T::lit(g1), T::lit(g2)) * sd;
            }
            hits.iter().zip(&gauge).map(|(&n, &g)| T::lit(n as f64) * g).collect()
        })
        .collect())
}

/// Estimators at `eps` and `eps / 2` from the same Brownian paths started at `x`.
pub fn brownian_local_time_pair<T: Real>(curve: &CurvePolyline<T>, x: Cx<T>, opts: LocalTimeOptions<T>) -> Result<LocalTimePair<T>, ConfError> {
    let runs = occupations(curve, x, &[opts.eps, opts.eps * T::lit(0.5)], &opts)?;
    let coarse: Vec<T> = runs.iter().map(|r| r[0]).collect();
    let fine: Vec<T> = runs.iter().map(|r| r[1]).collect();
    let (c, f) = (summarize(&coarse), summarize(&fine));
    let stability = if c.mean > T::zero() { (c.mean - f.mean).abs() / c.mean } else { T::lit(f64::INFINITY) };
    Ok(LocalTimePair { coarse: c, fine: f, stability })
}

/// Estimator at `eps` alone.
pub fn brownian_local_time<T: Real>(curve: &CurvePolyline<T>, x: Cx<T>, opts: LocalTimeOptions<T>) -> Result<LocalTimeEstimate<T>, ConfError> {
    let runs = occupations(curve, x, &[opts.eps], &opts)?;
    Ok(summarize(&runs.iter().map(|r| r[0]).collect::<Vec<T>>()))
}
