//! Polylines in the plane with a uniform-grid segment index.

use crate::real::{cabs, Cx, Real};
use crate::ConfError;
use rayon::prelude::*;
use std::collections::HashMap;

/// Ordered points, optionally closed by the segment from the last point back
/// to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePolyline<T> {
    pub points: Vec<Cx<T>>,
    pub closed: bool,
}

fn cross<T: Real>(a: Cx<T>, b: Cx<T>) -> T {
    a.re * b.im - a.im * b.re
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance<T: Real>(p: Cx<T>, a: Cx<T>, b: Cx<T>) -> T {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == T::zero() {
        return cabs(p - a);
    }
    let s = ((p - a).re * d.re + (p - a).im * d.im) / l2;
    let s = s.max(T::zero()).min(T::one());
    cabs(p - (a + d * s))
}

/// Whether the closed segments `[a, b]` and `[c, d]` meet.
fn segments_meet<T: Real>(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> bool {
    let o1 = cross(b - a, c - a);
    let o2 = cross(b - a, d - a);
    let o3 = cross(d - c, a - c);
    let o4 = cross(d - c, b - c);
    let z = T::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    let on = |p: Cx<T>, q: Cx<T>, r: Cx<T>| {
        cross(q - p, r - p) == z && r.re >= p.re.min(q.re) && r.re <= p.re.max(q.re) && r.im >= p.im.min(q.im) && r.im <= p.im.max(q.im)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

impl<T: Real> CurvePolyline<T> {
    pub fn new(points: Vec<Cx<T>>, closed: bool) -> Self {
        CurvePolyline { points, closed }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        match self.points.len() {
            0 | 1 => 0,
            n if self.closed => n,
            n => n - 1,
        }
    }

    pub fn segment(&self, i: usize) -> (Cx<T>, Cx<T>) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    pub fn length(&self) -> T {
        (0..self.segment_count()).fold(T::zero(), |acc, i| {
            let (a, b) = self.segment(i);
            acc + cabs(b - a)
        })
    }

    pub fn map(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        CurvePolyline { points: self.points.iter().map(|&p| f(p)).collect(), closed: self.closed }
    }

    /// Winding number of a closed curve around `p`.
    pub fn winding_number(&self, p: Cx<T>) -> i32 {
        let n = self.points.len();
        let mut total = T::zero();
        for i in 0..n {
            let a = self.points[i] - p;
            let b = self.points[(i + 1) % n] - p;
            total += (b / a).im.atan2((b / a).re);
        }
        (total / T::two_pi()).round().to_i32().unwrap_or(0)
    }

    /// Whether a closed curve winds once around the origin, in either direction.
    pub fn separates_origin(&self) -> bool {
        self.closed && self.winding_number(Cx::new(T::zero(), T::zero())).abs() == 1
    }

    pub fn index(&self) -> SegmentIndex<T> {
        SegmentIndex::new(self)
    }

    /// Index with cells of side `cell`.
    pub fn index_with_cell(&self, cell: T) -> SegmentIndex<T> {
        SegmentIndex::with_cell((0..self.segment_count()).map(|i| self.segment(i)).collect(), cell)
    }

    /// Longest segment.
    pub fn max_segment(&self) -> T {
        (0..self.segment_count()).map(|i| {
            let (a, b) = self.segment(i);
            cabs(b - a)
        })
        .fold(T::zero(), |a, b| a.max(b))
    }

    /// No two non-adjacent segments meet.
    pub fn is_simple(&self) -> bool {
        let m = self.segment_count();
        if m < 3 {
            return true;
        }
        let idx = self.index();
        let adjacent = |i: usize, j: usize| {
            let d = i.abs_diff(j);
            d <= 1 || (self.closed && d == m - 1)
        };
        (0..m).into_par_iter().all(|i| {
            let (a, b) = self.segment(i);
            idx.candidates(a, b).into_iter().filter(|&j| j > i && !adjacent(i, j)).all(|j| {
                let (c, d) = self.segment(j);
                !segments_meet(a, b, c, d)
            })
        })
    }

    /// Largest distance from a vertex of `self` to the polyline `other`.
    pub fn directed_hausdorff(&self, other: &Self) -> T {
        let idx = other.index();
        self.points.par_iter().map(|&p| idx.distance(p)).reduce(T::zero, |a, b| a.max(b))
    }

    /// Symmetric Hausdorff distance with vertices as the sample points.
    pub fn hausdorff(&self, other: &Self) -> T {
        self.directed_hausdorff(other).max(other.directed_hausdorff(self))
    }
}

/// Buckets segments into square cells so that distance queries only visit
/// nearby segments.
#[derive(Clone, Debug)]
pub struct SegmentIndex<T> {
    segments: Vec<(Cx<T>, Cx<T>)>,
    cells: HashMap<(i64, i64), Vec<u32>>,
    cell: T,
    origin: Cx<T>,
    extent: (i64, i64, i64, i64),
}

impl<T: Real> SegmentIndex<T> {
    pub fn new(curve: &CurvePolyline<T>) -> Self {
        let segments: Vec<_> = (0..curve.segment_count()).map(|i| curve.segment(i)).collect();
        Self::from_segments(segments)
    }

    pub fn from_segments(segments: Vec<(Cx<T>, Cx<T>)>) -> Self {
        let zero = Cx::new(T::zero(), T::zero());
        if segments.is_empty() {
            return SegmentIndex { segments, cells: HashMap::new(), cell: T::one(), origin: zero, extent: (0, 0, 0, 0) };
        }
        let (mut lo, mut hi) = (segments[0].0, segments[0].0);
        let mut total = T::zero();
        for &(a, b) in &segments {
            for p in [a, b] {
                lo = Cx::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = Cx::new(hi.re.max(p.re), hi.im.max(p.im));
            }
            total += cabs(b - a);
        }
        let diag = cabs(hi - lo);
        let mean = total / T::lit(segments.len() as f64);
        // cells of about two segment lengths, but never more than ~4n cells across
        let floor = diag / T::lit(4.0 * segments.len() as f64);
        Self::with_cell(segments, (mean * T::lit(2.0)).max(floor))
    }

    /// Index with square cells of side `cell`, for queries at a known radius.
    pub fn with_cell(segments: Vec<(Cx<T>, Cx<T>)>, cell: T) -> Self {
        let zero = Cx::new(T::zero(), T::zero());
        let lo = segments.iter().fold(segments.first().map_or(zero, |s| s.0), |lo, &(a, b)| {
            Cx::new(lo.re.min(a.re).min(b.re), lo.im.min(a.im).min(b.im))
        });
        let cell = cell.max(T::lit(1e-300));
        let mut idx = SegmentIndex { segments, cells: HashMap::new(), cell, origin: lo, extent: (0, 0, 0, 0) };
        let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for (k, &(a, b)) in idx.segments.iter().enumerate() {
            let (ca, cb) = (idx.key(a), idx.key(b));
            for i in ca.0.min(cb.0)..=ca.0.max(cb.0) {
                for j in ca.1.min(cb.1)..=ca.1.max(cb.1) {
                    idx.cells.entry((i, j)).or_default().push(k as u32);
                }
            }
            x0 = x0.min(ca.0.min(cb.0));
            y0 = y0.min(ca.1.min(cb.1));
            x1 = x1.max(ca.0.max(cb.0));
            y1 = y1.max(ca.1.max(cb.1));
        }
        idx.extent = (x0, y0, x1, y1);
        idx
    }

    fn key(&self, p: Cx<T>) -> (i64, i64) {
        let x = ((p.re - self.origin.re) / self.cell).floor();
        let y = ((p.im - self.origin.im) / self.cell).floor();
        (x.to_i64().unwrap_or(i64::MAX / 4), y.to_i64().unwrap_or(i64::MAX / 4))
    }

    /// Segment ids sharing a cell with the bounding box of `[a, b]`.
    pub fn candidates(&self, a: Cx<T>, b: Cx<T>) -> Vec<usize> {
        let (ca, cb) = (self.key(a), self.key(b));
        let mut out = Vec::new();
        for i in ca.0.min(cb.0)..=ca.0.max(cb.0) {
            for j in ca.1.min(cb.1)..=ca.1.max(cb.1) {
                if let Some(v) = self.cells.get(&(i, j)) {
                    out.extend(v.iter().map(|&k| k as usize));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn ring_min(&self, p: Cx<T>, c: (i64, i64), k: i64, best: &mut T) {
        let mut visit = |i: i64, j: i64| {
            if let Some(v) = self.cells.get(&(i, j)) {
                for &s in v {
                    let (a, b) = self.segments[s as usize];
                    *best = best.min(segment_distance(p, a, b));
                }
            }
        };
        if k == 0 {
            visit(c.0, c.1);
            return;
        }
        for i in c.0 - k..=c.0 + k {
            visit(i, c.1 - k);
            visit(i, c.1 + k);
        }
        for j in c.1 - k + 1..c.1 + k {
            visit(c.0 - k, j);
            visit(c.0 + k, j);
        }
    }

    /// Distance from `p` to the nearest segment.
    pub fn distance(&self, p: Cx<T>) -> T {
        let mut best = T::lit(f64::INFINITY);
        if self.segments.is_empty() {
            return best;
        }
        let c = self.key(p);
        let (x0, y0, x1, y1) = self.extent;
        // rings beyond this one contain no cells of the index
        let far = (c.0 - x0).abs().max((c.0 - x1).abs()).max((c.1 - y0).abs()).max((c.1 - y1).abs());
        for k in 0..=far {
            self.ring_min(p, c, k, &mut best);
            if best <= T::lit(k as f64) * self.cell {
                break;
            }
        }
        best
    }

    /// Distance to the nearest segment if it is below `r`.
    pub fn distance_within(&self, p: Cx<T>, r: T) -> Option<T> {
        let mut best = T::lit(f64::INFINITY);
        let c = self.key(p);
        let reach = (r / self.cell).ceil().to_i64().unwrap_or(0) + 1;
        for k in 0..=reach {
            self.ring_min(p, c, k, &mut best);
            if best <= T::lit(k as f64) * self.cell {
                break;
            }
        }
        (best < r).then_some(best)
    }
}

/// Polyline from a closed curve given as a function of the angle.
pub fn sample_closed<T: Real>(n: usize, f: impl Fn(T) -> Cx<T>) -> Result<CurvePolyline<T>, ConfError> {
    if n < 3 {
        return Err(ConfError::Resolution(format!("{n} points cannot describe a closed curve")));
    }
    let pts = (0..n).map(|j| f(T::two_pi() * T::lit(j as f64) / T::lit(n as f64))).collect();
    Ok(CurvePolyline::new(pts, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn square() -> CurvePolyline<f64> {
        CurvePolyline::new(vec![C::new(1.0, 1.0), C::new(-1.0, 1.0), C::new(-1.0, -1.0), C::new(1.0, -1.0)], true)
    }

    #[test]
    fn square_geometry() {
        let s = square();
        assert_eq!(s.winding_number(C::new(0.0, 0.0)), 1);
        assert_eq!(s.winding_number(C::new(3.0, 0.0)), 0);
        assert!(s.is_simple());
        assert!((s.length() - 8.0).abs() < 1e-15);
        let idx = s.index();
        assert!((idx.distance(C::new(0.2, 0.0)) - 0.8).abs() < 1e-15);
        assert!((idx.distance(C::new(5.0, 0.0)) - 4.0).abs() < 1e-15);
        assert!(idx.distance_within(C::new(5.0, 0.0), 1.0).is_none());
        assert!((idx.distance_within(C::new(0.5, 0.0), 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let b = CurvePolyline::new(vec![C::new(1.0, 1.0), C::new(-1.0, -1.0), C::new(-1.0, 1.0), C::new(1.0, -1.0)], true);
        assert!(!b.is_simple());
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let a = sample_closed(400, |t: f64| C::from_polar(1.0, t)).unwrap();
        let b = sample_closed(300, |t: f64| C::from_polar(1.1, t)).unwrap();
        let h = a.hausdorff(&b);
        assert!((h - 0.1).abs() < 1e-3, "{h}");
        assert_eq!(a.hausdorff(&a), 0.0);
    }
}
