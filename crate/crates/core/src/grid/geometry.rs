//! Exact set geometry: unions of intervals on the line and polygons in the plane.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::scalar::{norm2, sub, Point, Real};

/// A finite union of disjoint open intervals, kept sorted and merged.
/// Endpoints may be infinite, which describes half-lines.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet<T> {
    intervals: Vec<(T, T)>,
}

impl<T: Real> IntervalSet<T> {
    pub fn new(intervals: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let mut raw: Vec<(T, T)> = intervals.into_iter().collect();
        for &(a, b) in &raw {
            if a.is_nan() || b.is_nan() || !(a < b) {
                return Err(FracError::Geometry(format!("invalid interval ({a}, {b})")));
            }
        }
        raw.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("endpoints are not NaN"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn interval(a: T, b: T) -> Result<Self> {
        Self::new([(a, b)])
    }

    pub fn whole_line() -> Self {
        Self {
            intervals: vec![(T::neg_infinity(), T::infinity())],
        }
    }

    pub fn intervals(&self) -> &[(T, T)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure (may be infinite).
    pub fn measure(&self) -> T {
        self.intervals.iter().fold(T::zero(), |acc, &(a, b)| acc + (b - a))
    }

    pub fn is_bounded(&self) -> bool {
        self.intervals.iter().all(|&(a, b)| a.is_finite() && b.is_finite())
    }

    /// Membership in the open set.
    pub fn contains(&self, x: T) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    pub fn is_endpoint(&self, x: T) -> bool {
        self.intervals.iter().any(|&(a, b)| a == x || b == x)
    }

    /// Finite endpoints in increasing order.
    pub fn endpoints(&self) -> Vec<T> {
        self.intervals
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|v| v.is_finite())
            .collect()
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, b0) = self.intervals[i];
            let (a1, b1) = other.intervals[j];
            let lo = a0.max(a1);
            let hi = b0.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
            if b0 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    /// Complement up to the (null) endpoint set.
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = T::neg_infinity();
        for &(a, b) in &self.intervals {
            if cursor < a {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < T::infinity() {
            out.push((cursor, T::infinity()));
        }
        Self { intervals: out }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersect(&other.complement())
    }

    pub fn translate(&self, shift: T) -> Self {
        Self {
            intervals: self.intervals.iter().map(|&(a, b)| (a + shift, b + shift)).collect(),
        }
    }

    /// Image under x ↦ center + factor·(x − center), factor > 0.
    pub fn dilate(&self, center: T, factor: T) -> Result<Self> {
        if !(factor > T::zero()) {
            return Err(FracError::Geometry("dilation factor must be positive".into()));
        }
        Ok(Self {
            intervals: self
                .intervals
                .iter()
                .map(|&(a, b)| (center + factor * (a - center), center + factor * (b - center)))
                .collect(),
        })
    }

    /// Measure of the symmetric difference with `other`.
    pub fn symmetric_difference_measure(&self, other: &Self) -> T {
        self.difference(other).measure() + other.difference(self).measure()
    }
}

/// An oriented segment; the region it bounds lies to its left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub a: Point<T>,
    pub b: Point<T>,
}

impl<T: Real> Segment<T> {
    pub fn new(a: Point<T>, b: Point<T>) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> T {
        norm2(sub(self.b, self.a))
    }

    pub fn reversed(&self) -> Self {
        Self { a: self.b, b: self.a }
    }

    pub fn point_at(&self, t: T) -> Point<T> {
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
        ]
    }

    pub fn midpoint(&self) -> Point<T> {
        self.point_at(T::lit(0.5))
    }

    /// Unit tangent.
    pub fn tangent(&self) -> Point<T> {
        let d = sub(self.b, self.a);
        let l = norm2(d);
        [d[0] / l, d[1] / l]
    }

    /// Unit normal pointing away from the bounded region (to the right).
    pub fn outward_normal(&self) -> Point<T> {
        let t = self.tangent();
        [t[1], -t[0]]
    }
}

fn cross<T: Real>(o: Point<T>, a: Point<T>, b: Point<T>) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn ring_signed_area<T: Real>(ring: &[Point<T>]) -> T {
    let mut acc = T::zero();
    for i in 0..ring.len() {
        let p = ring[i];
        let q = ring[(i + 1) % ring.len()];
        acc = acc + (p[0] * q[1] - q[0] * p[1]);
    }
    acc * T::lit(0.5)
}

fn ring_contains<T: Real>(ring: &[Point<T>], p: Point<T>) -> bool {
    let mut inside = false;
    let k = ring.len();
    let mut j = k - 1;
    for i in 0..k {
        let (pi, pj) = (ring[i], ring[j]);
        if (pi[1] > p[1]) != (pj[1] > p[1]) {
            let x = pj[0] + (p[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Parameters (s on `p`, t on `q`) of a proper crossing of two segments.
fn segment_intersection<T: Real>(p: &Segment<T>, q: &Segment<T>) -> Option<(T, T)> {
    let r = sub(p.b, p.a);
    let s = sub(q.b, q.a);
    let den = r[0] * s[1] - r[1] * s[0];
    if den == T::zero() {
        return None;
    }
    let w = sub(q.a, p.a);
    let t = (w[0] * s[1] - w[1] * s[0]) / den;
    let u = (w[0] * r[1] - w[1] * r[0]) / den;
    let z = T::zero();
    let o = T::one();
    if t >= z && t <= o && u >= z && u <= o {
        Some((t, u))
    } else {
        None
    }
}

fn segments_touch<T: Real>(p: &Segment<T>, q: &Segment<T>) -> bool {
    let d1 = cross(q.a, q.b, p.a);
    let d2 = cross(q.a, q.b, p.b);
    let d3 = cross(p.a, p.b, q.a);
    let d4 = cross(p.a, p.b, q.b);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    let on = |a: Point<T>, b: Point<T>, c: Point<T>, d: T| {
        d == z && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q.a, q.b, p.a, d1) || on(q.a, q.b, p.b, d2) || on(p.a, p.b, q.a, d3) || on(p.a, p.b, q.b, d4)
}

/// A polygonal set: one or more simple rings, holes allowed. Outer rings are
/// stored counter-clockwise and holes clockwise, so the set lies to the left
/// of every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySet<T> {
    rings: Vec<Vec<Point<T>>>,
}

impl<T: Real> PolySet<T> {
    pub fn new(rings: Vec<Vec<Point<T>>>) -> Result<Self> {
        if rings.is_empty() {
            return Err(FracError::Geometry("polygonal set needs at least one ring".into()));
        }
        let mut cleaned = Vec::with_capacity(rings.len());
        for ring in rings {
            let mut r: Vec<Point<T>> = Vec::with_capacity(ring.len());
            for p in ring {
                if !p[0].is_finite() || !p[1].is_finite() {
                    return Err(FracError::Geometry("polygon vertices must be finite".into()));
                }
                if r.last() != Some(&p) {
                    r.push(p);
                }
            }
            if r.len() > 1 && r.first() == r.last() {
                r.pop();
            }
            if r.len() < 3 || ring_signed_area(&r) == T::zero() {
                return Err(FracError::Geometry("degenerate polygon ring".into()));
            }
            cleaned.push(r);
        }
        let edges: Vec<(usize, usize, Segment<T>)> = cleaned
            .iter()
            .enumerate()
            .flat_map(|(ri, r)| (0..r.len()).map(move |i| (ri, i, Segment::new(r[i], r[(i + 1) % r.len()]))))
            .collect();
        for (x, &(ri, i, ref e)) in edges.iter().enumerate() {
            for &(rj, j, ref f) in &edges[x + 1..] {
                let len = cleaned[ri].len();
                let adjacent = ri == rj && (j == (i + 1) % len || i == (j + 1) % len);
                if adjacent {
                    if cross(e.a, e.b, f.b) == T::zero() && ri == rj && j == (i + 1) % len {
                        let back = (f.b[0] - e.b[0]) * (e.a[0] - e.b[0]) + (f.b[1] - e.b[1]) * (e.a[1] - e.b[1]);
                        if back > T::zero() {
                            return Err(FracError::Geometry("polygon ring folds back on itself".into()));
                        }
                    }
                    continue;
                }
                if segments_touch(e, f) {
                    return Err(FracError::Geometry(
                        "polygon rings must be simple and mutually disjoint".into(),
                    ));
                }
            }
        }
        let depth: Vec<usize> = (0..cleaned.len())
            .map(|i| {
                (0..cleaned.len())
                    .filter(|&j| j != i && ring_contains(&cleaned[j], cleaned[i][0]))
                    .count()
            })
            .collect();
        for (ring, d) in cleaned.iter_mut().zip(depth) {
            let ccw = ring_signed_area(ring) > T::zero();
            if ccw != (d % 2 == 0) {
                ring.reverse();
            }
        }
        Ok(Self { rings: cleaned })
    }

    /// Axis-aligned rectangle.
    pub fn rectangle(lo: Point<T>, hi: Point<T>) -> Result<Self> {
        Self::new(vec![vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]])
    }

    /// Regular k-gon inscribed in the circle of given radius.
    pub fn regular(center: Point<T>, radius: T, k: usize) -> Result<Self> {
        if k < 3 {
            return Err(FracError::Geometry("regular polygon needs k >= 3".into()));
        }
        let ring = (0..k)
            .map(|i| {
                let th = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(k);
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            })
            .collect();
        Self::new(vec![ring])
    }

    pub fn rings(&self) -> &[Vec<Point<T>>] {
        &self.rings
    }

    pub fn area(&self) -> T {
        self.rings
            .iter()
            .map(|r| ring_signed_area(r))
            .fold(T::zero(), |a, b| a + b)
    }

    /// Centre of mass.
    pub fn centroid(&self) -> Point<T> {
        let mut m = [T::zero(); 2];
        for e in self.edges() {
            let c = e.a[0] * e.b[1] - e.b[0] * e.a[1];
            m[0] = m[0] + (e.a[0] + e.b[0]) * c;
            m[1] = m[1] + (e.a[1] + e.b[1]) * c;
        }
        let s = T::lit(6.0) * self.area();
        [m[0] / s, m[1] / s]
    }

    pub fn perimeter(&self) -> T {
        self.edges().iter().map(Segment::length).fold(T::zero(), |a, b| a + b)
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        self.rings.iter().filter(|r| ring_contains(r, p)).count() % 2 == 1
    }

    pub fn edges(&self) -> Vec<Segment<T>> {
        self.rings
            .iter()
            .flat_map(|r| (0..r.len()).map(move |i| Segment::new(r[i], r[(i + 1) % r.len()])))
            .collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point<T>> + '_ {
        self.rings.iter().flatten().copied()
    }

    /// (min, max) corners of the bounding box.
    pub fn bounding_box(&self) -> (Point<T>, Point<T>) {
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for p in self.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn translate(&self, shift: Point<T>) -> Self {
        Self {
            rings: self
                .rings
                .iter()
                .map(|r| r.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect())
                .collect(),
        }
    }

    /// Area of the intersection with an axis-aligned rectangle.
    pub fn clipped_area(&self, lo: Point<T>, hi: Point<T>) -> T {
        self.rings
            .iter()
            .map(|r| ring_signed_area(&clip_ring_to_rect(r, lo, hi)))
            .fold(T::zero(), |a, b| a + b)
    }
}

/// Sutherland–Hodgman clipping of a ring against a rectangle. Orientation is
/// preserved, so signed areas of clipped rings add up correctly.
pub(crate) fn clip_ring_to_rect<T: Real>(ring: &[Point<T>], lo: Point<T>, hi: Point<T>) -> Vec<Point<T>> {
    let mut poly = ring.to_vec();
    for (axis, bound, keep_greater) in [(0, lo[0], true), (0, hi[0], false), (1, lo[1], true), (1, hi[1], false)] {
        if poly.is_empty() {
            break;
        }
        let inside = |p: &Point<T>| {
            if keep_greater {
                p[axis] >= bound
            } else {
                p[axis] <= bound
            }
        };
        let mut out = Vec::with_capacity(poly.len() + 4);
        for i in 0..poly.len() {
            let cur = poly[i];
            let prev = poly[(i + poly.len() - 1) % poly.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
                x[axis] = bound;
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
        }
        poly = out;
    }
    poly
}

/// Anything with a polygonal boundary and a membership test.
pub trait PlanarRegion<T: Real> {
    fn contains_point(&self, p: Point<T>) -> bool;
    fn boundary(&self) -> Vec<Segment<T>>;
}

impl<T: Real> PlanarRegion<T> for PolySet<T> {
    fn contains_point(&self, p: Point<T>) -> bool {
        self.contains(p)
    }
    fn boundary(&self) -> Vec<Segment<T>> {
        self.edges()
    }
}

/// Splits `seg` at its crossings with the boundary of `region` and returns
/// the pieces whose midpoints lie inside (`want_inside`) or outside.
pub fn clip_segment<T: Real, R: PlanarRegion<T> + ?Sized>(
    seg: &Segment<T>,
    region: &R,
    want_inside: bool,
) -> Vec<Segment<T>> {
    let mut ts = vec![T::zero(), T::one()];
    for e in region.boundary() {
        if let Some((t, _)) = segment_intersection(seg, &e) {
            ts.push(t);
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
    ts.dedup();
    let mut out = Vec::new();
    for w in ts.windows(2) {
        if w[1] - w[0] <= T::epsilon() {
            continue;
        }
        let piece = Segment::new(seg.point_at(w[0]), seg.point_at(w[1]));
        if region.contains_point(piece.midpoint()) == want_inside {
            out.push(piece);
        }
    }
    out
}

/// Set description used by the command line tools and reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GeometrySpec {
    Intervals(Vec<[f64; 2]>),
    Polygons(Vec<Vec<[f64; 2]>>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn intervals_merge_and_sort() {
        let s = IntervalSet::new([(2.0, 3.0), (0.0, 1.0), (1.0, 1.5), (2.5, 4.0)]).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 1.5), (2.0, 4.0)]);
        assert_eq!(s.measure(), 3.5);
        assert!(IntervalSet::new([(1.0, 1.0)]).is_err());
    }

    #[test]
    fn interval_boolean_algebra() {
        let a = IntervalSet::new([(-5.0, -4.0), (0.0, f64::INFINITY)]).unwrap();
        let w = IntervalSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(a.intersect(&w).intervals(), &[(0.0, 1.0)]);
        assert_eq!(w.difference(&a).intervals(), &[(-1.0, 0.0)]);
        let c = a.complement();
        assert_eq!(c.intervals(), &[(f64::NEG_INFINITY, -5.0), (-4.0, 0.0)]);
        assert!(!a.is_bounded());
    }

    #[test]
    fn square_geometry() {
        let sq = PolySet::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        assert_relative_eq!(sq.area(), 1.0);
        assert_relative_eq!(sq.perimeter(), 4.0);
        assert!(sq.contains([0.5, 0.5]));
        assert!(!sq.contains([1.5, 0.5]));
        assert_relative_eq!(sq.clipped_area([0.5, 0.5], [2.0, 2.0]), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn holes_are_reoriented() {
        let outer = vec![[0.0, 0.0], [0.0, 4.0], [4.0, 4.0], [4.0, 0.0]];
        let hole = vec![[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        let p = PolySet::new(vec![outer, hole]).unwrap();
        assert_relative_eq!(p.area(), 12.0);
        assert!(!p.contains([2.0, 2.0]));
        assert!(p.contains([0.5, 2.0]));
        for e in p.edges() {
            let m = e.midpoint();
            let nrm = e.outward_normal();
            let probe_in = [m[0] - 1e-6 * nrm[0], m[1] - 1e-6 * nrm[1]];
            assert!(p.contains(probe_in));
        }
    }

    #[test]
    fn self_intersection_rejected() {
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(PolySet::new(vec![bowtie]).is_err());
    }

    #[test]
    fn segment_clipping() {
        let sq = PolySet::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let s = Segment::new([-1.0, 0.5], [2.0, 0.5]);
        let inside = clip_segment(&s, &sq, true);
        assert_eq!(inside.len(), 1);
        assert_relative_eq!(inside[0].length(), 1.0, max_relative = 1e-14);
        let outside = clip_segment(&s, &sq, false);
        assert_relative_eq!(
            outside.iter().map(Segment::length).sum::<f64>(),
            2.0,
            max_relative = 1e-14
        );
    }
}
