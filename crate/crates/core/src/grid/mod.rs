//! Uniform grids, sampled fields, windows and the classical (local) calculus.

mod geometry;
pub mod io;

pub use geometry::{clip_segment, GeometrySpec, IntervalSet, PlanarRegion, PolySet, Segment};

use crate::error::{FracError, Result};
use crate::scalar::{norm2, Point, Real};
use crate::sum::CompensatedSum;

/// Uniform grid on the box [−L, L]^n with m points per axis (m odd, so the
/// origin is a node). Nodes are stored with x varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    n: usize,
    half_width: T,
    m: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n: usize, half_width: T, m: usize) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(FracError::InvalidGrid(format!("dimension must be 1 or 2, got {n}")));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(FracError::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if m < 3 || m % 2 == 0 {
            return Err(FracError::InvalidGrid(format!(
                "points per axis must be odd and at least 3, got {m}"
            )));
        }
        Ok(Self { n, half_width, m })
    }

    /// Grid with spacing `h`; 2L/h must be an even integer.
    pub fn with_spacing(n: usize, half_width: T, h: T) -> Result<Self> {
        let cells = (half_width + half_width) / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > T::lit(1e-9) * cells.max(T::one()) {
            return Err(FracError::InvalidGrid(format!(
                "spacing {h} does not divide the box width {}",
                half_width + half_width
            )));
        }
        let m = rounded.to_usize().unwrap_or(0) + 1;
        Self::new(n, half_width, m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> T {
        self.half_width
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn h(&self) -> T {
        (self.half_width + self.half_width) / T::from_usize_lossy(self.m - 1)
    }

    /// Total number of nodes, m^n.
    #[inline]
    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        self.h().powi(self.n as i32)
    }

    /// Coordinate of the i-th point along an axis.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        let c = (self.m - 1) / 2;
        T::from_isize_lossy(i as isize - c as isize) * self.h()
    }

    /// Per-axis indices of a flat node index.
    #[inline]
    pub fn axis_index(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx % self.m, idx / self.m]
        }
    }

    #[inline]
    pub fn flat_index(&self, ij: [usize; 2]) -> usize {
        if self.n == 1 {
            ij[0]
        } else {
            ij[0] + self.m * ij[1]
        }
    }

    /// Coordinates of a node (second entry is zero in 1D).
    #[inline]
    pub fn node(&self, idx: usize) -> Point<T> {
        let ij = self.axis_index(idx);
        if self.n == 1 {
            [self.coord(ij[0]), T::zero()]
        } else {
            [self.coord(ij[0]), self.coord(ij[1])]
        }
    }

    /// The same box refined by a factor of two.
    pub fn refined(&self) -> Self {
        Self {
            n: self.n,
            half_width: self.half_width,
            m: 2 * self.m - 1,
        }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m && self.half_width == other.half_width
    }
}

/// Smooth profiles with analytic values and gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile<T> {
    /// height·exp(1 − 1/(1 − |x−c|²/r²)) on the ball B_r(c).
    Bump { center: Point<T>, radius: T, height: T },
    /// exp(−|x|²/2σ²)·ψ(|x|) with ψ a smooth step from 1 (r ≤ 3R/4) to 0 (r ≥ R).
    GaussianCutoff { sigma: T, radius: T },
}

fn smooth_transition<T: Real>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else {
        (-u.recip()).exp()
    }
}

fn smooth_transition_derivative<T: Real>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else {
        (-u.recip()).exp() / (u * u)
    }
}

impl<T: Real> Profile<T> {
    fn local(&self, p: Point<T>, n: usize) -> Point<T> {
        let c = match self {
            Profile::Bump { center, .. } => *center,
            Profile::GaussianCutoff { .. } => [T::zero(); 2],
        };
        if n == 1 {
            [p[0] - c[0], T::zero()]
        } else {
            [p[0] - c[0], p[1] - c[1]]
        }
    }

    fn cutoff(radius: T, r: T) -> (T, T) {
        let start = T::lit(0.75) * radius;
        let width = radius - start;
        let t = (r - start) / width;
        if t <= T::zero() {
            return (T::one(), T::zero());
        }
        if t >= T::one() {
            return (T::zero(), T::zero());
        }
        let a = smooth_transition(T::one() - t);
        let b = smooth_transition(t);
        let da = -smooth_transition_derivative(T::one() - t);
        let db = smooth_transition_derivative(t);
        let s = a + b;
        let psi = a / s;
        let dpsi = (da * s - a * (da + db)) / (s * s) / width;
        (psi, dpsi)
    }

    pub fn value(&self, p: Point<T>, n: usize) -> T {
        let z = self.local(p, n);
        match *self {
            Profile::Bump { radius, height, .. } => {
                let q = (z[0] * z[0] + z[1] * z[1]) / (radius * radius);
                if q < T::one() {
                    height * (T::one() - (T::one() - q).recip()).exp()
                } else {
                    T::zero()
                }
            }
            Profile::GaussianCutoff { sigma, radius } => {
                let r = norm2(z);
                let (psi, _) = Self::cutoff(radius, r);
                if psi == T::zero() {
                    return T::zero();
                }
                (-(r * r) / (T::lit(2.0) * sigma * sigma)).exp() * psi
            }
        }
    }

    pub fn gradient(&self, p: Point<T>, n: usize) -> Point<T> {
        let z = self.local(p, n);
        match *self {
            Profile::Bump { radius, height, .. } => {
                let r2 = radius * radius;
                let q = (z[0] * z[0] + z[1] * z[1]) / r2;
                if q >= T::one() {
                    return [T::zero(); 2];
                }
                let g = T::one() - q;
                let v = height * (T::one() - g.recip()).exp();
                let s = -v * T::lit(2.0) / (g * g * r2);
                [s * z[0], s * z[1]]
            }
            Profile::GaussianCutoff { sigma, radius } => {
                let r = norm2(z);
                if r == T::zero() {
                    return [T::zero(); 2];
                }
                let (psi, dpsi) = Self::cutoff(radius, r);
                let gauss = (-(r * r) / (T::lit(2.0) * sigma * sigma)).exp();
                let dr = gauss * (dpsi - psi * r / (sigma * sigma));
                [dr * z[0] / r, dr * z[1] / r]
            }
        }
    }

    /// Radius of a ball around the origin containing the support.
    pub fn support_radius(&self) -> T {
        match *self {
            Profile::Bump { center, radius, .. } => norm2(center) + radius,
            Profile::GaussianCutoff { radius, .. } => radius,
        }
    }

    /// Samples the profile on a grid, checking a margin of 4h to the box edge.
    pub fn sample(&self, spec: &GridSpec<T>) -> Result<ScalarField<T>> {
        let margin = spec.half_width() - T::lit(4.0) * spec.h();
        let fits = match *self {
            Profile::Bump { center, radius, height } => {
                if !(radius > T::zero()) || !height.is_finite() {
                    return Err(FracError::Geometry("bump radius must be positive".into()));
                }
                (0..spec.n()).all(|k| center[k].abs() + radius <= margin)
            }
            Profile::GaussianCutoff { sigma, radius } => {
                if !(sigma > T::zero() && radius > T::zero()) {
                    return Err(FracError::Geometry(
                        "Gaussian width and cutoff radius must be positive".into(),
                    ));
                }
                radius <= margin
            }
        };
        if !fits {
            return Err(FracError::Geometry(format!(
                "support does not fit inside the grid box with a margin of 4h (half width {}, h {})",
                spec.half_width(),
                spec.h()
            )));
        }
        let n = spec.n();
        let values = (0..spec.len()).map(|i| self.value(spec.node(i), n)).collect();
        ScalarField::new(*spec, values, Some(self.support_radius()))
    }
}

/// Samples the standard bump centred at `center`.
pub fn make_bump<T: Real>(spec: &GridSpec<T>, center: Point<T>, radius: T, height: T) -> Result<ScalarField<T>> {
    Profile::Bump { center, radius, height }.sample(spec)
}

/// Samples a Gaussian multiplied by a smooth cutoff vanishing beyond `cutoff_radius`.
pub fn make_gaussian_cutoff<T: Real>(spec: &GridSpec<T>, sigma: T, cutoff_radius: T) -> Result<ScalarField<T>> {
    Profile::GaussianCutoff {
        sigma,
        radius: cutoff_radius,
    }
    .sample(spec)
}

fn check_support<T: Real>(spec: &GridSpec<T>, values: &[T], support_radius: Option<T>) -> Result<()> {
    if let Some(r) = support_radius {
        if !(r >= T::zero()) {
            return Err(FracError::Field("support radius must be nonnegative".into()));
        }
        let limit = r + spec.h();
        for (i, v) in values.iter().enumerate() {
            if *v != T::zero() && norm2(spec.node(i)) > limit {
                return Err(FracError::Field(format!(
                    "nonzero value at node {i} outside the declared support radius {r}"
                )));
            }
        }
    }
    Ok(())
}

/// Real-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
    support_radius: Option<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>, support_radius: Option<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(FracError::Field(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FracError::Field("field values must be finite".into()));
        }
        check_support(&spec, &values, support_radius)?;
        Ok(Self {
            spec,
            values,
            support_radius,
        })
    }

    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            values: vec![T::zero(); spec.len()],
            support_radius: Some(T::zero()),
        }
    }

    pub fn from_fn(spec: GridSpec<T>, support_radius: Option<T>, f: impl Fn(Point<T>) -> T) -> Result<Self> {
        let values = (0..spec.len()).map(|i| f(spec.node(i))).collect();
        Self::new(spec, values, support_radius)
    }

    /// Wraps computed values without a declared support.
    pub(crate) fn from_values(spec: GridSpec<T>, values: Vec<T>) -> Self {
        Self {
            spec,
            values,
            support_radius: None,
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn support_radius(&self) -> Option<T> {
        self.support_radius
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// a·self + b·other.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        same_grid(&self.spec, &other.spec)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * *x + b * *y)
            .collect();
        let support = match (self.support_radius, other.support_radius) {
            (Some(r), Some(s)) => Some(r.max(s)),
            _ => None,
        };
        Ok(Self {
            spec: self.spec,
            values,
            support_radius: support,
        })
    }

    /// Pointwise product.
    pub fn product(&self, other: &Self) -> Result<Self> {
        same_grid(&self.spec, &other.spec)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| *x * *y).collect();
        let support = match (self.support_radius, other.support_radius) {
            (Some(r), Some(s)) => Some(r.min(s)),
            (Some(r), None) | (None, Some(r)) => Some(r),
            _ => None,
        };
        Ok(Self {
            spec: self.spec,
            values,
            support_radius: support,
        })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|v| *v * a).collect(),
            support_radius: self.support_radius,
        }
    }

    /// Indices of nonzero samples.
    pub fn support_nodes(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i] != T::zero())
            .collect()
    }
}

/// Vector-valued samples on a grid, one array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    spec: GridSpec<T>,
    components: Vec<Vec<T>>,
    support_radius: Option<T>,
}

impl<T: Real> VectorField<T> {
    pub fn new(spec: GridSpec<T>, components: Vec<Vec<T>>, support_radius: Option<T>) -> Result<Self> {
        if components.len() != spec.n() {
            return Err(FracError::Field(format!(
                "expected {} components, got {}",
                spec.n(),
                components.len()
            )));
        }
        for c in &components {
            if c.len() != spec.len() {
                return Err(FracError::Field("component length does not match grid".into()));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(FracError::Field("field values must be finite".into()));
            }
            check_support(&spec, c, support_radius)?;
        }
        Ok(Self {
            spec,
            components,
            support_radius,
        })
    }

    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            components: vec![vec![T::zero(); spec.len()]; spec.n()],
            support_radius: Some(T::zero()),
        }
    }

    pub(crate) fn from_components(spec: GridSpec<T>, components: Vec<Vec<T>>) -> Self {
        Self {
            spec,
            components,
            support_radius: None,
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    #[inline]
    pub fn components(&self) -> &[Vec<T>] {
        &self.components
    }

    #[inline]
    pub fn component(&self, k: usize) -> &[T] {
        &self.components[k]
    }

    #[inline]
    pub fn support_radius(&self) -> Option<T> {
        self.support_radius
    }

    /// Euclidean norm at every node.
    pub fn magnitude(&self) -> Vec<T> {
        (0..self.spec.len())
            .map(|i| {
                let mut s = T::zero();
                for c in &self.components {
                    s = s + c[i] * c[i];
                }
                s.sqrt()
            })
            .collect()
    }

    /// a·self + b·other.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        same_grid(&self.spec, &other.spec)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * *p + b * *q).collect())
            .collect();
        let support = match (self.support_radius, other.support_radius) {
            (Some(r), Some(s)) => Some(r.max(s)),
            _ => None,
        };
        Ok(Self {
            spec: self.spec,
            components,
            support_radius: support,
        })
    }

    /// Multiplies every component by a scalar field.
    pub fn scale_by(&self, f: &ScalarField<T>) -> Result<Self> {
        same_grid(&self.spec, f.spec())?;
        let components = self
            .components
            .iter()
            .map(|c| c.iter().zip(f.values()).map(|(x, y)| *x * *y).collect())
            .collect();
        let support = match (self.support_radius, f.support_radius()) {
            (Some(r), Some(s)) => Some(r.min(s)),
            (Some(r), None) | (None, Some(r)) => Some(r),
            _ => None,
        };
        Ok(Self {
            spec: self.spec,
            components,
            support_radius: support,
        })
    }

    /// Pointwise inner product with another vector field.
    pub fn dot(&self, other: &Self) -> Result<ScalarField<T>> {
        same_grid(&self.spec, &other.spec)?;
        let values = (0..self.spec.len())
            .map(|i| {
                let mut s = T::zero();
                for k in 0..self.spec.n() {
                    s = s + self.components[k][i] * other.components[k][i];
                }
                s
            })
            .collect();
        Ok(ScalarField::from_values(self.spec, values))
    }

    pub fn max_abs(&self) -> T {
        self.magnitude().into_iter().fold(T::zero(), T::max)
    }
}

pub(crate) fn same_grid<T: Real>(a: &GridSpec<T>, b: &GridSpec<T>) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(FracError::Field("fields live on different grids".into()))
    }
}

/// Integration window Ω. Windows are open sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Window<T> {
    /// All of ℝ^n (for compactly supported data, the grid box).
    Whole,
    /// Union of open intervals (1D).
    Intervals(IntervalSet<T>),
    /// Open axis-aligned box; in 1D only the first coordinates are used.
    Rect { lo: Point<T>, hi: Point<T> },
    /// Polygonal set (2D).
    Polygon(PolySet<T>),
}

fn overlap<T: Real>(a0: T, a1: T, b0: T, b1: T) -> T {
    (a1.min(b1) - a0.max(b0)).max(T::zero())
}

impl<T: Real> Window<T> {
    pub fn interval(a: T, b: T) -> Result<Self> {
        Ok(Window::Intervals(IntervalSet::interval(a, b)?))
    }

    pub fn rect(lo: Point<T>, hi: Point<T>) -> Result<Self> {
        if !(lo[0] < hi[0]) || !(lo[1] < hi[1]) {
            return Err(FracError::Geometry("window box must have positive extent".into()));
        }
        Ok(Window::Rect { lo, hi })
    }

    /// Centred cube (−l, l)^n.
    pub fn cube(half: T) -> Self {
        Window::Rect {
            lo: [-half, -half],
            hi: [half, half],
        }
    }

    pub fn is_whole(&self) -> bool {
        matches!(self, Window::Whole)
    }

    pub fn contains(&self, p: Point<T>, n: usize) -> bool {
        match self {
            Window::Whole => true,
            Window::Intervals(s) => s.contains(p[0]),
            Window::Rect { lo, hi } => (0..n).all(|k| lo[k] < p[k] && p[k] < hi[k]),
            Window::Polygon(poly) => poly.contains(p),
        }
    }

    /// The window as an interval set (1D windows only).
    pub fn as_intervals(&self) -> Result<IntervalSet<T>> {
        match self {
            Window::Whole => Ok(IntervalSet::whole_line()),
            Window::Intervals(s) => Ok(s.clone()),
            Window::Rect { lo, hi } => IntervalSet::interval(lo[0], hi[0]),
            Window::Polygon(_) => Err(FracError::Geometry("polygon window used in 1D".into())),
        }
    }

    /// The window as a polygon (bounded 2D windows only).
    pub fn as_polygon(&self) -> Result<Option<PolySet<T>>> {
        match self {
            Window::Whole => Ok(None),
            Window::Rect { lo, hi } => Ok(Some(PolySet::rectangle(*lo, *hi)?)),
            Window::Polygon(p) => Ok(Some(p.clone())),
            Window::Intervals(_) => Err(FracError::Geometry("interval window used in 2D".into())),
        }
    }

    fn check_dimension(&self, n: usize) -> Result<()> {
        match (self, n) {
            (Window::Intervals(_), 2) => Err(FracError::Geometry("interval window used in 2D".into())),
            (Window::Polygon(_), 1) => Err(FracError::Geometry("polygon window used in 1D".into())),
            _ => Ok(()),
        }
    }

    /// Measure of the dual cell of every node intersected with the grid box
    /// and with Ω. Equals the trapezoid weights when Ω contains the box.
    pub fn node_weights(&self, spec: &GridSpec<T>) -> Result<Vec<T>> {
        self.check_dimension(spec.n())?;
        let h = spec.h();
        let half = h * T::lit(0.5);
        let l = spec.half_width();
        let cell = |c: T| (c - half).max(-l)..(c + half).min(l);
        let intervals = if spec.n() == 1 {
            Some(self.as_intervals()?)
        } else {
            None
        };
        Ok((0..spec.len())
            .map(|idx| {
                let p = spec.node(idx);
                if spec.n() == 1 {
                    let r = cell(p[0]);
                    intervals
                        .as_ref()
                        .expect("1D window")
                        .intervals()
                        .iter()
                        .fold(T::zero(), |acc, &(a, b)| acc + overlap(r.start, r.end, a, b))
                } else {
                    let rx = cell(p[0]);
                    let ry = cell(p[1]);
                    match self {
                        Window::Whole => (rx.end - rx.start) * (ry.end - ry.start),
                        Window::Rect { lo, hi } => {
                            overlap(rx.start, rx.end, lo[0], hi[0]) * overlap(ry.start, ry.end, lo[1], hi[1])
                        }
                        Window::Polygon(poly) => poly.clipped_area([rx.start, ry.start], [rx.end, ry.end]),
                        Window::Intervals(_) => unreachable!("checked above"),
                    }
                }
            })
            .collect())
    }
}

/// Clipped trapezoid rule ∫_Ω f.
pub fn integrate<T: Real>(f: &ScalarField<T>, w: &Window<T>) -> Result<T> {
    let weights = w.node_weights(f.spec())?;
    Ok(weighted_sum(f.values(), &weights))
}

pub(crate) fn weighted_sum<T: Real>(values: &[T], weights: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for (v, w) in values.iter().zip(weights) {
        if *w != T::zero() {
            acc.add(*v * *w);
        }
    }
    acc.value()
}

/// Lebesgue exponent p ∈ {1, 2, ∞}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Exponent {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Infinity,
}

impl Exponent {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Exponent::One),
            "2" => Ok(Exponent::Two),
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => Err(FracError::Domain(format!("unsupported exponent p = {other}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Exponent::One => "1",
            Exponent::Two => "2",
            Exponent::Infinity => "inf",
        }
    }
}

/// Pointwise magnitudes of a field, for norms.
pub trait Magnitude<T> {
    fn grid(&self) -> &GridSpec<T>;
    fn magnitudes(&self) -> Vec<T>;
}

impl<T: Real> Magnitude<T> for ScalarField<T> {
    fn grid(&self) -> &GridSpec<T> {
        self.spec()
    }
    fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|v| v.abs()).collect()
    }
}

impl<T: Real> Magnitude<T> for VectorField<T> {
    fn grid(&self) -> &GridSpec<T> {
        self.spec()
    }
    fn magnitudes(&self) -> Vec<T> {
        self.magnitude()
    }
}

/// L^p norm on Ω; for p = ∞ the maximum over nodes inside Ω.
pub fn lp_norm<T: Real, F: Magnitude<T>>(f: &F, p: Exponent, w: &Window<T>) -> Result<T> {
    let spec = *f.grid();
    let mags = f.magnitudes();
    match p {
        Exponent::Infinity => {
            w.check_dimension(spec.n())?;
            Ok((0..spec.len())
                .filter(|&i| w.contains(spec.node(i), spec.n()))
                .fold(T::zero(), |m, i| m.max(mags[i])))
        }
        Exponent::One => {
            let weights = w.node_weights(&spec)?;
            Ok(weighted_sum(&mags, &weights))
        }
        Exponent::Two => {
            let weights = w.node_weights(&spec)?;
            let sq: Vec<T> = mags.iter().map(|v| *v * *v).collect();
            Ok(weighted_sum(&sq, &weights).sqrt())
        }
    }
}

/// Finite-difference stencil for node i of a line of m nodes, in units of
/// 1/h: sixth order in the interior, fourth order on the three nodes nearest
/// each end.
fn line_stencil(m: usize, i: usize) -> ([(usize, f64); 7], usize) {
    let mut st = [(0usize, 0.0f64); 7];
    let mut put = |k: usize, j: usize, c: f64| st[k] = (j, c);
    if m < 5 {
        if i == 0 {
            put(0, 1, 1.0);
            put(1, 0, -1.0);
        } else if i == m - 1 {
            put(0, m - 1, 1.0);
            put(1, m - 2, -1.0);
        } else {
            put(0, i + 1, 0.5);
            put(1, i - 1, -0.5);
        }
        return (st, 2);
    }
    let k = m - 1;
    if i >= 3 && i + 3 < m {
        for (n, (o, c)) in [(-3isize, -1.0), (-2, 9.0), (-1, -45.0), (1, 45.0), (2, -9.0), (3, 1.0)]
            .into_iter()
            .enumerate()
        {
            put(n, (i as isize + o) as usize, c / 60.0);
        }
        (st, 6)
    } else if i == 2 || i == k - 2 {
        for (n, (o, c)) in [(-2isize, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)]
            .into_iter()
            .enumerate()
        {
            put(n, (i as isize + o) as usize, c / 12.0);
        }
        (st, 4)
    } else {
        let (coef, sign, from_left) = match i {
            0 => ([-25.0, 48.0, -36.0, 16.0, -3.0], 1.0, true),
            1 => ([-3.0, -10.0, 18.0, -6.0, 1.0], 1.0, true),
            _ if i == k => ([-25.0, 48.0, -36.0, 16.0, -3.0], -1.0, false),
            _ => ([-3.0, -10.0, 18.0, -6.0, 1.0], -1.0, false),
        };
        for (n, c) in coef.into_iter().enumerate() {
            let j = if from_left { n } else { k - n };
            put(n, j, sign * c / 12.0);
        }
        (st, 5)
    }
}

/// Derivative along `axis` of grid values, or its transpose.
fn derivative_along<T: Real>(spec: &GridSpec<T>, values: &[T], axis: usize, transpose: bool) -> Vec<T> {
    let m = spec.m();
    let inv_h = spec.h().recip();
    let mut out = vec![T::zero(); spec.len()];
    let lines = if spec.n() == 1 { 1 } else { m };
    for j in 0..lines {
        let idx = |i: usize| {
            if spec.n() == 1 {
                i
            } else if axis == 0 {
                spec.flat_index([i, j])
            } else {
                spec.flat_index([j, i])
            }
        };
        for i in 0..m {
            let (st, len) = line_stencil(m, i);
            if transpose {
                let g = values[idx(i)] * inv_h;
                for &(jj, c) in &st[..len] {
                    let t = idx(jj);
                    out[t] = out[t] + T::lit(c) * g;
                }
            } else {
                let mut acc = T::zero();
                for &(jj, c) in &st[..len] {
                    acc = acc + T::lit(c) * values[idx(jj)];
                }
                out[idx(i)] = acc * inv_h;
            }
        }
    }
    out
}

/// Finite-difference gradient (sixth order in the interior).
pub fn local_gradient<T: Real>(f: &ScalarField<T>) -> VectorField<T> {
    let spec = *f.spec();
    let comps = (0..spec.n())
        .map(|axis| derivative_along(&spec, f.values(), axis, false))
        .collect();
    VectorField {
        spec,
        components: comps,
        support_radius: f.support_radius().map(|r| r + T::lit(3.0) * spec.h()),
    }
}

/// Transpose of `local_divergence` as a linear map on grid values.
pub fn local_divergence_transpose<T: Real>(g: &ScalarField<T>) -> VectorField<T> {
    let spec = *g.spec();
    let comps = (0..spec.n())
        .map(|axis| derivative_along(&spec, g.values(), axis, true))
        .collect();
    VectorField {
        spec,
        components: comps,
        support_radius: None,
    }
}

/// Discrete divergence by the same stencils.
pub fn local_divergence<T: Real>(phi: &VectorField<T>) -> ScalarField<T> {
    let spec = *phi.spec();
    let mut total = vec![T::zero(); spec.len()];
    for k in 0..spec.n() {
        let comp = ScalarField::from_values(spec, phi.component(k).to_vec());
        let g = local_gradient(&comp);
        for (t, v) in total.iter_mut().zip(g.component(k)) {
            *t = *t + *v;
        }
    }
    ScalarField::from_values(spec, total)
}

/// Input accepted by the variation functionals.
#[derive(Debug, Clone, Copy)]
pub enum VariationInput<'a, T> {
    Field(&'a ScalarField<T>),
    Intervals(&'a IntervalSet<T>),
    Polygons(&'a PolySet<T>),
}

/// Classical variation |Df|(Ω) or perimeter P(E; Ω).
pub fn classical_variation<T: Real>(input: VariationInput<'_, T>, w: &Window<T>) -> Result<T> {
    match input {
        VariationInput::Field(f) => lp_norm(&local_gradient(f), Exponent::One, w),
        VariationInput::Intervals(e) => {
            let omega = w.as_intervals()?;
            Ok(T::from_usize_lossy(
                e.endpoints().into_iter().filter(|&x| omega.contains(x)).count(),
            ))
        }
        VariationInput::Polygons(e) => match w.as_polygon()? {
            None => Ok(e.perimeter()),
            Some(region) => Ok(e
                .edges()
                .iter()
                .flat_map(|s| clip_segment(s, &region, true))
                .map(|s| s.length())
                .fold(T::zero(), |a, b| a + b)),
        },
    }
}
