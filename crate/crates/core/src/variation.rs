//! Fractional seminorms, perimeters and variations.
//!
//! One-dimensional set quantities are evaluated from closed-form iterated
//! antiderivatives of |x − y|^{−1−α}. In the plane, double area integrals
//! over polygonal sets are reduced to double boundary integrals by the
//! divergence theorem, and |∇^α χ_E| is integrated over trapezoids that do
//! not cross ∂E, with endpoint-singular rules in both directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::FracOrder;
use crate::error::{FracError, Result};
use crate::grid::{
    clip_segment, local_divergence_transpose, local_gradient, lp_norm, weighted_sum, Exponent, IntervalSet, PolySet,
    ScalarField, Segment, VariationInput, VectorField, Window,
};
use crate::kernels::exterior::{exterior_gradient_power, exterior_of_box, PointSources};
use crate::kernels::indicator::{
    edge_frame, edge_power_integral, indicator_gradient_1d_at, interval_kernel_mass, segments_gradient_with,
};
use crate::kernels::{frac_divergence, frac_gradient, lattice_zeta, QuadParams};
use crate::quadrature::{gauss_panels, integrate_interval, integrate_interval_with, tanh_sinh, GaussRule, Precision};
use crate::scalar::{dot, Point, Real};
use crate::sum::CompensatedSum;

/// The two parts of the relative fractional perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerimeterBreakdown<T> {
    /// ∫_Ω∫_Ω |χ_E(x) − χ_E(y)| / |x − y|^{n+α}.
    pub inner: T,
    /// ∫_Ω∫_{Ω^c} |χ_E(x) − χ_E(y)| / |x − y|^{n+α}.
    pub cross: T,
}

impl<T: Real> PerimeterBreakdown<T> {
    pub fn zero() -> Self {
        Self {
            inner: T::zero(),
            cross: T::zero(),
        }
    }

    /// P_α(E; Ω) = inner + 2·cross.
    pub fn total(&self) -> T {
        self.inner + self.cross + self.cross
    }

    /// The one-sided variant inner + cross.
    pub fn tilde(&self) -> T {
        self.inner + self.cross
    }
}

/// Measurable sets with exact geometry.
#[derive(Debug, Clone, Copy)]
pub enum SetInput<'a, T> {
    Intervals(&'a IntervalSet<T>),
    Polygons(&'a PolySet<T>),
}

fn power_term<T: Real>(t: T, e: T) -> T {
    if t == T::zero() {
        T::zero()
    } else {
        t.powf(e)
    }
}

/// ∫_a^b ∫_c^d (y − x)^{−1−α} dy dx for b ≤ c.
fn ordered_pair<T: Real>((a, b): (T, T), (c, d): (T, T), alpha: T) -> Result<T> {
    if a.is_infinite() && d.is_infinite() {
        return Err(FracError::Divergent(
            "two unbounded half-lines facing each other have infinite interaction".into(),
        ));
    }
    let e = T::one() - alpha;
    let mut acc = CompensatedSum::new();
    if a.is_finite() {
        acc.add(power_term(c - a, e));
        if d.is_finite() {
            acc.add(-power_term(d - a, e));
        }
    }
    acc.add(-power_term(c - b, e));
    if d.is_finite() {
        acc.add(power_term(d - b, e));
    }
    Ok(acc.value() / (alpha * e))
}

/// ∫_A ∫_B |x − y|^{−1−α} for disjoint interval sets.
fn interaction_1d<T: Real>(a: &IntervalSet<T>, b: &IntervalSet<T>, alpha: T) -> Result<T> {
    let mut acc = CompensatedSum::new();
    for &i in a.intervals() {
        for &k in b.intervals() {
            let v = if i.1 <= k.0 {
                ordered_pair(i, k, alpha)?
            } else {
                ordered_pair(k, i, alpha)?
            };
            acc.add(v);
        }
    }
    Ok(acc.value())
}

/// The four pieces Ω∩E, Ω\E, Ω^c∩E, Ω^c\E of a 1D configuration.
fn pieces_1d<T: Real>(e: &IntervalSet<T>, omega: &IntervalSet<T>) -> [IntervalSet<T>; 4] {
    let oc = omega.complement();
    [
        omega.intersect(e),
        omega.difference(e),
        oc.intersect(e),
        oc.difference(e),
    ]
}

fn perimeter_1d_exact<T: Real>(e: &IntervalSet<T>, alpha: T, omega: &IntervalSet<T>) -> Result<PerimeterBreakdown<T>> {
    let [in_e, out_e, ext_in, ext_out] = pieces_1d(e, omega);
    let inner = T::lit(2.0) * interaction_1d(&in_e, &out_e, alpha)?;
    let cross = interaction_1d(&in_e, &ext_out, alpha)? + interaction_1d(&out_e, &ext_in, alpha)?;
    Ok(PerimeterBreakdown { inner, cross })
}

/// ∫_A (∫_B |x − y|^{−1−α} dy) dx with the outer integral done numerically.
fn interaction_1d_quadrature<T: Real>(a: &IntervalSet<T>, b: &IntervalSet<T>, alpha: T) -> Result<T> {
    let mut acc = CompensatedSum::new();
    let decay = T::one() + alpha;
    for &(p, q) in a.intervals() {
        if b.is_empty() {
            continue;
        }
        let reaches = |end: T| b.intervals().iter().any(|&(c, d)| c == end || d == end);
        let unbounded_b = !b.is_bounded();
        if (p.is_infinite() || q.is_infinite()) && unbounded_b {
            // Check the specific facing configuration through the exact path.
            for &k in b.intervals() {
                let i = (p, q);
                if i.1 <= k.0 {
                    ordered_pair(i, k, alpha)?;
                } else {
                    ordered_pair(k, i, alpha)?;
                }
            }
        }
        let ap = if reaches(p) { alpha } else { T::zero() };
        let aq = if reaches(q) { alpha } else { T::zero() };
        let v = integrate_interval(p, q, ap, aq, decay, &|anchor, off| {
            let mut s = CompensatedSum::new();
            for &(c, d) in b.intervals() {
                s.add(interval_kernel_mass(c, d, anchor, off, alpha));
            }
            s.value()
        });
        acc.add(v);
    }
    Ok(acc.value())
}

/// P_α for interval sets with the outer integral evaluated by quadrature
/// instead of antiderivatives; an independent check of the exact path.
pub fn frac_perimeter_quadrature_1d<T: Real>(
    e: &IntervalSet<T>,
    alpha: T,
    w: &Window<T>,
) -> Result<PerimeterBreakdown<T>> {
    crate::constants::check_alpha(alpha)?;
    let omega = w.as_intervals()?;
    let [in_e, out_e, ext_in, ext_out] = pieces_1d(e, &omega);
    let inner = interaction_1d_quadrature(&in_e, &out_e, alpha)? + interaction_1d_quadrature(&out_e, &in_e, alpha)?;
    let cross = interaction_1d_quadrature(&in_e, &ext_out, alpha)? + interaction_1d_quadrature(&out_e, &ext_in, alpha)?;
    Ok(PerimeterBreakdown { inner, cross })
}

/// Pieces of the boundaries of Ω∩E, Ω\E, Ω^c∩E and Ω^c\E (regions on the
/// left of each segment).
struct Boundaries<T> {
    in_e: Vec<Segment<T>>,
    out_e: Vec<Segment<T>>,
    ext_in: Vec<Segment<T>>,
    ext_out: Vec<Segment<T>>,
}

fn boundaries_2d<T: Real>(e: &PolySet<T>, omega: Option<&PolySet<T>>) -> Boundaries<T> {
    let de = e.edges();
    let rev = |v: Vec<Segment<T>>| v.into_iter().map(|s| s.reversed()).collect::<Vec<_>>();
    match omega {
        None => Boundaries {
            in_e: de.clone(),
            out_e: rev(de),
            ext_in: Vec::new(),
            ext_out: Vec::new(),
        },
        Some(o) => {
            let dom = o.edges();
            let clip = |segs: &[Segment<T>], region: &PolySet<T>, inside: bool| {
                segs.iter()
                    .flat_map(|s| clip_segment(s, region, inside))
                    .collect::<Vec<_>>()
            };
            let e_in_o = clip(&de, o, true);
            let e_out_o = clip(&de, o, false);
            let o_in_e = clip(&dom, e, true);
            let o_out_e = clip(&dom, e, false);
            Boundaries {
                in_e: [e_in_o.clone(), o_in_e.clone()].concat(),
                out_e: [rev(e_in_o), o_out_e.clone()].concat(),
                ext_in: [e_out_o.clone(), rev(o_in_e)].concat(),
                ext_out: [rev(e_out_o), rev(o_out_e)].concat(),
            }
        }
    }
}

/// ∫_A ∫_B |x − y|^{−2−α} for disjoint planar sets given by their
/// boundaries: −α^{−2} Σ_e Σ_f (ν_e·ν_f) ∫_e ∫_f |x − y|^{−α}.
fn interaction_2d<T: Real>(a: &[Segment<T>], b: &[Segment<T>], alpha: T) -> T {
    let parts: Vec<T> = a
        .par_iter()
        .map(|e| {
            let ne = e.outward_normal();
            let tau = e.tangent();
            let mut acc = CompensatedSum::new();
            for f in b {
                let c = dot(ne, f.outward_normal());
                if c == T::zero() {
                    continue;
                }
                let v = tanh_sinh(e.length(), |s, r| {
                    let x = if s <= r {
                        [e.a[0] + s * tau[0], e.a[1] + s * tau[1]]
                    } else {
                        [e.b[0] - r * tau[0], e.b[1] - r * tau[1]]
                    };
                    let (d, t0, t1, _) = edge_frame(f, x);
                    edge_power_integral(d, t0, t1, alpha)
                });
                acc.add(c * v);
            }
            acc.value()
        })
        .collect();
    let mut acc = CompensatedSum::new();
    acc.extend(parts);
    -acc.value() / (alpha * alpha)
}

fn perimeter_2d<T: Real>(e: &PolySet<T>, alpha: T, w: &Window<T>) -> Result<PerimeterBreakdown<T>> {
    let omega = w.as_polygon()?;
    let b = boundaries_2d(e, omega.as_ref());
    let inner = T::lit(2.0) * interaction_2d(&b.in_e, &b.out_e, alpha);
    let cross = if omega.is_some() {
        interaction_2d(&b.in_e, &b.ext_out, alpha) + interaction_2d(&b.out_e, &b.ext_in, alpha)
    } else {
        T::zero()
    };
    Ok(PerimeterBreakdown { inner, cross })
}

/// Relative fractional perimeter P_α(E; Ω), split into its inner and cross
/// parts.
pub fn frac_perimeter<T: Real>(e: SetInput<'_, T>, alpha: T, w: &Window<T>) -> Result<PerimeterBreakdown<T>> {
    crate::constants::check_alpha(alpha)?;
    match e {
        SetInput::Intervals(s) => {
            if s.is_empty() {
                return Ok(PerimeterBreakdown::zero());
            }
            perimeter_1d_exact(s, alpha, &w.as_intervals()?)
        }
        SetInput::Polygons(p) => {
            if p.rings().is_empty() {
                return Ok(PerimeterBreakdown::zero());
            }
            perimeter_2d(p, alpha, w)
        }
    }
}

/// Local constant of the 2D diagonal cell: (2/π)∫_{cell} |z|^{−1−α} dz.
fn diagonal_cell_2d<T: Real>(h: T, alpha: T) -> T {
    let e = alpha - T::one();
    let angular = gauss_panels(16, T::zero(), T::FRAC_PI_4(), 1, |th| th.cos().powf(e));
    T::lit(2.0) / T::PI() * T::lit(8.0) / (T::one() - alpha) * (h * T::lit(0.5)).powf(T::one() - alpha) * angular
}

/// Gagliardo seminorm [f]_{W^{α,1}} of a compactly supported field.
pub fn sobolev_seminorm<T: Real>(f: &ScalarField<T>, alpha: T) -> Result<T> {
    crate::constants::check_alpha(alpha)?;
    let spec = *f.spec();
    if f.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    if f.values().iter().all(|v| *v == T::zero()) {
        return Ok(T::zero());
    }
    let n = spec.n();
    let h = spec.h();
    let weights = Window::Whole.node_weights(&spec)?;
    let e = -(T::from_usize_lossy(n) + alpha) * T::lit(0.5);
    let vals = f.values();
    let grad = local_gradient(f);
    let gmag = grad.magnitude();
    // Lattice correction of the singular diagonal (see the lattice module).
    let diag = if n == 1 {
        -lattice_zeta(1, alpha)? * h.powf(T::one() - alpha)
    } else {
        diagonal_cell_2d(h, alpha)
    };
    let inv_h2 = (h * h).recip();
    let pts: Vec<([usize; 2], usize)> = (0..spec.len()).map(|j| (spec.axis_index(j), j)).collect();
    let rows: Vec<T> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let ii = spec.axis_index(i);
            let fi = vals[i];
            let mut acc = CompensatedSum::new();
            for &(jj, j) in &pts {
                if j == i {
                    continue;
                }
                let df = (vals[j] - fi).abs();
                if df == T::zero() {
                    continue;
                }
                let dx = T::from_isize_lossy(jj[0] as isize - ii[0] as isize);
                let dy = T::from_isize_lossy(jj[1] as isize - ii[1] as isize);
                acc.add(weights[j] * df * ((dx * dx + dy * dy) * (h * h)).powf(e));
            }
            let _ = inv_h2;
            acc.add(diag * gmag[i]);
            weights[i] * acc.value()
        })
        .collect();
    let mut total = CompensatedSum::new();
    total.extend(rows);
    // Pairs with one point outside the box, where f vanishes.
    let l = spec.half_width();
    if n == 1 {
        for (i, v) in vals.iter().enumerate() {
            if *v != T::zero() {
                let y = spec.coord(i);
                let ext = ((l - y).powf(-alpha) + (l + y).powf(-alpha)) / alpha;
                total.add(T::lit(2.0) * weights[i] * v.abs() * ext);
            }
        }
    } else {
        let abs: Vec<T> = vals.iter().map(|v| v.abs()).collect();
        let src = PointSources::new(&spec, &abs);
        let sigma = -alpha;
        // Σ_j h²|f_j| |x − y_j|^{−2−α} is I_σ-shaped with σ = −α; reuse the
        // direct sum with unit constant.
        let ext = exterior_of_box(2, l, T::lit(2.0) + alpha, &|x| src.riesz_at(T::one(), sigma, x))?;
        total.add(T::lit(2.0) * ext);
    }
    Ok(total.value())
}

/// ‖∇^α f‖_{L^p(Ω)}. For Ω = ℝ^n the part outside the grid box is added.
pub fn frac_gradient_lp<T: Real>(
    f: &ScalarField<T>,
    order: &FracOrder<T>,
    p: Exponent,
    w: &Window<T>,
    q: &QuadParams,
) -> Result<T> {
    let g = frac_gradient(f, order, q)?;
    gradient_lp_with(f, &g, order, p, w)
}

/// As `frac_gradient_lp`, reusing an already computed ∇^α f.
pub fn gradient_lp_with<T: Real>(
    f: &ScalarField<T>,
    g: &VectorField<T>,
    order: &FracOrder<T>,
    p: Exponent,
    w: &Window<T>,
) -> Result<T> {
    let inside = lp_norm(g, p, w)?;
    if !w.is_whole() || p == Exponent::Infinity {
        return Ok(inside);
    }
    let ext = exterior_gradient_power(f, order, p)?;
    Ok(match p {
        Exponent::One => inside + ext,
        _ => (inside * inside + ext).sqrt(),
    })
}

/// Zeros of a continuous function on (a, b), possibly unbounded, located by
/// sampling and bisection.
fn sign_changes<T: Real>(a: T, b: T, g: &dyn Fn(T) -> T) -> Vec<T> {
    let map = |t: T| -> T {
        match (a.is_finite(), b.is_finite()) {
            (true, true) => a + (b - a) * t,
            (true, false) => a + t / (T::one() - t),
            (false, true) => b - (T::one() - t) / t,
            (false, false) => (T::PI() * (t - T::lit(0.5))).tan(),
        }
    };
    let samples = 400usize;
    let ts: Vec<T> = (1..samples)
        .map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(samples))
        .collect();
    let mut roots = Vec::new();
    for w in ts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (glo, ghi) = (g(map(lo)), g(map(hi)));
        if glo == T::zero() {
            roots.push(map(lo));
            continue;
        }
        if glo.signum() == ghi.signum() || ghi == T::zero() {
            continue;
        }
        let slo = glo.signum();
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(map(mid)).signum() == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(map((lo + hi) * T::lit(0.5)));
    }
    roots
}

/// A one-dimensional density in closed form, evaluated at anchor + offset.
/// It may grow like |x − s|^{−α} at the points of `singular` and have
/// derivative kinks at `kinks`; at infinity it decays like |x|^{−1−α}.
pub(crate) struct Density1d<'a, T> {
    pub eval: &'a (dyn Fn(T, T) -> T + Sync),
    pub singular: Vec<T>,
    pub kinks: Vec<T>,
    pub alpha: T,
}

/// ∫_Ω weight·|density| (or the signed integral). The weight must be
/// smooth on Ω.
pub(crate) fn integrate_density_1d<T: Real>(
    d: &Density1d<'_, T>,
    omega: &IntervalSet<T>,
    weight: &(dyn Fn(T) -> T + Sync),
    absolute: bool,
) -> T {
    let alpha = d.alpha;
    let is_singular = |x: T| d.singular.iter().any(|&s| s == x);
    let mut acc = CompensatedSum::new();
    for &(p, q) in omega.intervals() {
        let mut cuts = vec![p];
        cuts.extend(d.singular.iter().chain(&d.kinks).copied().filter(|&x| x > p && x < q));
        cuts.push(q);
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("ordered cuts"));
        cuts.dedup();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut pts = vec![a];
            if absolute {
                let g = |x: T| (d.eval)(x, T::zero());
                pts.extend(sign_changes(a, b, &g));
            }
            pts.push(b);
            for s in pts.windows(2) {
                let (u, v) = (s[0], s[1]);
                if !(v > u) {
                    continue;
                }
                let au = if is_singular(u) { alpha } else { T::zero() };
                let av = if is_singular(v) { alpha } else { T::zero() };
                let val = integrate_interval(u, v, au, av, T::one() + alpha, &|anchor, off| {
                    let x = (d.eval)(anchor, off);
                    let x = if absolute { x.abs() } else { x };
                    if x == T::zero() {
                        x
                    } else {
                        x * weight(anchor + off)
                    }
                });
                acc.add(val);
            }
        }
    }
    acc.value()
}

/// ∫_Ω |∇^α χ_E| for a union of intervals, from the closed-form density.
fn indicator_variation_1d<T: Real>(e: &IntervalSet<T>, order: &FracOrder<T>, omega: &IntervalSet<T>) -> Result<T> {
    if !e.is_bounded() && !omega.is_bounded() {
        return Err(FracError::Divergent(
            "the variation of an unbounded set over an unbounded window is infinite".into(),
        ));
    }
    let (mu, alpha) = (order.mu(), order.alpha());
    let eval = |anchor: T, off: T| indicator_gradient_1d_at(e, mu, alpha, anchor, off);
    let d = Density1d {
        eval: &eval,
        singular: e.endpoints(),
        kinks: Vec::new(),
        alpha,
    };
    Ok(integrate_density_1d(&d, omega, &|_| T::one(), true))
}

/// ∇^α of the hat function with peak 1 at `c` and half-width `r`, at
/// x = anchor + offset.
pub(crate) fn hat_gradient_1d_at<T: Real>(c: T, r: T, mu: T, alpha: T, anchor: T, offset: T) -> T {
    // ∇^α f = (μ/α) ∫ |x − y|^{−α} f'(y) dy with f' = ±1/r on the two halves.
    let e = T::one() - alpha;
    let phi = |p: T| {
        let t = (p - anchor) - offset;
        t.signum() * t.abs().powf(e) / e
    };
    let (l, m, rr) = (phi(c - r), phi(c), phi(c + r));
    mu / alpha * ((m - l) - (rr - m)) / r
}

/// ω_{n,α} = ‖∇^α χ_{B_1}‖_{L¹(ℝ^n)}.
pub fn unit_ball_variation<T: Real>(n: usize, alpha: T) -> Result<T> {
    let order = FracOrder::new(n, alpha)?;
    match n {
        1 => indicator_variation_1d(
            &IntervalSet::interval(-T::one(), T::one())?,
            &order,
            &IntervalSet::whole_line(),
        ),
        2 => {
            // |∇^α χ_B|(ρ) = μ/(1+α) |∮ ν(y)|y − x|^{−1−α} ds| at |x| = ρ. The
            // angular integrand peaks at θ = 0 with width |1 − ρ|, so the
            // angle range is cut into panels growing geometrically from it.
            let mu = order.mu();
            let p = (T::one() + alpha) * T::lit(0.5);
            let rule = GaussRule::new(12);
            let far = T::lit(1e3);
            let radial = |rho: T, gap: T| {
                if rho > far {
                    return T::PI() * mu * rho.powf(-T::lit(2.0) - alpha);
                }
                // θ = g·u with g = |1 − ρ| keeps the scaled integrand O(1).
                let g = gap.abs().max(T::min_positive_value());
                let f = |u: T| {
                    let half = (g * u * T::lit(0.5)).sin() / g;
                    (g * u).cos() * (T::one() + T::lit(4.0) * rho * half * half).powf(-p)
                };
                let end = T::PI() / g;
                let mut acc = CompensatedSum::new();
                let mut lo = T::zero();
                let mut hi = T::one().min(end);
                loop {
                    acc.add(rule.integrate(lo, hi, f));
                    if hi >= end {
                        break;
                    }
                    lo = hi;
                    hi = (hi * T::lit(2.0)).min(end);
                }
                let scale = g.powf(-alpha);
                T::lit(2.0) * mu / (T::one() + alpha) * acc.value().abs() * scale
            };
            let g = |anchor: T, off: T| {
                let rho = anchor + off;
                T::TAU() * rho * radial(rho, (T::one() - anchor) - off)
            };
            let inside = integrate_interval(T::zero(), T::one(), T::zero(), alpha, T::lit(2.0) + alpha, &g);
            let outside = integrate_interval(T::one(), T::infinity(), alpha, T::zero(), T::lit(2.0) + alpha, &g);
            Ok(inside + outside)
        }
        _ => Err(FracError::Domain(format!("dimension {n} is not supported"))),
    }
}

/// A side of a trapezoid in a vertical slab: the line through (x0, y0) with
/// the given slope, either a cut or a horizontal box side.
#[derive(Debug, Clone, Copy)]
struct Side<T> {
    x0: T,
    y0: T,
    slope: T,
    /// Index of the cut and the y component of its normal.
    cut: Option<(usize, T)>,
}

impl<T: Real> Side<T> {
    fn at(&self, x: T) -> T {
        self.y0 + (x - self.x0) * self.slope
    }

    /// Signed distance of (x, at(x) + dy) from the cut, measured as in
    /// [`edge_frame`].
    fn exact(&self, dy: T) -> Option<(usize, T)> {
        self.cut.map(|(k, ny)| (k, -dy * ny))
    }
}

/// Integrand of [`box_integral`]: the point and, for cuts it lies very close
/// to, the exact signed distance computed from the quadrature offset.
type BoxIntegrand<'a, T> = dyn Fn(Point<T>, &[(usize, T)]) -> T + Sync + 'a;

/// ∫ over the box [lo, hi] of a function that may be singular on the
/// segments `cuts` (integrable like dist^{−α}), by vertical slab
/// decomposition into trapezoids whose sides are the cuts.
fn box_integral<T: Real>(
    cuts: &[Segment<T>],
    lo: Point<T>,
    hi: Point<T>,
    alpha: T,
    f: &BoxIntegrand<'_, T>,
) -> Result<T> {
    let rect = PolySet::rectangle(lo, hi)?;
    let inside: Vec<(usize, Segment<T>)> = cuts
        .iter()
        .enumerate()
        .flat_map(|(k, s)| clip_segment(s, &rect, true).into_iter().map(move |c| (k, c)))
        .collect();
    let tol = T::epsilon() * T::lit(64.0) * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mut xs = vec![lo[0], hi[0]];
    for (_, s) in &inside {
        for p in [s.a, s.b] {
            if p[0] > lo[0] + tol && p[0] < hi[0] - tol {
                xs.push(p[0]);
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let slabs: Vec<(T, T)> = xs
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|(a, b)| *b - *a > tol)
        .collect();
    let vertical_at = |x: T| -> Vec<(usize, T)> {
        inside
            .iter()
            .filter(|(_, s)| (s.a[0] - s.b[0]).abs() <= tol && (s.a[0] - x).abs() <= tol)
            .map(|(k, _)| (*k, cuts[*k].outward_normal()[0]))
            .collect()
    };
    let parts: Vec<T> = slabs
        .par_iter()
        .map(|&(xa, xb)| {
            let xm = (xa + xb) * T::lit(0.5);
            let (left, right) = (vertical_at(xa), vertical_at(xb));
            let mut sides: Vec<Side<T>> = inside
                .iter()
                .filter(|(_, s)| {
                    let (sx0, sx1) = (s.a[0].min(s.b[0]), s.a[0].max(s.b[0]));
                    sx1 - sx0 > tol && sx0 <= xa + tol && sx1 >= xb - tol
                })
                .map(|(k, s)| Side {
                    x0: s.a[0],
                    y0: s.a[1],
                    slope: (s.b[1] - s.a[1]) / (s.b[0] - s.a[0]),
                    cut: Some((*k, cuts[*k].outward_normal()[1])),
                })
                .collect();
            let flat = |y: T| Side {
                x0: xm,
                y0: y,
                slope: T::zero(),
                cut: None,
            };
            sides.push(flat(lo[1]));
            sides.push(flat(hi[1]));
            sides.sort_by(|a, b| a.at(xm).partial_cmp(&b.at(xm)).expect("finite"));
            let mut acc = CompensatedSum::new();
            for pair in sides.windows(2) {
                let (bot, top) = (pair[0], pair[1]);
                let ab = if bot.cut.is_some() { alpha } else { T::zero() };
                let at = if top.cut.is_some() { alpha } else { T::zero() };
                let v = integrate_interval_with(Precision::Coarse, xa, xb, alpha, alpha, T::lit(2.0), &|xa_, xo| {
                    let x = xa_ + xo;
                    let (y0, y1) = (bot.at(x), top.at(x));
                    if !(y1 > y0) {
                        return T::zero();
                    }
                    let walls = if xa_ == xa { &left } else { &right };
                    integrate_interval_with(Precision::Coarse, y0, y1, ab, at, T::lit(2.0), &|ya, yo| {
                        let mut exact: Vec<(usize, T)> = walls.iter().map(|&(k, nx)| (k, -xo * nx)).collect();
                        let side = if ya == y0 { bot } else { top };
                        exact.extend(side.exact(yo));
                        let v = f([x, ya + yo], &exact);
                        if v.is_finite() {
                            v
                        } else {
                            T::zero()
                        }
                    })
                });
                acc.add(v);
            }
            acc.value()
        })
        .collect();
    let mut acc = CompensatedSum::new();
    acc.extend(parts);
    Ok(acc.value())
}

/// ∫_Ω |∇^α χ_E| for a polygonal set; Ω a box or the whole plane.
fn polygon_variation<T: Real>(e: &PolySet<T>, order: &FracOrder<T>, w: &Window<T>) -> Result<T> {
    let (mu, alpha) = (order.mu(), order.alpha());
    let edges = e.edges();
    let (blo, bhi) = e.bounding_box();
    let far = T::lit(1e3) * (bhi[0] - blo[0]).max(bhi[1] - blo[1]);
    let centre = e.centroid();
    let area = e.area();
    let dens = |x: Point<T>, exact: &[(usize, T)]| {
        let r = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)).sqrt();
        if r > far {
            // The boundary sum cancels badly here; the first moment about
            // the centroid vanishes, so the monopole term is accurate to
            // O((diam/r)²).
            return mu * area * r.powf(-T::lit(2.0) - alpha);
        }
        let g = segments_gradient_with(&edges, x, alpha, exact);
        mu * (g[0] * g[0] + g[1] * g[1]).sqrt()
    };
    match w {
        Window::Rect { lo, hi } => box_integral(&edges, *lo, *hi, alpha, &dens),
        Window::Whole => {
            let reach = [blo[0].abs(), blo[1].abs(), bhi[0].abs(), bhi[1].abs()]
                .into_iter()
                .fold(T::zero(), T::max);
            let l = T::lit(2.0) * reach;
            let inner = box_integral(&edges, [-l, -l], [l, l], alpha, &dens)?;
            let outer = exterior_of_box(2, l, T::lit(2.0) + alpha, &|x| dens(x, &[]))?;
            Ok(inner + outer)
        }
        _ => Err(FracError::Geometry(
            "variations of polygonal sets are evaluated on boxes or the whole plane".into(),
        )),
    }
}

/// Fractional variation |D^α f|(Ω) = ∫_Ω |∇^α f| for fields and sets.
pub fn frac_variation<T: Real>(
    input: VariationInput<'_, T>,
    order: &FracOrder<T>,
    w: &Window<T>,
    q: &QuadParams,
) -> Result<T> {
    match input {
        VariationInput::Field(f) => {
            if f.values().iter().all(|v| *v == T::zero()) {
                return Ok(T::zero());
            }
            frac_gradient_lp(f, order, Exponent::One, w, q)
        }
        VariationInput::Intervals(e) => {
            if order.n() != 1 {
                return Err(FracError::Domain("interval sets need a one-dimensional order".into()));
            }
            if e.is_empty() {
                return Ok(T::zero());
            }
            indicator_variation_1d(e, order, &w.as_intervals()?)
        }
        VariationInput::Polygons(e) => {
            if order.n() != 2 {
                return Err(FracError::Domain("polygonal sets need a two-dimensional order".into()));
            }
            if e.rings().is_empty() {
                return Ok(T::zero());
            }
            polygon_variation(e, order, w)
        }
    }
}

/// Settings of the projected gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualOptions {
    /// Step size; by default 0.5 over the operator norm estimate.
    pub step: Option<f64>,
    pub iters: usize,
    /// Seed of the random start of the power iteration.
    pub seed: u64,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            step: None,
            iters: 500,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResult<T> {
    /// Best objective ∫ f div^α φ found.
    pub value: T,
    /// Objective after each iteration.
    pub history: Vec<T>,
    /// True when the objective improved by less than 1e−9 over the last 50
    /// iterations before the budget ran out.
    pub stagnated: bool,
    pub step: T,
    pub operator_norm: T,
}

/// Lower bound for |D^α f|(Ω) from the dual definition: projected gradient
/// ascent of φ ↦ ∫ f div^α φ over grid fields supported in Ω with |φ| ≤ 1.
pub fn dual_variation_lower_bound<T: Real>(
    f: &ScalarField<T>,
    order: &FracOrder<T>,
    w: &Window<T>,
    opt: &DualOptions,
    q: &QuadParams,
) -> Result<DualResult<T>> {
    let spec = *f.spec();
    if f.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    let n = spec.n();
    let mask: Vec<bool> = (0..spec.len()).map(|i| w.contains(spec.node(i), n)).collect();
    let weights = Window::Whole.node_weights(&spec)?;
    let open = Some(spec.half_width() * T::lit(2.0));
    let objective = |phi: &VectorField<T>| -> Result<T> {
        let d = frac_divergence(phi, order, q)?;
        Ok(weighted_sum(&f.product(&d)?.into_values(), &weights))
    };
    let project = |comps: &mut [Vec<T>]| {
        for i in 0..spec.len() {
            if !mask[i] {
                for c in comps.iter_mut() {
                    c[i] = T::zero();
                }
                continue;
            }
            let r = comps.iter().map(|c| c[i] * c[i]).fold(T::zero(), |a, b| a + b).sqrt();
            if r > T::one() {
                for c in comps.iter_mut() {
                    c[i] = c[i] / r;
                }
            }
        }
    };
    let field = |comps: Vec<Vec<T>>| VectorField::new(spec, comps, open);
    // Exact gradient of the linear objective: the transpose of the discrete
    // divergence applied to the weighted samples of f.
    let wf = ScalarField::new(
        spec,
        f.values().iter().zip(&weights).map(|(a, b)| *a * *b).collect(),
        f.support_radius(),
    )?;
    let transpose = divergence_transpose(&wf, order, q)?;
    // Operator norm of div^α by power iteration on div^α (div^α)^T.
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let mut s: Vec<T> = (0..spec.len())
        .map(|i| {
            if mask[i] {
                T::lit(rng.gen::<f64>() - 0.5)
            } else {
                T::zero()
            }
        })
        .collect();
    let mut norm = T::zero();
    for _ in 0..20 {
        let len = s.iter().map(|v| *v * *v).fold(T::zero(), |a, b| a + b).sqrt();
        if len == T::zero() {
            break;
        }
        s.iter_mut().for_each(|v| *v = *v / len);
        let sf = ScalarField::new(spec, s.clone(), open)?;
        let mut t = divergence_transpose(&sf, order, q)?.components().to_vec();
        for c in t.iter_mut() {
            for (i, v) in c.iter_mut().enumerate() {
                if !mask[i] {
                    *v = T::zero();
                }
            }
        }
        let d = frac_divergence(&field(t)?, order, q)?;
        s = d.into_values();
        norm = s.iter().map(|v| *v * *v).fold(T::zero(), |a, b| a + b).sqrt().sqrt();
    }
    let step = match opt.step {
        Some(v) => T::lit(v),
        None if norm > T::zero() => T::lit(0.5) / norm,
        None => T::one(),
    };
    let mut comps = vec![vec![T::zero(); spec.len()]; n];
    let mut best = objective(&field(comps.clone())?)?;
    let mut history = Vec::with_capacity(opt.iters);
    let mut stagnated = false;
    for k in 0..opt.iters {
        // Ascent along the gradient in the weighted inner product.
        for (c, g) in comps.iter_mut().zip(transpose.components()) {
            for ((v, d), wi) in c.iter_mut().zip(g).zip(&weights) {
                if *wi > T::zero() {
                    *v = *v + step * *d / *wi;
                }
            }
        }
        project(&mut comps);
        let val = objective(&field(comps.clone())?)?;
        if val > best {
            best = val;
        }
        history.push(val);
        if k >= 50 {
            let prev = history[k - 50];
            if (val - prev).abs() < T::lit(1e-9) * val.abs().max(T::one()) {
                stagnated = true;
                break;
            }
        }
    }
    Ok(DualResult {
        value: best,
        history,
        stagnated,
        step,
        operator_norm: norm,
    })
}

/// (div^α)^T g: the transpose of the discrete fractional divergence.
fn divergence_transpose<T: Real>(g: &ScalarField<T>, order: &FracOrder<T>, q: &QuadParams) -> Result<VectorField<T>> {
    // div^α φ = μ[h^{−α} Σ K(x_j − x_i)·φ_j + c·div_h φ]; K is odd, so the
    // far part transposes to minus the far part of the gradient, which is
    // frac_gradient with the near correction removed.
    let spec = *g.spec();
    let full = frac_gradient(g, order, q)?;
    let local = local_gradient(g);
    let coef = crate::kernels::near_coefficient(&spec, order.alpha(), q)?;
    let lt = local_divergence_transpose(g);
    let mu = order.mu();
    let comps = (0..spec.n())
        .map(|c| {
            (0..spec.len())
                .map(|i| {
                    let far = full.component(c)[i] - mu * coef * local.component(c)[i];
                    -far + mu * coef * lt.component(c)[i]
                })
                .collect()
        })
        .collect();
    VectorField::new(spec, comps, None)
}

/// Outcome of the one-dimensional equality characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityVerdict {
    Equality,
    Strict,
}

/// Decide whether ‖∇^α χ_E‖_{L¹(Ω)} = μ tilde P_α(E; Ω) holds. Equality
/// holds iff a.e. point of Ω∩E sees only E on one side and a.e. point of
/// Ω\E sees no E on one side.
pub fn equality_classifier_1d<T: Real>(e: &IntervalSet<T>, w: &Window<T>) -> Result<EqualityVerdict> {
    let omega = w.as_intervals()?;
    let ivs = e.intervals();
    if ivs.is_empty() {
        return Ok(EqualityVerdict::Equality);
    }
    // E ⊇ (−∞, left) and E ⊇ (right, ∞).
    let left = if ivs[0].0 == T::neg_infinity() {
        ivs[0].1
    } else {
        T::neg_infinity()
    };
    let last = ivs[ivs.len() - 1];
    let right = if last.1 == T::infinity() { last.0 } else { T::infinity() };
    let (e_min, e_max) = (ivs[0].0, last.1);
    let measure_in = |set: &IntervalSet<T>, a: T, b: T| -> T {
        if !(b > a) {
            return T::zero();
        }
        set.intersect(&IntervalSet::new([(a, b)]).expect("nonempty")).measure()
    };
    let bad_in = measure_in(&omega.intersect(e), left, right);
    let bad_out = measure_in(&omega.difference(e), e_min, e_max);
    Ok(if bad_in > T::zero() || bad_out > T::zero() {
        EqualityVerdict::Strict
    } else {
        EqualityVerdict::Equality
    })
}

/// Random smooth fields for tests and experiments: a sum of bumps with
/// seeded centres, radii and heights, supported in the centred ball of
/// radius `reach`.
pub fn random_bumps<T: Real>(
    spec: &crate::grid::GridSpec<T>,
    count: usize,
    reach: T,
    seed: u64,
) -> Result<ScalarField<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n();
    let mut total = ScalarField::zeros(*spec);
    for _ in 0..count {
        let radius = reach * T::lit(rng.gen_range(0.25..0.5));
        let room = reach - radius;
        let mut c = [T::zero(); 2];
        for ck in c.iter_mut().take(n) {
            *ck = room * T::lit(rng.gen_range(-0.7..0.7));
        }
        let height = T::lit(rng.gen_range(0.5..1.5));
        let b = crate::grid::make_bump(spec, c, radius, height)?;
        total = total.combine(T::one(), &b, T::one())?;
    }
    ScalarField::new(*spec, total.into_values(), Some(reach))
}
