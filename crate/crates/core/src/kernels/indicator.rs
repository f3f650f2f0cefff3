//! Fractional gradients and perimeter densities of indicator functions.
//!
//! In 1D everything reduces to antiderivatives of |x − y|^{−1−α}. In 2D the
//! divergence theorem turns area integrals over a polygon into edge
//! integrals of (d² + t²)^{−p/2}, which are evaluated to near machine
//! precision.

use rayon::prelude::*;

use crate::constants::FracOrder;
use crate::error::{FracError, Result};
use crate::grid::{GridSpec, IntervalSet, PolySet, Segment, VectorField};
use crate::quadrature::gauss_panels;
use crate::scalar::{dot, sub, Point, Real};
use crate::sum::CompensatedSum;

use super::QuadParams;

/// Signed distance x − e computed as (anchor − e) + offset, exact when the
/// anchor coincides with e.
#[inline]
fn offset_from<T: Real>(anchor: T, offset: T, e: T) -> T {
    (anchor - e) + offset
}

/// ∫_a^b |x − y|^{−1−α} dy for x outside (a, b), with x = anchor + offset.
pub fn interval_kernel_mass<T: Real>(a: T, b: T, anchor: T, offset: T, alpha: T) -> T {
    let da = offset_from(anchor, offset, a).abs();
    let db = offset_from(anchor, offset, b).abs();
    let (near, far) = if da < db { (da, db) } else { (db, da) };
    if !far.is_finite() {
        return near.powf(-alpha) / alpha;
    }
    // near^{−α}(1 − (near/far)^α), without cancellation when x is far away.
    let r = (b - a) / far;
    near.powf(-alpha) * -(alpha * (-r).ln_1p()).exp_m1() / alpha
}

fn endpoint_term<T: Real>(e: T, anchor: T, offset: T, alpha: T) -> T {
    if e.is_finite() {
        offset_from(anchor, offset, e).abs().powf(-alpha)
    } else {
        T::zero()
    }
}

/// (μ/α)·Σ(|x − a|^{−α} − |x − b|^{−α}) at x = anchor + offset.
pub(crate) fn indicator_gradient_1d_at<T: Real>(e: &IntervalSet<T>, mu: T, alpha: T, anchor: T, offset: T) -> T {
    let mut acc = CompensatedSum::new();
    for &(a, b) in e.intervals() {
        acc.add(endpoint_term(a, anchor, offset, alpha) - endpoint_term(b, anchor, offset, alpha));
    }
    mu / alpha * acc.value()
}

/// Closed form of ∇^α χ_E(x) for a union of intervals.
pub fn closed_form_indicator_gradient<T: Real>(e: &IntervalSet<T>, order: &FracOrder<T>, x: T) -> Result<T> {
    if order.n() != 1 {
        return Err(FracError::Domain("closed form is one-dimensional".into()));
    }
    if e.is_endpoint(x) {
        return Err(FracError::Domain(format!("evaluation at the endpoint {x} of the set")));
    }
    Ok(indicator_gradient_1d_at(e, order.mu(), order.alpha(), x, T::zero()))
}

/// ∫_P sign(y − x)|y − x|^{−1−α} dy for a piece P = [p0, p1] not containing x.
fn signed_piece<T: Real>(p0: T, p1: T, x: T, alpha: T) -> T {
    let term = |d: T| if d.is_finite() { d.powf(-alpha) } else { T::zero() };
    if p0 >= x {
        (term(p0 - x) - term(p1 - x)) / alpha
    } else {
        -(term(x - p1) - term(x - p0)) / alpha
    }
}

/// ∇^α χ_E sampled on a 1D grid by product integration: the indicator is
/// replaced by its exact cell averages (sub-cell averages in cells that
/// contain an endpoint of E) and the kernel is integrated exactly over each
/// cell and over the exterior of the box.
pub fn frac_gradient_indicator_1d<T: Real>(
    e: &IntervalSet<T>,
    order: &FracOrder<T>,
    spec: &GridSpec<T>,
    q: &QuadParams,
) -> Result<VectorField<T>> {
    q.validate()?;
    if spec.n() != 1 || order.n() != 1 {
        return Err(FracError::Domain("interval indicators live on 1D grids".into()));
    }
    let alpha = order.alpha();
    let h = spec.h();
    let l = spec.half_width();
    let half = h * T::lit(0.5);
    let subdiv = 1usize << q.boundary_refine;
    let endpoints = e.endpoints();
    // (p0, p1, density, owning cell)
    let mut pieces: Vec<(T, T, T, usize)> = Vec::new();
    let mut own = vec![T::zero(); spec.m()];
    let density = |a: T, b: T| {
        let probe = IntervalSet::interval(a, b).expect("nonempty cell");
        e.intersect(&probe).measure() / (b - a)
    };
    for j in 0..spec.m() {
        let xj = spec.coord(j);
        let c0 = (xj - half).max(-l);
        let c1 = (xj + half).min(l);
        let cut = endpoints.iter().any(|&t| t > c0 && t < c1);
        own[j] = density(c0, c1);
        if cut {
            let w = (c1 - c0) / T::from_usize_lossy(subdiv);
            for s in 0..subdiv {
                let a = c0 + w * T::from_usize_lossy(s);
                let b = if s + 1 == subdiv { c1 } else { a + w };
                pieces.push((a, b, density(a, b), j));
            }
        } else {
            pieces.push((c0, c1, own[j], j));
        }
    }
    let outside = IntervalSet::new([(T::neg_infinity(), -l), (l, T::infinity())])?;
    for &(a, b) in outside.intersect(e).intervals() {
        pieces.push((a, b, T::one(), usize::MAX));
    }
    for &(a, b) in outside.difference(e).intervals() {
        pieces.push((a, b, T::zero(), usize::MAX));
    }
    let mu = order.mu();
    let values: Vec<T> = (0..spec.m())
        .into_par_iter()
        .map(|i| {
            let x = spec.coord(i);
            let chi = own[i];
            let mut acc = CompensatedSum::new();
            for &(a, b, rho, owner) in &pieces {
                if owner == i || rho == chi {
                    continue;
                }
                acc.add((rho - chi) * signed_piece(a, b, x, alpha));
            }
            mu * acc.value()
        })
        .collect();
    Ok(VectorField::from_components(*spec, vec![values]))
}

/// ∫_{t0}^{t1} (d² + t²)^{−p/2} dt, t0 ≤ t1.
pub(crate) fn edge_power_integral<T: Real>(d: T, t0: T, t1: T, p: T) -> T {
    let d = d.abs();
    let r = T::lit(4.0) * d;
    let mut acc = CompensatedSum::new();
    // |t| ≥ 4|d|: binomial series in (d/t)².
    let series = |a: T, b: T| -> T {
        // a < b, same sign, |a|, |b| ≥ 4|d| (b may be infinite)
        let (lo, hi) = if a >= T::zero() { (a, b) } else { (-b, -a) };
        if hi <= lo {
            return T::zero();
        }
        let one_minus_p = T::one() - p;
        if d == T::zero() {
            let far = if hi.is_finite() {
                hi.powf(one_minus_p)
            } else {
                T::zero()
            };
            return (lo.powf(one_minus_p) - far) / (p - T::one());
        }
        let mut coef = T::one();
        let mut total = T::zero();
        // (d/t)^{2k} is carried inside the powers so nothing overflows.
        let qlo = (d / lo).powi(2);
        let qhi = if hi.is_finite() { (d / hi).powi(2) } else { T::zero() };
        let mut plo = lo.powf(one_minus_p);
        let mut phi = if hi.is_finite() {
            hi.powf(one_minus_p)
        } else {
            T::zero()
        };
        for k in 0..40 {
            let kt = T::from_usize_lossy(k);
            let term = coef * (plo - phi) / (p + kt + kt - T::one());
            total = total + term;
            if term.abs() <= T::epsilon() * total.abs() * T::lit(0.01) {
                break;
            }
            coef = coef * (-p * T::lit(0.5) - kt) / (kt + T::one());
            plo = plo * qlo;
            phi = phi * qhi;
        }
        total
    };
    if t1 <= -r || t0 >= r || d == T::zero() {
        if d == T::zero() && t0 < T::zero() && t1 > T::zero() {
            if p >= T::one() {
                return T::infinity();
            }
            let e = T::one() - p;
            return ((-t0).powf(e) + if t1.is_finite() { t1.powf(e) } else { T::infinity() }) / e;
        }
        if d == T::zero() && (t0 == T::zero() || t1 == T::zero()) && p >= T::one() {
            return T::infinity();
        }
        return series(t0, t1);
    }
    if t0 < -r {
        acc.add(series(t0, -r));
    }
    if t1 > r {
        acc.add(series(r, t1));
    }
    let lo = t0.max(-r);
    let hi = t1.min(r);
    if hi > lo {
        let u0 = (lo / d).asinh();
        let u1 = (hi / d).asinh();
        let panels = ((u1 - u0).to_f64().unwrap_or(1.0).ceil() as usize).max(1);
        let e = T::one() - p;
        let v = gauss_panels(12, u0, u1, panels, |u| u.cosh().powf(e));
        acc.add(d.powf(e) * v);
    }
    acc.value()
}

/// Geometry of an edge seen from x: signed distance along the outward normal
/// (positive when x lies on the inner side) and the tangential range.
#[inline]
pub(crate) fn edge_frame<T: Real>(seg: &Segment<T>, x: Point<T>) -> (T, T, T, Point<T>) {
    let tau = seg.tangent();
    let nu = seg.outward_normal();
    let ax = sub(seg.a, x);
    let d = dot(ax, nu);
    let t0 = dot(ax, tau);
    (d, t0, t0 + seg.length(), nu)
}

/// ∮ ν Φ ds with Φ(z) = −|z|^{−1−α}/(1+α): the 2D fractional gradient of the
/// indicator of the region bounded by `segs`, without the factor μ.
pub(crate) fn segments_gradient<T: Real>(segs: &[Segment<T>], x: Point<T>, alpha: T) -> Point<T> {
    segments_gradient_with(segs, x, alpha, &[])
}

/// As [`segments_gradient`], with the signed distances to some edges
/// supplied exactly by the caller as (edge index, distance).
pub(crate) fn segments_gradient_with<T: Real>(
    segs: &[Segment<T>],
    x: Point<T>,
    alpha: T,
    exact: &[(usize, T)],
) -> Point<T> {
    let p = T::one() + alpha;
    let mut acc = [CompensatedSum::new(), CompensatedSum::new()];
    for (k, s) in segs.iter().enumerate() {
        let (mut d, t0, t1, nu) = edge_frame(s, x);
        if let Some(&(_, e)) = exact.iter().find(|(j, _)| *j == k) {
            d = e;
        }
        let i = edge_power_integral(d, t0, t1, p);
        acc[0].add(nu[0] * i);
        acc[1].add(nu[1] * i);
    }
    let c = -(T::one() + alpha).recip();
    [c * acc[0].value(), c * acc[1].value()]
}

/// ∫_A |y − x|^{−2−α} dy for x outside A, where A lies to the left of `segs`.
pub(crate) fn segments_density<T: Real>(segs: &[Segment<T>], x: Point<T>, alpha: T) -> T {
    let p = T::lit(2.0) + alpha;
    let mut acc = CompensatedSum::new();
    for s in segs {
        let (d, t0, t1, _) = edge_frame(s, x);
        if d == T::zero() {
            continue;
        }
        acc.add(d * edge_power_integral(d, t0, t1, p));
    }
    -acc.value() / alpha
}

fn on_boundary<T: Real>(segs: &[Segment<T>], x: Point<T>) -> bool {
    segs.iter().any(|s| {
        let (d, t0, t1, _) = edge_frame(s, x);
        d == T::zero() && t0 <= T::zero() && t1 >= T::zero()
    })
}

/// ∇^α χ_E(x) for a polygonal set, x not on ∂E.
pub fn polygon_indicator_gradient<T: Real>(e: &PolySet<T>, order: &FracOrder<T>, x: Point<T>) -> Result<Point<T>> {
    if order.n() != 2 {
        return Err(FracError::Domain("polygonal sets live in the plane".into()));
    }
    let edges = e.edges();
    if on_boundary(&edges, x) {
        return Err(FracError::Domain("evaluation point lies on the set boundary".into()));
    }
    let g = segments_gradient(&edges, x, order.alpha());
    Ok([order.mu() * g[0], order.mu() * g[1]])
}

/// ∫ |χ_E(y) − χ_E(x)| |y − x|^{−2−α} dy for a polygonal set, x not on ∂E.
pub fn polygon_perimeter_density<T: Real>(e: &PolySet<T>, alpha: T, x: Point<T>) -> Result<T> {
    let edges = e.edges();
    if on_boundary(&edges, x) {
        return Err(FracError::Domain("evaluation point lies on the set boundary".into()));
    }
    if e.contains(x) {
        let rev: Vec<Segment<T>> = edges.iter().map(Segment::reversed).collect();
        Ok(segments_density(&rev, x, alpha))
    } else {
        Ok(segments_density(&edges, x, alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;
    use approx::assert_relative_eq;

    #[test]
    fn edge_integral_at_tiny_distance() {
        // ∫_ℝ (d² + t²)^{−p/2} dt = d^{1−p} √π Γ((p−1)/2) / Γ(p/2).
        let p = 1.9_f64;
        let full = std::f64::consts::PI.sqrt() * crate::special::gamma_fn((p - 1.0) / 2.0).unwrap()
            / crate::special::gamma_fn(p / 2.0).unwrap();
        for d in [1e-3, 1e-8, 1e-12, 1e-30, 1e-100] {
            let tail = 2.0 * 1e3f64.powf(1.0 - p) / (p - 1.0);
            let v = edge_power_integral(d, -1e3, 1e3, p);
            assert_relative_eq!(v, d.powf(1.0 - p) * full - tail, max_relative = 1e-10);
        }
    }

    #[test]
    fn closed_form_examples() {
        let o = FracOrder::new(1, 0.5_f64).unwrap();
        let e = IntervalSet::interval(0.0, 1.0).unwrap();
        assert!(closed_form_indicator_gradient(&e, &o, 0.5).unwrap().abs() < 1e-15);
        let v = closed_form_indicator_gradient(&e, &o, 2.0).unwrap();
        assert_relative_eq!(v, o.mu() / 0.5 * (2.0_f64.powf(-0.5) - 1.0), max_relative = 1e-14);
        assert!(v < 0.0);
        let half = IntervalSet::interval(0.0, f64::INFINITY).unwrap();
        assert_relative_eq!(
            closed_form_indicator_gradient(&half, &o, -1.0).unwrap(),
            o.mu() / 0.5,
            max_relative = 1e-14
        );
        assert!(closed_form_indicator_gradient(&e, &o, 1.0).is_err());
    }

    #[test]
    fn edge_integral_against_adaptive_quadrature() {
        for &(d, t0, t1, p) in &[
            (0.3_f64, -2.0, 1.5, 1.5),
            (1e-3, 0.01, 3.0, 2.7),
            (2.0, -0.5, 0.5, 0.4),
            (1e-6, -1.0, 1.0, 0.5),
            (0.7, 5.0, 9.0, 1.2),
        ] {
            let exact = edge_power_integral(d, t0, t1, p);
            let mut brk = vec![t0, t1];
            if t0 < 0.0 && t1 > 0.0 {
                brk.insert(1, 0.0);
            }
            let mut reference = 0.0;
            for w in brk.windows(2) {
                reference += adaptive(w[0], w[1], 1e-14, 60, |t: f64| (d * d + t * t).powf(-p / 2.0)).unwrap();
            }
            assert_relative_eq!(exact, reference, max_relative = 1e-9);
        }
        let collinear = edge_power_integral(0.0_f64, -1.0, 2.0, 0.5);
        assert_relative_eq!(collinear, 2.0 * (1.0 + 2.0_f64.sqrt()), max_relative = 1e-14);
    }

    #[test]
    fn square_gradient_points_inward_from_outside() {
        let o = FracOrder::new(2, 0.5_f64).unwrap();
        let sq = PolySet::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let g = polygon_indicator_gradient(&sq, &o, [-0.5, 0.5]).unwrap();
        assert!(g[0] > 0.0);
        assert!(g[1].abs() < 1e-14);
        let c = polygon_indicator_gradient(&sq, &o, [0.5, 0.5]).unwrap();
        assert!(c[0].abs() < 1e-14 && c[1].abs() < 1e-14);
    }

    #[test]
    fn density_matches_direct_integral() {
        // x outside a unit square: ∫_E |y − x|^{−2−α} by nested quadrature.
        let alpha = 0.6_f64;
        let sq = PolySet::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let x = [-0.4, 0.3];
        let v = polygon_perimeter_density(&sq, alpha, x).unwrap();
        let reference = adaptive(0.0, 1.0, 1e-12, 40, |y0: f64| {
            adaptive(0.0, 1.0, 1e-13, 40, |y1: f64| {
                ((y0 - x[0]).powi(2) + (y1 - x[1]).powi(2)).powf(-(2.0 + alpha) / 2.0)
            })
            .unwrap()
        })
        .unwrap();
        assert_relative_eq!(v, reference, max_relative = 1e-9);
        // x inside: ∫_{E^c}, compare against a large-box integral of the complement.
        let xi = [0.3, 0.45];
        let vi = polygon_perimeter_density(&sq, alpha, xi).unwrap();
        let inner = |r0: f64, r1: f64| {
            adaptive(0.0, std::f64::consts::TAU, 1e-12, 40, |th: f64| {
                let (c, s) = (th.cos(), th.sin());
                // distance from xi to the square boundary along direction th
                let tx = if c > 0.0 {
                    (1.0 - xi[0]) / c
                } else if c < 0.0 {
                    -xi[0] / c
                } else {
                    f64::INFINITY
                };
                let ty = if s > 0.0 {
                    (1.0 - xi[1]) / s
                } else if s < 0.0 {
                    -xi[1] / s
                } else {
                    f64::INFINITY
                };
                let rb = tx.min(ty).max(r0);
                if rb >= r1 {
                    0.0
                } else {
                    (rb.powf(-alpha) - r1.powf(-alpha)) / alpha
                }
            })
            .unwrap()
        };
        let reference = inner(0.0, f64::INFINITY);
        assert_relative_eq!(vi, reference, max_relative = 1e-8);
    }

    #[test]
    fn grid_indicator_path_matches_closed_form() {
        let o = FracOrder::new(1, 0.5_f64).unwrap();
        let e = IntervalSet::interval(0.0, 1.0).unwrap();
        let spec = GridSpec::new(1, 2.0, 257).unwrap();
        let f = frac_gradient_indicator_1d(&e, &o, &spec, &QuadParams::default()).unwrap();
        let h = spec.h();
        for i in 0..spec.m() {
            let x = spec.coord(i);
            if (x - 0.0).abs() < 4.0 * h || (x - 1.0).abs() < 4.0 * h {
                continue;
            }
            let exact = closed_form_indicator_gradient(&e, &o, x).unwrap();
            assert!(
                (f.component(0)[i] - exact).abs() < 1e-3 * exact.abs().max(1e-2),
                "x={x}"
            );
        }
    }
}
