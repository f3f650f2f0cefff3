//! One-dimensional quadrature rules used by the exact-geometry paths.

use std::sync::OnceLock;

use crate::error::{FracError, Result};
use crate::scalar::Real;
use crate::sum::CompensatedSum;

/// Gauss–Legendre nodes and weights on [−1, 1], computed by Newton iteration.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// A fixed Gauss–Legendre rule in the working precision.
#[derive(Debug, Clone)]
pub struct GaussRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

const CACHED: usize = 65;

fn gauss_static(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: [OnceLock<(Vec<f64>, Vec<f64>)>; CACHED] = [const { OnceLock::new() }; CACHED];
    assert!(order < CACHED, "cached Gauss rules go up to order {}", CACHED - 1);
    CACHE[order].get_or_init(|| gauss_legendre(order))
}

fn gauss_cached(order: usize) -> (Vec<f64>, Vec<f64>) {
    if order < CACHED {
        gauss_static(order).clone()
    } else {
        gauss_legendre(order)
    }
}

/// Composite Gauss–Legendre rule without allocation (order below 65).
pub(crate) fn gauss_panels<T: Real>(order: usize, a: T, b: T, panels: usize, mut f: impl FnMut(T) -> T) -> T {
    let (x, w) = gauss_static(order);
    let panels = panels.max(1);
    let width = (b - a) / T::from_usize_lossy(panels);
    let half = width * T::lit(0.5);
    let mut acc = CompensatedSum::new();
    for p in 0..panels {
        let mid = a + width * (T::from_usize_lossy(p) + T::lit(0.5));
        for (xi, wi) in x.iter().zip(w) {
            acc.add(T::lit(*wi) * f(mid + half * T::lit(*xi)));
        }
    }
    acc.value() * half
}

impl<T: Real> GaussRule<T> {
    pub fn new(order: usize) -> Self {
        let (x, w) = gauss_cached(order);
        Self {
            nodes: x.into_iter().map(T::lit).collect(),
            weights: w.into_iter().map(T::lit).collect(),
        }
    }

    /// ∫_a^b f.
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = a + half;
        let mut acc = CompensatedSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(*w * f(mid + half * *x));
        }
        acc.value() * half
    }

    /// Composite rule on `panels` equal panels.
    pub fn integrate_panels(&self, a: T, b: T, panels: usize, mut f: impl FnMut(T) -> T) -> T {
        let width = (b - a) / T::from_usize_lossy(panels.max(1));
        let mut acc = CompensatedSum::new();
        for p in 0..panels.max(1) {
            let lo = a + width * T::from_usize_lossy(p);
            acc.add(self.integrate(lo, lo + width, &mut f));
        }
        acc.value()
    }
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real>(a: T, b: T, f: &mut impl FnMut(T) -> T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut k = fc * T::lit(GK_WK[7]);
    let mut g = fc * T::lit(GK_WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(GK_X[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + T::lit(GK_WK[j]) * s;
        if j % 2 == 1 {
            g = g + T::lit(GK_WG[j / 2]) * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with bisection.
pub fn adaptive<T: Real>(a: T, b: T, abs_tol: T, max_depth: usize, mut f: impl FnMut(T) -> T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let mut acc = CompensatedSum::new();
    let mut stack = vec![(a, b, 0usize, abs_tol)];
    let mut failed = false;
    while let Some((lo, hi, depth, tol)) = stack.pop() {
        let (v, e) = gk15(lo, hi, &mut f);
        if e <= tol || depth >= max_depth || (hi - lo).abs() < T::epsilon() * (lo.abs() + hi.abs()) {
            if e > tol && depth >= max_depth {
                failed = e > tol * T::lit(1e3);
            }
            acc.add(v);
        } else {
            let mid = (lo + hi) * T::lit(0.5);
            let t = tol * T::lit(0.5);
            stack.push((mid, hi, depth + 1, t));
            stack.push((lo, mid, depth + 1, t));
        }
    }
    let value = acc.value();
    if failed || !value.is_finite() {
        return Err(FracError::Budget(format!(
            "adaptive quadrature on [{a}, {b}] did not reach tolerance {abs_tol}"
        )));
    }
    Ok(value)
}

struct TanhSinhTable {
    /// (distance from the left end, distance from the right end, weight) on [0, 1]
    nodes: Vec<(f64, f64, f64)>,
}

/// Node density of the double-exponential rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Step 1/16, near machine precision for analytic integrands.
    Fine,
    /// Step 1/8, about half the nodes; roughly 1e−9 relative.
    Coarse,
}

fn tanh_sinh_table(prec: Precision) -> &'static TanhSinhTable {
    static FINE: OnceLock<TanhSinhTable> = OnceLock::new();
    static COARSE: OnceLock<TanhSinhTable> = OnceLock::new();
    let (cell, step) = match prec {
        Precision::Fine => (&FINE, 1.0 / 16.0),
        Precision::Coarse => (&COARSE, 1.0 / 8.0),
    };
    cell.get_or_init(|| {
        let kmax = (4.5 / step) as i64;
        let mut nodes = Vec::new();
        for k in -kmax..=kmax {
            let t = k as f64 * step;
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            // 1 + tanh(u), evaluated without cancellation.
            let s = 0.5 * u.exp() / cu;
            let r = 0.5 * (-u).exp() / cu;
            let w = 0.5 * step * std::f64::consts::FRAC_PI_2 * t.cosh() / (cu * cu);
            if s > 0.0 && r > 0.0 && w > 0.0 {
                nodes.push((s, r, w));
            }
        }
        TanhSinhTable { nodes }
    })
}

/// ∫_0^D g(s) ds by double-exponential quadrature. `g` receives the distance
/// s from the left endpoint and `D - s`; both are accurate near the ends, so
/// algebraic endpoint singularities are integrated to near machine precision.
pub fn tanh_sinh<T: Real>(length: T, g: impl FnMut(T, T) -> T) -> T {
    tanh_sinh_with(Precision::Fine, length, g)
}

pub fn tanh_sinh_with<T: Real>(prec: Precision, length: T, mut g: impl FnMut(T, T) -> T) -> T {
    let table = tanh_sinh_table(prec);
    let mut acc = CompensatedSum::new();
    for &(s, r, w) in &table.nodes {
        let left = length * T::lit(s);
        let right = length * T::lit(r);
        acc.add(T::lit(w) * g(left, right));
    }
    acc.value() * length
}

/// ∫_0^D s^{−a} g(s) ds for a < 1, with the weight absorbed by the
/// substitution s = D v^{1/(1−a)}.
pub fn power_weighted<T: Real>(length: T, a: T, g: impl FnMut(T) -> T) -> T {
    power_weighted_with(Precision::Fine, length, a, g)
}

pub fn power_weighted_with<T: Real>(prec: Precision, length: T, a: T, mut g: impl FnMut(T) -> T) -> T {
    let e = (T::one() - a).recip();
    let scale = length.powf(T::one() - a) * e;
    scale
        * tanh_sinh_with(prec, T::one(), |v, _| {
            // Nodes that underflow are moved to the smallest positive value.
            g((length * v.powf(e)).max(T::min_positive_value()))
        })
}

/// ∫_p^q g over an interval whose ends may be infinite. Near a finite end the
/// integrand may grow like |x − end|^{−a}; at an infinite end it must decay
/// like |x|^{−decay} with decay > 1. The closure receives an anchor and an
/// offset (x = anchor + offset) so that distances to a singular end are exact.
pub fn integrate_interval<T: Real>(p: T, q: T, a_p: T, a_q: T, decay: T, g: &(dyn Fn(T, T) -> T + Sync)) -> T {
    integrate_interval_with(Precision::Fine, p, q, a_p, a_q, decay, g)
}

pub fn integrate_interval_with<T: Real>(
    prec: Precision,
    p: T,
    q: T,
    a_p: T,
    a_q: T,
    decay: T,
    g: &(dyn Fn(T, T) -> T + Sync),
) -> T {
    let zero = T::zero();
    if p.is_infinite() && q.is_infinite() {
        return integrate_interval_with(prec, p, zero, a_p, zero, decay, g)
            + integrate_interval_with(prec, zero, q, zero, a_q, decay, g);
    }
    if q.is_infinite() {
        let span = T::one();
        let near = power_weighted_with(prec, span, a_p, |s| g(p, s) * s.powf(a_p));
        let a_far = (T::lit(2.0) - decay).max(zero);
        let far = power_weighted_with(prec, T::one(), a_far, |w| {
            let x = span / w;
            let v = g(p, x);
            if v == zero {
                return zero;
            }
            // Underflowed nodes carry no mass.
            let r = v * (x / w) * w.powf(a_far);
            if r.is_finite() {
                r
            } else {
                zero
            }
        });
        return near + far;
    }
    if p.is_infinite() {
        let flipped = |anchor: T, off: T| g(-anchor, -off);
        return integrate_interval_with(prec, -q, -p, a_q, a_p, decay, &flipped);
    }
    let half = (q - p) * T::lit(0.5);
    let left = power_weighted_with(prec, half, a_p, |s| g(p, s) * s.powf(a_p));
    let right = power_weighted_with(prec, half, a_q, |s| g(q, -s) * s.powf(a_q));
    left + right
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let rule = GaussRule::<f64>::new(5);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert_relative_eq!(v, 2.0_f64.powi(10) / 10.0, max_relative = 1e-13);
        let w: f64 = rule.weights.iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = adaptive(-1.0_f64, 2.0, 1e-12, 40, |x: f64| x.abs()).unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-11);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let a = 0.5_f64;
        let v = tanh_sinh(2.0_f64, |s, _| s.powf(-a));
        assert_relative_eq!(v, 2.0_f64.powf(1.0 - a) / (1.0 - a), max_relative = 1e-10);
        let w = tanh_sinh(1.0_f64, |_, r| r.powf(-0.5) * (1.0 + r));
        assert_relative_eq!(w, 2.0 + 2.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn interval_helper_cases() {
        let a = 0.9_f64;
        // ∫_0^1 x^{-a} + (1-x)^{-a}
        let v = integrate_interval(0.0, 1.0, a, a, 2.0, &|c: f64, o: f64| {
            let x = c + o;
            let dl = if c == 0.0 { o } else { x };
            let dr = if c == 1.0 { -o } else { 1.0 - x };
            dl.powf(-a) + dr.powf(-a)
        });
        assert_relative_eq!(v, 2.0 / (1.0 - a), max_relative = 1e-10);
        // ∫_1^∞ x^{-1.5} = 2
        let w = integrate_interval(1.0, f64::INFINITY, 0.0, 0.0, 1.5, &|c: f64, o: f64| (c + o).powf(-1.5));
        assert_relative_eq!(w, 2.0, max_relative = 1e-10);
        let z = integrate_interval(f64::NEG_INFINITY, -2.0, 0.0, 0.0, 3.0, &|c: f64, o: f64| {
            (c + o).powi(-3).abs()
        });
        assert_relative_eq!(z, 0.125, max_relative = 1e-10);
    }

    #[test]
    fn power_weight_near_one() {
        for &a in &[0.25_f64, 0.9, 0.99] {
            let v = power_weighted(3.0, a, |s| 1.0 + s);
            let exact = 3.0_f64.powf(1.0 - a) / (1.0 - a) + 3.0_f64.powf(2.0 - a) / (2.0 - a);
            assert_relative_eq!(v, exact, max_relative = 1e-11);
        }
    }
}
