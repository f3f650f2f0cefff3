//! Evaluation outside the grid box.
//!
//! Operators applied to compactly supported data decay algebraically, so
//! whole-space norms and compositions need the part of ℝ^n outside the box.
//! There the integrand is smooth and the plain lattice sum over the support
//! is spectrally accurate.

use rayon::prelude::*;

use crate::constants::{riesz_constant, FracOrder};
use crate::error::{FracError, Result};
use crate::grid::{Exponent, GridSpec, ScalarField};
use crate::quadrature::{integrate_interval, power_weighted, GaussRule};
use crate::scalar::{Point, Real};
use crate::sum::CompensatedSum;

use super::{frac_gradient, lattice_zeta, riesz_values, QuadParams};

/// Nonzero grid samples with their positions.
#[derive(Debug, Clone)]
pub struct PointSources<T> {
    n: usize,
    cell: T,
    pts: Vec<(Point<T>, T)>,
}

impl<T: Real> PointSources<T> {
    pub fn new(spec: &GridSpec<T>, values: &[T]) -> Self {
        let pts = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != T::zero())
            .map(|(i, v)| (spec.node(i), *v))
            .collect();
        Self {
            n: spec.n(),
            cell: spec.cell_volume(),
            pts,
        }
    }

    pub fn from_field(f: &ScalarField<T>) -> Self {
        Self::new(f.spec(), f.values())
    }

    /// ∇^α of the sampled function at a point away from its support.
    pub fn gradient_at(&self, mu: T, alpha: T, x: Point<T>) -> Point<T> {
        let e = -(T::from_usize_lossy(self.n) + alpha + T::one()) * T::lit(0.5);
        let mut acc = [CompensatedSum::new(), CompensatedSum::new()];
        for &(y, v) in &self.pts {
            let d0 = y[0] - x[0];
            let d1 = if self.n == 2 { y[1] - x[1] } else { T::zero() };
            let w = (d0 * d0 + d1 * d1).powf(e) * v;
            acc[0].add(d0 * w);
            acc[1].add(d1 * w);
        }
        let s = mu * self.cell;
        [s * acc[0].value(), s * acc[1].value()]
    }

    /// I_σ of the sampled function at a point away from its support.
    pub fn riesz_at(&self, c: T, sigma: T, x: Point<T>) -> T {
        let e = (sigma - T::from_usize_lossy(self.n)) * T::lit(0.5);
        let mut acc = CompensatedSum::new();
        for &(y, v) in &self.pts {
            let d0 = y[0] - x[0];
            let d1 = if self.n == 2 { y[1] - x[1] } else { T::zero() };
            acc.add((d0 * d0 + d1 * d1).powf(e) * v);
        }
        c * self.cell * acc.value()
    }
}

/// ∫ over ℝ^n \ [−L, L]^n of a smooth function decaying like |x|^{−decay}.
pub fn exterior_integral<T: Real>(spec: &GridSpec<T>, decay: T, g: &(dyn Fn(Point<T>) -> T + Sync)) -> Result<T> {
    exterior_of_box(spec.n(), spec.half_width(), decay, g)
}

/// ∫ over ℝ^n \ [−l, l]^n of a smooth function decaying like |x|^{−decay}.
pub fn exterior_of_box<T: Real>(n: usize, l: T, decay: T, g: &(dyn Fn(Point<T>) -> T + Sync)) -> Result<T> {
    let nt = T::from_usize_lossy(n);
    if decay <= nt {
        return Err(FracError::Divergent(format!(
            "integrand decaying like |x|^-{decay} is not integrable in dimension {n}"
        )));
    }
    if n == 1 {
        let right = integrate_interval(l, T::infinity(), T::zero(), T::zero(), decay, &|a, o| {
            g([a + o, T::zero()])
        });
        let left = integrate_interval(T::neg_infinity(), -l, T::zero(), T::zero(), decay, &|a, o| {
            g([a + o, T::zero()])
        });
        return Ok(left + right);
    }
    // Polar coordinates about the origin, r = r_b(θ)/w with r_b the distance
    // to the box boundary. The boundary is smooth within each octant.
    let a = (T::lit(3.0) - decay).max(T::zero());
    let rule = GaussRule::<T>::new(24);
    let quarter = T::FRAC_PI_4();
    let parts: Vec<T> = (0..8usize)
        .into_par_iter()
        .map(|k| {
            let t0 = quarter * T::from_usize_lossy(k);
            rule.integrate(t0, t0 + quarter, |th| {
                let (s, c) = th.sin_cos();
                let rb = l / c.abs().max(s.abs());
                let radial = power_weighted(T::one(), a, |w| {
                    let r = rb / w;
                    let v = g([r * c, r * s]);
                    if v == T::zero() || !r.is_finite() {
                        return T::zero();
                    }
                    let out = v * r * r * w.powf(a) / w;
                    if out.is_finite() {
                        out
                    } else {
                        T::zero()
                    }
                });
                radial
            })
        })
        .collect();
    let mut acc = CompensatedSum::new();
    acc.extend(parts);
    Ok(acc.value())
}

/// ∫_{ℝ^n \ box} |∇^α f|^p for compactly supported f (p finite).
pub fn exterior_gradient_power<T: Real>(f: &ScalarField<T>, order: &FracOrder<T>, p: Exponent) -> Result<T> {
    let spec = *f.spec();
    let pw = match p {
        Exponent::One => T::one(),
        Exponent::Two => T::lit(2.0),
        Exponent::Infinity => return Err(FracError::Domain("exterior integral needs a finite exponent".into())),
    };
    if let Some(r) = f.support_radius() {
        if r >= spec.half_width() {
            return Err(FracError::Precondition("support must lie inside the grid box".into()));
        }
    } else {
        return Err(FracError::MissingSupport);
    }
    let src = PointSources::from_field(f);
    let (mu, alpha) = (order.mu(), order.alpha());
    let decay = (T::from_usize_lossy(spec.n()) + alpha) * pw;
    exterior_integral(&spec, decay, &|x| {
        let g = src.gradient_at(mu, alpha, x);
        (g[0] * g[0] + g[1] * g[1]).sqrt().powf(pw)
    })
}

/// Grid with the same spacing and twice the half-width.
pub(crate) fn doubled<T: Real>(spec: &GridSpec<T>) -> Result<GridSpec<T>> {
    GridSpec::new(spec.n(), spec.half_width() * T::lit(2.0), 2 * (spec.m() - 1) + 1)
}

/// Embed a field into a larger grid with the same spacing.
pub(crate) fn embed<T: Real>(f: &ScalarField<T>, big: &GridSpec<T>) -> Result<ScalarField<T>> {
    let spec = f.spec();
    let shift = (big.m() - spec.m()) / 2;
    let mut vals = vec![T::zero(); big.len()];
    for i in 0..spec.len() {
        let a = spec.axis_index(i);
        let p = [a[0] + shift, if spec.n() == 1 { 0 } else { a[1] + shift }];
        vals[big.flat_index(p)] = f.values()[i];
    }
    ScalarField::new(*big, vals, f.support_radius())
}

/// 1D Riesz potential I_σ v at the nodes of `spec`, for a smooth v given by
/// its samples on the larger grid `ext` (same spacing, concentric) and by
/// `outside` beyond it. v must decay like |y|^{−decay}.
pub fn riesz_with_tail_1d<T: Real>(
    spec: &GridSpec<T>,
    ext: &GridSpec<T>,
    ext_values: &[T],
    outside: &(dyn Fn(T) -> T + Sync),
    sigma: T,
    decay: T,
) -> Result<Vec<T>> {
    if spec.n() != 1 || ext.n() != 1 {
        return Err(FracError::Domain("riesz_with_tail_1d is one-dimensional".into()));
    }
    if ext_values.len() != ext.len() {
        return Err(FracError::Field("value count does not match the grid".into()));
    }
    if (ext.h() - spec.h()).abs() > T::epsilon() * T::lit(16.0) * spec.h() || ext.m() < spec.m() {
        return Err(FracError::InvalidGrid("extension grid must share the spacing".into()));
    }
    let c = riesz_constant(1, sigma)?;
    let z = lattice_zeta(1, T::one() - sigma)?;
    let h = spec.h();
    let l = ext.half_width();
    let me = ext.m();
    let shift = (me - spec.m()) / 2;
    let e = sigma - T::one();
    let a_end = T::one() - sigma;
    let decay_total = decay + T::one() - sigma;
    let powers: Vec<T> = (0..me).map(|d| T::from_usize_lossy(d).powf(e)).collect();
    let scale = c * h.powf(sigma);
    let out: Vec<T> = (0..spec.m())
        .into_par_iter()
        .map(|i| {
            let k = i + shift;
            let x = spec.coord(i);
            let mut acc = CompensatedSum::new();
            for (j, v) in ext_values.iter().enumerate() {
                if j == k {
                    continue;
                }
                // Trapezoid weights: half at the ends of the extended grid.
                let w = if j == 0 || j == me - 1 { T::lit(0.5) } else { T::one() };
                acc.add(w * powers[j.abs_diff(k)] * *v);
            }
            acc.add(-z * ext_values[k]);
            let mut total = CompensatedSum::new();
            total.add(scale * acc.value());
            let right = integrate_interval(l, T::infinity(), a_end, T::zero(), decay_total, &|anchor, off| {
                let d = (anchor - x) + off;
                c * d.powf(e) * outside(anchor + off)
            });
            let left = integrate_interval(T::neg_infinity(), -l, T::zero(), a_end, decay_total, &|anchor, off| {
                let d = (x - anchor) - off;
                c * d.powf(e) * outside(anchor + off)
            });
            total.add(right);
            total.add(left);
            total.value()
        })
        .collect();
    Ok(out)
}

/// I_{σ₂}(I_{σ₁} u) on a 1D grid, including the part of I_{σ₁}u outside
/// the box.
pub fn riesz_semigroup_1d<T: Real>(u: &ScalarField<T>, s1: T, s2: T) -> Result<ScalarField<T>> {
    let spec = *u.spec();
    if spec.n() != 1 {
        return Err(FracError::Domain("semigroup composition is one-dimensional".into()));
    }
    if u.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    if !(s1 + s2 < T::one()) {
        return Err(FracError::Domain("σ₁ + σ₂ must be below the dimension".into()));
    }
    let ext = doubled(&spec)?;
    let big = embed(u, &ext)?;
    let v = riesz_values(&ext, big.values(), s1)?;
    let src = PointSources::from_field(u);
    let c1 = riesz_constant(1, s1)?;
    let outside = |y: T| src.riesz_at(c1, s1, [y, T::zero()]);
    let w = riesz_with_tail_1d(&spec, &ext, &v, &outside, s2, T::one() - s1)?;
    ScalarField::new(spec, w, None)
}

/// I_σ(∇^α f) on a 1D grid.
pub fn riesz_of_gradient_1d<T: Real>(
    f: &ScalarField<T>,
    order: &FracOrder<T>,
    sigma: T,
    q: &QuadParams,
) -> Result<ScalarField<T>> {
    let spec = *f.spec();
    let ext = doubled(&spec)?;
    let big = embed(f, &ext)?;
    let grad = frac_gradient(&big, order, q)?;
    let src = PointSources::from_field(f);
    let (mu, alpha) = (order.mu(), order.alpha());
    let outside = |y: T| src.gradient_at(mu, alpha, [y, T::zero()])[0];
    let w = riesz_with_tail_1d(&spec, &ext, grad.component(0), &outside, sigma, T::one() + alpha)?;
    ScalarField::new(spec, w, None)
}
