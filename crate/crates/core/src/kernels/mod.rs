//! Direct lattice evaluation of the nonlocal operators on compactly
//! supported grid data.
//!
//! The defining integrals are replaced by sums over the grid lattice. For a
//! compactly supported f the term −f(x) in the gradient integrand sums to
//! zero over the full symmetric lattice, so only nodes in the support of f
//! contribute and there is no far-field truncation. The singular part is
//! handled by excluding the lattice ball |z| ≤ δ = k·h, replacing it by its
//! Taylor moment, and subtracting the analytically continued lattice sum
//! (a zeta value), which leaves an O(h^{3−α}) error for smooth data.

pub mod exterior;
pub mod indicator;
pub mod lattice;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{riesz_constant, FracOrder};
use crate::error::{FracError, Result};
use crate::grid::{local_divergence, local_gradient, same_grid, GridSpec, ScalarField, VectorField};
use crate::scalar::Real;
use crate::sum::CompensatedSum;

pub use indicator::{
    closed_form_indicator_gradient, frac_gradient_indicator_1d, interval_kernel_mass, polygon_indicator_gradient,
    polygon_perimeter_density,
};
pub use lattice::{gradient_lattice_constant, lattice_zeta, near_moment};

/// How the far field is treated. Only exact truncation is offered: compact
/// support makes the lattice sum over the support exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    #[default]
    BallExactTruncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    #[default]
    Compensated,
}

/// Quadrature policy for the singular sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadParams {
    /// Near-field radius δ = k·h, k ≥ 1.
    pub near_radius_cells: usize,
    pub tail_policy: TailPolicy,
    pub summation: Summation,
    /// Cells crossing a set boundary are split into 2^s sub-cells.
    pub boundary_refine: u32,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            near_radius_cells: 2,
            tail_policy: TailPolicy::BallExactTruncation,
            summation: Summation::Compensated,
            boundary_refine: 4,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<()> {
        if self.near_radius_cells < 1 {
            return Err(FracError::Domain("near_radius_cells must be at least 1".into()));
        }
        if self.near_radius_cells > 64 {
            return Err(FracError::Domain(
                "near_radius_cells larger than 64 is not supported".into(),
            ));
        }
        if self.boundary_refine > 12 {
            return Err(FracError::Domain(
                "boundary_refine larger than 12 is not supported".into(),
            ));
        }
        Ok(())
    }
}

/// Kernel values indexed by lattice offset d = (y − x)/h.
struct OffsetTable<T> {
    n: usize,
    m: usize,
    width: usize,
    comps: Vec<Vec<T>>,
}

impl<T: Real> OffsetTable<T> {
    fn build(spec: &GridSpec<T>, ncomp: usize, f: impl Fn(isize, isize) -> [T; 2] + Sync) -> Self {
        let m = spec.m();
        let width = 2 * m - 1;
        let rows = if spec.n() == 1 { 1 } else { width };
        let c = (m - 1) as isize;
        let entries: Vec<[T; 2]> = (0..width * rows)
            .into_par_iter()
            .map(|k| {
                let dx = (k % width) as isize - c;
                let dy = if spec.n() == 1 { 0 } else { (k / width) as isize - c };
                f(dx, dy)
            })
            .collect();
        let comps = (0..ncomp).map(|q| entries.iter().map(|e| e[q]).collect()).collect();
        Self {
            n: spec.n(),
            m,
            width,
            comps,
        }
    }

    /// z/|z|^{n+α+1} in lattice units, zero for |z| ≤ k.
    fn gradient(spec: &GridSpec<T>, alpha: T, exclude: usize) -> Self {
        let e = -(T::from_usize_lossy(spec.n()) + alpha + T::one()) * T::lit(0.5);
        let ex2 = (exclude * exclude) as isize;
        Self::build(spec, spec.n(), move |dx, dy| {
            let r2 = dx * dx + dy * dy;
            if r2 <= ex2 {
                return [T::zero(); 2];
            }
            let w = T::from_isize_lossy(r2).powf(e);
            [T::from_isize_lossy(dx) * w, T::from_isize_lossy(dy) * w]
        })
    }

    /// |z|^{p} in lattice units, zero at the origin.
    fn radial(spec: &GridSpec<T>, p: T) -> Self {
        let e = p * T::lit(0.5);
        Self::build(spec, 1, move |dx, dy| {
            let r2 = dx * dx + dy * dy;
            if r2 == 0 {
                return [T::zero(); 2];
            }
            [T::from_isize_lossy(r2).powf(e), T::zero()]
        })
    }

    #[inline]
    fn index(&self, i: [usize; 2], j: [usize; 2]) -> usize {
        let c = self.m - 1;
        if self.n == 1 {
            j[0] + c - i[0]
        } else {
            (j[0] + c - i[0]) + self.width * (j[1] + c - i[1])
        }
    }
}

fn nonzero_scalar<T: Real>(values: &[T]) -> Vec<(usize, T)> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != T::zero())
        .map(|(i, v)| (i, *v))
        .collect()
}

fn nonzero_vector<T: Real>(phi: &VectorField<T>) -> Vec<(usize, [T; 2])> {
    let n = phi.spec().n();
    (0..phi.spec().len())
        .filter_map(|i| {
            let mut v = [T::zero(); 2];
            for k in 0..n {
                v[k] = phi.component(k)[i];
            }
            if v[0] != T::zero() || v[1] != T::zero() {
                Some((i, v))
            } else {
                None
            }
        })
        .collect()
}

/// Σ_j K(x_j − x_i) s_j for every node i (vector kernel, scalar sources).
fn apply_vector_kernel<T: Real>(spec: &GridSpec<T>, table: &OffsetTable<T>, src: &[(usize, T)]) -> Vec<[T; 2]> {
    let n = spec.n();
    let src: Vec<([usize; 2], T)> = src.iter().map(|&(j, v)| (spec.axis_index(j), v)).collect();
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let ii = spec.axis_index(i);
            let mut acc = [CompensatedSum::new(), CompensatedSum::new()];
            for &(jj, v) in &src {
                let k = table.index(ii, jj);
                for (c, a) in acc.iter_mut().enumerate().take(n) {
                    a.add(table.comps[c][k] * v);
                }
            }
            [acc[0].value(), acc[1].value()]
        })
        .collect()
}

/// Σ_j K(x_j − x_i)·φ_j for every node i.
fn apply_vector_dot<T: Real>(spec: &GridSpec<T>, table: &OffsetTable<T>, src: &[(usize, [T; 2])]) -> Vec<T> {
    let n = spec.n();
    let src: Vec<([usize; 2], [T; 2])> = src.iter().map(|&(j, v)| (spec.axis_index(j), v)).collect();
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let ii = spec.axis_index(i);
            let mut acc = CompensatedSum::new();
            for &(jj, v) in &src {
                let k = table.index(ii, jj);
                for c in 0..n {
                    acc.add(table.comps[c][k] * v[c]);
                }
            }
            acc.value()
        })
        .collect()
}

/// Σ_j K(x_j − x_i) s_j for a scalar kernel.
fn apply_scalar_kernel<T: Real>(spec: &GridSpec<T>, table: &OffsetTable<T>, src: &[(usize, T)]) -> Vec<T> {
    let src: Vec<([usize; 2], T)> = src.iter().map(|&(j, v)| (spec.axis_index(j), v)).collect();
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let ii = spec.axis_index(i);
            let mut acc = CompensatedSum::new();
            for &(jj, v) in &src {
                acc.add(table.comps[0][table.index(ii, jj)] * v);
            }
            acc.value()
        })
        .collect()
}

fn check_order<T: Real>(spec: &GridSpec<T>, order: &FracOrder<T>) -> Result<()> {
    if order.n() != spec.n() {
        return Err(FracError::Domain(format!(
            "fractional order built for n = {} applied on a {}-dimensional grid",
            order.n(),
            spec.n()
        )));
    }
    Ok(())
}

/// Coefficient of ∇_h f in the near-field correction, h^{1−α}(S_K − C).
pub(crate) fn near_coefficient<T: Real>(spec: &GridSpec<T>, alpha: T, q: &QuadParams) -> Result<T> {
    let s = near_moment(spec.n(), alpha, q.near_radius_cells);
    let c = gradient_lattice_constant(spec.n(), alpha)?;
    Ok(spec.h().powf(T::one() - alpha) * (s - c))
}

/// Fractional gradient ∇^α f on the grid.
pub fn frac_gradient<T: Real>(f: &ScalarField<T>, order: &FracOrder<T>, q: &QuadParams) -> Result<VectorField<T>> {
    q.validate()?;
    let spec = *f.spec();
    check_order(&spec, order)?;
    if f.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    let alpha = order.alpha();
    let table = OffsetTable::gradient(&spec, alpha, q.near_radius_cells);
    let far = apply_vector_kernel(&spec, &table, &nonzero_scalar(f.values()));
    let grad = local_gradient(f);
    let coef = near_coefficient(&spec, alpha, q)?;
    let scale = spec.h().powf(-alpha);
    let mu = order.mu();
    let comps = (0..spec.n())
        .map(|c| {
            (0..spec.len())
                .map(|i| mu * (scale * far[i][c] + coef * grad.component(c)[i]))
                .collect()
        })
        .collect();
    Ok(VectorField::from_components(spec, comps))
}

/// Fractional divergence div^α φ on the grid.
pub fn frac_divergence<T: Real>(phi: &VectorField<T>, order: &FracOrder<T>, q: &QuadParams) -> Result<ScalarField<T>> {
    q.validate()?;
    let spec = *phi.spec();
    check_order(&spec, order)?;
    if phi.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    let alpha = order.alpha();
    let table = OffsetTable::gradient(&spec, alpha, q.near_radius_cells);
    let far = apply_vector_dot(&spec, &table, &nonzero_vector(phi));
    let div = local_divergence(phi);
    let coef = near_coefficient(&spec, alpha, q)?;
    let scale = spec.h().powf(-alpha);
    let mu = order.mu();
    let values = (0..spec.len())
        .map(|i| mu * (scale * far[i] + coef * div.values()[i]))
        .collect();
    Ok(ScalarField::from_values(spec, values))
}

/// Riesz potential of grid samples (compact support assumed, not checked).
pub(crate) fn riesz_values<T: Real>(spec: &GridSpec<T>, values: &[T], sigma: T) -> Result<Vec<T>> {
    let n = spec.n();
    let nt = T::from_usize_lossy(n);
    let c = riesz_constant(n, sigma)?;
    let z = lattice_zeta(n, nt - sigma)?;
    let table = OffsetTable::radial(spec, sigma - nt);
    let sums = apply_scalar_kernel(spec, &table, &nonzero_scalar(values));
    let scale = c * spec.h().powf(sigma);
    Ok(sums
        .into_iter()
        .zip(values)
        .map(|(s, u)| scale * (s - z * *u))
        .collect())
}

/// Fields the Riesz potential can act on.
pub trait RieszInput<T>: Sized {
    fn riesz(&self, sigma: T) -> Result<Self>;
}

impl<T: Real> RieszInput<T> for ScalarField<T> {
    fn riesz(&self, sigma: T) -> Result<Self> {
        if self.support_radius().is_none() {
            return Err(FracError::MissingSupport);
        }
        Ok(ScalarField::from_values(
            *self.spec(),
            riesz_values(self.spec(), self.values(), sigma)?,
        ))
    }
}

impl<T: Real> RieszInput<T> for VectorField<T> {
    fn riesz(&self, sigma: T) -> Result<Self> {
        if self.support_radius().is_none() {
            return Err(FracError::MissingSupport);
        }
        let comps = self
            .components()
            .iter()
            .map(|c| riesz_values(self.spec(), c, sigma))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField::from_components(*self.spec(), comps))
    }
}

/// Riesz potential I_σ u with kernel (μ_{n,1−σ}/(n−σ))|x|^{σ−n}, σ ∈ (0, n).
/// The singular self-interaction is handled by the lattice zeta correction.
pub fn riesz_potential<T: Real, F: RieszInput<T>>(u: &F, sigma: T, q: &QuadParams) -> Result<F> {
    q.validate()?;
    u.riesz(sigma)
}

fn union_support<T: Real>(a: &[T], b: &[T]) -> Vec<usize> {
    (0..a.len())
        .filter(|&i| a[i] != T::zero() || b[i] != T::zero())
        .collect()
}

/// Nonlocal Leibniz remainder μ∫(y−x)(f(y)−f(x))(η(y)−η(x))/|y−x|^{n+α+1} dy.
/// The integrand vanishes to second order on the diagonal, so the plain
/// lattice sum is O(h^{3−α}) accurate.
pub fn leibniz_remainder_grad<T: Real>(
    eta: &ScalarField<T>,
    f: &ScalarField<T>,
    order: &FracOrder<T>,
    q: &QuadParams,
) -> Result<VectorField<T>> {
    q.validate()?;
    same_grid(eta.spec(), f.spec())?;
    let spec = *f.spec();
    check_order(&spec, order)?;
    if f.support_radius().is_none() || eta.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    let n = spec.n();
    let table = OffsetTable::gradient(&spec, order.alpha(), 0);
    let support: Vec<([usize; 2], usize)> = union_support(f.values(), eta.values())
        .into_iter()
        .map(|j| (spec.axis_index(j), j))
        .collect();
    let (fv, ev) = (f.values(), eta.values());
    let sums: Vec<[T; 2]> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let ii = spec.axis_index(i);
            let (fi, ei) = (fv[i], ev[i]);
            let mut acc = [CompensatedSum::new(), CompensatedSum::new()];
            for &(jj, j) in &support {
                if j == i {
                    continue;
                }
                let w = (fv[j] - fi) * (ev[j] - ei) - fi * ei;
                let k = table.index(ii, jj);
                for (c, a) in acc.iter_mut().enumerate().take(n) {
                    a.add(table.comps[c][k] * w);
                }
            }
            [acc[0].value(), acc[1].value()]
        })
        .collect();
    let scale = order.mu() * spec.h().powf(-order.alpha());
    let comps = (0..n).map(|c| sums.iter().map(|s| scale * s[c]).collect()).collect();
    Ok(VectorField::from_components(spec, comps))
}

/// Nonlocal Leibniz remainder μ∫(y−x)·(φ(y)−φ(x))(η(y)−η(x))/|y−x|^{n+α+1} dy.
pub fn leibniz_remainder_div<T: Real>(
    eta: &ScalarField<T>,
    phi: &VectorField<T>,
    order: &FracOrder<T>,
    q: &QuadParams,
) -> Result<ScalarField<T>> {
    q.validate()?;
    same_grid(eta.spec(), phi.spec())?;
    let spec = *phi.spec();
    check_order(&spec, order)?;
    if phi.support_radius().is_none() || eta.support_radius().is_none() {
        return Err(FracError::MissingSupport);
    }
    let n = spec.n();
    let table = OffsetTable::gradient(&spec, order.alpha(), 0);
    let mag = phi.magnitude();
    let support: Vec<([usize; 2], usize)> = union_support(&mag, eta.values())
        .into_iter()
        .map(|j| (spec.axis_index(j), j))
        .collect();
    let ev = eta.values();
    let sums: Vec<T> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let ii = spec.axis_index(i);
            let ei = ev[i];
            let mut acc = CompensatedSum::new();
            for &(jj, j) in &support {
                if j == i {
                    continue;
                }
                let k = table.index(ii, jj);
                let de = ev[j] - ei;
                for c in 0..n {
                    let pj = phi.component(c)[j];
                    let pi = phi.component(c)[i];
                    acc.add(table.comps[c][k] * ((pj - pi) * de - pi * ei));
                }
            }
            acc.value()
        })
        .collect();
    let scale = order.mu() * spec.h().powf(-order.alpha());
    Ok(ScalarField::from_values(
        spec,
        sums.into_iter().map(|s| scale * s).collect(),
    ))
}
