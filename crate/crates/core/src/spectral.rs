//! Fourier-multiplier oracle on zero-padded periodic grids.
//!
//! Used to cross-check the direct quadrature of the kernels module and as
//! the only implementation of the fractional Laplacian (−Δ)^{s/2}.

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::constants::FracOrder;
use crate::error::{FracError, Result};
use crate::grid::{integrate, lp_norm, Exponent, GridSpec, ScalarField, VectorField, Window};
use crate::kernels::{exterior::riesz_of_gradient_1d, frac_divergence, frac_gradient, QuadParams};
use crate::scalar::Real;

pub const DEFAULT_PAD: usize = 8;

/// Fourier symbols of the supported operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierSymbol<T> {
    /// i ξ |ξ|^{α−1}, one output component per axis.
    FracGradient { alpha: T },
    /// i ξ·φ̂ |ξ|^{α−1}, acting on vector fields.
    FracDivergence { alpha: T },
    /// |ξ|^s, s ≥ 0 (s = 0 is the identity).
    FracLaplacian { s: T },
}

impl<T: Real> MultiplierSymbol<T> {
    fn validate(&self) -> Result<()> {
        match *self {
            MultiplierSymbol::FracGradient { alpha } | MultiplierSymbol::FracDivergence { alpha } => {
                crate::constants::check_alpha(alpha)
            }
            MultiplierSymbol::FracLaplacian { s } => {
                if !(s >= T::zero()) || !s.is_finite() {
                    return Err(FracError::Domain(format!(
                        "fractional Laplacian order must be ≥ 0, got {s}"
                    )));
                }
                Ok(())
            }
        }
    }
}

pub enum SpectralInput<'a, T> {
    Scalar(&'a ScalarField<T>),
    Vector(&'a VectorField<T>),
}

#[derive(Debug, Clone)]
pub enum SpectralField<T> {
    Scalar(ScalarField<T>),
    Vector(VectorField<T>),
}

#[derive(Debug, Clone)]
pub struct SpectralResult<T> {
    pub field: SpectralField<T>,
    /// Largest imaginary part left after the inverse transform.
    pub imag_residue: T,
}

impl<T: Real> SpectralResult<T> {
    pub fn into_scalar(self) -> Result<ScalarField<T>> {
        match self.field {
            SpectralField::Scalar(f) => Ok(f),
            SpectralField::Vector(_) => Err(FracError::Field("multiplier produced a vector field".into())),
        }
    }

    pub fn into_vector(self) -> Result<VectorField<T>> {
        match self.field {
            SpectralField::Vector(f) => Ok(f),
            SpectralField::Scalar(_) => Err(FracError::Field("multiplier produced a scalar field".into())),
        }
    }
}

/// Values on the padded grid [−pad·L, pad·L]^n (same spacing).
pub(crate) struct Padded<T> {
    pub spec: GridSpec<T>,
    pub comps: Vec<Vec<T>>,
    pub imag_residue: T,
}

struct Transform<T: Real> {
    n: usize,
    size: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Transform<T> {
    fn new(n: usize, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        }
    }

    fn run(&self, buf: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let m = self.size;
        if self.n == 1 {
            plan.process(buf);
            return;
        }
        for row in buf.chunks_mut(m) {
            plan.process(row);
        }
        let mut col = vec![Complex::new(T::zero(), T::zero()); m];
        for x in 0..m {
            for y in 0..m {
                col[y] = buf[x + m * y];
            }
            plan.process(&mut col);
            for y in 0..m {
                buf[x + m * y] = col[y];
            }
        }
    }
}

fn check_support<T: Real>(spec: &GridSpec<T>, support: Option<T>) -> Result<()> {
    match support {
        None => Err(FracError::MissingSupport),
        Some(r) if r > spec.half_width() * T::lit(0.5) => Err(FracError::Precondition(format!(
            "support radius {r} exceeds half the box half-width {}",
            spec.half_width()
        ))),
        _ => Ok(()),
    }
}

/// Apply a symbol on the padded grid and return the padded result.
pub(crate) fn apply_padded<T: Real>(
    input: &SpectralInput<'_, T>,
    sym: MultiplierSymbol<T>,
    pad: usize,
) -> Result<Padded<T>> {
    sym.validate()?;
    if pad < 2 {
        return Err(FracError::Domain(format!("pad factor must be at least 2, got {pad}")));
    }
    let (spec, comps_in, support): (GridSpec<T>, Vec<&[T]>, Option<T>) = match input {
        SpectralInput::Scalar(f) => (*f.spec(), vec![f.values()], f.support_radius()),
        SpectralInput::Vector(v) => (
            *v.spec(),
            v.components().iter().map(|c| c.as_slice()).collect(),
            v.support_radius(),
        ),
    };
    check_support(&spec, support)?;
    let is_vector = matches!(input, SpectralInput::Vector(_));
    match (sym, is_vector) {
        (MultiplierSymbol::FracDivergence { .. }, false) => {
            return Err(FracError::Field("the divergence symbol acts on vector fields".into()))
        }
        (MultiplierSymbol::FracGradient { .. } | MultiplierSymbol::FracLaplacian { .. }, true) => {
            return Err(FracError::Field("this symbol acts on scalar fields".into()))
        }
        _ => {}
    }
    let n = spec.n();
    let m = spec.m();
    let c = (m - 1) / 2;
    let size = pad * (m - 1);
    let total = size.pow(n as u32);
    let tr = Transform::<T>::new(n, size);
    let wrap = |k: isize| k.rem_euclid(size as isize) as usize;
    let zero = Complex::new(T::zero(), T::zero());
    let buf_index = |i: usize| -> usize {
        let a = spec.axis_index(i);
        let x = wrap(a[0] as isize - c as isize);
        if n == 1 {
            x
        } else {
            x + size * wrap(a[1] as isize - c as isize)
        }
    };
    let spectra: Vec<Vec<Complex<T>>> = comps_in
        .iter()
        .map(|vals| {
            let mut buf = vec![zero; total];
            for (i, v) in vals.iter().enumerate() {
                buf[buf_index(i)] = Complex::new(*v, T::zero());
            }
            tr.run(&mut buf, false);
            buf
        })
        .collect();
    let period = T::from_usize_lossy(size) * spec.h();
    let two_pi = T::TAU();
    let freq = |k: usize| -> (T, bool) {
        let nyquist = 2 * k == size;
        let kk = if k <= size / 2 {
            k as isize
        } else {
            k as isize - size as isize
        };
        (two_pi * T::from_isize_lossy(kk) / period, nyquist)
    };
    let outputs = match sym {
        MultiplierSymbol::FracGradient { .. } => n,
        _ => 1,
    };
    let mut out = vec![vec![zero; total]; outputs];
    for idx in 0..total {
        let (kx, ky) = if n == 1 { (idx, 0) } else { (idx % size, idx / size) };
        let (xi0, ny0) = freq(kx);
        let (xi1, ny1) = if n == 1 { (T::zero(), false) } else { freq(ky) };
        let xi = [xi0, xi1];
        let r = (xi0 * xi0 + xi1 * xi1).sqrt();
        match sym {
            MultiplierSymbol::FracLaplacian { s } => {
                let w = if s == T::zero() {
                    T::one()
                } else if r == T::zero() {
                    T::zero()
                } else {
                    r.powf(s)
                };
                out[0][idx] = spectra[0][idx] * w;
            }
            MultiplierSymbol::FracGradient { alpha } => {
                if r == T::zero() {
                    continue;
                }
                let w = r.powf(alpha - T::one());
                for k in 0..n {
                    let odd_nyquist = if k == 0 { ny0 } else { ny1 };
                    if !odd_nyquist {
                        out[k][idx] = spectra[0][idx] * Complex::new(T::zero(), xi[k] * w);
                    }
                }
            }
            MultiplierSymbol::FracDivergence { alpha } => {
                if r == T::zero() {
                    continue;
                }
                let w = r.powf(alpha - T::one());
                let mut acc = zero;
                for k in 0..n {
                    let odd_nyquist = if k == 0 { ny0 } else { ny1 };
                    if !odd_nyquist {
                        acc = acc + spectra[k][idx] * Complex::new(T::zero(), xi[k] * w);
                    }
                }
                out[0][idx] = acc;
            }
        }
    }
    let norm = T::from_usize_lossy(total).recip();
    let padded_spec = GridSpec::new(n, spec.half_width() * T::from_usize_lossy(pad), size + 1)?;
    let half = size / 2;
    let mut imag = T::zero();
    let comps = out
        .into_iter()
        .map(|mut buf| {
            tr.run(&mut buf, true);
            (0..padded_spec.len())
                .map(|p| {
                    let a = padded_spec.axis_index(p);
                    let x = wrap(a[0] as isize - half as isize);
                    let bi = if n == 1 {
                        x
                    } else {
                        x + size * wrap(a[1] as isize - half as isize)
                    };
                    let v = buf[bi] * norm;
                    imag = imag.max(v.im.abs());
                    v.re
                })
                .collect()
        })
        .collect();
    Ok(Padded {
        spec: padded_spec,
        comps,
        imag_residue: imag,
    })
}

/// Restrict padded values to the original grid.
fn restrict<T: Real>(spec: &GridSpec<T>, padded: &Padded<T>, comp: usize) -> Vec<T> {
    let shift = (padded.spec.m() - spec.m()) / 2;
    (0..spec.len())
        .map(|i| {
            let a = spec.axis_index(i);
            let p = [a[0] + shift, if spec.n() == 1 { 0 } else { a[1] + shift }];
            padded.comps[comp][padded.spec.flat_index(p)]
        })
        .collect()
}

/// Apply a Fourier multiplier to a compactly supported field. The input is
/// embedded in a periodic grid `pad` times larger to suppress wrap-around.
pub fn apply_multiplier<T: Real>(
    input: SpectralInput<'_, T>,
    sym: MultiplierSymbol<T>,
    pad: usize,
) -> Result<SpectralResult<T>> {
    let padded = apply_padded(&input, sym, pad)?;
    let spec = match &input {
        SpectralInput::Scalar(f) => *f.spec(),
        SpectralInput::Vector(v) => *v.spec(),
    };
    let field = match sym {
        MultiplierSymbol::FracGradient { .. } => {
            let comps = (0..spec.n()).map(|k| restrict(&spec, &padded, k)).collect();
            SpectralField::Vector(VectorField::new(spec, comps, None)?)
        }
        _ => SpectralField::Scalar(ScalarField::new(spec, restrict(&spec, &padded, 0), None)?),
    };
    Ok(SpectralResult {
        field,
        imag_residue: padded.imag_residue,
    })
}

/// Residuals of the intertwining identities between orders β < α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntertwineReport<T> {
    pub alpha: T,
    pub beta: T,
    /// ‖∇^β f − ∇^α u‖_{L¹} with f = (−Δ)^{(α−β)/2} u.
    pub l1_residual: T,
    /// ‖∇^α u‖_{L¹} on the grid box.
    pub reference_l1: T,
    pub relative_residual: T,
    /// ‖∇^β u − I_{α−β} ∇^α u‖_{L¹} / ‖∇^β u‖_{L¹} (1D only).
    pub riesz_relative_residual: Option<T>,
    pub imag_residue: T,
}

/// Check ∇^β (−Δ)^{(α−β)/2} u = ∇^α u, with the fractional Laplacian
/// computed spectrally and both gradients by direct quadrature.
pub fn intertwine_check<T: Real>(
    u: &ScalarField<T>,
    alpha: T,
    beta: T,
    q: &QuadParams,
    pad: usize,
) -> Result<IntertwineReport<T>> {
    if !(beta <= alpha) {
        return Err(FracError::Domain(format!("need β ≤ α, got β = {beta}, α = {alpha}")));
    }
    let n = u.spec().n();
    let oa = FracOrder::new(n, alpha)?;
    let ob = FracOrder::new(n, beta)?;
    let padded = apply_padded(
        &SpectralInput::Scalar(u),
        MultiplierSymbol::FracLaplacian { s: alpha - beta },
        pad,
    )?;
    let pspec = padded.spec;
    let f = ScalarField::new(
        pspec,
        padded.comps.into_iter().next().expect("one component"),
        Some(pspec.half_width()),
    )?;
    let gb = frac_gradient(&f, &ob, q)?;
    let ga = frac_gradient(u, &oa, q)?;
    let spec = *u.spec();
    let shift = (pspec.m() - spec.m()) / 2;
    let diff: Vec<Vec<T>> = (0..n)
        .map(|k| {
            (0..spec.len())
                .map(|i| {
                    let a = spec.axis_index(i);
                    let p = [a[0] + shift, if n == 1 { 0 } else { a[1] + shift }];
                    gb.component(k)[pspec.flat_index(p)] - ga.component(k)[i]
                })
                .collect()
        })
        .collect();
    let diff = VectorField::new(spec, diff, None)?;
    let l1 = lp_norm(&diff, Exponent::One, &Window::Whole)?;
    let reference = lp_norm(&ga, Exponent::One, &Window::Whole)?;
    let riesz = if n == 1 && beta < alpha {
        let gub = frac_gradient(u, &ob, q)?;
        let rep = riesz_of_gradient_1d(u, &oa, alpha - beta, q)?;
        let d = gub.combine(
            T::one(),
            &VectorField::new(spec, vec![rep.into_values()], None)?,
            -T::one(),
        )?;
        Some(lp_norm(&d, Exponent::One, &Window::Whole)? / lp_norm(&gub, Exponent::One, &Window::Whole)?)
    } else {
        None
    };
    Ok(IntertwineReport {
        alpha,
        beta,
        l1_residual: l1,
        reference_l1: reference,
        relative_residual: l1 / reference,
        riesz_relative_residual: riesz,
        imag_residue: padded.imag_residue,
    })
}

/// Calibrated constant of the duality budget.
pub const DUALITY_C_TOL: f64 = 0.05;

/// Oracle padding factor: periodic images of the |x|^{-n-α} kernel decay
/// slowly in 1D, so the 1D oracle needs a much larger box.
pub fn duality_oracle_pad(n: usize) -> usize {
    if n == 1 {
        128
    } else {
        4
    }
}

/// tol(h) = C_tol·h^{min(2−α,1)}·scale.
pub fn duality_tolerance<T: Real>(h: T, alpha: T, scale: T) -> T {
    let two = T::lit(2.0);
    T::lit(DUALITY_C_TOL) * h.powf((two - alpha).min(T::one())) * scale
}

/// Pairings of the integration by parts identity ∫ f div^α φ = −∫ φ·∇^α f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport<T> {
    /// ∫ f div^α φ with the quadrature divergence.
    pub f_div: T,
    /// ∫ φ·∇^α f with the quadrature gradient.
    pub phi_grad: T,
    /// ∫ φ·∇^α f with the Fourier-multiplier gradient.
    pub phi_grad_oracle: T,
    /// |f_div + phi_grad|: adjointness of the discrete pair.
    pub discrete_residual: T,
    /// |f_div + phi_grad_oracle|: discretization error of the pairing.
    pub residual: T,
    /// ‖f‖_{L¹}·‖div^α φ‖_{L^∞}, the natural size of either pairing.
    pub scale: T,
}

/// Evaluates both sides of the duality identity on a grid. The oracle side
/// uses the spectral gradient, so `residual` measures the quadrature error
/// rather than round-off.
pub fn duality_check<T: Real>(
    f: &ScalarField<T>,
    phi: &VectorField<T>,
    order: &FracOrder<T>,
    q: &QuadParams,
    pad: usize,
) -> Result<DualityReport<T>> {
    let div = frac_divergence(phi, order, q)?;
    let grad = frac_gradient(f, order, q)?;
    let oracle = apply_multiplier(
        SpectralInput::Scalar(f),
        MultiplierSymbol::FracGradient { alpha: order.alpha() },
        pad,
    )?
    .into_vector()?;
    let whole = Window::Whole;
    let f_div = integrate(&f.product(&div)?, &whole)?;
    let phi_grad = integrate(&phi.dot(&grad)?, &whole)?;
    let phi_grad_oracle = integrate(&phi.dot(&oracle)?, &whole)?;
    let abs = ScalarField::new(*f.spec(), f.values().iter().map(|v| v.abs()).collect(), None)?;
    Ok(DualityReport {
        f_div,
        phi_grad,
        phi_grad_oracle,
        discrete_residual: (f_div + phi_grad).abs(),
        residual: (f_div + phi_grad_oracle).abs(),
        scale: integrate(&abs, &whole)? * div.max_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{local_gradient, make_bump, make_gaussian_cutoff};

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn laplacian_composes() {
        let g = GridSpec::new(1, 8.0_f64, 257).unwrap();
        let f = make_bump(&g, [0.0, 0.0], 3.0, 1.0).unwrap();
        let once = apply_multiplier(SpectralInput::Scalar(&f), MultiplierSymbol::FracLaplacian { s: 0.4 }, 8)
            .unwrap()
            .into_scalar()
            .unwrap();
        let p = apply_padded(
            &SpectralInput::Scalar(&f),
            MultiplierSymbol::FracLaplacian { s: 0.2 },
            8,
        )
        .unwrap();
        // Second application on the padded result, on the same periodic grid.
        let tr = Transform::<f64>::new(1, 8 * 256);
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); 8 * 256];
        let half = 8 * 256 / 2;
        for (i, v) in p.comps[0].iter().enumerate().take(8 * 256) {
            buf[(i + 8 * 256 - half) % (8 * 256)] = Complex::new(*v, 0.0);
        }
        tr.run(&mut buf, false);
        let period = 8.0 * 256.0 * g.h();
        for (k, b) in buf.iter_mut().enumerate() {
            let kk = if k <= half { k as f64 } else { k as f64 - 2048.0 };
            let r = (std::f64::consts::TAU * kk / period).abs();
            *b = *b * if r == 0.0 { 0.0 } else { r.powf(0.2) };
        }
        tr.run(&mut buf, true);
        let twice: Vec<f64> = (0..g.len())
            .map(|i| buf[(i + 8 * 256 - 128) % 2048].re / 2048.0)
            .collect();
        assert!(rel_l2(&twice, once.values()) < 1e-6);
    }

    #[test]
    fn gradient_symbol_near_one_is_local_gradient() {
        let g = GridSpec::new(1, 8.0_f64, 1025).unwrap();
        let f = make_gaussian_cutoff(&g, 0.7, 4.0).unwrap();
        let s = apply_multiplier(
            SpectralInput::Scalar(&f),
            MultiplierSymbol::FracGradient { alpha: 0.999 },
            8,
        )
        .unwrap()
        .into_vector()
        .unwrap();
        let lg = local_gradient(&f);
        assert!(rel_l2(s.component(0), lg.component(0)) < 1e-3);
    }

    #[test]
    fn odd_output_for_even_input() {
        let g = GridSpec::new(2, 4.0_f64, 33).unwrap();
        let f = make_bump(&g, [0.0, 0.0], 1.5, 1.0).unwrap();
        let r = apply_multiplier(
            SpectralInput::Scalar(&f),
            MultiplierSymbol::FracGradient { alpha: 0.5 },
            4,
        )
        .unwrap();
        assert!(r.imag_residue < 1e-10);
        let v = r.into_vector().unwrap();
        let m = g.m();
        for iy in 0..m {
            for ix in 0..m {
                let a = v.component(0)[ix + m * iy];
                let b = v.component(0)[(m - 1 - ix) + m * iy];
                assert!((a + b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_matches_oracle() {
        let g = GridSpec::with_spacing(1, 8.0_f64, 1.0 / 64.0).unwrap();
        let f = make_gaussian_cutoff(&g, 1.0, 4.0).unwrap();
        let o = FracOrder::new(1, 0.7).unwrap();
        let quad = frac_gradient(&f, &o, &QuadParams::default()).unwrap();
        let spec = apply_multiplier(
            SpectralInput::Scalar(&f),
            MultiplierSymbol::FracGradient { alpha: 0.7 },
            8,
        )
        .unwrap()
        .into_vector()
        .unwrap();
        let e = rel_l2(quad.component(0), spec.component(0));
        assert!(e < 1e-4, "relative L2 {e}");
    }

    #[test]
    fn degenerate_intertwining_is_exact() {
        let g = GridSpec::new(1, 4.0_f64, 129).unwrap();
        let u = make_bump(&g, [0.0, 0.0], 1.5, 1.0).unwrap();
        let r = intertwine_check(&u, 0.6, 0.6, &QuadParams::default(), 4).unwrap();
        assert!(r.relative_residual < 1e-12, "{}", r.relative_residual);
    }
}
