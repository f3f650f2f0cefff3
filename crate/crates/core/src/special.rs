//! Special functions: Gamma, Riemann zeta and Dirichlet beta on the real line.

use crate::error::{FracError, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x ≥ 1/2 via the Lanczos approximation.
fn ln_gamma_lanczos<T: Real>(x: T) -> T {
    let z = x - T::one();
    let mut a = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (z + T::from_usize_lossy(i));
    }
    let t = z + T::lit(LANCZOS_G + 0.5);
    let half_ln_two_pi = T::lit(0.918_938_533_204_672_7);
    half_ln_two_pi + (z + T::lit(0.5)) * t.ln() - t + a.ln()
}

/// Euler's Gamma function for positive arguments.
pub fn gamma_fn<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(FracError::Domain(format!(
            "gamma_fn requires a finite positive argument, got {x}"
        )));
    }
    Ok(gamma_unchecked(x))
}

pub(crate) fn gamma_unchecked<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Reflection keeps the Lanczos sum in its accurate range.
        T::PI() / ((T::PI() * x).sin() * ln_gamma_lanczos(T::one() - x).exp())
    } else {
        ln_gamma_lanczos(x).exp()
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(FracError::Domain(format!(
            "ln_gamma requires a finite positive argument, got {x}"
        )));
    }
    if x < T::lit(0.5) {
        Ok((T::PI() / (T::PI() * x).sin()).ln() - ln_gamma_lanczos(T::one() - x))
    } else {
        Ok(ln_gamma_lanczos(x))
    }
}

/// Accelerated sum of an alternating series Σ (−1)^k a_k with totally
/// monotone a_k (Cohen, Rodriguez Villegas and Zagier, algorithm 1).
fn alternating_sum<T: Real>(a: impl Fn(usize) -> T) -> T {
    let n = T::series_terms();
    let nt = T::from_usize_lossy(n);
    let mut d = (T::lit(3.0) + T::lit(8.0).sqrt()).powi(n as i32);
    d = (d + d.recip()) * T::lit(0.5);
    let mut b = -T::one();
    let mut c = -d;
    let mut s = T::zero();
    for k in 0..n {
        let kt = T::from_usize_lossy(k);
        c = b - c;
        s = s + c * a(k);
        b = (kt + nt) * (kt - nt) * b / ((kt + T::lit(0.5)) * (kt + T::one()));
    }
    s / d
}

/// Dirichlet eta function η(s) = Σ (−1)^{k} (k+1)^{−s}, s > 0.
pub fn dirichlet_eta<T: Real>(s: T) -> T {
    alternating_sum(|k| T::from_usize_lossy(k + 1).powf(-s))
}

/// Riemann zeta function for s > 0, s ≠ 1 (analytic continuation on (0,1)).
pub fn zeta<T: Real>(s: T) -> Result<T> {
    if !(s > T::zero()) || s == T::one() || !s.is_finite() {
        return Err(FracError::Domain(format!(
            "zeta is evaluated only for s > 0, s != 1; got {s}"
        )));
    }
    let denom = -(((T::one() - s) * T::LN_2()).exp_m1());
    Ok(dirichlet_eta(s) / denom)
}

/// Dirichlet beta function β(s) = Σ (−1)^k (2k+1)^{−s}, s > 0.
pub fn dirichlet_beta<T: Real>(s: T) -> Result<T> {
    if !(s > T::zero()) || !s.is_finite() {
        return Err(FracError::Domain(format!("dirichlet_beta requires s > 0, got {s}")));
    }
    Ok(alternating_sum(|k| T::from_usize_lossy(2 * k + 1).powf(-s)))
}
