//! Closed-form constants of the fractional calculus.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::scalar::Real;
use crate::special::gamma_unchecked;

/// A validated fractional order α ∈ (0, 1) in dimension n, with μ_{n,α} cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder<T> {
    alpha: T,
    n: usize,
    mu: T,
}

impl<T: Real> FracOrder<T> {
    pub fn new(n: usize, alpha: T) -> Result<Self> {
        check_dimension(n)?;
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            n,
            mu: mu_unchecked(n, alpha),
        })
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// μ_{n,α}.
    #[inline]
    pub fn mu(&self) -> T {
        self.mu
    }
}

/// Diameter and volume of a bounded open set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats<T> {
    pub diam: T,
    pub vol: T,
}

impl<T: Real> RegionStats<T> {
    /// Validates positivity and the isodiametric bound |U| ≤ ω_n (diam/2)^n.
    pub fn new(n: usize, diam: T, vol: T) -> Result<Self> {
        check_dimension(n)?;
        if !(diam > T::zero() && vol > T::zero()) || !diam.is_finite() || !vol.is_finite() {
            return Err(FracError::Domain(format!(
                "region diameter and volume must be finite and positive (diam={diam}, vol={vol})"
            )));
        }
        let bound = unit_ball_volume::<T>(n) * (diam * T::lit(0.5)).powi(n as i32);
        if vol > bound * (T::one() + T::lit(1e3) * T::epsilon()) {
            return Err(FracError::Domain(format!(
                "volume {vol} exceeds the isodiametric bound {bound} for diameter {diam}"
            )));
        }
        Ok(Self { diam, vol })
    }

    /// Stats of the cube [−l, l]^n.
    pub fn cube(n: usize, half_side: T) -> Result<Self> {
        let side = half_side + half_side;
        let diam = side * T::from_usize_lossy(n).sqrt();
        Self::new(n, diam, side.powi(n as i32))
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 {
        return Err(FracError::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(FracError::InvalidOrder {
            value: alpha.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// μ_{n,α} = 2^α π^{−n/2} Γ((n+α+1)/2) / Γ((1−α)/2).
pub fn mu<T: Real>(n: usize, alpha: T) -> Result<T> {
    check_dimension(n)?;
    check_alpha(alpha)?;
    Ok(mu_unchecked(n, alpha))
}

fn mu_unchecked<T: Real>(n: usize, alpha: T) -> T {
    (T::one() - alpha) * mu_ratio_unchecked(n, alpha)
}

/// μ_{n,α}/(1−α), evaluated without cancellation as α → 1⁻.
pub fn mu_over_one_minus_alpha<T: Real>(n: usize, alpha: T) -> Result<T> {
    check_dimension(n)?;
    check_alpha(alpha)?;
    Ok(mu_ratio_unchecked(n, alpha))
}

fn mu_ratio_unchecked<T: Real>(n: usize, alpha: T) -> T {
    let half = T::lit(0.5);
    let nt = T::from_usize_lossy(n);
    let num = gamma_unchecked((nt + alpha + T::one()) * half);
    let den = gamma_unchecked((T::one() - alpha) * half + T::one());
    T::lit(2.0).powf(alpha - T::one()) * T::PI().powf(-nt * half) * num / den
}

/// The limit μ_{n,0} = Γ((n+1)/2) / π^{(n+1)/2}.
pub fn mu_limit_zero<T: Real>(n: usize) -> Result<T> {
    check_dimension(n)?;
    let e = (T::from_usize_lossy(n) + T::one()) * T::lit(0.5);
    Ok(gamma_unchecked(e) / T::PI().powf(e))
}

/// Volume ω_n of the unit ball; ω_0 = 1.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    let e = T::from_usize_lossy(n) * T::lit(0.5);
    T::PI().powf(e) / gamma_unchecked(e + T::one())
}

/// C_n, the uniform upper bound for μ_{n,α}/(1−α).
pub fn c_upper<T: Real>(n: usize) -> T {
    let half = T::lit(0.5);
    let nt = T::from_usize_lossy(n);
    T::PI().powf(-nt * half) * T::lit(1.5).sqrt() * gamma_unchecked(nt * half + T::one()) / gamma_unchecked(T::lit(1.5))
}

/// C_{n,α,U}, the constant in ‖∇^α f‖_∞ ≤ C_{n,α,U} ‖∇f‖_∞ for supp f ⊂ U.
pub fn c_region<T: Real>(n: usize, alpha: T, stats: &RegionStats<T>) -> Result<T> {
    let ratio = mu_over_one_minus_alpha(n, alpha)?;
    let nt = T::from_usize_lossy(n);
    let omega = unit_ball_volume::<T>(n);
    let e = nt + alpha - T::one();
    let first = omega * stats.diam.powf(T::one() - alpha);
    let second = (nt * omega / e).powf(e / nt) * stats.vol.powf((T::one() - alpha) / nt);
    Ok(nt * ratio / e * (first + second))
}

/// κ_{n,U}, a bound for C_{n,α,U} uniform in α ∈ (1/2, 1).
pub fn kappa_region<T: Real>(n: usize, stats: &RegionStats<T>) -> Result<T> {
    check_dimension(n)?;
    let nt = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let omega = unit_ball_volume::<T>(n);
    let lead = nt * omega * c_upper::<T>(n) / (nt - half);
    let vol_term = (stats.vol / omega).max(T::one()).powf(nt.recip());
    let diam_term = stats.diam.sqrt().max(T::one());
    Ok(lead * (nt / (nt - half) * vol_term + diam_term))
}

/// Normalisation of the Riesz potential, (μ_{n,1−σ}/(n−σ)) = Γ((n−σ)/2) / (2^σ π^{n/2} Γ(σ/2)).
pub fn riesz_constant<T: Real>(n: usize, sigma: T) -> Result<T> {
    check_dimension(n)?;
    let nt = T::from_usize_lossy(n);
    if !(sigma > T::zero() && sigma < nt) {
        return Err(FracError::Domain(format!(
            "Riesz order must lie in (0, {n}), got {sigma}"
        )));
    }
    let half = T::lit(0.5);
    Ok(gamma_unchecked((nt - sigma) * half)
        / (T::lit(2.0).powf(sigma) * T::PI().powf(nt * half) * gamma_unchecked(sigma * half)))
}
