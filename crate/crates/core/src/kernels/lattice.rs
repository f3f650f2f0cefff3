//! Lattice constants for singular sums over the integer lattice.
//!
//! For a smooth compactly supported g and 0 < s,
//! `h^n Σ_{k≠0} g(hk)|hk|^{−s} − ∫ g(x)|x|^{−s} dx = Z_n(s) h^{n−s} g(0) + O(h^{n−s+2})`,
//! where Z_n(s) is the analytically continued lattice sum Σ_{k≠0} |k|^{−s}.

use crate::error::Result;
use crate::scalar::Real;
use crate::special::{dirichlet_beta, zeta};

/// Z_n(s) = Σ'_{k∈ℤ^n} |k|^{−s}, continued to 0 < s < n.
pub fn lattice_zeta<T: Real>(n: usize, s: T) -> Result<T> {
    match n {
        1 => Ok(T::lit(2.0) * zeta(s)?),
        2 => {
            let half = s * T::lit(0.5);
            Ok(T::lit(4.0) * zeta(half)? * dirichlet_beta(half)?)
        }
        _ => Err(crate::error::FracError::Domain(format!(
            "lattice sums are implemented for n = 1, 2 only (n = {n})"
        ))),
    }
}

/// Finite part C of Σ'_k k_1 (k·e_1)/|k|^{n+α+1}, so that the lattice sum of
/// the gradient kernel against f equals the integral minus C h^{1−α} ∇f(x).
pub fn gradient_lattice_constant<T: Real>(n: usize, alpha: T) -> Result<T> {
    let nt = T::from_usize_lossy(n);
    Ok(lattice_zeta(n, nt + alpha - T::one())? / nt)
}

/// S_K = Σ_{0<|k|≤K} k_1² / |k|^{n+α+1}.
pub fn near_moment<T: Real>(n: usize, alpha: T, k: usize) -> T {
    let ki = k as isize;
    let mut s = T::zero();
    let e = -(T::from_usize_lossy(n) + alpha + T::one()) * T::lit(0.5);
    let ylim = if n == 1 { 0 } else { ki };
    for y in -ylim..=ylim {
        for x in -ki..=ki {
            let r2 = x * x + y * y;
            if r2 == 0 || r2 > ki * ki {
                continue;
            }
            s = s + T::from_isize_lossy(x * x) * T::from_isize_lossy(r2).powf(e);
        }
    }
    s
}
