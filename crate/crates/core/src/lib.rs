//! Riesz fractional gradient, divergence and variation on uniform grids.
//!
//! The crate evaluates the nonlocal operators
//! `∇^α f(x) = μ_{n,α} ∫ (y − x)(f(y) − f(x)) / |y − x|^{n+α+1} dy`
//! and their relatives on compactly supported sampled data in one and two
//! dimensions, together with exact geometric evaluation for interval unions
//! and polygons.

pub mod asymptotics;
pub mod constants;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod spectral;
pub mod sum;
pub mod variation;

pub use constants::{FracOrder, RegionStats};
pub use error::{FracError, Result};
pub use scalar::{Point, Real};

/// Double precision instances of the generic types.
pub type Order = FracOrder<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type Field = grid::ScalarField<f64>;
pub type Flux = grid::VectorField<f64>;
pub type Intervals = grid::IntervalSet<f64>;
pub type Polygons = grid::PolySet<f64>;
pub type Region = grid::Window<f64>;
