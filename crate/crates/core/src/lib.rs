//! Long-wave validation toolkit for power-law particle chains.
//!
//! The crate pairs a periodic lattice of particles interacting through
//! inverse-power forces with a pseudo-spectral solver for the generalized
//! Benjamin-Ono equation, and measures how well the second describes the
//! first in the long-wave scaling.
//!
//! Numerical modules are generic over [`Real`] (`f32` / `f64`); the aliases
//! below fix the precision; the experiment [`harness`] is `f64` only.

pub mod bo;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod quadrature;
pub mod real;
pub mod spectral;
pub mod specfun;

pub use error::{Error, Result};
pub use real::Real;
pub use specfun::AlphaParams;

pub type AlphaParams64 = specfun::AlphaParams<f64>;
pub type AlphaParams32 = specfun::AlphaParams<f32>;
pub type PeriodicGrid64 = spectral::PeriodicGrid<f64>;
pub type PeriodicGrid32 = spectral::PeriodicGrid<f32>;
pub type SpectralField64 = spectral::SpectralField<f64>;
pub type SpectralField32 = spectral::SpectralField<f32>;
pub type BOConfig64 = bo::BOConfig<f64>;
pub type BOState64 = bo::BOState<f64>;
pub type LatticeConfig64 = lattice::LatticeConfig<f64>;
pub type LatticeState64 = lattice::LatticeState<f64>;
pub type Lattice64 = lattice::Lattice<f64>;
pub type Lattice32 = lattice::Lattice<f32>;
