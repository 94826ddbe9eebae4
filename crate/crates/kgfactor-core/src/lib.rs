//! Pseudo-spectral solvers for the free-space Klein-Gordon equation with a
//! static Salpeter-style potential `V(x)` and a weak time-dependent
//! gravitational coupling `Xi(x, t)`, together with the two directional
//! factorizations of that equation:
//!
//! * a temporal split into forward/backward components whose decoupled limit
//!   is the time-dependent Schrodinger equation ([`pair_m`]), and
//! * a spatial split marched along one axis whose decoupled limit is a
//!   unidirectional wave equation in the frequency domain ([`pair_p`]).
//!
//! Every field lives on a uniform periodic grid and derivatives are taken in
//! the conjugate (DFT) domain. The sign conventions are fixed once, globally:
//! fields oscillate as `exp(-i w t)` and `exp(+i k x)`, so the energy operator
//! is `i hbar d/dt` and momentum is `-i hbar d/dx`.
//!
//! The crate is `no_std` (alloc only); all floating-point special functions
//! come from `libm`. IO, configuration, and experiment orchestration live in
//! the companion CLI crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constants;
pub mod dispersion;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod kg;
pub mod packet;
pub mod pair_m;
pub mod pair_p;
pub mod potential;
pub mod spectral;

pub use constants::Constants;
pub use error::CoreError;
pub use field::ComplexField;
pub use grid::{Axis, Grid};

/// Convenience alias used throughout: double-precision complex sample.
pub type C64 = num_complex::Complex<f64>;

/// Result alias for fallible core operations.
pub type Result<T> = core::result::Result<T, CoreError>;
