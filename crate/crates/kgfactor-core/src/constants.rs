//! Physical constants threaded through every operation.

use alloc::format;

use crate::error::CoreError;
use crate::Result;

/// The three dimensionful constants of the model.
///
/// Natural units (`hbar = c = m = 1`) are the default; any strictly positive
/// `hbar` and `c` are accepted so unit-sensitivity checks can rescale them.
/// Mass may be zero for the spatially-marched solver, but the temporal
/// factorization requires `m > 0` and enforces that at its entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub c: f64,
    pub mass: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { hbar: 1.0, c: 1.0, mass: 1.0 }
    }
}

impl Constants {
    /// Build a validated set of constants.
    pub fn new(hbar: f64, c: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && c.is_finite() && mass.is_finite()) {
            return Err(CoreError::InvalidConstants(format!(
                "non-finite value (hbar = {hbar}, c = {c}, mass = {mass})"
            )));
        }
        if hbar <= 0.0 || c <= 0.0 {
            return Err(CoreError::InvalidConstants(format!(
                "hbar and c must be positive (hbar = {hbar}, c = {c})"
            )));
        }
        if mass < 0.0 {
            return Err(CoreError::InvalidConstants(format!("mass must be >= 0 (mass = {mass})")));
        }
        Ok(Constants { hbar, c, mass })
    }

    /// Rest energy `m c^2`.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// Guard for operations that are singular at zero mass.
    pub fn require_mass(&self) -> Result<()> {
        if self.mass > 0.0 {
            Ok(())
        } else {
            Err(CoreError::MasslessUnsupported)
        }
    }
}
