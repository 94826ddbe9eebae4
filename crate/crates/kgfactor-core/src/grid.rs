//! Uniform periodic sample grids.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::CoreError;
use crate::Result;

/// Which coordinate a grid discretizes.
///
/// Space-axis grids carry fields evolved in time (conjugate variable `k`);
/// time-axis grids carry fields marched in space (conjugate variable `w`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Space,
    Time,
}

/// A uniform periodic grid of `n` samples covering `[0, length)`.
///
/// `n` must be a power of two (the spectral kernels are radix-2) and at least
/// 8 so every solver has headroom for a resolved packet. Sample `j` sits at
/// coordinate `j * spacing()`; the conjugate grid holds the signed values
/// `2 pi s / length` for `s in [-n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
    axis: Axis,
}

impl Grid {
    /// Build a grid after validating size and extent.
    pub fn new(n: usize, length: f64, axis: Axis) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(CoreError::InvalidGrid(format!(
                "n must be a power of two >= 8 (got {n})"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(CoreError::InvalidGrid(format!("length must be positive (got {length})")));
        }
        Ok(Grid { n, length, axis })
    }

    /// Space-axis grid over `[0, length)`.
    pub fn space(n: usize, length: f64) -> Result<Self> {
        Grid::new(n, length, Axis::Space)
    }

    /// Time-axis grid over `[0, length)`.
    pub fn time(n: usize, length: f64) -> Result<Self> {
        Grid::new(n, length, Axis::Time)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// Sample spacing `length / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Coordinate of sample `j`.
    pub fn coord(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    /// All sample coordinates.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Signed conjugate index of DFT bin `m`: `m` for the first half,
    /// `m - n` for the second (the usual wrap-around ordering).
    pub fn signed_index(&self, m: usize) -> i64 {
        debug_assert!(m < self.n);
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Conjugate value (wavenumber or angular frequency) of bin `m`.
    pub fn conjugate_value(&self, m: usize) -> f64 {
        2.0 * PI * self.signed_index(m) as f64 / self.length
    }

    /// All conjugate values in DFT bin order.
    pub fn conjugate_values(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.conjugate_value(m)).collect()
    }

    /// Magnitude of the largest representable conjugate value, `pi / spacing`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Checked equality used by binary field operations.
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::GridMismatch)
        }
    }

    /// Checked axis expectation.
    pub fn ensure_axis(&self, axis: Axis) -> Result<()> {
        if self.axis == axis {
            Ok(())
        } else {
            Err(CoreError::WrongAxis { expected: axis })
        }
    }

    /// Minimum-image distance between two coordinates on the periodic domain.
    pub fn periodic_distance(&self, a: f64, b: f64) -> f64 {
        let mut d = libm::fabs(a - b) % self.length;
        if d > 0.5 * self.length {
            d = self.length - d;
        }
        d
    }
}
