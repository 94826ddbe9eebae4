//! Complex-valued fields on a grid, plus the L2 norms used everywhere.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::Grid;
use crate::Result;
use crate::C64;

/// A complex field sampled on a [`Grid`].
///
/// The L2 norm carries the quadrature weight `spacing()`, so it approximates
/// the continuum `sqrt(integral |f|^2 dx)` and is resolution-independent for
/// resolved fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<C64>,
}

impl ComplexField {
    /// Field of zeros.
    pub fn zeros(grid: Grid) -> Self {
        ComplexField { grid, values: vec![C64::new(0.0, 0.0); grid.n()] }
    }

    /// Field from a closure of the sample coordinate.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> C64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.coord(j))).collect();
        ComplexField { grid, values }
    }

    /// Field from explicit samples (must match the grid size).
    pub fn from_values(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(crate::error::CoreError::InvalidArgument(alloc::format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Map each sample (coordinate untouched).
    pub fn map(&self, mut f: impl FnMut(C64) -> C64) -> Self {
        ComplexField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + other`, checked for grid agreement.
    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(ComplexField { grid: self.grid, values })
    }

    /// `self - other`, checked for grid agreement.
    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(ComplexField { grid: self.grid, values })
    }

    /// `self * s` for a complex scalar.
    pub fn scale(&self, s: C64) -> Self {
        self.map(|v| v * s)
    }

    /// In-place `self += s * other` (the RK4 stage combiner).
    pub fn axpy(&mut self, s: C64, other: &ComplexField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    /// Largest sample magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Discrete L2 norm `sqrt(sum |f_j|^2 * spacing)`.
pub fn l2_norm(f: &ComplexField) -> f64 {
    let sum: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
    libm::sqrt(sum * f.grid.spacing())
}

/// L2 distance between two fields on the same grid.
pub fn l2_error(f: &ComplexField, g: &ComplexField) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    let sum: f64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| {
            let d = a - b;
            d.norm_sqr()
        })
        .sum();
    Ok(libm::sqrt(sum * f.grid.spacing()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use core::f64::consts::PI;

    fn plane_wave(grid: Grid, k: f64) -> ComplexField {
        ComplexField::from_fn(grid, |x| C64::new(0.0, k * x).exp())
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = Grid::space(16, 4.0).unwrap();
        assert_eq!(l2_norm(&ComplexField::zeros(g)), 0.0);
    }

    #[test]
    fn plane_wave_norm_is_sqrt_length() {
        let g = Grid::space(64, 12.5).unwrap();
        let k = 2.0 * PI * 3.0 / g.length();
        let f = plane_wave(g, k);
        assert!((l2_norm(&f) - libm::sqrt(12.5)).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_unit_plane_waves_differ_by_sqrt_2l() {
        // |f - g|^2 integrates to 2 L when the cross term averages to zero.
        let g = Grid::space(128, 20.0).unwrap();
        let dk = 2.0 * PI / g.length();
        let f1 = plane_wave(g, 2.0 * dk);
        let f2 = plane_wave(g, 5.0 * dk);
        let expected = libm::sqrt(2.0 * g.length());
        assert!((l2_error(&f1, &f2).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ComplexField::zeros(Grid::space(16, 4.0).unwrap());
        let b = ComplexField::zeros(Grid::space(32, 4.0).unwrap());
        assert!(l2_error(&a, &b).is_err());
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn axpy_matches_scale_and_add() {
        let g = Grid::space(16, 2.0).unwrap();
        let f1 = plane_wave(g, 2.0 * PI / 2.0);
        let f2 = plane_wave(g, 2.0 * PI * 3.0 / 2.0);
        let s = C64::new(0.3, -0.7);
        let mut via_axpy = f1.clone();
        via_axpy.axpy(s, &f2).unwrap();
        let direct = f1.add(&f2.scale(s)).unwrap();
        assert!(l2_error(&via_axpy, &direct).unwrap() < 1e-14);
    }
}
