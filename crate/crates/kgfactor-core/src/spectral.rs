//! Spectral analysis, synthesis, and derivatives on periodic grids.
//!
//! Analysis follows the global sign conventions: a space-axis field is a sum
//! of `exp(+i k x)` modes and a time-axis field a sum of `exp(-i w t)` modes,
//! so `to_spectrum` returns coefficients indexed by the signed conjugate
//! values of [`Grid::conjugate_values`] for either axis. Derivatives are the
//! exact derivatives of the band-limited interpolant and therefore agree
//! between the two conventions.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::fft::FftPlan;
use crate::field::ComplexField;
use crate::grid::{Axis, Grid};
use crate::Result;
use crate::C64;

/// Analysis transform: coefficients `f_hat[m]` of the mode with conjugate
/// value `grid.conjugate_value(m)` (so `exp(+ikx)` on space grids and
/// `exp(-iwt)` on time grids).
pub fn to_spectrum(f: &ComplexField, plan: &FftPlan) -> Vec<C64> {
    debug_assert_eq!(plan.n(), f.grid().n());
    let mut data = f.values().to_vec();
    match f.grid().axis() {
        Axis::Space => plan.forward(&mut data),
        Axis::Time => plan.inverse(&mut data),
    }
    let scale = 1.0 / f.grid().n() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
    data
}

/// Synthesis transform, inverse of [`to_spectrum`].
pub fn from_spectrum(grid: Grid, spectrum: &[C64], plan: &FftPlan) -> ComplexField {
    debug_assert_eq!(plan.n(), grid.n());
    debug_assert_eq!(spectrum.len(), grid.n());
    let mut data = spectrum.to_vec();
    match grid.axis() {
        Axis::Space => plan.inverse(&mut data),
        Axis::Time => plan.forward(&mut data),
    }
    ComplexField::from_values(grid, data).expect("spectrum length was checked")
}

/// Multiply each spectral coefficient by `g(conjugate value)` and synthesize.
///
/// This is the workhorse behind derivatives, kinetic phases, and per-bin
/// energy denominators.
pub fn apply_spectral_multiplier(
    f: &ComplexField,
    plan: &FftPlan,
    mut g: impl FnMut(f64) -> C64,
) -> ComplexField {
    let grid = *f.grid();
    let mut spec = to_spectrum(f, plan);
    for (m, v) in spec.iter_mut().enumerate() {
        *v *= g(grid.conjugate_value(m));
    }
    from_spectrum(grid, &spec, plan)
}

/// L2 norm evaluated in the conjugate domain (`sqrt(L * sum |f_hat|^2)`),
/// equal to the sample-domain norm by Parseval.
pub fn spectrum_l2_norm(grid: &Grid, spectrum: &[C64]) -> f64 {
    let sum: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum();
    libm::sqrt(grid.length() * sum)
}

/// DFT-based derivative of order 1 or 2 with periodic boundary semantics.
///
/// The order-1 multiplier at the Nyquist bin is ambiguous in sign, so that
/// bin is zeroed; order 2 keeps it with the real multiplier `-nyquist^2`.
pub fn spectral_derivative(f: &ComplexField, order: u32) -> Result<ComplexField> {
    let plan = FftPlan::new(f.grid().n());
    spectral_derivative_with(f, order, &plan)
}

/// [`spectral_derivative`] with a caller-supplied plan (hot loops).
pub fn spectral_derivative_with(f: &ComplexField, order: u32, plan: &FftPlan) -> Result<ComplexField> {
    if order != 1 && order != 2 {
        return Err(CoreError::UnsupportedOrder(order));
    }
    let axis = f.grid().axis();
    let n = f.grid().n();
    let nyquist_bin = n / 2;
    let grid = *f.grid();
    let mut spec = to_spectrum(f, plan);
    for (m, v) in spec.iter_mut().enumerate() {
        let kappa = grid.conjugate_value(m);
        // d/dx brings down +i k for exp(+ikx); d/dt brings down -i w for
        // exp(-iwt). Both give -kappa^2 at order 2.
        match order {
            1 => {
                if m == nyquist_bin {
                    *v = C64::new(0.0, 0.0);
                } else {
                    let sign = match axis {
                        Axis::Space => 1.0,
                        Axis::Time => -1.0,
                    };
                    *v *= C64::new(0.0, sign * kappa);
                }
            }
            _ => *v *= -kappa * kappa,
        }
    }
    Ok(from_spectrum(grid, &spec, plan))
}
