//! Gaussian wavepacket construction on periodic grids.
//!
//! A packet is `A * exp(-(u - u0)^2 / (4 sigma^2))` times a carrier wave:
//! `exp(+i k0 x)` on space grids, `exp(-i w0 t)` on time grids, matching the
//! global mode conventions. `sigma` is the standard deviation of `|f|^2`, so
//! the intensity width is `sigma` and the amplitude rolls off with scale
//! `2 sigma^2` in the exponent above.

use crate::error::CoreError;
use crate::field::{l2_norm, ComplexField};
use crate::grid::{Axis, Grid};
use crate::Result;
use crate::C64;

/// Normalization policy for [`make_gaussian_packet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketScale {
    /// Peak amplitude equals the requested `amplitude`.
    Peak,
    /// L2 norm (`sqrt(sum |f|^2 du)`) equals the requested `amplitude`.
    UnitL2,
}

/// Parameters of a Gaussian packet; `center` and `width` live on the grid
/// coordinate, `carrier` on its conjugate (wavenumber or angular frequency).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketSpec {
    pub center: f64,
    pub width: f64,
    pub carrier: f64,
    pub amplitude: f64,
    pub scale: PacketScale,
}

impl WavepacketSpec {
    pub fn new(center: f64, width: f64, carrier: f64) -> Self {
        Self { center, width, carrier, amplitude: 1.0, scale: PacketScale::UnitL2 }
    }

    pub fn with_amplitude(mut self, amplitude: f64, scale: PacketScale) -> Self {
        self.amplitude = amplitude;
        self.scale = scale;
        self
    }
}

/// Build a Gaussian packet, rejecting configurations that do not fit the
/// periodic box: the envelope must be narrow against the box
/// (`width < length / 8`) and the carrier slow against the grid
/// (`|carrier| < nyquist / 4`), so that wrap-around tails and spectral
/// aliasing both sit far below the tolerances used throughout.
pub fn make_gaussian_packet(grid: Grid, spec: &WavepacketSpec) -> Result<ComplexField> {
    if !(spec.width.is_finite() && spec.width > 0.0) {
        return Err(CoreError::PacketDoesNotFit(alloc::format!(
            "width must be finite and positive, got {}",
            spec.width
        )));
    }
    if !(spec.center.is_finite() && spec.carrier.is_finite() && spec.amplitude.is_finite()) {
        return Err(CoreError::PacketDoesNotFit(alloc::format!(
            "center/carrier/amplitude must be finite, got {}/{}/{}",
            spec.center,
            spec.carrier,
            spec.amplitude
        )));
    }
    if spec.width >= grid.length() / 8.0 {
        return Err(CoreError::PacketDoesNotFit(alloc::format!(
            "width {} too large for box length {} (needs width < length/8)",
            spec.width,
            grid.length()
        )));
    }
    if libm::fabs(spec.carrier) >= grid.nyquist() / 4.0 {
        return Err(CoreError::PacketDoesNotFit(alloc::format!(
            "carrier {} too fast for grid nyquist {} (needs |carrier| < nyquist/4)",
            spec.carrier,
            grid.nyquist()
        )));
    }
    let carrier_sign = match grid.axis() {
        Axis::Space => 1.0,
        Axis::Time => -1.0,
    };
    let inv_four_sigma_sq = 1.0 / (4.0 * spec.width * spec.width);
    let field = ComplexField::from_fn(grid, |u| {
        let d = grid.periodic_distance(u, spec.center);
        let envelope = libm::exp(-d * d * inv_four_sigma_sq);
        let phase = carrier_sign * spec.carrier * (u - spec.center);
        envelope * C64::new(0.0, phase).exp()
    });
    let scale = match spec.scale {
        PacketScale::Peak => spec.amplitude,
        PacketScale::UnitL2 => {
            let norm = l2_norm(&field);
            if norm == 0.0 {
                return Err(CoreError::PacketDoesNotFit("zero-norm packet".into()));
            }
            spec.amplitude / norm
        }
    };
    Ok(field.scale(C64::new(scale, 0.0)))
}
