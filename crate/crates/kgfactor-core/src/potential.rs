//! Potential families: a static scalar potential `V(x)` and a dynamic
//! dimensionless modulation `Xi(x, t)` of the squared rest energy.
//!
//! Both can be sampled along a space grid (fields resolved in `x`, scalar
//! time) or along a time grid (fields resolved in `t` at a fixed position,
//! as in the spatially marched solver). Tabulated data is tied to specific
//! sample points, so it only supports the layout it was tabulated on.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::grid::{Axis, Grid};
use crate::Result;

/// Time-independent scalar potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum StaticPotential {
    Zero,
    Constant(f64),
    /// `depth * exp(-(x - center)^2 / (2 width^2))`; a negative depth is a
    /// well, positive a barrier. Distances use the periodic minimum image.
    GaussianBump { depth: f64, center: f64, width: f64 },
    /// `0.5 * strength * d(x, center)^2` with the periodic minimum image
    /// distance `d` (harmonic near the center, kinked at the far seam).
    Harmonic { strength: f64, center: f64 },
    /// One sample per space-grid point.
    Tabulated(Vec<f64>),
}

impl StaticPotential {
    /// Pointwise value at coordinate `x`. Tabulated data has no off-grid
    /// meaning, so it cannot be evaluated this way.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        match self {
            StaticPotential::Zero => Ok(0.0),
            StaticPotential::Constant(v0) => Ok(*v0),
            StaticPotential::GaussianBump { depth, center, width } => {
                let d = x - center;
                Ok(depth * libm::exp(-d * d / (2.0 * width * width)))
            }
            StaticPotential::Harmonic { strength, center } => {
                let d = x - center;
                Ok(0.5 * strength * d * d)
            }
            StaticPotential::Tabulated(_) => Err(CoreError::TabulatedPointEval),
        }
    }

    /// Sample on a space grid (periodic distances for the localized shapes).
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        grid.ensure_axis(Axis::Space)?;
        match self {
            StaticPotential::Tabulated(values) => {
                if values.len() != grid.n() {
                    return Err(CoreError::TabulatedLength { expected: grid.n(), got: values.len() });
                }
                Ok(values.clone())
            }
            StaticPotential::GaussianBump { depth, center, width } => Ok((0..grid.n())
                .map(|j| {
                    let d = grid.periodic_distance(grid.coord(j), *center);
                    depth * libm::exp(-d * d / (2.0 * width * width))
                })
                .collect()),
            StaticPotential::Harmonic { strength, center } => Ok((0..grid.n())
                .map(|j| {
                    let d = grid.periodic_distance(grid.coord(j), *center);
                    0.5 * strength * d * d
                })
                .collect()),
            _ => (0..grid.n()).map(|j| self.value_at(grid.coord(j))).collect(),
        }
    }

    /// Largest magnitude the potential attains (used in step-size bounds).
    pub fn max_abs(&self, grid: &Grid) -> Result<f64> {
        Ok(self
            .sample(grid)?
            .into_iter()
            .fold(0.0f64, |acc, v| acc.max(libm::fabs(v))))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, StaticPotential::Zero | StaticPotential::Constant(_))
    }
}

/// Time-dependent dimensionless modulation `Xi(x, t)`; the squared rest
/// energy in the wave operator is `m^2 c^4 (1 + 2 Xi)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicPotential {
    Zero,
    Constant(f64),
    /// `amplitude * cos(wavenumber * x) * cos(frequency * t)`.
    StandingWave { amplitude: f64, wavenumber: f64, frequency: f64 },
    /// `amplitude * cos(wavenumber * x - frequency * t)`.
    TravelingWave { amplitude: f64, wavenumber: f64, frequency: f64 },
    /// Frames on a space grid at times `t0 + i * frame_dt`, linearly
    /// interpolated in time; evaluation outside the tabulated span fails.
    Tabulated { t0: f64, frame_dt: f64, frames: Vec<Vec<f64>> },
}

impl DynamicPotential {
    /// Pointwise value at `(x, t)`; tabulated frames are grid-bound.
    pub fn value_at(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            DynamicPotential::Zero => Ok(0.0),
            DynamicPotential::Constant(v) => Ok(*v),
            DynamicPotential::StandingWave { amplitude, wavenumber, frequency } => {
                Ok(amplitude * libm::cos(wavenumber * x) * libm::cos(frequency * t))
            }
            DynamicPotential::TravelingWave { amplitude, wavenumber, frequency } => {
                Ok(amplitude * libm::cos(wavenumber * x - frequency * t))
            }
            DynamicPotential::Tabulated { .. } => Err(CoreError::TabulatedPointEval),
        }
    }

    /// Sample `Xi(x_j, t)` over a space grid at fixed time `t`.
    pub fn sample_space(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        grid.ensure_axis(Axis::Space)?;
        match self {
            DynamicPotential::Tabulated { t0, frame_dt, frames } => {
                if frames.is_empty() || frames.iter().any(|f| f.len() != grid.n()) {
                    let got = frames.first().map_or(0, |f| f.len());
                    return Err(CoreError::TabulatedLength { expected: grid.n(), got });
                }
                let span = frame_dt * (frames.len() - 1) as f64;
                let s = (t - t0) / frame_dt;
                if !(t >= t0 - 1e-12 && t <= t0 + span + 1e-12) {
                    return Err(CoreError::TabulatedOutOfRange { t });
                }
                let i0 = libm::floor(s).max(0.0) as usize;
                let i0 = i0.min(frames.len() - 1);
                let i1 = (i0 + 1).min(frames.len() - 1);
                let w = (s - i0 as f64).clamp(0.0, 1.0);
                Ok((0..grid.n())
                    .map(|j| (1.0 - w) * frames[i0][j] + w * frames[i1][j])
                    .collect())
            }
            _ => (0..grid.n()).map(|j| self.value_at(grid.coord(j), t)).collect(),
        }
    }

    /// Sample `Xi(x, t_j)` over a time grid at fixed position `x` (the
    /// marched-solver layout). Tabulated frames are space-indexed, so they
    /// are not available in this layout.
    pub fn sample_time(&self, grid: &Grid, x: f64) -> Result<Vec<f64>> {
        grid.ensure_axis(Axis::Time)?;
        (0..grid.n()).map(|j| self.value_at(x, grid.coord(j))).collect()
    }

    /// Largest magnitude over all space and time (used in step-size bounds).
    pub fn max_abs(&self) -> f64 {
        match self {
            DynamicPotential::Zero => 0.0,
            DynamicPotential::Constant(v) => libm::fabs(*v),
            DynamicPotential::StandingWave { amplitude, .. }
            | DynamicPotential::TravelingWave { amplitude, .. } => libm::fabs(*amplitude),
            DynamicPotential::Tabulated { frames, .. } => frames
                .iter()
                .flat_map(|f| f.iter())
                .fold(0.0f64, |acc, v| acc.max(libm::fabs(*v))),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DynamicPotential::Zero => true,
            DynamicPotential::Constant(v) => *v == 0.0,
            DynamicPotential::StandingWave { amplitude, .. }
            | DynamicPotential::TravelingWave { amplitude, .. } => *amplitude == 0.0,
            DynamicPotential::Tabulated { frames, .. } => {
                frames.iter().all(|f| f.iter().all(|v| *v == 0.0))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn static_shapes_match_their_formulas() {
        let g = Grid::space(64, 16.0).unwrap();
        let bump = StaticPotential::GaussianBump { depth: -2.0, center: 8.0, width: 1.5 };
        let v = bump.sample(&g).unwrap();
        let j = 32; // x = 8.0 exactly
        assert!((g.coord(j) - 8.0).abs() < 1e-12);
        assert!((v[j] + 2.0).abs() < 1e-12, "depth at the center");
        let harmonic = StaticPotential::Harmonic { strength: 3.0, center: 8.0 };
        let h = harmonic.sample(&g).unwrap();
        let x = g.coord(40);
        assert!((h[40] - 0.5 * 3.0 * (x - 8.0) * (x - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn tabulated_static_requires_matching_length() {
        let g = Grid::space(16, 4.0).unwrap();
        let bad = StaticPotential::Tabulated(vec![0.0; 8]);
        assert!(matches!(
            bad.sample(&g),
            Err(CoreError::TabulatedLength { expected: 16, got: 8 })
        ));
        assert!(matches!(bad.value_at(0.0), Err(CoreError::TabulatedPointEval)));
    }

    #[test]
    fn sampling_respects_the_grid_axis() {
        let tg = Grid::time(16, 4.0).unwrap();
        let v = StaticPotential::Constant(1.0);
        assert!(matches!(v.sample(&tg), Err(CoreError::WrongAxis { .. })));
        let xg = Grid::space(16, 4.0).unwrap();
        let xi = DynamicPotential::Constant(0.5);
        assert!(matches!(xi.sample_time(&xg, 0.0), Err(CoreError::WrongAxis { .. })));
    }

    #[test]
    fn standing_and_traveling_waves() {
        let xi_s = DynamicPotential::StandingWave { amplitude: 0.1, wavenumber: 2.0, frequency: 3.0 };
        let expected = 0.1 * libm::cos(2.0 * 0.7) * libm::cos(3.0 * 1.1);
        assert!((xi_s.value_at(0.7, 1.1).unwrap() - expected).abs() < 1e-15);
        let xi_t = DynamicPotential::TravelingWave { amplitude: 0.1, wavenumber: 2.0, frequency: 3.0 };
        // A traveling wave is constant along x = (frequency/wavenumber) t.
        let a = xi_t.value_at(0.0, 0.0).unwrap();
        let b = xi_t.value_at(3.0 / 2.0 * 0.9, 0.9).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn tabulated_dynamic_interpolates_linearly_and_bounds_time() {
        let g = Grid::space(8, 2.0).unwrap();
        let frames = vec![vec![0.0; 8], vec![1.0; 8]];
        let xi = DynamicPotential::Tabulated { t0: 0.0, frame_dt: 2.0, frames };
        let mid = xi.sample_space(&g, 0.5).unwrap();
        assert!((mid[3] - 0.25).abs() < 1e-12, "linear interpolation at t = 0.5");
        let at_end = xi.sample_space(&g, 2.0).unwrap();
        assert!((at_end[0] - 1.0).abs() < 1e-12);
        assert!(matches!(
            xi.sample_space(&g, 2.5),
            Err(CoreError::TabulatedOutOfRange { .. })
        ));
    }

    #[test]
    fn time_axis_sampling_fixes_position() {
        let tg = Grid::time(16, 8.0).unwrap();
        let xi = DynamicPotential::TravelingWave { amplitude: 0.2, wavenumber: 1.0, frequency: 2.0 };
        let at_z = xi.sample_time(&tg, 0.3).unwrap();
        for (j, v) in at_z.iter().enumerate() {
            let expected = 0.2 * libm::cos(0.3 - 2.0 * tg.coord(j));
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn max_abs_bounds_every_sample() {
        let g = Grid::space(64, 16.0).unwrap();
        let xi = DynamicPotential::StandingWave { amplitude: -0.3, wavenumber: 1.0, frequency: 1.0 };
        assert!((xi.max_abs() - 0.3).abs() < 1e-15);
        for t in [0.0, 0.4, 1.9] {
            for v in xi.sample_space(&g, t).unwrap() {
                assert!(v.abs() <= xi.max_abs() + 1e-15);
            }
        }
    }
}
