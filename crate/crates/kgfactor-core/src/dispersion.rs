//! Free-particle dispersion relations used as oracles and in mode
//! initialization.

use crate::constants::Constants;
use crate::Result;

/// Relativistic angular frequency of a free mode of wavenumber `k`:
/// `omega(k) = sqrt(c^2 k^2 + m^2 c^4 / hbar^2)`, the positive branch.
pub fn kg_dispersion_omega(k: f64, constants: &Constants) -> f64 {
    let ck = constants.c * k;
    let mc2_over_hbar = constants.rest_energy() / constants.hbar;
    libm::sqrt(ck * ck + mc2_over_hbar * mc2_over_hbar)
}

/// Nonrelativistic kinetic energy `E(k) = hbar^2 k^2 / 2m` (no rest energy).
/// Requires a massive particle.
pub fn schrodinger_dispersion_energy(k: f64, constants: &Constants) -> Result<f64> {
    constants.require_mass()?;
    Ok(constants.hbar * constants.hbar * k * k / (2.0 * constants.mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rest_frequency_at_zero_wavenumber() {
        let c = Constants::new(2.0, 3.0, 0.5).unwrap();
        let expected = c.rest_energy() / c.hbar;
        assert!((kg_dispersion_omega(0.0, &c) - expected).abs() < 1e-15);
    }

    #[test]
    fn massless_modes_ride_the_light_cone() {
        let c = Constants::new(1.0, 2.0, 0.0).unwrap();
        for k in [0.1, 1.0, 10.0] {
            assert!((kg_dispersion_omega(k, &c) - c.c * k).abs() < 1e-14);
        }
    }

    #[test]
    fn schrodinger_energy_requires_mass() {
        let massless = Constants::new(1.0, 1.0, 0.0).unwrap();
        assert!(schrodinger_dispersion_energy(1.0, &massless).is_err());
    }

    /// The small-k gap between the relativistic frequency (rest part removed)
    /// and the nonrelativistic energy scales like k^4: halving k shrinks the
    /// gap sixteenfold. This is the residual the approximate evolution drops.
    #[test]
    fn nonrelativistic_gap_scales_as_fourth_power() {
        let c = Constants::default();
        let gap = |k: f64| {
            let relativistic = c.hbar * kg_dispersion_omega(k, &c) - c.rest_energy();
            let nonrel = schrodinger_dispersion_energy(k, &c).unwrap();
            (relativistic - nonrel).abs()
        };
        let (g1, g2, g3) = (gap(0.2), gap(0.1), gap(0.05));
        assert!(g1 / g2 > 15.0 && g1 / g2 < 17.0, "ratio {}", g1 / g2);
        assert!(g2 / g3 > 15.0 && g2 / g3 < 17.0, "ratio {}", g2 / g3);
        // Leading coefficient: gap ~ hbar^4 k^4 / (8 m^3 c^2).
        let k: f64 = 0.05;
        let predicted = c.hbar.powi(4) * k.powi(4) / (8.0 * c.mass.powi(3) * c.c * c.c);
        assert!((gap(k) - predicted).abs() < 0.02 * predicted);
    }

    proptest! {
        /// omega(k) is even in k, at least the rest frequency, and at least
        /// the light-cone frequency c|k|.
        #[test]
        fn dispersion_bounds(k in -50.0f64..50.0, m in 0.0f64..5.0) {
            let c = Constants::new(1.0, 1.0, m).unwrap();
            let w = kg_dispersion_omega(k, &c);
            prop_assert!((w - kg_dispersion_omega(-k, &c)).abs() <= 1e-12 * w.max(1.0));
            prop_assert!(w + 1e-12 >= c.rest_energy() / c.hbar);
            prop_assert!(w + 1e-12 >= c.c * k.abs());
        }
    }
}
