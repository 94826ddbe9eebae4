//! Exact relativistic evolution in first-order form.
//!
//! The second-order wave equation
//! `(i hbar d/dt - V)^2 Phi = [m^2 c^4 (1 + 2 Xi) - hbar^2 c^2 d^2/dx^2] Phi`
//! is reduced with the auxiliary field `chi = (i hbar d/dt - V) Phi` to
//!
//! ```text
//! i hbar dPhi/dt = V Phi + chi
//! i hbar dchi/dt = V chi + [m^2 c^4 (1 + 2 Xi) - hbar^2 c^2 d^2/dx^2] Phi
//! ```
//!
//! which this module integrates with classical fourth-order Runge-Kutta and
//! spectral space derivatives. Everything here is exact relativistic
//! dynamics; no slow-motion or weak-field approximation is made.

use alloc::vec::Vec;

use crate::constants::Constants;
use crate::dispersion::kg_dispersion_omega;
use crate::error::CoreError;
use crate::fft::FftPlan;
use crate::field::{l2_norm, ComplexField};
use crate::grid::{Axis, Grid};
use crate::potential::DynamicPotential;
use crate::spectral::{apply_spectral_multiplier, spectral_derivative_with};
use crate::Result;
use crate::C64;

/// Field pair `(Phi, chi)` at a common time.
#[derive(Debug, Clone, PartialEq)]
pub struct KgState {
    pub phi: ComplexField,
    pub chi: ComplexField,
    pub t: f64,
}

impl KgState {
    pub fn new(phi: ComplexField, chi: ComplexField, t: f64) -> Result<Self> {
        phi.grid().ensure_axis(Axis::Space)?;
        phi.grid().ensure_same(chi.grid())?;
        Ok(Self { phi, chi, t })
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.chi.is_finite()
    }

    fn axpy(&mut self, s: f64, dphi: &ComplexField, dchi: &ComplexField) {
        let s = C64::new(s, 0.0);
        self.phi.axpy(s, dphi).expect("derivative grids match the state");
        self.chi.axpy(s, dchi).expect("derivative grids match the state");
    }
}

fn check_samples(n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(CoreError::TabulatedLength { expected: n, got: v.len() });
    }
    Ok(())
}

/// Time derivative of the first-order system at the state's own time.
/// `v` holds `V(x_j)`; the dynamic modulation is sampled at `state.t`.
pub fn kg_rhs(
    state: &KgState,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<(ComplexField, ComplexField)> {
    let grid = *state.grid();
    check_samples(grid.n(), v)?;
    let xi_now = xi.sample_space(&grid, state.t)?;
    let m2c4 = constants.rest_energy() * constants.rest_energy();
    let h2c2 = constants.hbar * constants.hbar * constants.c * constants.c;
    let minus_i_over_hbar = C64::new(0.0, -1.0 / constants.hbar);

    let phi_xx = spectral_derivative_with(&state.phi, 2, plan)?;
    let phi = state.phi.values();
    let chi = state.chi.values();
    let lap = phi_xx.values();

    let mut dphi = Vec::with_capacity(grid.n());
    let mut dchi = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        dphi.push(minus_i_over_hbar * (v[j] * phi[j] + chi[j]));
        let mass_sq = m2c4 * (1.0 + 2.0 * xi_now[j]);
        dchi.push(minus_i_over_hbar * (v[j] * chi[j] + mass_sq * phi[j] - h2c2 * lap[j]));
    }
    Ok((
        ComplexField::from_values(grid, dphi)?,
        ComplexField::from_values(grid, dchi)?,
    ))
}

/// One classical Runge-Kutta (fourth order) step of size `dt`.
pub fn kg_step(
    state: &KgState,
    dt: f64,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<KgState> {
    let k1 = kg_rhs(state, v, xi, constants, plan)?;

    let mut s2 = state.clone();
    s2.t += 0.5 * dt;
    s2.axpy(0.5 * dt, &k1.0, &k1.1);
    let k2 = kg_rhs(&s2, v, xi, constants, plan)?;

    let mut s3 = state.clone();
    s3.t += 0.5 * dt;
    s3.axpy(0.5 * dt, &k2.0, &k2.1);
    let k3 = kg_rhs(&s3, v, xi, constants, plan)?;

    let mut s4 = state.clone();
    s4.t += dt;
    s4.axpy(dt, &k3.0, &k3.1);
    let k4 = kg_rhs(&s4, v, xi, constants, plan)?;

    let mut next = state.clone();
    next.t += dt;
    next.axpy(dt / 6.0, &k1.0, &k1.1);
    next.axpy(dt / 3.0, &k2.0, &k2.1);
    next.axpy(dt / 3.0, &k3.0, &k3.1);
    next.axpy(dt / 6.0, &k4.0, &k4.1);
    if !next.is_finite() {
        return Err(CoreError::Diverged { at: next.t });
    }
    Ok(next)
}

/// Initialize the auxiliary field so the state is purely forward-branch for
/// free evolution: per mode, `chi_hat(k) = hbar * omega(k) * phi_hat(k)`.
pub fn kg_init_forward(
    phi: &ComplexField,
    t: f64,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<KgState> {
    phi.grid().ensure_axis(Axis::Space)?;
    let chi = apply_spectral_multiplier(phi, plan, |k| {
        C64::new(constants.hbar * kg_dispersion_omega(k, constants), 0.0)
    });
    KgState::new(phi.clone(), chi, t)
}

/// Discrete quadratic invariant
/// `sum_j (|chi|^2 + m^2 c^4 |phi|^2 + hbar^2 c^2 |dphi/dx|^2) dx`.
///
/// It is exactly conserved by the continuous-time system when `Xi = 0` and
/// `V` is spatially constant, and serves as the drift diagnostic for the
/// integrator elsewhere.
pub fn kg_energy(state: &KgState, constants: &Constants, plan: &FftPlan) -> Result<f64> {
    let m2c4 = constants.rest_energy() * constants.rest_energy();
    let h2c2 = constants.hbar * constants.hbar * constants.c * constants.c;
    let phi_x = spectral_derivative_with(&state.phi, 1, plan)?;
    let dx = state.grid().spacing();
    let mut total = 0.0;
    for j in 0..state.grid().n() {
        total += state.chi.values()[j].norm_sqr()
            + m2c4 * state.phi.values()[j].norm_sqr()
            + h2c2 * phi_x.values()[j].norm_sqr();
    }
    Ok(total * dx)
}

/// Largest periodic distance from `center` at which the field still reaches
/// `rel_threshold` of its peak magnitude (0 for an identically zero field).
pub fn support_radius(f: &ComplexField, center: f64, rel_threshold: f64) -> f64 {
    let peak = f.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let cut = rel_threshold * peak;
    let grid = f.grid();
    let mut radius = 0.0f64;
    for (j, v) in f.values().iter().enumerate() {
        if v.norm() >= cut {
            radius = radius.max(grid.periodic_distance(grid.coord(j), center));
        }
    }
    radius
}

/// L2 mass of `f` strictly outside the light cone grown from a source of
/// radius `margin` at `x0`: the norm over `{ x : d(x, x0) > margin + c t }`.
pub fn light_cone_mass(
    f: &ComplexField,
    x0: f64,
    t: f64,
    margin: f64,
    constants: &Constants,
) -> f64 {
    let grid = f.grid();
    let reach = margin + constants.c * t;
    let dx = grid.spacing();
    let mut outside = 0.0;
    for (j, v) in f.values().iter().enumerate() {
        if grid.periodic_distance(grid.coord(j), x0) > reach {
            outside += v.norm_sqr() * dx;
        }
    }
    libm::sqrt(outside)
}

/// Conservative step bound for the explicit integrator: half the reciprocal
/// of the fastest attainable angular rate (Nyquist dispersion plus potential
/// and modulation contributions).
pub fn kg_stability_dt(grid: &Grid, v_max: f64, xi_max: f64, constants: &Constants) -> f64 {
    let omega_max = kg_dispersion_omega(grid.nyquist(), constants)
        + libm::fabs(v_max) / constants.hbar
        + 2.0 * libm::fabs(xi_max) * constants.rest_energy() / constants.hbar;
    0.5 / omega_max
}

/// Evolve by repeated steps until `t_final` (the last step is shortened to
/// land exactly), reporting divergence with the time it happened.
pub fn kg_evolve(
    state: &KgState,
    t_final: f64,
    dt: f64,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<KgState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::InvalidArgument(alloc::format!("step must be positive, got {dt}")));
    }
    let mut s = state.clone();
    while s.t < t_final - 1e-12 {
        let step = dt.min(t_final - s.t);
        s = kg_step(&s, step, v, xi, constants, plan)?;
    }
    Ok(s)
}

/// Cheap global size measure used by divergence monitoring and diagnostics.
pub fn kg_total_norm(state: &KgState) -> f64 {
    libm::sqrt(
        l2_norm(&state.phi) * l2_norm(&state.phi) + l2_norm(&state.chi) * l2_norm(&state.chi),
    )
}
