//! Forward/backward pair form of the relativistic dynamics, its validity
//! diagnostics, and the approximate single-component evolutions.
//!
//! With `chi = (i hbar d/dt - V) Phi`, the combinations
//! `Phi_pm = (Phi +- chi / (m c^2)) / 2` turn the first-order system into the
//! exactly equivalent coupled pair
//!
//! ```text
//! i hbar dPhi_pm/dt = +- m c^2 Phi_pm + V Phi_pm
//!                     +- (m c^2 Xi - hbar^2/(2m) d^2/dx^2)(Phi_+ + Phi_-)
//! ```
//!
//! Dropping the cross component from the coupling term decouples the rows
//! into two Schrodinger-type equations with the rest energy retained; the
//! `validity_margin_m` ratio quantifies how much cross-drive that dropping
//! ignores relative to what each row keeps.

use alloc::vec::Vec;

use crate::constants::Constants;
use crate::error::CoreError;
use crate::fft::FftPlan;
use crate::field::{l2_norm, ComplexField};
use crate::grid::{Axis, Grid};
use crate::kg::KgState;
use crate::potential::DynamicPotential;
use crate::spectral::{apply_spectral_multiplier, spectral_derivative_with};
use crate::Result;
use crate::C64;

/// Forward (`plus`) and backward (`minus`) components at a common time.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStateM {
    pub plus: ComplexField,
    pub minus: ComplexField,
    pub t: f64,
}

impl PairStateM {
    pub fn new(plus: ComplexField, minus: ComplexField, t: f64) -> Result<Self> {
        plus.grid().ensure_axis(Axis::Space)?;
        plus.grid().ensure_same(minus.grid())?;
        Ok(Self { plus, minus, t })
    }

    pub fn grid(&self) -> &Grid {
        self.plus.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.plus.is_finite() && self.minus.is_finite()
    }

    fn axpy(&mut self, s: f64, dplus: &ComplexField, dminus: &ComplexField) {
        let s = C64::new(s, 0.0);
        self.plus.axpy(s, dplus).expect("derivative grids match the state");
        self.minus.axpy(s, dminus).expect("derivative grids match the state");
    }
}

/// Report produced by the validity diagnostics: the worst cross-drive to
/// kept-drive ratio and whether it clears the caller's threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    pub ratio: f64,
    pub threshold: f64,
    pub ok: bool,
}

impl ValidityReport {
    pub fn new(ratio: f64, threshold: f64) -> Self {
        Self { ratio, threshold, ok: ratio <= threshold }
    }
}

/// Change of variables into the pair form (requires a massive particle).
pub fn pair_from_kg(state: &KgState, constants: &Constants) -> Result<PairStateM> {
    constants.require_mass()?;
    let inv = C64::new(1.0 / constants.rest_energy(), 0.0);
    let half = C64::new(0.5, 0.0);
    let scaled_chi = state.chi.scale(inv);
    let plus = state.phi.add(&scaled_chi)?.scale(half);
    let minus = state.phi.sub(&scaled_chi)?.scale(half);
    PairStateM::new(plus, minus, state.t)
}

/// Inverse change of variables: `Phi = Phi_+ + Phi_-`,
/// `chi = m c^2 (Phi_+ - Phi_-)`.
pub fn kg_from_pair(state: &PairStateM, constants: &Constants) -> Result<KgState> {
    constants.require_mass()?;
    let phi = state.plus.add(&state.minus)?;
    let chi = state.plus.sub(&state.minus)?.scale(C64::new(constants.rest_energy(), 0.0));
    KgState::new(phi, chi, state.t)
}

fn check_samples(n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(CoreError::TabulatedLength { expected: n, got: v.len() });
    }
    Ok(())
}

/// Time derivative of the coupled pair system at the state's own time.
pub fn pair_rhs_m(
    state: &PairStateM,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<(ComplexField, ComplexField)> {
    constants.require_mass()?;
    let grid = *state.grid();
    check_samples(grid.n(), v)?;
    let xi_now = xi.sample_space(&grid, state.t)?;
    let mc2 = constants.rest_energy();
    let half_hbar_sq_over_m = constants.hbar * constants.hbar / (2.0 * constants.mass);
    let minus_i_over_hbar = C64::new(0.0, -1.0 / constants.hbar);

    let sum = state.plus.add(&state.minus)?;
    let sum_xx = spectral_derivative_with(&sum, 2, plan)?;
    let plus = state.plus.values();
    let minus = state.minus.values();

    let mut dplus = Vec::with_capacity(grid.n());
    let mut dminus = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        let coupling = mc2 * xi_now[j] * sum.values()[j] - half_hbar_sq_over_m * sum_xx.values()[j];
        dplus.push(minus_i_over_hbar * ((mc2 + v[j]) * plus[j] + coupling));
        dminus.push(minus_i_over_hbar * ((-mc2 + v[j]) * minus[j] - coupling));
    }
    Ok((
        ComplexField::from_values(grid, dplus)?,
        ComplexField::from_values(grid, dminus)?,
    ))
}

/// One classical Runge-Kutta (fourth order) step of the coupled pair.
pub fn pair_step_m(
    state: &PairStateM,
    dt: f64,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<PairStateM> {
    let k1 = pair_rhs_m(state, v, xi, constants, plan)?;

    let mut s2 = state.clone();
    s2.t += 0.5 * dt;
    s2.axpy(0.5 * dt, &k1.0, &k1.1);
    let k2 = pair_rhs_m(&s2, v, xi, constants, plan)?;

    let mut s3 = state.clone();
    s3.t += 0.5 * dt;
    s3.axpy(0.5 * dt, &k2.0, &k2.1);
    let k3 = pair_rhs_m(&s3, v, xi, constants, plan)?;

    let mut s4 = state.clone();
    s4.t += dt;
    s4.axpy(dt, &k3.0, &k3.1);
    let k4 = pair_rhs_m(&s4, v, xi, constants, plan)?;

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

/// Worst-row ratio of dropped cross-drive to kept drive:
/// `|| (m c^2 Xi - hbar^2/(2m) d^2/dx^2) Phi_-+ || / || (m c^2 +- V) Phi_pm ||`
/// per row, skipping rows whose kept norm vanishes. Fails with
/// `UndefinedRatio` when both rows are empty.
pub fn validity_margin_m(
    state: &PairStateM,
    v: &[f64],
    xi: &DynamicPotential,
    threshold: f64,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<ValidityReport> {
    constants.require_mass()?;
    let grid = *state.grid();
    check_samples(grid.n(), v)?;
    let xi_now = xi.sample_space(&grid, state.t)?;
    let mc2 = constants.rest_energy();
    let half_hbar_sq_over_m = constants.hbar * constants.hbar / (2.0 * constants.mass);

    let coupling_of = |f: &ComplexField| -> Result<ComplexField> {
        let f_xx = spectral_derivative_with(f, 2, plan)?;
        let vals = (0..grid.n())
            .map(|j| mc2 * xi_now[j] * f.values()[j] - half_hbar_sq_over_m * f_xx.values()[j])
            .collect();
        ComplexField::from_values(grid, vals)
    };
    let kept_of = |f: &ComplexField, sign: f64| -> Result<ComplexField> {
        let vals = (0..grid.n()).map(|j| (mc2 + sign * v[j]) * f.values()[j]).collect();
        ComplexField::from_values(grid, vals)
    };

    let mut worst: Option<f64> = None;
    for (own, other, sign) in
        [(&state.plus, &state.minus, 1.0), (&state.minus, &state.plus, -1.0)]
    {
        let kept = l2_norm(&kept_of(own, sign)?);
        if kept == 0.0 {
            continue;
        }
        let cross = l2_norm(&coupling_of(other)?);
        let ratio = cross / kept;
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    match worst {
        Some(ratio) => Ok(ValidityReport::new(ratio, threshold)),
        None => Err(CoreError::UndefinedRatio),
    }
}

/// Strip the rest-energy rotation: `psi_pm = Phi_pm * exp(+-i m c^2 t / hbar)`,
/// leaving fields that vary on nonrelativistic time scales.
pub fn remove_rest_mass_phase(state: &PairStateM, constants: &Constants) -> Result<PairStateM> {
    constants.require_mass()?;
    let angle = constants.rest_energy() * state.t / constants.hbar;
    let plus = state.plus.scale(C64::new(0.0, angle).exp());
    let minus = state.minus.scale(C64::new(0.0, -angle).exp());
    PairStateM::new(plus, minus, state.t)
}

fn half_phase_factor(
    grid: &Grid,
    v: &[f64],
    xi_mid: &[f64],
    rest_sign: f64,
    dt: f64,
    constants: &Constants,
) -> Vec<C64> {
    let mc2 = constants.rest_energy();
    (0..grid.n())
        .map(|j| {
            let energy = rest_sign * mc2 * (1.0 + xi_mid[j]) + v[j];
            C64::new(0.0, -energy * dt / (2.0 * constants.hbar)).exp()
        })
        .collect()
}

fn split_step_component(
    field: &ComplexField,
    t: f64,
    dt: f64,
    v: &[f64],
    xi: &DynamicPotential,
    rest_sign: f64,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<ComplexField> {
    let grid = *field.grid();
    grid.ensure_axis(Axis::Space)?;
    check_samples(grid.n(), v)?;
    // rest_sign = 0 drops the rest term entirely (plain Schrodinger form);
    // then the modulation still enters through +m c^2 Xi.
    let xi_mid = xi.sample_space(&grid, t + 0.5 * dt)?;
    let mc2 = constants.rest_energy();
    let phase: Vec<C64> = if rest_sign == 0.0 {
        (0..grid.n())
            .map(|j| {
                let energy = v[j] + mc2 * xi_mid[j];
                C64::new(0.0, -energy * dt / (2.0 * constants.hbar)).exp()
            })
            .collect()
    } else {
        half_phase_factor(&grid, v, &xi_mid, rest_sign, dt, constants)
    };
    let kinetic_sign = if rest_sign < 0.0 { 1.0 } else { -1.0 };
    let mut out = field.clone();
    for (val, p) in out.values_mut().iter_mut().zip(phase.iter()) {
        *val *= p;
    }
    let half_hbar_over_m = constants.hbar / (2.0 * constants.mass);
    let out = apply_spectral_multiplier(&out, plan, |k| {
        C64::new(0.0, kinetic_sign * half_hbar_over_m * k * k * dt).exp()
    });
    let mut out = out;
    for (val, p) in out.values_mut().iter_mut().zip(phase.iter()) {
        *val *= p;
    }
    Ok(out)
}

/// One Strang-split step of the nonrelativistic evolution
/// `i hbar dpsi/dt = [V + m c^2 Xi - hbar^2/(2m) d^2/dx^2] psi`
/// (half potential phase, exact spectral kinetic sweep, half phase; the
/// modulation is frozen at the interval midpoint). Exactly norm-preserving.
pub fn schrodinger_step(
    psi: &ComplexField,
    t: f64,
    dt: f64,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<ComplexField> {
    constants.require_mass()?;
    split_step_component(psi, t, dt, v, xi, 0.0, constants, plan)
}

/// One Strang-split step of the decoupled pair rows with the rest energy
/// retained: row `pm` evolves under
/// `i hbar dPhi/dt = [+-m c^2 (1 + Xi) + V -+ hbar^2/(2m) d^2/dx^2] Phi`.
pub fn m_equation_with_mass_step(
    state: &PairStateM,
    dt: f64,
    v: &[f64],
    xi: &DynamicPotential,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<PairStateM> {
    constants.require_mass()?;
    let plus = split_step_component(&state.plus, state.t, dt, v, xi, 1.0, constants, plan)?;
    let minus = split_step_component(&state.minus, state.t, dt, v, xi, -1.0, constants, plan)?;
    PairStateM::new(plus, minus, state.t + dt)
}
