//! Spatially marched form: fields resolved in time (and optionally a
//! transverse coordinate) are advanced plane by plane along the propagation
//! coordinate `z`.
//!
//! Per angular-frequency bin the weight is the on-shell longitudinal energy
//! `Ebar(w) = sqrt(hbar^2 w^2 - m^2 c^4)` (positive root). Bins with
//! `|hbar w| <= m c^2 (1 + eps)` are evanescent: they have no propagating
//! longitudinal wavenumber, so they are masked, and any field content inside
//! the mask beyond a tiny tolerance is a hard error rather than silently
//! wrong physics.
//!
//! The coupled march reads (`S = Phi_+ + Phi_-`, `InvE = 1/Ebar` per bin,
//! applied after all products):
//!
//! ```text
//! dPhi_pm/dz = +- (1/c) dPhi_pm/dt
//!              +- InvE[ (1/c) V dS/dt
//!                       + (i hbar c / 2) Lap_T S
//!                       + (i / 2 hbar c)(V^2 - i hbar dV/dt - 2 m^2 c^4 Xi) S ]
//! ```
//!
//! Its leading advection is massless translation; the `ExactOmega` stepping
//! mode replaces that leading phase with the on-shell one `exp(+-i Ebar dz /
//! (hbar c))`, which coincides with the literal phase at zero mass for
//! negative-frequency content.

use alloc::vec;
use alloc::vec::Vec;

use crate::constants::Constants;
use crate::error::CoreError;
use crate::fft::FftPlan;
use crate::field::ComplexField;
use crate::grid::{Axis, Grid};
use crate::pair_m::ValidityReport;
use crate::potential::{DynamicPotential, StaticPotential};
use crate::spectral::{from_spectrum, spectral_derivative_with, to_spectrum};
use crate::Result;
use crate::C64;

/// Relative half-width of the evanescent mask around the mass shell.
pub const EVANESCENT_EPS: f64 = 1e-6;
/// Largest tolerated fraction of field amplitude inside the mask.
pub const EVANESCENT_TOLERANCE: f64 = 1e-10;

/// Leading-phase convention of the split march.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMode {
    /// Advect with the equation's own massless leading term.
    Literal,
    /// Advect each bin with the on-shell phase `exp(+-i Ebar dz / (hbar c))`.
    ExactOmega,
}

/// On-shell longitudinal energy of one propagating bin.
pub fn ebar(omega: f64, constants: &Constants) -> Result<f64> {
    let hw = constants.hbar * omega;
    let mc2 = constants.rest_energy();
    if libm::fabs(hw) <= mc2 * (1.0 + EVANESCENT_EPS) {
        return Err(CoreError::EvanescentBin { omega });
    }
    Ok(libm::sqrt(hw * hw - mc2 * mc2))
}

/// Per-bin `Ebar` table for a time grid, with the evanescent mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EbarSpectrum {
    values: Vec<f64>,
    masked: Vec<bool>,
}

impl EbarSpectrum {
    pub fn new(tgrid: &Grid, constants: &Constants) -> Result<Self> {
        tgrid.ensure_axis(Axis::Time)?;
        let mc2 = constants.rest_energy();
        let mut values = Vec::with_capacity(tgrid.n());
        let mut masked = Vec::with_capacity(tgrid.n());
        for m in 0..tgrid.n() {
            let hw = constants.hbar * tgrid.conjugate_value(m);
            if libm::fabs(hw) <= mc2 * (1.0 + EVANESCENT_EPS) {
                values.push(0.0);
                masked.push(true);
            } else {
                values.push(libm::sqrt(hw * hw - mc2 * mc2));
                masked.push(false);
            }
        }
        Ok(Self { values, masked })
    }

    pub fn is_masked(&self, bin: usize) -> bool {
        self.masked[bin]
    }

    /// `Ebar` of a kept bin; `None` inside the mask.
    pub fn value(&self, bin: usize) -> Option<f64> {
        if self.masked[bin] {
            None
        } else {
            Some(self.values[bin])
        }
    }

    /// Smallest `Ebar` over kept bins (None when everything is masked).
    pub fn min_kept(&self) -> Option<f64> {
        self.values
            .iter()
            .zip(&self.masked)
            .filter(|(_, m)| !**m)
            .map(|(v, _)| *v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }
}

/// Plans and tables shared by every marched-solver call on one layout.
pub struct PWorkspace {
    pub t_plan: FftPlan,
    pub transverse_plan: Option<FftPlan>,
    pub ebar: EbarSpectrum,
}

impl PWorkspace {
    pub fn new(tgrid: &Grid, transverse: Option<&Grid>, constants: &Constants) -> Result<Self> {
        tgrid.ensure_axis(Axis::Time)?;
        if let Some(g) = transverse {
            g.ensure_axis(Axis::Space)?;
        }
        Ok(Self {
            t_plan: FftPlan::new(tgrid.n()),
            transverse_plan: transverse.map(|g| FftPlan::new(g.n())),
            ebar: EbarSpectrum::new(tgrid, constants)?,
        })
    }
}

/// Field at one `z`: a time-resolved plane per transverse grid point (a
/// single plane when there is no transverse coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct PField {
    tgrid: Grid,
    transverse: Option<Grid>,
    planes: Vec<ComplexField>,
}

impl PField {
    pub fn new(tgrid: Grid, transverse: Option<Grid>, planes: Vec<ComplexField>) -> Result<Self> {
        tgrid.ensure_axis(Axis::Time)?;
        let expected = match &transverse {
            Some(g) => {
                g.ensure_axis(Axis::Space)?;
                g.n()
            }
            None => 1,
        };
        if planes.len() != expected {
            return Err(CoreError::InvalidArgument(alloc::format!(
                "expected {expected} planes, got {}",
                planes.len()
            )));
        }
        for p in &planes {
            p.grid().ensure_same(&tgrid)?;
        }
        Ok(Self { tgrid, transverse, planes })
    }

    /// Purely longitudinal field (no transverse coordinate).
    pub fn single(plane: ComplexField) -> Result<Self> {
        let tgrid = *plane.grid();
        Self::new(tgrid, None, vec![plane])
    }

    pub fn zeros(tgrid: Grid, transverse: Option<Grid>) -> Result<Self> {
        let count = transverse.as_ref().map_or(1, |g| g.n());
        Self::new(tgrid, transverse, vec![ComplexField::zeros(tgrid); count])
    }

    pub fn tgrid(&self) -> &Grid {
        &self.tgrid
    }

    pub fn transverse(&self) -> Option<&Grid> {
        self.transverse.as_ref()
    }

    pub fn planes(&self) -> &[ComplexField] {
        &self.planes
    }

    pub fn planes_mut(&mut self) -> &mut [ComplexField] {
        &mut self.planes
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        self.tgrid.ensure_same(&other.tgrid)?;
        match (&self.transverse, &other.transverse) {
            (None, None) => Ok(()),
            (Some(a), Some(b)) => a.ensure_same(b),
            _ => Err(CoreError::GridMismatch),
        }
    }

    pub fn map_planes(&self, mut f: impl FnMut(&ComplexField) -> ComplexField) -> Self {
        Self {
            tgrid: self.tgrid,
            transverse: self.transverse,
            planes: self.planes.iter().map(|p| f(p)).collect(),
        }
    }

    pub fn try_map_planes(
        &self,
        mut f: impl FnMut(&ComplexField) -> Result<ComplexField>,
    ) -> Result<Self> {
        let mut planes = Vec::with_capacity(self.planes.len());
        for p in &self.planes {
            planes.push(f(p)?);
        }
        Ok(Self { tgrid: self.tgrid, transverse: self.transverse, planes })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let planes = self
            .planes
            .iter()
            .zip(&other.planes)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tgrid: self.tgrid, transverse: self.transverse, planes })
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_planes(|p| p.scale(s))
    }

    pub fn axpy(&mut self, s: C64, other: &Self) -> Result<()> {
        self.compatible(other)?;
        for (a, b) in self.planes.iter_mut().zip(&other.planes) {
            a.axpy(s, b)?;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.planes.iter().all(|p| p.is_finite())
    }

    /// L2 norm over time and (when present) the transverse coordinate.
    pub fn norm(&self) -> f64 {
        let dy = self.transverse.as_ref().map_or(1.0, |g| g.spacing());
        let sum: f64 = self
            .planes
            .iter()
            .map(|p| {
                let n = crate::field::l2_norm(p);
                n * n
            })
            .sum();
        libm::sqrt(sum * dy)
    }
}

/// Norm of the difference (layout-checked).
pub fn p_l2_error(a: &PField, b: &PField) -> Result<f64> {
    a.compatible(b)?;
    let dy = a.transverse.as_ref().map_or(1.0, |g| g.spacing());
    let mut sum = 0.0;
    for (pa, pb) in a.planes.iter().zip(&b.planes) {
        let e = crate::field::l2_error(pa, pb)?;
        sum += e * e;
    }
    Ok(libm::sqrt(sum * dy))
}

/// Both march components at a common `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStateP {
    pub plus: PField,
    pub minus: PField,
    pub z: f64,
}

impl PairStateP {
    pub fn new(plus: PField, minus: PField, z: f64) -> Result<Self> {
        plus.compatible(&minus)?;
        Ok(Self { plus, minus, z })
    }

    pub fn is_finite(&self) -> bool {
        self.plus.is_finite() && self.minus.is_finite()
    }

    fn axpy(&mut self, s: f64, dplus: &PField, dminus: &PField) -> Result<()> {
        let s = C64::new(s, 0.0);
        self.plus.axpy(s, dplus)?;
        self.minus.axpy(s, dminus)?;
        Ok(())
    }
}

/// Potentials frozen on one plane: `V(t_j)` (here always the value at the
/// plane's own `z`, constant in `t`), its spectral time derivative, and the
/// modulation `Xi(z, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PPotentials {
    pub v: Vec<f64>,
    pub dv_dt: Vec<C64>,
    pub xi: Vec<f64>,
}

impl PPotentials {
    pub fn new(tgrid: &Grid, v: Vec<f64>, xi: Vec<f64>, plan: &FftPlan) -> Result<Self> {
        tgrid.ensure_axis(Axis::Time)?;
        if v.len() != tgrid.n() {
            return Err(CoreError::TabulatedLength { expected: tgrid.n(), got: v.len() });
        }
        if xi.len() != tgrid.n() {
            return Err(CoreError::TabulatedLength { expected: tgrid.n(), got: xi.len() });
        }
        let v_field = ComplexField::from_values(
            *tgrid,
            v.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )?;
        let dv_dt = spectral_derivative_with(&v_field, 1, plan)?.into_values();
        Ok(Self { v, dv_dt, xi })
    }
}

/// Sample the potential pair on a plane at position `z`. Tabulated inputs
/// are bound to a space grid that does not exist in this layout, so they
/// are rejected.
pub fn sample_p_potentials(
    v: &StaticPotential,
    xi: &DynamicPotential,
    tgrid: &Grid,
    z: f64,
    plan: &FftPlan,
) -> Result<PPotentials> {
    let v0 = v.value_at(z)?;
    let v_arr = vec![v0; tgrid.n()];
    let xi_arr = xi.sample_time(tgrid, z)?;
    PPotentials::new(tgrid, v_arr, xi_arr, plan)
}

/// Amplitude fraction of the field sitting inside the evanescent mask
/// (aggregated over planes).
pub fn evanescent_fraction(f: &PField, ws: &PWorkspace) -> f64 {
    let mut masked_power = 0.0;
    let mut total_power = 0.0;
    for plane in f.planes() {
        let spec = to_spectrum(plane, &ws.t_plan);
        for (m, v) in spec.iter().enumerate() {
            let p = v.norm_sqr();
            total_power += p;
            if ws.ebar.is_masked(m) {
                masked_power += p;
            }
        }
    }
    if total_power == 0.0 {
        0.0
    } else {
        libm::sqrt(masked_power / total_power)
    }
}

/// Guard used at march entry points: content inside the mask beyond
/// [`EVANESCENT_TOLERANCE`] cannot be propagated meaningfully.
pub fn ensure_propagating(f: &PField, ws: &PWorkspace) -> Result<()> {
    let fraction = evanescent_fraction(f, ws);
    if fraction > EVANESCENT_TOLERANCE {
        return Err(CoreError::EvanescentContent { fraction });
    }
    Ok(())
}

/// Divide by `Ebar` bin by bin, zeroing masked bins (their content is
/// guarded to be negligible before any march).
pub fn apply_inv_ebar_plane(f: &ComplexField, ws: &PWorkspace) -> ComplexField {
    let grid = *f.grid();
    let mut spec = to_spectrum(f, &ws.t_plan);
    for (m, v) in spec.iter_mut().enumerate() {
        match ws.ebar.value(m) {
            Some(e) => *v /= e,
            None => *v = C64::new(0.0, 0.0),
        }
    }
    from_spectrum(grid, &spec, &ws.t_plan)
}

/// [`apply_inv_ebar_plane`] over every plane.
pub fn apply_inv_ebar(f: &PField, ws: &PWorkspace) -> PField {
    f.map_planes(|p| apply_inv_ebar_plane(p, ws))
}

/// Transverse Laplacian across planes at each time sample (zero without a
/// transverse coordinate).
pub fn transverse_laplacian(f: &PField, ws: &PWorkspace) -> Result<PField> {
    let Some(tg) = f.transverse() else {
        return PField::zeros(*f.tgrid(), None);
    };
    let plan = ws
        .transverse_plan
        .as_ref()
        .ok_or_else(|| CoreError::InvalidArgument("workspace lacks a transverse plan".into()))?;
    let n_y = tg.n();
    let n_t = f.tgrid().n();
    let inv_n = 1.0 / n_y as f64;
    let mut out: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n_t]; n_y];
    let mut buf = vec![C64::new(0.0, 0.0); n_y];
    for j in 0..n_t {
        for (l, plane) in f.planes().iter().enumerate() {
            buf[l] = plane.values()[j];
        }
        plan.forward(&mut buf);
        for (m, v) in buf.iter_mut().enumerate() {
            let k = tg.conjugate_value(m);
            *v *= -k * k * inv_n;
        }
        plan.inverse(&mut buf);
        for (l, row) in out.iter_mut().enumerate() {
            row[j] = buf[l];
        }
    }
    let planes = out
        .into_iter()
        .map(|vals| ComplexField::from_values(*f.tgrid(), vals))
        .collect::<Result<Vec<_>>>()?;
    PField::new(*f.tgrid(), f.transverse().copied(), planes)
}

/// Plane-level part of the second-order remainder operator:
/// `W0 f = V^2 f - i hbar d(V f)/dt - V i hbar df/dt - 2 m^2 c^4 Xi f`.
pub fn apply_w_plane(
    f: &ComplexField,
    pot: &PPotentials,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<ComplexField> {
    let grid = *f.grid();
    grid.ensure_axis(Axis::Time)?;
    if pot.v.len() != grid.n() {
        return Err(CoreError::TabulatedLength { expected: grid.n(), got: pot.v.len() });
    }
    let hbar = constants.hbar;
    let m2c4 = constants.rest_energy() * constants.rest_energy();
    let df = spectral_derivative_with(f, 1, plan)?;
    // d(Vf)/dt expanded with the product rule keeps the derivative data
    // band-limited: (dV/dt) f + V df/dt, with dV/dt precomputed spectrally.
    let i_hbar = C64::new(0.0, hbar);
    let vals = (0..grid.n())
        .map(|j| {
            let v = pot.v[j];
            let d_vf = pot.dv_dt[j] * f.values()[j] + v * df.values()[j];
            v * v * f.values()[j] - i_hbar * d_vf - v * i_hbar * df.values()[j]
                - 2.0 * m2c4 * pot.xi[j] * f.values()[j]
        })
        .collect();
    ComplexField::from_values(grid, vals)
}

/// Full remainder operator `W f = hbar^2 c^2 Lap_T f + W0 f`.
pub fn apply_w(
    f: &PField,
    pot: &PPotentials,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PField> {
    let mut out = f.try_map_planes(|p| apply_w_plane(p, pot, constants, &ws.t_plan))?;
    if f.transverse().is_some() {
        let lap = transverse_laplacian(f, ws)?;
        let h2c2 = constants.hbar * constants.hbar * constants.c * constants.c;
        out.axpy(C64::new(h2c2, 0.0), &lap)?;
    }
    Ok(out)
}

/// The `InvE[...]` interaction drive built from a source field `s`
/// (`S = Phi_+ + Phi_-` in the coupled march):
/// `InvE[(1/c) V ds/dt + (i hbar c/2) Lap_T s
///       + (i/2 hbar c)(V^2 - i hbar dV/dt - 2 m^2 c^4 Xi) s]`.
fn interaction_drive(
    s: &PField,
    pot: &PPotentials,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PField> {
    let grid = *s.tgrid();
    if pot.v.len() != grid.n() {
        return Err(CoreError::TabulatedLength { expected: grid.n(), got: pot.v.len() });
    }
    let inv_c = 1.0 / constants.c;
    let poly_coef = C64::new(0.0, 1.0 / (2.0 * constants.hbar * constants.c));
    let i_hbar = C64::new(0.0, constants.hbar);
    let m2c4 = constants.rest_energy() * constants.rest_energy();

    let mut bracket = s.try_map_planes(|plane| {
        let ds = spectral_derivative_with(plane, 1, &ws.t_plan)?;
        let vals = (0..grid.n())
            .map(|j| {
                let v = pot.v[j];
                let poly = C64::new(v * v - 2.0 * m2c4 * pot.xi[j], 0.0) - i_hbar * pot.dv_dt[j];
                inv_c * v * ds.values()[j] + poly_coef * poly * plane.values()[j]
            })
            .collect();
        ComplexField::from_values(grid, vals)
    })?;
    if s.transverse().is_some() {
        let lap = transverse_laplacian(s, ws)?;
        let lap_coef = C64::new(0.0, constants.hbar * constants.c / 2.0);
        bracket.axpy(lap_coef, &lap)?;
    }
    Ok(apply_inv_ebar(&bracket, ws))
}

/// `(1/c) d/dt` of every plane.
fn advection_term(f: &PField, constants: &Constants, ws: &PWorkspace) -> Result<PField> {
    let inv_c = C64::new(1.0 / constants.c, 0.0);
    f.try_map_planes(|plane| {
        Ok(spectral_derivative_with(plane, 1, &ws.t_plan)?.scale(inv_c))
    })
}

/// `z` derivative of the coupled march.
pub fn p_pair_rhs(
    state: &PairStateP,
    pot: &PPotentials,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<(PField, PField)> {
    let s = state.plus.add(&state.minus)?;
    let common = interaction_drive(&s, pot, constants, ws)?;
    let mut dplus = advection_term(&state.plus, constants, ws)?;
    dplus.axpy(C64::new(1.0, 0.0), &common)?;
    let mut dminus = advection_term(&state.minus, constants, ws)?;
    dminus.axpy(C64::new(1.0, 0.0), &common)?;
    Ok((dplus, dminus.scale(C64::new(-1.0, 0.0))))
}

/// `z` derivative of the forward-only approximation (the backward component
/// is dropped from the interaction source).
pub fn p_forward_rhs(
    f: &PField,
    pot: &PPotentials,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PField> {
    let common = interaction_drive(f, pot, constants, ws)?;
    let mut d = advection_term(f, constants, ws)?;
    d.axpy(C64::new(1.0, 0.0), &common)?;
    Ok(d)
}

/// First-order-in-`V` marching rate of a propagating bin under the literal
/// convention: `K(w) = (w/c)(1 + V / Ebar(w))`.
pub fn reference_wavevector(omega: f64, v0: f64, constants: &Constants) -> Result<f64> {
    let e = ebar(omega, constants)?;
    Ok(omega / constants.c * (1.0 + v0 / e))
}

/// Exact free march: each bin advances with its on-shell phase,
/// `Phi_+ -> exp(+i Ebar dz/(hbar c)) Phi_+` and the conjugate sign for
/// `Phi_-`. Fails if the state carries evanescent content.
pub fn p_exact_free_march(
    state: &PairStateP,
    dz: f64,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PairStateP> {
    ensure_propagating(&state.plus, ws)?;
    ensure_propagating(&state.minus, ws)?;
    let phase = |sign: f64, plane: &ComplexField| -> ComplexField {
        let grid = *plane.grid();
        let mut spec = to_spectrum(plane, &ws.t_plan);
        for (m, v) in spec.iter_mut().enumerate() {
            if let Some(e) = ws.ebar.value(m) {
                *v *= C64::new(0.0, sign * e * dz / (constants.hbar * constants.c)).exp();
            }
        }
        from_spectrum(grid, &spec, &ws.t_plan)
    };
    let plus = state.plus.map_planes(|p| phase(1.0, p));
    let minus = state.minus.map_planes(|p| phase(-1.0, p));
    PairStateP::new(plus, minus, state.z + dz)
}

/// Worst-row ratio of the dropped cross-component drive to the row's kept
/// drive; rows with vanishing kept drive are skipped, and a state with no
/// defined row is an error.
pub fn validity_margin_p(
    state: &PairStateP,
    pot: &PPotentials,
    threshold: f64,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<ValidityReport> {
    let mut worst: Option<f64> = None;
    for (own, other) in [(&state.plus, &state.minus), (&state.minus, &state.plus)] {
        let mut kept = advection_term(own, constants, ws)?;
        kept.axpy(C64::new(1.0, 0.0), &interaction_drive(own, pot, constants, ws)?)?;
        let kept_norm = kept.norm();
        if kept_norm == 0.0 {
            continue;
        }
        let cross_norm = interaction_drive(other, pot, constants, ws)?.norm();
        let ratio = cross_norm / kept_norm;
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    match worst {
        Some(ratio) => Ok(ValidityReport::new(ratio, threshold)),
        None => Err(CoreError::UndefinedRatio),
    }
}

fn leading_phase(
    f: &PField,
    sign: f64,
    dz: f64,
    mode: PMode,
    constants: &Constants,
    ws: &PWorkspace,
) -> PField {
    f.map_planes(|plane| {
        let grid = *plane.grid();
        let mut spec = to_spectrum(plane, &ws.t_plan);
        for (m, v) in spec.iter_mut().enumerate() {
            let angle = match mode {
                // d/dz = +-(1/c) d/dt is, per bin, -+ i w / c.
                PMode::Literal => -sign * grid.conjugate_value(m) * dz / constants.c,
                PMode::ExactOmega => match ws.ebar.value(m) {
                    Some(e) => sign * e * dz / (constants.hbar * constants.c),
                    None => 0.0,
                },
            };
            *v *= C64::new(0.0, angle).exp();
        }
        from_spectrum(grid, &spec, &ws.t_plan)
    })
}

/// Interaction remainder integrated between the leading half-phases. The
/// phase convention does not change it: `Literal` and `ExactOmega` marches
/// share the interaction terms and differ only in how the free part
/// advances (equation-as-written translation versus on-shell phase).
fn p_interaction_rhs(
    state: &PairStateP,
    pot: &PPotentials,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<(PField, PField)> {
    let s = state.plus.add(&state.minus)?;
    let common = interaction_drive(&s, pot, constants, ws)?;
    Ok((common.clone(), common.scale(C64::new(-1.0, 0.0))))
}

/// One split step: half leading phase, one Runge-Kutta sweep of the
/// interaction remainder with potentials frozen at the interval midpoint,
/// half leading phase. Entry states carrying evanescent content are
/// rejected.
pub fn p_step_split(
    state: &PairStateP,
    dz: f64,
    v: &StaticPotential,
    xi: &DynamicPotential,
    mode: PMode,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PairStateP> {
    ensure_propagating(&state.plus, ws)?;
    ensure_propagating(&state.minus, ws)?;
    let pot = sample_p_potentials(v, xi, state.plus.tgrid(), state.z + 0.5 * dz, &ws.t_plan)?;

    let plus = leading_phase(&state.plus, 1.0, 0.5 * dz, mode, constants, ws);
    let minus = leading_phase(&state.minus, -1.0, 0.5 * dz, mode, constants, ws);
    let mut mid = PairStateP::new(plus, minus, state.z)?;

    // Runge-Kutta on the frozen-coefficient interaction remainder.
    let k1 = p_interaction_rhs(&mid, &pot, constants, ws)?;
    let mut s2 = mid.clone();
    s2.axpy(0.5 * dz, &k1.0, &k1.1)?;
    let k2 = p_interaction_rhs(&s2, &pot, constants, ws)?;
    let mut s3 = mid.clone();
    s3.axpy(0.5 * dz, &k2.0, &k2.1)?;
    let k3 = p_interaction_rhs(&s3, &pot, constants, ws)?;
    let mut s4 = mid.clone();
    s4.axpy(dz, &k3.0, &k3.1)?;
    let k4 = p_interaction_rhs(&s4, &pot, constants, ws)?;
    mid.axpy(dz / 6.0, &k1.0, &k1.1)?;
    mid.axpy(dz / 3.0, &k2.0, &k2.1)?;
    mid.axpy(dz / 3.0, &k3.0, &k3.1)?;
    mid.axpy(dz / 6.0, &k4.0, &k4.1)?;

    let plus = leading_phase(&mid.plus, 1.0, 0.5 * dz, mode, constants, ws);
    let minus = leading_phase(&mid.minus, -1.0, 0.5 * dz, mode, constants, ws);
    let next = PairStateP::new(plus, minus, state.z + dz)?;
    if !next.is_finite() {
        return Err(CoreError::Diverged { at: next.z });
    }
    Ok(next)
}

/// One split step of the one-way (forward-only) march: the backward
/// component is dropped, so the interaction source is the forward field
/// itself. Same split structure as `p_step_split`.
pub fn p_step_forward_split(
    f: &PField,
    z: f64,
    dz: f64,
    v: &StaticPotential,
    xi: &DynamicPotential,
    mode: PMode,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PField> {
    ensure_propagating(f, ws)?;
    let pot = sample_p_potentials(v, xi, f.tgrid(), z + 0.5 * dz, &ws.t_plan)?;
    let mut mid = leading_phase(f, 1.0, 0.5 * dz, mode, constants, ws);
    let k1 = interaction_drive(&mid, &pot, constants, ws)?;
    let mut s2 = mid.clone();
    s2.axpy(C64::new(0.5 * dz, 0.0), &k1)?;
    let k2 = interaction_drive(&s2, &pot, constants, ws)?;
    let mut s3 = mid.clone();
    s3.axpy(C64::new(0.5 * dz, 0.0), &k2)?;
    let k3 = interaction_drive(&s3, &pot, constants, ws)?;
    let mut s4 = mid.clone();
    s4.axpy(C64::new(dz, 0.0), &k3)?;
    let k4 = interaction_drive(&s4, &pot, constants, ws)?;
    mid.axpy(C64::new(dz / 6.0, 0.0), &k1)?;
    mid.axpy(C64::new(dz / 3.0, 0.0), &k2)?;
    mid.axpy(C64::new(dz / 3.0, 0.0), &k3)?;
    mid.axpy(C64::new(dz / 6.0, 0.0), &k4)?;
    let next = leading_phase(&mid, 1.0, 0.5 * dz, mode, constants, ws);
    if !next.is_finite() {
        return Err(CoreError::Diverged { at: z + dz });
    }
    Ok(next)
}

/// One plain Runge-Kutta step of the full literal march (potentials sampled
/// at every substage position). Used for order-of-accuracy checks and as an
/// alternative to the split step.
pub fn p_step_rk4(
    state: &PairStateP,
    dz: f64,
    v: &StaticPotential,
    xi: &DynamicPotential,
    constants: &Constants,
    ws: &PWorkspace,
) -> Result<PairStateP> {
    let tgrid = *state.plus.tgrid();
    let rhs = |s: &PairStateP, z: f64| -> Result<(PField, PField)> {
        let pot = sample_p_potentials(v, xi, &tgrid, z, &ws.t_plan)?;
        p_pair_rhs(s, &pot, constants, ws)
    };
    let k1 = rhs(state, state.z)?;
    let mut s2 = state.clone();
    s2.axpy(0.5 * dz, &k1.0, &k1.1)?;
    let k2 = rhs(&s2, state.z + 0.5 * dz)?;
    let mut s3 = state.clone();
    s3.axpy(0.5 * dz, &k2.0, &k2.1)?;
    let k3 = rhs(&s3, state.z + 0.5 * dz)?;
    let mut s4 = state.clone();
    s4.axpy(dz, &k3.0, &k3.1)?;
    let k4 = rhs(&s4, state.z + dz)?;
    let mut next = state.clone();
    next.z += dz;
    next.axpy(dz / 6.0, &k1.0, &k1.1)?;
    next.axpy(dz / 3.0, &k2.0, &k2.1)?;
    next.axpy(dz / 3.0, &k3.0, &k3.1)?;
    next.axpy(dz / 6.0, &k4.0, &k4.1)?;
    if !next.is_finite() {
        return Err(CoreError::Diverged { at: next.z });
    }
    Ok(next)
}

/// Conservative step bound for the marched integrators: half the reciprocal
/// of the largest per-bin rate the operator can produce on kept bins.
pub fn p_stability_dz(
    tgrid: &Grid,
    transverse: Option<&Grid>,
    v_max: f64,
    xi_max: f64,
    constants: &Constants,
) -> Result<f64> {
    let ebar = EbarSpectrum::new(tgrid, constants)?;
    let e_min = ebar.min_kept().ok_or(CoreError::EvanescentBin { omega: 0.0 })?;
    let w_nyq = tgrid.nyquist();
    let c = constants.c;
    let hbar = constants.hbar;
    let m2c4 = constants.rest_energy() * constants.rest_energy();
    let k_t_sq = transverse.map_or(0.0, |g| g.nyquist() * g.nyquist());
    let rate = w_nyq / c
        + libm::fabs(v_max) * hbar * w_nyq / (c * e_min) / hbar
        + hbar * c * k_t_sq / (2.0 * e_min)
        + (v_max * v_max + libm::fabs(v_max) * hbar * w_nyq + 2.0 * m2c4 * libm::fabs(xi_max))
            / (2.0 * hbar * c * e_min);
    Ok(0.5 / rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{make_gaussian_packet, WavepacketSpec};
    use alloc::vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn consts() -> Constants {
        Constants::default()
    }

    /// Time-axis packet with negative carrier frequency, the convention
    /// where literal and on-shell advection agree at zero mass.
    fn p_packet(tgrid: Grid, omega0: f64, sigma_t: f64) -> PField {
        let plane = make_gaussian_packet(
            tgrid,
            &WavepacketSpec::new(tgrid.length() / 2.0, sigma_t, omega0),
        )
        .unwrap();
        PField::single(plane).unwrap()
    }

    fn forward_state(tgrid: Grid, omega0: f64, sigma_t: f64) -> PairStateP {
        let plus = p_packet(tgrid, omega0, sigma_t);
        let minus = PField::zeros(tgrid, None).unwrap();
        PairStateP::new(plus, minus, 0.0).unwrap()
    }

    #[test]
    fn ebar_takes_the_positive_root_and_masks_the_shell() {
        let c = consts();
        let w = libm::sqrt(2.0);
        assert!((ebar(w, &c).unwrap() - 1.0).abs() < 1e-14);
        assert!((ebar(-w, &c).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(ebar(0.5, &c), Err(CoreError::EvanescentBin { .. })));
        assert!(matches!(ebar(1.0, &c), Err(CoreError::EvanescentBin { .. })));
        // Massless: every nonzero frequency propagates with Ebar = hbar|w|.
        let massless = Constants::new(1.0, 1.0, 0.0).unwrap();
        assert!((ebar(-3.0, &massless).unwrap() - 3.0).abs() < 1e-14);
    }

    /// First-order-in-V marching rate: m = 1, w = sqrt(2), V = 0.1 gives
    /// sqrt(2) * 1.1 = 1.5556...
    #[test]
    fn reference_wavevector_matches_the_worked_value() {
        let c = consts();
        let k = reference_wavevector(libm::sqrt(2.0), 0.1, &c).unwrap();
        assert!((k - 1.1 * libm::sqrt(2.0)).abs() < 1e-12);
        assert!((k - 1.5556).abs() < 1e-4);
    }

    /// Dividing by Ebar inverts multiplying by Ebar on propagating content.
    #[test]
    fn inv_ebar_inverts_ebar_on_kept_bins() {
        let tgrid = Grid::time(1024, 256.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let f = p_packet(tgrid, -2.0, 8.0);
        let plane = &f.planes()[0];
        let mut spec = to_spectrum(plane, &ws.t_plan);
        for (m, v) in spec.iter_mut().enumerate() {
            if let Some(e) = ws.ebar.value(m) {
                *v *= e;
            } else {
                *v = C64::new(0.0, 0.0);
            }
        }
        let scaled = from_spectrum(tgrid, &spec, &ws.t_plan);
        let back = apply_inv_ebar_plane(&scaled, &ws);
        assert!(crate::field::l2_error(&back, plane).unwrap() < 1e-12);
    }

    /// A packet centered inside the mass shell cannot be marched.
    #[test]
    fn evanescent_content_is_rejected() {
        let tgrid = Grid::time(1024, 256.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let trapped = p_packet(tgrid, -0.3, 8.0);
        assert!(evanescent_fraction(&trapped, &ws) > 0.9);
        assert!(matches!(
            ensure_propagating(&trapped, &ws),
            Err(CoreError::EvanescentContent { .. })
        ));
        let state = PairStateP::new(trapped, PField::zeros(tgrid, None).unwrap(), 0.0).unwrap();
        assert!(matches!(
            p_step_split(
                &state,
                0.05,
                &StaticPotential::Zero,
                &DynamicPotential::Zero,
                PMode::Literal,
                &c,
                &ws
            ),
            Err(CoreError::EvanescentContent { .. })
        ));
        let fine = p_packet(tgrid, -2.0, 8.0);
        assert!(evanescent_fraction(&fine, &ws) < EVANESCENT_TOLERANCE);
    }

    /// On a single mode exp(-iwt) with constant V the plane-level remainder
    /// operator is the scalar V^2 - 2 hbar w V.
    #[test]
    fn w_operator_eigenvalue_on_a_single_mode() {
        let tgrid = Grid::time(256, 64.0).unwrap();
        let c = consts();
        let plan = FftPlan::new(tgrid.n());
        let s = -20i64; // w = 2 pi s / L
        let w = 2.0 * PI * s as f64 / tgrid.length();
        let mode = ComplexField::from_fn(tgrid, |t| C64::new(0.0, -w * t).exp());
        let v0 = 0.3;
        let pot = PPotentials::new(
            &tgrid,
            vec![v0; tgrid.n()],
            vec![0.0; tgrid.n()],
            &plan,
        )
        .unwrap();
        let wf = apply_w_plane(&mode, &pot, &c, &plan).unwrap();
        let expected = mode.scale(C64::new(v0 * v0 - 2.0 * c.hbar * w * v0, 0.0));
        assert!(crate::field::l2_error(&wf, &expected).unwrap() < 1e-10);
    }

    /// A small constant potential shift is equivalent to an effective mass
    /// modulation Xi = hbar w0 dV / (m^2 c^4) up to terms quadratic in dV
    /// and linear in the packet's frequency spread, with a computable bound.
    #[test]
    fn constant_shift_merges_into_the_modulation() {
        let tgrid = Grid::time(1024, 256.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let omega0 = -2.0;
        let state = forward_state(tgrid, omega0, 8.0);
        let dv = 1e-3;
        let xi_merged = c.hbar * omega0 * dv / (c.rest_energy() * c.rest_energy());

        let pot_v = sample_p_potentials(
            &StaticPotential::Constant(dv),
            &DynamicPotential::Zero,
            &tgrid,
            0.0,
            &ws.t_plan,
        )
        .unwrap();
        let pot_xi = sample_p_potentials(
            &StaticPotential::Zero,
            &DynamicPotential::Constant(xi_merged),
            &tgrid,
            0.0,
            &ws.t_plan,
        )
        .unwrap();
        let pot_none = sample_p_potentials(
            &StaticPotential::Zero,
            &DynamicPotential::Zero,
            &tgrid,
            0.0,
            &ws.t_plan,
        )
        .unwrap();

        let (rhs_v, _) = p_pair_rhs(&state, &pot_v, &c, &ws).unwrap();
        let (rhs_xi, _) = p_pair_rhs(&state, &pot_xi, &c, &ws).unwrap();
        let (rhs_0, _) = p_pair_rhs(&state, &pot_none, &c, &ws).unwrap();

        let mut diff = rhs_v.clone();
        diff.axpy(C64::new(-1.0, 0.0), &rhs_xi).unwrap();
        let mut v_effect = rhs_v.clone();
        v_effect.axpy(C64::new(-1.0, 0.0), &rhs_0).unwrap();

        // Dropped terms, bin by bin: -i (w - w0) dV / c + i dV^2/(2 hbar c),
        // all behind 1/Ebar. Bound them over the packet's populated band.
        let spec = to_spectrum(&state.plus.planes()[0], &ws.t_plan);
        let peak = spec.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let mut max_detuning = 0.0f64;
        let mut e_min = f64::INFINITY;
        for (m, v) in spec.iter().enumerate() {
            if v.norm() < 1e-12 * peak {
                continue;
            }
            max_detuning = max_detuning.max((tgrid.conjugate_value(m) - omega0).abs());
            e_min = e_min.min(ws.ebar.value(m).expect("populated bins propagate"));
        }
        let bound = (max_detuning * dv / c.c + dv * dv / (2.0 * c.hbar * c.c))
            * state.plus.norm()
            / e_min;
        assert!(diff.norm() <= bound, "diff {} vs bound {}", diff.norm(), bound);
        // The merged modulation captures most of the potential's effect.
        assert!(
            diff.norm() < 0.2 * v_effect.norm(),
            "merge residual {} vs raw effect {}",
            diff.norm(),
            v_effect.norm()
        );
    }

    /// Free literal march is rigid translation: after z the field equals the
    /// initial data shifted by z/c, an integer number of grid bins here.
    #[test]
    fn free_literal_march_translates_rigidly() {
        let tgrid = Grid::time(1024, 256.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let mut state = forward_state(tgrid, -2.0, 8.0);
        let initial = state.plus.planes()[0].clone();
        let dz = 0.05;
        let steps = 200; // z = 10 = 40 time bins (dt = 0.25)
        for _ in 0..steps {
            state = p_step_split(
                &state,
                dz,
                &StaticPotential::Zero,
                &DynamicPotential::Zero,
                PMode::Literal,
                &c,
                &ws,
            )
            .unwrap();
        }
        let n = tgrid.n();
        let shift = 40usize;
        let shifted = ComplexField::from_values(
            tgrid,
            (0..n).map(|j| initial.values()[(j + shift) % n]).collect(),
        )
        .unwrap();
        let err = crate::field::l2_error(&state.plus.planes()[0], &shifted).unwrap();
        assert!(err < 1e-10 * state.plus.norm(), "translation error {err}");
        assert!((state.z - 10.0).abs() < 1e-12);
    }

    /// On-shell stepping advances a single propagating mode by exactly
    /// exp(+i Ebar dz / (hbar c)).
    #[test]
    fn exact_mode_march_applies_the_on_shell_phase() {
        let tgrid = Grid::time(512, 128.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let s = -41i64;
        let w = 2.0 * PI * s as f64 / tgrid.length();
        let mode = ComplexField::from_fn(tgrid, |t| C64::new(0.0, -w * t).exp());
        let state = PairStateP::new(
            PField::single(mode.clone()).unwrap(),
            PField::zeros(tgrid, None).unwrap(),
            0.0,
        )
        .unwrap();
        let dz = 0.37;
        let marched = p_exact_free_march(&state, dz, &c, &ws).unwrap();
        let e = ebar(w, &c).unwrap();
        let expected = mode.scale(C64::new(0.0, e * dz / (c.hbar * c.c)).exp());
        let err = crate::field::l2_error(&marched.plus.planes()[0], &expected).unwrap();
        assert!(err < 1e-12 * state.plus.norm());
        // The split stepper in on-shell mode does the same thing for free
        // fields.
        let split = p_step_split(
            &state,
            dz,
            &StaticPotential::Zero,
            &DynamicPotential::Zero,
            PMode::ExactOmega,
            &c,
            &ws,
        )
        .unwrap();
        let err2 = crate::field::l2_error(&split.plus.planes()[0], &expected).unwrap();
        assert!(err2 < 1e-12 * state.plus.norm());
    }

    /// The literal-vs-on-shell free gap per unit z for one mode is
    /// |w|/c - Ebar/(hbar c) ~ m^2 c^3 / (2 hbar^2 |w|): quadratic in mass.
    #[test]
    fn mass_gap_between_conventions_is_quadratic() {
        let w: f64 = -2.0;
        let c = 1.0;
        let hbar = 1.0;
        let gap = |m: f64| {
            let consts = Constants::new(hbar, c, m).unwrap();
            let e = ebar(w, &consts).unwrap();
            (libm::fabs(w) / c - e / (hbar * c)).abs()
        };
        let (g1, g2) = (gap(0.04), gap(0.02));
        assert!((g1 / g2 - 4.0).abs() < 0.01, "ratio {}", g1 / g2);
        let predicted = 0.04f64 * 0.04 / (2.0 * libm::fabs(w));
        assert!((g1 - predicted).abs() < 0.01 * predicted);
    }

    /// The plain Runge-Kutta march self-converges at fourth order with a
    /// position-dependent potential and a time-dependent modulation.
    #[test]
    fn rk4_march_self_convergence_is_fourth_order() {
        let tgrid = Grid::time(256, 64.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let v = StaticPotential::GaussianBump { depth: 0.1, center: 0.2, width: 0.15 };
        let xi = DynamicPotential::TravelingWave { amplitude: 0.05, wavenumber: 3.0, frequency: 1.1 };
        let state0 = forward_state(tgrid, -2.0, 4.0);
        let z_final = 0.4;
        let run = |dz: f64| {
            let mut s = state0.clone();
            let steps = libm::round(z_final / dz) as usize;
            for _ in 0..steps {
                s = p_step_rk4(&s, dz, &v, &xi, &c, &ws).unwrap();
            }
            s
        };
        let reference = run(0.000625);
        let mut errs = vec![];
        for dz in [0.01, 0.005, 0.0025] {
            let s = run(dz);
            errs.push(p_l2_error(&s.plus, &reference.plus).unwrap());
        }
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!(r1 > 12.0 && r1 < 20.0, "errors {errs:?} ratio {r1}");
        assert!(r2 > 12.0 && r2 < 20.0, "errors {errs:?} ratio {r2}");
    }

    /// The decoupling diagnostic grows monotonically with the modulation
    /// that drives the cross component.
    #[test]
    fn validity_ratio_grows_with_the_modulation() {
        let tgrid = Grid::time(512, 128.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let plus = p_packet(tgrid, -2.0, 8.0);
        let minus = p_packet(tgrid, -2.1, 8.0).scale(C64::new(0.5, 0.0));
        let state = PairStateP::new(plus, minus, 0.0).unwrap();
        let ratio_for = |a: f64| {
            let pot = sample_p_potentials(
                &StaticPotential::Zero,
                &DynamicPotential::Constant(a),
                &tgrid,
                0.0,
                &ws.t_plan,
            )
            .unwrap();
            validity_margin_p(&state, &pot, 1.0, &c, &ws).unwrap().ratio
        };
        let (r1, r2, r3) = (ratio_for(0.02), ratio_for(0.04), ratio_for(0.08));
        assert!(r1 < r2 && r2 < r3, "ratios {r1}, {r2}, {r3}");
    }

    #[test]
    fn empty_state_has_no_defined_p_ratio() {
        let tgrid = Grid::time(64, 16.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let zero = PField::zeros(tgrid, None).unwrap();
        let state = PairStateP::new(zero.clone(), zero, 0.0).unwrap();
        let pot = sample_p_potentials(
            &StaticPotential::Zero,
            &DynamicPotential::Zero,
            &tgrid,
            0.0,
            &ws.t_plan,
        )
        .unwrap();
        assert!(matches!(
            validity_margin_p(&state, &pot, 0.1, &c, &ws),
            Err(CoreError::UndefinedRatio)
        ));
    }

    /// Tabulated potentials are bound to a space grid and cannot be sampled
    /// along the march.
    #[test]
    fn tabulated_potentials_are_rejected_on_planes() {
        let tgrid = Grid::time(64, 16.0).unwrap();
        let plan = FftPlan::new(64);
        let v = StaticPotential::Tabulated(vec![0.0; 64]);
        assert!(matches!(
            sample_p_potentials(&v, &DynamicPotential::Zero, &tgrid, 0.0, &plan),
            Err(CoreError::TabulatedPointEval)
        ));
    }

    /// Transverse Laplacian acts per time sample across planes: a pure
    /// transverse mode is an eigenfunction with eigenvalue -k_y^2.
    #[test]
    fn transverse_laplacian_eigenmode() {
        let tgrid = Grid::time(64, 16.0).unwrap();
        let ygrid = Grid::space(16, 8.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, Some(&ygrid), &c).unwrap();
        let ky = 2.0 * PI * 3.0 / ygrid.length();
        let base = make_gaussian_packet(tgrid, &WavepacketSpec::new(8.0, 1.5, -2.0)).unwrap();
        let planes: Vec<ComplexField> = (0..ygrid.n())
            .map(|l| base.scale(C64::new(0.0, ky * ygrid.coord(l)).exp()))
            .collect();
        let f = PField::new(tgrid, Some(ygrid), planes).unwrap();
        let lap = transverse_laplacian(&f, &ws).unwrap();
        let expected = f.scale(C64::new(-ky * ky, 0.0));
        assert!(p_l2_error(&lap, &expected).unwrap() < 1e-10 * f.norm());
    }

    /// One-way march of a single lattice mode against the closed-form rate
    /// k = w/c + wV/(c Ebar) - V^2/(2 hbar c Ebar): advection and drive are
    /// both diagonal here, so the split is exact up to the Runge-Kutta
    /// remainder of the drive factor.
    #[test]
    fn forward_split_matches_the_single_mode_rate() {
        let tgrid = Grid::time(256, 64.0).unwrap();
        let c = consts();
        let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
        let omega = 2.0 * PI * -20.0 / tgrid.length();
        let f0 = ComplexField::from_fn(tgrid, |t| C64::new(0.0, -omega * t).exp());
        let field = PField::single(f0.clone()).unwrap();
        let v0 = 0.1;
        let v = StaticPotential::Constant(v0);
        let xi = DynamicPotential::Zero;
        let dz = 0.05;
        let steps = 100;
        let mut marched = field.clone();
        for i in 0..steps {
            marched = p_step_forward_split(
                &marched,
                i as f64 * dz,
                dz,
                &v,
                &xi,
                PMode::Literal,
                &c,
                &ws,
            )
            .unwrap();
        }
        let e = ebar(omega, &c).unwrap();
        let k_tilde = omega / c.c + omega * v0 / (c.c * e) - v0 * v0 / (2.0 * c.hbar * c.c * e);
        let z = steps as f64 * dz;
        let expected =
            PField::single(f0.scale(C64::new(0.0, -k_tilde * z).exp())).unwrap();
        let err = p_l2_error(&marched, &expected).unwrap() / field.norm();
        assert!(err < 1e-10, "forward split vs closed form: {err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Free marches preserve the norm in either phase convention (the
        /// evolution is a pure per-bin phase).
        #[test]
        fn free_march_preserves_norm(
            dz in 0.01f64..0.5,
            omega0 in -2.6f64..-1.8,
            literal in proptest::bool::ANY,
        ) {
            let tgrid = Grid::time(1024, 256.0).unwrap();
            let c = consts();
            let ws = PWorkspace::new(&tgrid, None, &c).unwrap();
            let state = forward_state(tgrid, omega0, 8.0);
            let mode = if literal { PMode::Literal } else { PMode::ExactOmega };
            let next = p_step_split(
                &state, dz, &StaticPotential::Zero, &DynamicPotential::Zero, mode, &c, &ws,
            ).unwrap();
            let n0 = state.plus.norm();
            prop_assert!((next.plus.norm() - n0).abs() < 1e-12 * n0);
        }
    }
}
