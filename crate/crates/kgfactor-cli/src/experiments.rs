//! Cross-run experiments: aligned comparisons, log-log convergence and
//! validity scans, per-mode dispersion extraction, and the backward-growth
//! resonance scan.

use kgfactor_core::dispersion::{kg_dispersion_omega, schrodinger_dispersion_energy};
use kgfactor_core::fft::FftPlan;
use kgfactor_core::field::{l2_error, l2_norm, ComplexField};
use kgfactor_core::pair_m::{pair_from_kg, remove_rest_mass_phase, PairStateM};
use kgfactor_core::pair_p::{ebar, p_l2_error, reference_wavevector, PField};
use kgfactor_core::spectral::to_spectrum;
use kgfactor_core::{C64, Constants};
use serde_json::{json, Value};

use crate::config::{
    config_from_value, PModeSpec, SimConfig, SolverKind, StaticSpec,
};
use crate::error::HarnessError;
use crate::output::{self, SeriesRow};
use crate::parallel;
use crate::run::{json_f64, run, versions, Captured, RunArtifacts};

/// Phase gauge applied before two legs are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    None,
    /// Multiply the pair components by `exp(+-i m c^2 t / hbar)` so
    /// rest-mass rotation drops out (the mass-free solvers are untouched).
    RemoveRestMass,
    /// Additionally strip the global phase of a constant V.
    RemoveRestMassAndV,
}

impl Alignment {
    pub fn name(self) -> &'static str {
        match self {
            Alignment::None => "none",
            Alignment::RemoveRestMass => "remove_rest_mass",
            Alignment::RemoveRestMassAndV => "remove_rest_mass_and_v",
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// A captured state reduced to a comparable, gauge-aligned representation.
enum View {
    TwoT { plus: ComplexField, minus: ComplexField },
    OneT(ComplexField),
    TwoZ { plus: PField, minus: PField },
    OneZ(PField),
    /// Raw (phi, chi) pair; used when the pair map is unavailable (massless
    /// exact runs).
    KgRaw { phi: ComplexField, chi: ComplexField },
}

fn constant_v0(config: &SimConfig) -> Result<f64, HarnessError> {
    match &config.potential_v {
        StaticSpec::Zero => Ok(0.0),
        StaticSpec::Constant { value } => Ok(*value),
        _ => Err(config_err(
            "remove_rest_mass_and_v needs a constant potential_v (the only case with a \
             well-defined global phase)",
        )),
    }
}

fn gauge_phase(t: f64, v0: f64, constants: &Constants) -> C64 {
    C64::new(0.0, v0 * t / constants.hbar).exp()
}

fn gauge_pair(
    state: &PairStateM,
    alignment: Alignment,
    v0: f64,
    constants: &Constants,
) -> Result<PairStateM, HarnessError> {
    match alignment {
        Alignment::None => Ok(state.clone()),
        Alignment::RemoveRestMass | Alignment::RemoveRestMassAndV => {
            let slow = remove_rest_mass_phase(state, constants)
                .map_err(|e| config_err(e.to_string()))?;
            if alignment == Alignment::RemoveRestMassAndV {
                let phase = gauge_phase(slow.t, v0, constants);
                PairStateM::new(slow.plus.scale(phase), slow.minus.scale(phase), slow.t)
                    .map_err(|e| config_err(e.to_string()))
            } else {
                Ok(slow)
            }
        }
    }
}

fn view(
    art: &RunArtifacts,
    captured: &Captured,
    alignment: Alignment,
    constants: &Constants,
) -> Result<View, HarnessError> {
    let v0 = match alignment {
        Alignment::RemoveRestMassAndV => constant_v0(&art.config)?,
        _ => 0.0,
    };
    match captured {
        Captured::Kg(state) => {
            if constants.mass == 0.0 {
                if alignment != Alignment::None {
                    return Err(config_err(
                        "massless exact runs have no rest phase to remove; use alignment none",
                    ));
                }
                return Ok(View::KgRaw { phi: state.phi.clone(), chi: state.chi.clone() });
            }
            let pair = pair_from_kg(state, constants).map_err(|e| config_err(e.to_string()))?;
            let pair = gauge_pair(&pair, alignment, v0, constants)?;
            Ok(View::TwoT { plus: pair.plus, minus: pair.minus })
        }
        Captured::Pair(state) => {
            let pair = gauge_pair(state, alignment, v0, constants)?;
            Ok(View::TwoT { plus: pair.plus, minus: pair.minus })
        }
        Captured::Psi { field, t } => {
            let psi = if alignment == Alignment::RemoveRestMassAndV {
                field.scale(gauge_phase(*t, v0, constants))
            } else {
                field.clone()
            };
            Ok(View::OneT(psi))
        }
        Captured::PPair(state) => {
            if alignment != Alignment::None {
                return Err(config_err(
                    "rest-mass alignment applies to the time-axis solvers; z-marches \
                     compare with alignment none",
                ));
            }
            if art.config.solver == SolverKind::ForwardP {
                Ok(View::OneZ(state.plus.clone()))
            } else {
                Ok(View::TwoZ { plus: state.plus.clone(), minus: state.minus.clone() })
            }
        }
    }
}

/// L2 distance between two views and the reference norm of the second
/// (restricted to the portion actually compared). Single-component legs
/// compare forward components.
fn view_error(a: &View, b: &View) -> Result<(f64, f64), HarnessError> {
    let core = |e: kgfactor_core::CoreError| config_err(e.to_string());
    match (a, b) {
        (View::TwoT { plus: ap, minus: am }, View::TwoT { plus: bp, minus: bm }) => {
            let ep = l2_error(ap, bp).map_err(core)?;
            let em = l2_error(am, bm).map_err(core)?;
            let np = l2_norm(bp);
            let nm = l2_norm(bm);
            Ok(((ep * ep + em * em).sqrt(), (np * np + nm * nm).sqrt()))
        }
        (View::TwoT { plus, .. }, View::OneT(psi)) => {
            Ok((l2_error(plus, psi).map_err(core)?, l2_norm(psi)))
        }
        (View::OneT(psi), View::TwoT { plus, .. }) => {
            Ok((l2_error(psi, plus).map_err(core)?, l2_norm(plus)))
        }
        (View::OneT(a1), View::OneT(b1)) => Ok((l2_error(a1, b1).map_err(core)?, l2_norm(b1))),
        (View::KgRaw { phi: af, chi: ac }, View::KgRaw { phi: bf, chi: bc }) => {
            let ef = l2_error(af, bf).map_err(core)?;
            let ec = l2_error(ac, bc).map_err(core)?;
            let nf = l2_norm(bf);
            let nc = l2_norm(bc);
            Ok(((ef * ef + ec * ec).sqrt(), (nf * nf + nc * nc).sqrt()))
        }
        (View::TwoZ { plus: ap, minus: am }, View::TwoZ { plus: bp, minus: bm }) => {
            let ep = p_l2_error(ap, bp).map_err(core)?;
            let em = p_l2_error(am, bm).map_err(core)?;
            let np = bp.norm();
            let nm = bm.norm();
            Ok(((ep * ep + em * em).sqrt(), (np * np + nm * nm).sqrt()))
        }
        (View::TwoZ { plus, .. }, View::OneZ(b1)) => {
            Ok((p_l2_error(plus, b1).map_err(core)?, b1.norm()))
        }
        (View::OneZ(a1), View::TwoZ { plus, .. }) => {
            Ok((p_l2_error(a1, plus).map_err(core)?, plus.norm()))
        }
        (View::OneZ(a1), View::OneZ(b1)) => Ok((p_l2_error(a1, b1).map_err(core)?, b1.norm())),
        _ => Err(config_err(
            "legs are not comparable: both must march the same coordinate, and massless \
             exact runs only compare with other exact runs",
        )),
    }
}

#[derive(Debug)]
pub struct CompareReport {
    pub coord_label: &'static str,
    pub rows: Vec<SeriesRow>,
    pub final_error: f64,
    pub final_relative: f64,
}

/// Per-sample aligned L2 error between two finished runs. Leg B is the
/// reference for the relative figure.
pub fn compare(
    a: &RunArtifacts,
    b: &RunArtifacts,
    alignment: Alignment,
) -> Result<CompareReport, HarnessError> {
    if a.coord_label != b.coord_label {
        return Err(config_err(
            "legs march different coordinates (one steps time, the other distance)",
        ));
    }
    if a.rows.len() != b.rows.len() {
        return Err(config_err(format!(
            "legs recorded different sample counts ({} vs {}); match duration, step, and \
             output_cadence",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let ca = a.config.constants;
    let cb = b.config.constants;
    let constants_a = Constants::new(ca.hbar, ca.c, ca.mass).map_err(|e| config_err(e.to_string()))?;
    let constants_b = Constants::new(cb.hbar, cb.c, cb.mass).map_err(|e| config_err(e.to_string()))?;

    let mut rows = Vec::with_capacity(a.captured.len());
    let mut last: (f64, f64) = (0.0, 0.0);
    for (i, (sa, sb)) in a.captured.iter().zip(&b.captured).enumerate() {
        let coord = sa.coord();
        if (coord - sb.coord()).abs() > 1e-12 * coord.abs().max(1.0) {
            return Err(config_err(format!(
                "sample {i} at mismatched coordinates: {} vs {}",
                coord,
                sb.coord()
            )));
        }
        let va = view(a, sa, alignment, &constants_a)?;
        let vb = view(b, sb, alignment, &constants_b)?;
        let (error, ref_norm) = view_error(&va, &vb)?;
        last = (error, ref_norm);
        rows.push(SeriesRow { step: a.rows[i].step, coord, values: vec![error] });
    }
    let (final_error, ref_norm) = last;
    let final_relative = if ref_norm > 1e-300 { final_error / ref_norm } else { final_error };
    Ok(CompareReport {
        coord_label: a.coord_label,
        rows,
        final_error,
        final_relative,
    })
}

/// Run two legs, in parallel when the worker cap allows it.
pub fn run_pair(
    echo_a: Value,
    cfg_a: &SimConfig,
    echo_b: Value,
    cfg_b: &SimConfig,
    enforce_validity: bool,
) -> Result<(RunArtifacts, RunArtifacts), HarnessError> {
    let cap = parallel::thread_cap()?;
    if cap < 2 {
        return Ok((run(echo_a, cfg_a, enforce_validity)?, run(echo_b, cfg_b, enforce_validity)?));
    }
    let legs = [(echo_a, cfg_a), (echo_b, cfg_b)];
    let mut results = parallel::map_indexed(2, 2, |i| {
        run(legs[i].0.clone(), legs[i].1, enforce_validity)
    });
    let b = results.pop().expect("two legs")?;
    let a = results.pop().expect("two legs")?;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMetric {
    /// Final relative compare error between the two legs.
    CompareError,
    /// Largest recorded validity ratio of a single run.
    ValidityRatio,
}

impl ScanMetric {
    pub fn name(self) -> &'static str {
        match self {
            ScanMetric::CompareError => "compare_error",
            ScanMetric::ValidityRatio => "validity_ratio",
        }
    }
}

#[derive(Debug)]
pub struct ScanReport {
    pub param: String,
    pub metric: ScanMetric,
    pub rows: Vec<(f64, f64)>,
    pub slope: Option<f64>,
}

/// Evaluate the metric across `values` of the overridden parameter and fit
/// a least-squares log-log slope.
pub fn convergence_scan(
    base_a: &Value,
    base_b: Option<&Value>,
    alignment: Alignment,
    param: &str,
    values: &[f64],
    metric: ScanMetric,
    enforce_validity: bool,
) -> Result<ScanReport, HarnessError> {
    if values.len() < 3 {
        return Err(config_err(format!(
            "a scan needs at least 3 points, got {}",
            values.len()
        )));
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(config_err("degenerate scan: all values are identical"));
    }
    if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(config_err("scan values must be positive for the log-log fit"));
    }
    if metric == ScanMetric::CompareError && base_b.is_none() {
        return Err(config_err("a compare-error scan needs a second config (--config-b)"));
    }

    let point = |i: usize| -> Result<f64, HarnessError> {
        let value = values[i];
        let mut va = base_a.clone();
        crate::config::set_path(&mut va, param, json!(value))?;
        let cfg_a = config_from_value(&va)?;
        match metric {
            ScanMetric::CompareError => {
                let mut vb = base_b.expect("checked above").clone();
                crate::config::set_path(&mut vb, param, json!(value))?;
                let cfg_b = config_from_value(&vb)?;
                let art_a = run(va, &cfg_a, enforce_validity)?;
                let art_b = run(vb, &cfg_b, enforce_validity)?;
                Ok(compare(&art_a, &art_b, alignment)?.final_relative)
            }
            ScanMetric::ValidityRatio => {
                let art = run(va, &cfg_a, enforce_validity)?;
                art.max_validity.ok_or_else(|| {
                    config_err("validity ratio was undefined for every recorded sample")
                })
            }
        }
    };

    let cap = parallel::thread_cap()?;
    let results = parallel::map_indexed(values.len(), cap, point);
    let mut rows = Vec::with_capacity(values.len());
    for (value, result) in values.iter().zip(results) {
        rows.push((*value, result?));
    }
    let slope = loglog_slope(&rows);
    Ok(ScanReport { param: param.to_string(), metric, rows, slope })
}

/// Least-squares slope of ln(y) against ln(x); None when the data touch the
/// numerical floor (a slope through log of ~0 is meaningless).
fn loglog_slope(rows: &[(f64, f64)]) -> Option<f64> {
    if rows.iter().any(|(_, y)| *y < 1e-300) {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx < 1e-30 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug)]
pub struct DispersionPoint {
    /// Conjugate coordinate of the bin: wavenumber for time-steppers,
    /// angular frequency for z-marches.
    pub mode: f64,
    pub measured: f64,
    pub predicted: f64,
    pub relative_error: f64,
}

/// Per-mode phase rates from a finished run: unwrap each populated bin's
/// phase across the samples and fit a line. The measured rate is the
/// negative phase slope, so free exact runs report +omega(k), free
/// nonrelativistic runs +hbar k^2 / 2m, and constant-V one-way marches the
/// reference wavevector K(omega).
pub fn dispersion_extract(art: &RunArtifacts) -> Result<Vec<DispersionPoint>, HarnessError> {
    const BIN_THRESHOLD: f64 = 1e-3;
    if art.captured.len() < 4 {
        return Err(config_err(format!(
            "dispersion fit needs at least 4 samples, got {} (lower output_cadence or run \
             longer)",
            art.captured.len()
        )));
    }
    let cs = art.config.constants;
    let constants = Constants::new(cs.hbar, cs.c, cs.mass).map_err(|e| config_err(e.to_string()))?;
    let primary = |c: &Captured| -> Result<ComplexField, HarnessError> {
        match c {
            Captured::Kg(s) => Ok(s.phi.clone()),
            Captured::Psi { field, .. } => Ok(field.clone()),
            Captured::PPair(s) => Ok(s.plus.planes()[0].clone()),
            Captured::Pair(_) => Err(config_err(
                "dispersion extraction supports kg, schrodinger, and forward_p runs",
            )),
        }
    };
    let v0 = match (art.config.solver, art.config.p_mode) {
        (SolverKind::ForwardP, PModeSpec::Literal) => {
            if !art.config.potential_v.to_core().is_constant() {
                return Err(config_err(
                    "the K(omega) reference needs a constant potential_v",
                ));
            }
            constant_v0(&art.config)?
        }
        (SolverKind::ForwardP, PModeSpec::ExactOmega) => {
            if art.config.potential_v != StaticSpec::Zero {
                return Err(config_err(
                    "the on-shell march prediction is for free runs; set potential_v to zero",
                ));
            }
            0.0
        }
        _ => 0.0,
    };

    let first = primary(&art.captured[0])?;
    let grid = *first.grid();
    let plan = FftPlan::new(grid.n());
    let spectra: Vec<Vec<C64>> = art
        .captured
        .iter()
        .map(|c| primary(c).map(|f| to_spectrum(&f, &plan)))
        .collect::<Result<_, _>>()?;
    let coords: Vec<f64> = art.captured.iter().map(Captured::coord).collect();

    let peak = spectra[0].iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(config_err("the initial field is empty; nothing to fit"));
    }

    let mut points = Vec::new();
    for m in 0..grid.n() {
        if m == grid.n() / 2 {
            continue; // sign-ambiguous Nyquist bin
        }
        if spectra[0][m].norm() < BIN_THRESHOLD * peak {
            continue;
        }
        let mode = grid.conjugate_value(m);
        let predicted = match art.config.solver {
            SolverKind::Kg => kg_dispersion_omega(mode, &constants),
            SolverKind::Schrodinger => {
                schrodinger_dispersion_energy(mode, &constants)
                    .map_err(|e| config_err(e.to_string()))?
                    / constants.hbar
            }
            SolverKind::ForwardP => match ebar(mode, &constants) {
                Ok(e) => match art.config.p_mode {
                    PModeSpec::Literal => reference_wavevector(mode, v0, &constants)
                        .map_err(|err| config_err(err.to_string()))?,
                    PModeSpec::ExactOmega => -e / (constants.hbar * constants.c),
                },
                Err(_) => continue, // evanescent bin: no propagating prediction
            },
            _ => unreachable!("primary() rejects other solvers"),
        };

        // Unwrapped phase history of this bin.
        let mut phases = Vec::with_capacity(spectra.len());
        let mut prev = spectra[0][m].arg();
        phases.push(prev);
        for spec in &spectra[1..] {
            let raw = spec[m].arg();
            let mut delta = raw - prev;
            delta -= (delta / core::f64::consts::TAU).round() * core::f64::consts::TAU;
            prev += delta;
            phases.push(prev);
        }
        let n = phases.len() as f64;
        let mx = coords.iter().sum::<f64>() / n;
        let my = phases.iter().sum::<f64>() / n;
        let sxx: f64 = coords.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = coords.iter().zip(&phases).map(|(x, y)| (x - mx) * (y - my)).sum();
        let measured = -sxy / sxx;
        points.push(DispersionPoint { mode, measured, predicted, relative_error: 0.0 });
    }
    // Per-bin relative error, floored at a fraction of the run's rate scale
    // so near-stationary bins (predicted rate ~ 0) stay meaningful.
    let scale = points.iter().map(|p| p.predicted.abs()).fold(0.0, f64::max);
    for p in &mut points {
        p.relative_error =
            (p.measured - p.predicted).abs() / p.predicted.abs().max(1e-3 * scale).max(1e-300);
    }
    Ok(points)
}

#[derive(Debug)]
pub struct ResonanceReport {
    pub rows: Vec<(f64, f64)>,
    pub peak_frequency: f64,
    pub peak_growth: f64,
}

/// Sweep the modulation frequency of the dynamic potential and record the
/// largest backward-component norm each run reaches.
pub fn resonance_scan(
    base: &Value,
    frequencies: &[f64],
    enforce_validity: bool,
) -> Result<ResonanceReport, HarnessError> {
    if frequencies.is_empty() {
        return Err(config_err("resonance scan needs at least one frequency"));
    }
    let base_cfg = config_from_value(base)?;
    if base_cfg.solver != SolverKind::PairM {
        return Err(config_err(
            "resonance scan drives the coupled pair; set solver = \"pair_m\"",
        ));
    }
    match base_cfg.potential_xi {
        crate::config::DynamicSpec::StandingWave { .. }
        | crate::config::DynamicSpec::TravelingWave { .. } => {}
        _ => {
            return Err(config_err(
                "resonance scan needs a standing_wave or traveling_wave potential_xi \
                 (the frequency is the scanned parameter)",
            ))
        }
    }
    let minus_col = crate::run::series_names(SolverKind::PairM)
        .iter()
        .position(|n| *n == "norm_minus")
        .expect("pair_m records norm_minus");

    let point = |i: usize| -> Result<f64, HarnessError> {
        let mut v = base.clone();
        crate::config::set_path(&mut v, "potential_xi.frequency", json!(frequencies[i]))?;
        let cfg = config_from_value(&v)?;
        let art = run(v, &cfg, enforce_validity)?;
        Ok(art
            .rows
            .iter()
            .map(|r| r.values[minus_col])
            .fold(0.0, f64::max))
    };
    let cap = parallel::thread_cap()?;
    let results = parallel::map_indexed(frequencies.len(), cap, point);
    let mut rows = Vec::with_capacity(frequencies.len());
    for (f, r) in frequencies.iter().zip(results) {
        rows.push((*f, r?));
    }
    let (peak_frequency, peak_growth) = rows
        .iter()
        .copied()
        .reduce(|best, cur| if cur.1 > best.1 { cur } else { best })
        .expect("non-empty scan");
    Ok(ResonanceReport { rows, peak_frequency, peak_growth })
}

// ---- artifact writers -----------------------------------------------------

pub fn write_compare(
    report: &CompareReport,
    echo_a: &Value,
    echo_b: &Value,
    alignment: Alignment,
    wall_seconds: f64,
    dir: &std::path::Path,
) -> Result<(), HarnessError> {
    output::ensure_out_dir(dir)?;
    output::write_series_csv(&output::out_path(dir, "compare.csv"), &["l2_error"], &report.rows)?;
    let meta = json!({
        "command": "compare",
        "alignment": alignment.name(),
        "config_a": echo_a,
        "config_b": echo_b,
        "versions": versions(),
        "coordinate": report.coord_label,
        "series": "compare.csv",
        "summary": {
            "final_error": json_f64(report.final_error),
            "final_relative": json_f64(report.final_relative),
        },
        "wall_time_seconds": wall_seconds,
    });
    output::write_json(&output::out_path(dir, "meta.json"), &meta)
}

pub fn write_scan(
    report: &ScanReport,
    echo_a: &Value,
    echo_b: Option<&Value>,
    alignment: Alignment,
    wall_seconds: f64,
    dir: &std::path::Path,
) -> Result<(), HarnessError> {
    output::ensure_out_dir(dir)?;
    let rows: Vec<Vec<f64>> = report.rows.iter().map(|(v, e)| vec![*v, *e]).collect();
    output::write_table_csv(
        &output::out_path(dir, "scan.csv"),
        &["value", report.metric.name()],
        &rows,
    )?;
    let meta = json!({
        "command": "scan",
        "param": report.param,
        "metric": report.metric.name(),
        "alignment": alignment.name(),
        "config_a": echo_a,
        "config_b": echo_b,
        "versions": versions(),
        "table": "scan.csv",
        "summary": {
            "fitted_exponent": report.slope.map_or(Value::Null, json_f64),
        },
        "wall_time_seconds": wall_seconds,
    });
    output::write_json(&output::out_path(dir, "meta.json"), &meta)
}

pub fn write_dispersion(
    points: &[DispersionPoint],
    echo: &Value,
    wall_seconds: f64,
    dir: &std::path::Path,
) -> Result<(), HarnessError> {
    output::ensure_out_dir(dir)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![p.mode, p.measured, p.predicted, p.relative_error])
        .collect();
    output::write_table_csv(
        &output::out_path(dir, "dispersion.csv"),
        &["mode", "measured_rate", "predicted_rate", "relative_error"],
        &rows,
    )?;
    let worst = points.iter().map(|p| p.relative_error).fold(0.0, f64::max);
    let meta = json!({
        "command": "dispersion",
        "config": echo,
        "versions": versions(),
        "table": "dispersion.csv",
        "summary": {
            "modes": points.len(),
            "max_relative_error": json_f64(worst),
        },
        "wall_time_seconds": wall_seconds,
    });
    output::write_json(&output::out_path(dir, "meta.json"), &meta)
}

pub fn write_resonance(
    report: &ResonanceReport,
    echo: &Value,
    wall_seconds: f64,
    dir: &std::path::Path,
) -> Result<(), HarnessError> {
    output::ensure_out_dir(dir)?;
    let rows: Vec<Vec<f64>> = report.rows.iter().map(|(f, g)| vec![*f, *g]).collect();
    output::write_table_csv(
        &output::out_path(dir, "resonance.csv"),
        &["frequency", "max_backward_norm"],
        &rows,
    )?;
    let meta = json!({
        "command": "resonance",
        "config": echo,
        "versions": versions(),
        "table": "resonance.csv",
        "summary": {
            "peak_frequency": json_f64(report.peak_frequency),
            "peak_growth": json_f64(report.peak_growth),
        },
        "wall_time_seconds": wall_seconds,
    });
    output::write_json(&output::out_path(dir, "meta.json"), &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_value(v: &Value) -> RunArtifacts {
        let cfg = config_from_value(v).unwrap();
        run(v.clone(), &cfg, false).unwrap()
    }

    fn kg_base() -> Value {
        json!({
            "solver": "kg",
            "grid": {"n": 64, "length": 32.0},
            "packet": {"center": 16.0, "width": 2.0, "carrier": 0.3},
            "duration": 0.5,
            "step": 0.01,
            "output_cadence": 10
        })
    }

    #[test]
    fn identical_runs_compare_to_zero() {
        let art = run_value(&kg_base());
        let report = compare(&art, &art, Alignment::RemoveRestMass).unwrap();
        assert_eq!(report.final_error, 0.0);
        assert_eq!(report.final_relative, 0.0);
        assert_eq!(report.rows.len(), art.rows.len());
    }

    #[test]
    fn decoupled_rows_match_massfree_solver_after_gauge() {
        let mut a = kg_base();
        crate::config::set_path(&mut a, "solver", json!("m_with_mass")).unwrap();
        let mut b = kg_base();
        crate::config::set_path(&mut b, "solver", json!("schrodinger")).unwrap();
        let art_a = run_value(&a);
        let art_b = run_value(&b);
        // The retained-mass rows are the mass-free evolution times a pure
        // rest phase, so the gauged comparison sits at rounding level.
        let gauged = compare(&art_a, &art_b, Alignment::RemoveRestMass).unwrap();
        assert!(gauged.final_relative < 1e-12, "relative {}", gauged.final_relative);
        // Without the gauge the rest phase dominates.
        let raw = compare(&art_a, &art_b, Alignment::None).unwrap();
        assert!(raw.final_relative > 0.1, "relative {}", raw.final_relative);
    }

    #[test]
    fn constant_potential_gauge_needs_constant_v() {
        let mut a = kg_base();
        crate::config::set_path(
            &mut a,
            "potential_v",
            json!({"type": "gaussian_bump", "depth": -0.05, "center": 16.0, "width": 4.0}),
        )
        .unwrap();
        let art = run_value(&a);
        let err = compare(&art, &art, Alignment::RemoveRestMassAndV).unwrap_err();
        assert!(err.to_string().contains("constant"), "{err}");
    }

    #[test]
    fn massfree_dispersion_is_quadratic() {
        let v = json!({
            "solver": "schrodinger",
            "grid": {"n": 128, "length": 64.0},
            "packet": {"center": 32.0, "width": 4.0, "carrier": 0.5},
            "duration": 2.0,
            "step": 0.02,
            "output_cadence": 10
        });
        let art = run_value(&v);
        let points = dispersion_extract(&art).unwrap();
        assert!(points.len() >= 5, "only {} modes populated", points.len());
        for p in &points {
            assert!(
                p.relative_error < 1e-9,
                "mode {} measured {} predicted {}",
                p.mode,
                p.measured,
                p.predicted
            );
        }
    }

    #[test]
    fn validity_ratio_scan_fits_a_quadratic_carrier_exponent() {
        let base = json!({
            "solver": "pair_m",
            "grid": {"n": 128, "length": 64.0},
            "packet": {"center": 32.0, "width": 4.0, "carrier": 0.2},
            "init": "equal_pair",
            "duration": 0.2,
            "step": 0.01,
            "output_cadence": 20
        });
        let report = convergence_scan(
            &base,
            None,
            Alignment::None,
            "packet.carrier",
            &[0.2, 0.4, 0.8],
            ScanMetric::ValidityRatio,
            false,
        )
        .unwrap();
        let slope = report.slope.expect("ratios well above the floor");
        assert!((slope - 2.0).abs() < 0.5, "slope {slope}");
    }

    #[test]
    fn scan_rejects_degenerate_values() {
        let base = kg_base();
        let err = convergence_scan(
            &base,
            None,
            Alignment::None,
            "packet.carrier",
            &[0.3, 0.3, 0.3],
            ScanMetric::ValidityRatio,
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn resonance_peaks_near_twice_the_rest_frequency() {
        let base = json!({
            "solver": "pair_m",
            "grid": {"n": 32, "length": 32.0},
            "packet": {"center": 16.0, "width": 3.0, "carrier": 0.0},
            "potential_xi": {
                "type": "standing_wave", "amplitude": 0.02, "wavenumber": 0.0, "frequency": 1.0
            },
            "duration": 10.0,
            "step": 0.02,
            "output_cadence": 25
        });
        let report = resonance_scan(&base, &[1.9, 5.0], false).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.peak_frequency, 1.9);
        assert!(
            report.rows[0].1 > 5.0 * report.rows[1].1,
            "near-resonant growth {} vs off-resonant {}",
            report.rows[0].1,
            report.rows[1].1
        );
    }

    #[test]
    fn mismatched_sampling_is_a_config_error() {
        let art_a = run_value(&kg_base());
        let mut b = kg_base();
        crate::config::set_path(&mut b, "output_cadence", json!(5)).unwrap();
        let art_b = run_value(&b);
        let err = compare(&art_a, &art_b, Alignment::None).unwrap_err();
        assert!(err.to_string().contains("sample counts"), "{err}");
    }
}
