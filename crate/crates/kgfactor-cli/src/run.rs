//! Single-run orchestration: build the initial state from a validated
//! config, march it, and record series rows, captured states, and field
//! snapshots at the output cadence.

use std::time::Instant;

use kgfactor_core::fft::FftPlan;
use kgfactor_core::field::{l2_norm, ComplexField};
use kgfactor_core::kg::{
    kg_energy, kg_init_forward, kg_step, kg_total_norm, light_cone_mass, support_radius, KgState,
};
use kgfactor_core::packet::make_gaussian_packet;
use kgfactor_core::pair_m::{
    m_equation_with_mass_step, pair_from_kg, pair_step_m, validity_margin_m, PairStateM,
};
use kgfactor_core::pair_p::{
    evanescent_fraction, p_step_forward_split, p_step_split, sample_p_potentials,
    validity_margin_p, PField, PMode, PWorkspace, PairStateP,
};
use kgfactor_core::potential::{DynamicPotential, StaticPotential};
use kgfactor_core::{C64, Constants, CoreError};
use serde_json::{json, Value};

use crate::config::{InitPolicy, SimConfig, SolverKind, ValidatedConfig};
use crate::error::HarnessError;
use crate::output::{self, SeriesRow};

/// Relative amplitude below which the initial packet is considered ended;
/// sets the light-cone margin added to c*t.
const LIGHT_CONE_EPS: f64 = 1e-10;

/// One recorded solver state, in the solver's own representation.
#[derive(Debug, Clone)]
pub enum Captured {
    Kg(KgState),
    Pair(PairStateM),
    Psi { field: ComplexField, t: f64 },
    PPair(PairStateP),
}

impl Captured {
    pub fn coord(&self) -> f64 {
        match self {
            Captured::Kg(s) => s.t,
            Captured::Pair(s) => s.t,
            Captured::Psi { t, .. } => *t,
            Captured::PPair(s) => s.z,
        }
    }
}

/// Everything a finished run produces, before any file is written.
pub struct RunArtifacts {
    pub config: SimConfig,
    pub echo: Value,
    pub coord_label: &'static str,
    pub series_names: Vec<&'static str>,
    pub rows: Vec<SeriesRow>,
    pub captured: Vec<Captured>,
    pub snapshots_initial: Vec<(String, ComplexField)>,
    pub snapshots_final: Vec<(String, ComplexField)>,
    pub max_validity: Option<f64>,
    pub wall_seconds: f64,
}

pub fn series_names(solver: SolverKind) -> Vec<&'static str> {
    match solver {
        SolverKind::Kg => vec!["norm", "energy", "light_cone_mass"],
        SolverKind::PairM => {
            vec!["norm_plus", "norm_minus", "norm_total", "energy", "validity_ratio"]
        }
        SolverKind::Schrodinger => vec!["norm", "light_cone_mass"],
        SolverKind::MWithMass => vec!["norm_plus", "norm_minus", "norm_total", "validity_ratio"],
        SolverKind::PairP => vec![
            "norm_plus",
            "norm_minus",
            "norm_total",
            "validity_ratio",
            "evanescent_fraction",
        ],
        SolverKind::ForwardP => vec!["norm_plus", "validity_ratio", "evanescent_fraction"],
    }
}

struct KgEngine {
    state: KgState,
    v: Vec<f64>,
    xi: DynamicPotential,
    constants: Constants,
    plan: FftPlan,
    center: f64,
    margin: f64,
}

struct PairMEngine {
    state: PairStateM,
    v: Vec<f64>,
    xi: DynamicPotential,
    constants: Constants,
    plan: FftPlan,
    threshold: f64,
    /// true for the decoupled m-equation (mass retained), false for the
    /// exact coupled pair.
    decoupled: bool,
}

struct SchrodEngine {
    psi: ComplexField,
    t: f64,
    v: Vec<f64>,
    xi: DynamicPotential,
    constants: Constants,
    plan: FftPlan,
    center: f64,
    margin: f64,
}

struct PEngine {
    state: PairStateP,
    v: StaticPotential,
    xi: DynamicPotential,
    constants: Constants,
    ws: PWorkspace,
    mode: PMode,
    threshold: f64,
    forward_only: bool,
}

enum Engine {
    Kg(KgEngine),
    PairM(PairMEngine),
    Schrod(SchrodEngine),
    P(PEngine),
}

fn run_err(e: CoreError, step: usize, coord_label: &'static str, coord: f64) -> HarnessError {
    match e {
        CoreError::Diverged { at } => {
            HarnessError::Diverged { step, coord_label, coord: at }
        }
        other => HarnessError::Config(format!(
            "solver error at step {step} ({coord_label} = {coord}): {other}"
        )),
    }
}

fn config_err(e: CoreError) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl Engine {
    fn build(vc: &ValidatedConfig) -> Result<Engine, HarnessError> {
        let cfg = &vc.config;
        let packet = make_gaussian_packet(vc.grid, &vc.packet).map_err(config_err)?;
        let plan = FftPlan::new(vc.grid.n());
        let constants = vc.constants;
        match cfg.solver {
            SolverKind::Kg | SolverKind::PairM | SolverKind::MWithMass => {
                let v = vc.potential_v.sample(&vc.grid).map_err(config_err)?;
                let kg0 = t_axis_init(&packet, cfg.init, &constants, &plan)?;
                if cfg.solver == SolverKind::Kg {
                    let margin = support_radius(&packet, cfg.packet.center, LIGHT_CONE_EPS);
                    Ok(Engine::Kg(KgEngine {
                        state: kg0,
                        v,
                        xi: vc.potential_xi.clone(),
                        constants,
                        plan,
                        center: cfg.packet.center,
                        margin,
                    }))
                } else {
                    let state = pair_from_kg(&kg0, &constants).map_err(config_err)?;
                    Ok(Engine::PairM(PairMEngine {
                        state,
                        v,
                        xi: vc.potential_xi.clone(),
                        constants,
                        plan,
                        threshold: cfg.validity_threshold,
                        decoupled: cfg.solver == SolverKind::MWithMass,
                    }))
                }
            }
            SolverKind::Schrodinger => {
                let v = vc.potential_v.sample(&vc.grid).map_err(config_err)?;
                let psi = match cfg.init {
                    InitPolicy::ForwardProjection => {
                        let kg0 = kg_init_forward(&packet, 0.0, &constants, &plan)
                            .map_err(config_err)?;
                        pair_from_kg(&kg0, &constants).map_err(config_err)?.plus
                    }
                    InitPolicy::PairForward | InitPolicy::EqualPair => packet.clone(),
                };
                let margin = support_radius(&packet, cfg.packet.center, LIGHT_CONE_EPS);
                Ok(Engine::Schrod(SchrodEngine {
                    psi,
                    t: 0.0,
                    v,
                    xi: vc.potential_xi.clone(),
                    constants,
                    plan,
                    center: cfg.packet.center,
                    margin,
                }))
            }
            SolverKind::PairP | SolverKind::ForwardP => {
                let ws = PWorkspace::new(&vc.grid, None, &constants).map_err(config_err)?;
                let plus = PField::single(packet.clone()).map_err(config_err)?;
                let minus = match cfg.init {
                    InitPolicy::EqualPair => PField::single(packet).map_err(config_err)?,
                    _ => PField::zeros(vc.grid, None).map_err(config_err)?,
                };
                let state = PairStateP::new(plus, minus, 0.0).map_err(config_err)?;
                Ok(Engine::P(PEngine {
                    state,
                    v: vc.potential_v.clone(),
                    xi: vc.potential_xi.clone(),
                    constants,
                    ws,
                    mode: vc.p_mode,
                    threshold: cfg.validity_threshold,
                    forward_only: cfg.solver == SolverKind::ForwardP,
                }))
            }
        }
    }

    fn coord(&self) -> f64 {
        match self {
            Engine::Kg(e) => e.state.t,
            Engine::PairM(e) => e.state.t,
            Engine::Schrod(e) => e.t,
            Engine::P(e) => e.state.z,
        }
    }

    fn step(&mut self, dt: f64) -> Result<(), CoreError> {
        match self {
            Engine::Kg(e) => {
                e.state = kg_step(&e.state, dt, &e.v, &e.xi, &e.constants, &e.plan)?;
            }
            Engine::PairM(e) => {
                e.state = if e.decoupled {
                    m_equation_with_mass_step(&e.state, dt, &e.v, &e.xi, &e.constants, &e.plan)?
                } else {
                    pair_step_m(&e.state, dt, &e.v, &e.xi, &e.constants, &e.plan)?
                };
            }
            Engine::Schrod(e) => {
                e.psi =
                    kgfactor_core::pair_m::schrodinger_step(
                        &e.psi, e.t, dt, &e.v, &e.xi, &e.constants, &e.plan,
                    )?;
                e.t += dt;
            }
            Engine::P(e) => {
                if e.forward_only {
                    let plus = p_step_forward_split(
                        &e.state.plus,
                        e.state.z,
                        dt,
                        &e.v,
                        &e.xi,
                        e.mode,
                        &e.constants,
                        &e.ws,
                    )?;
                    let minus = e.state.minus.clone();
                    e.state = PairStateP::new(plus, minus, e.state.z + dt)?;
                } else {
                    e.state =
                        p_step_split(&e.state, dt, &e.v, &e.xi, e.mode, &e.constants, &e.ws)?;
                }
            }
        }
        Ok(())
    }

    /// Series values in the order of `series_names`. The validity ratio is
    /// NaN when it is undefined (identically zero state).
    fn sample(&self) -> Result<Vec<f64>, CoreError> {
        match self {
            Engine::Kg(e) => Ok(vec![
                kg_total_norm(&e.state),
                kg_energy(&e.state, &e.constants, &e.plan)?,
                light_cone_mass(&e.state.phi, e.center, e.state.t, e.margin, &e.constants),
            ]),
            Engine::PairM(e) => {
                let np = l2_norm(&e.state.plus);
                let nm = l2_norm(&e.state.minus);
                let total = (np * np + nm * nm).sqrt();
                let ratio = match validity_margin_m(
                    &e.state,
                    &e.v,
                    &e.xi,
                    e.threshold,
                    &e.constants,
                    &e.plan,
                ) {
                    Ok(report) => report.ratio,
                    Err(CoreError::UndefinedRatio) => f64::NAN,
                    Err(other) => return Err(other),
                };
                if e.decoupled {
                    Ok(vec![np, nm, total, ratio])
                } else {
                    let kg = kgfactor_core::pair_m::kg_from_pair(&e.state, &e.constants)?;
                    let energy = kg_energy(&kg, &e.constants, &e.plan)?;
                    Ok(vec![np, nm, total, energy, ratio])
                }
            }
            Engine::Schrod(e) => Ok(vec![
                l2_norm(&e.psi),
                light_cone_mass(&e.psi, e.center, e.t, e.margin, &e.constants),
            ]),
            Engine::P(e) => {
                let np = e.state.plus.norm();
                let nm = e.state.minus.norm();
                let pot = sample_p_potentials(
                    &e.v,
                    &e.xi,
                    e.state.plus.tgrid(),
                    e.state.z,
                    &e.ws.t_plan,
                )?;
                let ratio =
                    match validity_margin_p(&e.state, &pot, e.threshold, &e.constants, &e.ws) {
                        Ok(report) => report.ratio,
                        Err(CoreError::UndefinedRatio) => f64::NAN,
                        Err(other) => return Err(other),
                    };
                let frac = evanescent_fraction(&e.state.plus, &e.ws)
                    .max(evanescent_fraction(&e.state.minus, &e.ws));
                if e.forward_only {
                    Ok(vec![np, ratio, frac])
                } else {
                    let total = (np * np + nm * nm).sqrt();
                    Ok(vec![np, nm, total, ratio, frac])
                }
            }
        }
    }

    fn capture(&self) -> Captured {
        match self {
            Engine::Kg(e) => Captured::Kg(e.state.clone()),
            Engine::PairM(e) => Captured::Pair(e.state.clone()),
            Engine::Schrod(e) => Captured::Psi { field: e.psi.clone(), t: e.t },
            Engine::P(e) => Captured::PPair(e.state.clone()),
        }
    }

    /// Named component snapshots (the harness marches 1D profiles, so
    /// z-march fields are their single plane).
    fn snapshots(&self) -> Vec<(String, ComplexField)> {
        match self {
            Engine::Kg(e) => vec![
                ("phi".to_string(), e.state.phi.clone()),
                ("chi".to_string(), e.state.chi.clone()),
            ],
            Engine::PairM(e) => vec![
                ("plus".to_string(), e.state.plus.clone()),
                ("minus".to_string(), e.state.minus.clone()),
            ],
            Engine::Schrod(e) => vec![("psi".to_string(), e.psi.clone())],
            Engine::P(e) => {
                let mut out = vec![("plus".to_string(), e.state.plus.planes()[0].clone())];
                if !e.forward_only {
                    out.push(("minus".to_string(), e.state.minus.planes()[0].clone()));
                }
                out
            }
        }
    }

    /// Index of the validity-ratio column in this engine's series, if any.
    fn validity_column(&self, solver: SolverKind) -> Option<usize> {
        series_names(solver).iter().position(|n| *n == "validity_ratio")
    }
}

fn t_axis_init(
    packet: &ComplexField,
    init: InitPolicy,
    constants: &Constants,
    plan: &FftPlan,
) -> Result<KgState, HarnessError> {
    let rest = constants.rest_energy();
    match init {
        InitPolicy::ForwardProjection => {
            kg_init_forward(packet, 0.0, constants, plan).map_err(config_err)
        }
        InitPolicy::PairForward => {
            let chi = packet.scale(C64::new(rest, 0.0));
            KgState::new(packet.clone(), chi, 0.0).map_err(config_err)
        }
        InitPolicy::EqualPair => {
            // plus = minus = packet: phi = 2 packet, chi = m c^2 (plus - minus) = 0.
            let phi = packet.scale(C64::new(2.0, 0.0));
            let chi = ComplexField::zeros(*packet.grid());
            KgState::new(phi, chi, 0.0).map_err(config_err)
        }
    }
}

/// Run a validated config to completion.
pub fn run(
    echo: Value,
    config: &SimConfig,
    enforce_validity: bool,
) -> Result<RunArtifacts, HarnessError> {
    let started = Instant::now();
    let vc = config.validate()?;
    let coord_label = config.solver.coord_label();
    let names = series_names(config.solver);
    let mut engine = Engine::build(&vc)?;
    let validity_col = engine.validity_column(config.solver);

    let mut rows: Vec<SeriesRow> = Vec::new();
    let mut captured: Vec<Captured> = Vec::new();
    let mut max_validity: Option<f64> = None;
    let snapshots_initial = engine.snapshots();

    let record = |engine: &Engine,
                      step: usize,
                      rows: &mut Vec<SeriesRow>,
                      captured: &mut Vec<Captured>,
                      max_validity: &mut Option<f64>|
     -> Result<(), HarnessError> {
        let coord = engine.coord();
        let values = engine
            .sample()
            .map_err(|e| run_err(e, step, coord_label, coord))?;
        // Any non-finite sample is a blow-up, except the validity ratio,
        // which is legitimately NaN while the state is identically zero.
        if values
            .iter()
            .enumerate()
            .any(|(i, v)| !v.is_finite() && Some(i) != validity_col)
        {
            return Err(HarnessError::Diverged { step, coord_label, coord });
        }
        if let Some(col) = validity_col {
            let ratio = values[col];
            if ratio.is_finite() {
                *max_validity = Some(max_validity.map_or(ratio, |m| m.max(ratio)));
                if enforce_validity && ratio > config.validity_threshold {
                    return Err(HarnessError::ValidityBreach {
                        step,
                        ratio,
                        threshold: config.validity_threshold,
                    });
                }
            }
        }
        rows.push(SeriesRow { step, coord, values });
        captured.push(engine.capture());
        Ok(())
    };

    record(&engine, 0, &mut rows, &mut captured, &mut max_validity)?;
    for i in 1..=vc.steps {
        engine
            .step(config.step)
            .map_err(|e| run_err(e, i, coord_label, engine.coord()))?;
        if i % config.output_cadence == 0 || i == vc.steps {
            record(&engine, i, &mut rows, &mut captured, &mut max_validity)?;
        }
    }

    let snapshots_final = engine.snapshots();
    Ok(RunArtifacts {
        config: config.clone(),
        echo,
        coord_label,
        series_names: names,
        rows,
        captured,
        snapshots_initial,
        snapshots_final,
        max_validity,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Write the simulate artifact set: series.csv, field snapshots, meta.json.
pub fn write_artifacts(
    art: &RunArtifacts,
    dir: &std::path::Path,
) -> Result<(), HarnessError> {
    output::ensure_out_dir(dir)?;
    output::write_series_csv(&output::out_path(dir, "series.csv"), &art.series_names, &art.rows)?;
    let mut field_files = Vec::new();
    for (name, field) in &art.snapshots_initial {
        let file = format!("field_{name}_initial.csv");
        output::write_field_csv(&output::out_path(dir, &file), field)?;
        field_files.push(file);
    }
    for (name, field) in &art.snapshots_final {
        let file = format!("field_{name}_final.csv");
        output::write_field_csv(&output::out_path(dir, &file), field)?;
        field_files.push(file);
    }
    let final_row = art.rows.last().expect("a run records at least step 0");
    let mut summary = serde_json::Map::new();
    for (name, value) in art.series_names.iter().zip(&final_row.values) {
        summary.insert(format!("final_{name}"), json_f64(*value));
    }
    if let Some(v) = art.max_validity {
        summary.insert("max_validity_ratio".to_string(), json_f64(v));
    }
    let meta = json!({
        "command": "simulate",
        "config": art.echo,
        "versions": versions(),
        "coordinate": art.coord_label,
        "series": "series.csv",
        "fields": field_files,
        "summary": Value::Object(summary),
        "wall_time_seconds": art.wall_seconds,
    });
    output::write_json(&output::out_path(dir, "meta.json"), &meta)
}

/// JSON has no NaN/inf; encode those as strings so metadata stays valid.
pub fn json_f64(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| json!(v.to_string()), Value::Number)
}

pub fn versions() -> Value {
    json!({
        "kgfactor-cli": env!("CARGO_PKG_VERSION"),
        "kgfactor-core": env!("CARGO_PKG_VERSION"),
    })
}
