//! Run configuration: JSON schema, dotted-path overrides, validation, and
//! conversion into the core solver types.

use kgfactor_core::grid::{Axis, Grid};
use kgfactor_core::kg::kg_stability_dt;
use kgfactor_core::packet::{PacketScale, WavepacketSpec};
use kgfactor_core::pair_p::{p_stability_dz, PMode};
use kgfactor_core::potential::{DynamicPotential, StaticPotential};
use kgfactor_core::Constants;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Kg,
    PairM,
    Schrodinger,
    MWithMass,
    PairP,
    ForwardP,
}

impl SolverKind {
    /// Axis of the marching grid: time-steppers hold fields on a space
    /// grid, z-marchers hold time profiles.
    pub fn grid_axis(self) -> Axis {
        match self {
            SolverKind::Kg
            | SolverKind::PairM
            | SolverKind::Schrodinger
            | SolverKind::MWithMass => Axis::Space,
            SolverKind::PairP | SolverKind::ForwardP => Axis::Time,
        }
    }

    /// Label of the marching coordinate in series output.
    pub fn coord_label(self) -> &'static str {
        match self.grid_axis() {
            Axis::Space => "t",
            Axis::Time => "z",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Kg => "kg",
            SolverKind::PairM => "pair_m",
            SolverKind::Schrodinger => "schrodinger",
            SolverKind::MWithMass => "m_with_mass",
            SolverKind::PairP => "pair_p",
            SolverKind::ForwardP => "forward_p",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        Self { hbar: 1.0, c: 1.0, mass: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleSpec {
    Peak,
    UnitL2,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: f64,
    pub width: f64,
    pub carrier: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_scale")]
    pub scale: ScaleSpec,
}

fn default_scale() -> ScaleSpec {
    ScaleSpec::UnitL2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StaticSpec {
    Zero,
    Constant { value: f64 },
    GaussianBump { depth: f64, center: f64, width: f64 },
    Harmonic { strength: f64, center: f64 },
    Tabulated { values: Vec<f64> },
}

impl Default for StaticSpec {
    fn default() -> Self {
        StaticSpec::Zero
    }
}

impl StaticSpec {
    pub fn to_core(&self) -> StaticPotential {
        match self {
            StaticSpec::Zero => StaticPotential::Zero,
            StaticSpec::Constant { value } => StaticPotential::Constant(*value),
            StaticSpec::GaussianBump { depth, center, width } => StaticPotential::GaussianBump {
                depth: *depth,
                center: *center,
                width: *width,
            },
            StaticSpec::Harmonic { strength, center } => {
                StaticPotential::Harmonic { strength: *strength, center: *center }
            }
            StaticSpec::Tabulated { values } => StaticPotential::Tabulated(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicSpec {
    Zero,
    Constant { value: f64 },
    StandingWave { amplitude: f64, wavenumber: f64, frequency: f64 },
    TravelingWave { amplitude: f64, wavenumber: f64, frequency: f64 },
    Tabulated { t0: f64, frame_dt: f64, frames: Vec<Vec<f64>> },
}

impl Default for DynamicSpec {
    fn default() -> Self {
        DynamicSpec::Zero
    }
}

impl DynamicSpec {
    pub fn to_core(&self) -> DynamicPotential {
        match self {
            DynamicSpec::Zero => DynamicPotential::Zero,
            DynamicSpec::Constant { value } => DynamicPotential::Constant(*value),
            DynamicSpec::StandingWave { amplitude, wavenumber, frequency } => {
                DynamicPotential::StandingWave {
                    amplitude: *amplitude,
                    wavenumber: *wavenumber,
                    frequency: *frequency,
                }
            }
            DynamicSpec::TravelingWave { amplitude, wavenumber, frequency } => {
                DynamicPotential::TravelingWave {
                    amplitude: *amplitude,
                    wavenumber: *wavenumber,
                    frequency: *frequency,
                }
            }
            DynamicSpec::Tabulated { t0, frame_dt, frames } => DynamicPotential::Tabulated {
                t0: *t0,
                frame_dt: *frame_dt,
                frames: frames.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PModeSpec {
    Literal,
    ExactOmega,
}

impl Default for PModeSpec {
    fn default() -> Self {
        PModeSpec::Literal
    }
}

impl PModeSpec {
    pub fn to_core(self) -> PMode {
        match self {
            PModeSpec::Literal => PMode::Literal,
            PModeSpec::ExactOmega => PMode::ExactOmega,
        }
    }
}

/// How the initial state is built from the packet.
///
/// * `forward_projection`: exact per-mode forward eigenstate of the free
///   dispersion (backward component identically zero).
/// * `pair_forward`: forward pair component set to the packet directly
///   (spatially bounded; the projection has algebraic tails). For the
///   z-marchers this is the only forward-only policy.
/// * `equal_pair`: both pair components set to the packet (used by the
///   validity-ratio scans, where the cross term must see a full-size
///   opposite component).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    ForwardProjection,
    PairForward,
    EqualPair,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::ForwardProjection
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub solver: SolverKind,
    #[serde(default)]
    pub constants: ConstantsSpec,
    pub grid: GridSpec,
    pub packet: PacketSpec,
    #[serde(default)]
    pub potential_v: StaticSpec,
    #[serde(default)]
    pub potential_xi: DynamicSpec,
    /// Total marched span: a time for the time-steppers, a distance for the
    /// z-marchers. Must be an integer number of steps.
    pub duration: f64,
    /// Step size (dt or dz).
    pub step: f64,
    /// Record every `output_cadence`-th step (step 0 and the final step are
    /// always recorded).
    #[serde(default = "default_cadence")]
    pub output_cadence: usize,
    #[serde(default = "default_threshold")]
    pub validity_threshold: f64,
    #[serde(default)]
    pub p_mode: PModeSpec,
    #[serde(default)]
    pub init: InitPolicy,
    /// Carried into the config echo for randomized downstream consumers;
    /// the solvers themselves are deterministic and never read it.
    #[serde(default)]
    pub seed: u64,
}

fn default_cadence() -> usize {
    1
}

fn default_threshold() -> f64 {
    0.1
}

/// A configuration checked against every static invariant and converted to
/// core types, ready to run.
#[derive(Debug)]
pub struct ValidatedConfig {
    pub config: SimConfig,
    pub constants: Constants,
    pub grid: Grid,
    pub packet: WavepacketSpec,
    pub potential_v: StaticPotential,
    pub potential_xi: DynamicPotential,
    pub steps: usize,
    pub p_mode: PMode,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl SimConfig {
    pub fn validate(&self) -> Result<ValidatedConfig, HarnessError> {
        let constants = Constants::new(self.constants.hbar, self.constants.c, self.constants.mass)
            .map_err(|e| config_err(e.to_string()))?;
        let grid = match self.solver.grid_axis() {
            Axis::Space => Grid::space(self.grid.n, self.grid.length),
            Axis::Time => Grid::time(self.grid.n, self.grid.length),
        }
        .map_err(|e| config_err(e.to_string()))?;

        let scale = match self.packet.scale {
            ScaleSpec::Peak => PacketScale::Peak,
            ScaleSpec::UnitL2 => PacketScale::UnitL2,
        };
        let packet = WavepacketSpec::new(self.packet.center, self.packet.width, self.packet.carrier)
            .with_amplitude(self.packet.amplitude, scale);
        // Build once to surface packet-fit violations as config errors.
        kgfactor_core::packet::make_gaussian_packet(grid, &packet)
            .map_err(|e| config_err(e.to_string()))?;

        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(config_err(format!("step must be positive, got {}", self.step)));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(config_err(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        let ratio = self.duration / self.step;
        let steps = ratio.round() as usize;
        if steps == 0 || (ratio - steps as f64).abs() > 1e-9 * ratio.max(1.0) {
            return Err(config_err(format!(
                "duration {} is not an integer number of steps of {}",
                self.duration, self.step
            )));
        }
        if self.output_cadence == 0 {
            return Err(config_err("output_cadence must be at least 1"));
        }
        if !(self.validity_threshold.is_finite() && self.validity_threshold > 0.0) {
            return Err(config_err("validity_threshold must be positive"));
        }

        let potential_v = self.potential_v.to_core();
        let potential_xi = self.potential_xi.to_core();

        match self.solver {
            SolverKind::Kg | SolverKind::PairM => {
                let v_max = potential_v
                    .max_abs(&grid)
                    .map_err(|e| config_err(e.to_string()))?;
                let bound = kg_stability_dt(&grid, v_max, potential_xi.max_abs(), &constants);
                if self.step > bound {
                    return Err(config_err(format!(
                        "step {} exceeds the stability bound {bound:.6e} for this grid",
                        self.step
                    )));
                }
            }
            SolverKind::Schrodinger | SolverKind::MWithMass => {
                // Strang splitting with unit-modulus factors: no step bound.
            }
            SolverKind::PairP | SolverKind::ForwardP => {
                if matches!(potential_v, StaticPotential::Tabulated(_)) {
                    return Err(config_err(
                        "tabulated potential_v is grid-sampled only; the z-marchers need \
                         point evaluation V(z)",
                    ));
                }
                let mut v_max: f64 = 0.0;
                for i in 0..=steps {
                    let z = i as f64 * self.step;
                    let v = potential_v
                        .value_at(z)
                        .map_err(|e| config_err(e.to_string()))?;
                    v_max = v_max.max(v.abs());
                }
                let bound = p_stability_dz(&grid, None, v_max, potential_xi.max_abs(), &constants)
                    .map_err(|e| config_err(e.to_string()))?;
                if self.step > bound {
                    return Err(config_err(format!(
                        "step {} exceeds the marching stability bound {bound:.6e}",
                        self.step
                    )));
                }
            }
        }

        match self.solver {
            SolverKind::PairM | SolverKind::MWithMass | SolverKind::Schrodinger => {
                constants.require_mass().map_err(|e| config_err(e.to_string()))?;
            }
            SolverKind::ForwardP => {
                if self.init != InitPolicy::PairForward {
                    return Err(config_err(
                        "forward_p marches one component; set init = \"pair_forward\"",
                    ));
                }
            }
            SolverKind::PairP => {
                if self.init == InitPolicy::ForwardProjection {
                    return Err(config_err(
                        "the z-marchers take their initial plane directly from the packet; \
                         set init = \"pair_forward\" or \"equal_pair\"",
                    ));
                }
            }
            SolverKind::Kg => {}
        }
        if self.solver.grid_axis() == Axis::Space
            && self.init == InitPolicy::ForwardProjection
            && constants.mass == 0.0
        {
            return Err(config_err(
                "forward_projection divides by the rest energy; massless runs need \
                 init = \"pair_forward\"",
            ));
        }

        Ok(ValidatedConfig {
            config: self.clone(),
            constants,
            grid,
            packet,
            potential_v,
            potential_xi,
            steps,
            p_mode: self.p_mode.to_core(),
        })
    }
}

/// Parse a config from its JSON value form, pointing at the offending field
/// on failure.
pub fn config_from_value(value: &Value) -> Result<SimConfig, HarnessError> {
    serde_json::from_value(value.clone()).map_err(|e| config_err(e.to_string()))
}

/// Read a JSON config file into value form (overrides apply to this).
pub fn load_config_value(path: &std::path::Path) -> Result<Value, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_err(format!("cannot read config {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{} is not valid JSON: {e}", path.display())))
}

/// Set a dotted-path key inside a JSON config value, creating intermediate
/// objects as needed.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), HarnessError> {
    if path.is_empty() {
        return Err(config_err("override has an empty key"));
    }
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for segment in &segments[..segments.len() - 1] {
        if !node.is_object() {
            return Err(config_err(format!(
                "override path '{path}' walks through a non-object at '{segment}'"
            )));
        }
        node = node
            .as_object_mut()
            .expect("checked is_object above")
            .entry(segment.to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    let last = segments[segments.len() - 1];
    match node.as_object_mut() {
        Some(map) => {
            map.insert(last.to_string(), value);
            Ok(())
        }
        None => Err(config_err(format!(
            "override path '{path}' does not end inside an object"
        ))),
    }
}

/// Apply one `key=value` override to a JSON config value. Keys are dotted
/// paths into objects; values are parsed as JSON when possible and fall
/// back to strings (so `--override solver=kg` works unquoted).
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), HarnessError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{spec}' is not of the form key=value")))?;
    let parsed: Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(root, path, parsed)
}

/// Load a config file and apply overrides, returning both the echo value
/// and the typed config.
pub fn load_config(
    path: &std::path::Path,
    overrides: &[String],
) -> Result<(Value, SimConfig), HarnessError> {
    let mut value = load_config_value(path)?;
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    let config = config_from_value(&value)?;
    Ok((value, config))
}
