//! `kgfactor`: run the relativistic pair solvers and their nonrelativistic
//! and one-way reductions from JSON configs, compare runs, scan parameters,
//! extract per-mode dispersion, and sweep modulation resonances.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use kgfactor_cli::config::{apply_override, config_from_value, load_config_value, SimConfig};
use kgfactor_cli::error::HarnessError;
use kgfactor_cli::experiments::{self, Alignment, ScanMetric};
use kgfactor_cli::output::fmt_f64;
use kgfactor_cli::run::{run, write_artifacts, RunArtifacts};

#[derive(Parser)]
#[command(
    name = "kgfactor",
    version,
    about = "Spectral solvers for coupled forward/backward wave pairs and their reductions",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and record series, field snapshots, and metadata.
    Simulate(SimulateArgs),
    /// Run two configs and report their aligned per-sample L2 distance.
    Compare(CompareArgs),
    /// Rerun one or two configs across parameter values and fit a log-log
    /// exponent to the chosen metric.
    Scan(ScanArgs),
    /// Fit per-mode phase rates of a finished run against the analytic
    /// dispersion.
    Dispersion(DispersionArgs),
    /// Sweep the dynamic-potential frequency and record backward growth.
    Resonance(ResonanceArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Dotted-path override, e.g. `packet.carrier=0.5` (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for output artifacts (omit to print the summary only).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Exit with code 4 when the recorded validity ratio exceeds the
    /// config's threshold.
    #[arg(long)]
    enforce_validity: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

#[derive(Args)]
struct TwoLegArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Second JSON config (defaults to the first with the B overrides).
    #[arg(long = "config-b", value_name = "FILE")]
    config_b: Option<PathBuf>,
    /// Override applied to leg A only, after the shared overrides.
    #[arg(long = "override-a", value_name = "KEY=VALUE")]
    overrides_a: Vec<String>,
    /// Override applied to leg B only, after the shared overrides.
    #[arg(long = "override-b", value_name = "KEY=VALUE")]
    overrides_b: Vec<String>,
    /// Phase gauge applied before the legs are compared.
    #[arg(long, value_enum, default_value_t = AlignmentArg::None)]
    alignment: AlignmentArg,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    legs: TwoLegArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    legs: TwoLegArgs,
    /// Dotted config path to sweep, e.g. `packet.carrier`.
    #[arg(long, value_name = "KEY")]
    param: String,
    /// Comma-separated positive values for the swept parameter.
    #[arg(long, value_delimiter = ',', value_name = "V1,V2,...", required = true)]
    values: Vec<f64>,
    /// Figure recorded per point.
    #[arg(long, value_enum, default_value_t = MetricArg::CompareError)]
    metric: MetricArg,
}

#[derive(Args)]
struct DispersionArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

#[derive(Args)]
struct ResonanceArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Comma-separated modulation frequencies to sweep.
    #[arg(long, value_delimiter = ',', value_name = "F1,F2,...", required = true)]
    frequencies: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlignmentArg {
    #[value(name = "none")]
    None,
    #[value(name = "remove_rest_mass", alias = "remove-rest-mass")]
    RemoveRestMass,
    #[value(name = "remove_rest_mass_and_v", alias = "remove-rest-mass-and-v")]
    RemoveRestMassAndV,
}

impl AlignmentArg {
    fn to_experiment(self) -> Alignment {
        match self {
            AlignmentArg::None => Alignment::None,
            AlignmentArg::RemoveRestMass => Alignment::RemoveRestMass,
            AlignmentArg::RemoveRestMassAndV => Alignment::RemoveRestMassAndV,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    #[value(name = "compare_error", alias = "compare-error")]
    CompareError,
    #[value(name = "validity_ratio", alias = "validity-ratio")]
    ValidityRatio,
}

impl MetricArg {
    fn to_experiment(self) -> ScanMetric {
        match self {
            MetricArg::CompareError => ScanMetric::CompareError,
            MetricArg::ValidityRatio => ScanMetric::ValidityRatio,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Compare(args) => compare(args),
        Command::Scan(args) => scan(args),
        Command::Dispersion(args) => dispersion(args),
        Command::Resonance(args) => resonance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_leg(path: &PathBuf, shared: &[String], own: &[String]) -> Result<(Value, SimConfig), HarnessError> {
    let mut value = load_config_value(path)?;
    for spec in shared.iter().chain(own) {
        apply_override(&mut value, spec)?;
    }
    let config = config_from_value(&value)?;
    Ok((value, config))
}

/// Both legs of a two-config command: B falls back to the A file when
/// `--config-b` is omitted (useful with `--override-b`).
fn load_legs(args: &TwoLegArgs) -> Result<((Value, SimConfig), (Value, SimConfig)), HarnessError> {
    let a = load_leg(&args.common.config, &args.common.overrides, &args.overrides_a)?;
    let path_b = args.config_b.as_ref().unwrap_or(&args.common.config);
    let b = load_leg(path_b, &args.common.overrides, &args.overrides_b)?;
    Ok((a, b))
}

fn simulate(args: SimulateArgs) -> Result<(), HarnessError> {
    let mut value = load_config_value(&args.common.config)?;
    for spec in &args.common.overrides {
        apply_override(&mut value, spec)?;
    }
    let config = config_from_value(&value)?;
    let art = run(value, &config, args.common.enforce_validity)?;
    print_run_summary(&art);
    if let Some(dir) = &args.common.out {
        write_artifacts(&art, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn print_run_summary(art: &RunArtifacts) {
    let final_row = art.rows.last().expect("a run records at least step 0");
    println!(
        "{} run: {} samples, final {} = {}",
        art.config.solver.name(),
        art.rows.len(),
        art.coord_label,
        fmt_f64(final_row.coord)
    );
    for (name, value) in art.series_names.iter().zip(&final_row.values) {
        println!("final {name} = {}", fmt_f64(*value));
    }
    if let Some(v) = art.max_validity {
        println!("max validity ratio = {}", fmt_f64(v));
    }
}

fn compare(args: CompareArgs) -> Result<(), HarnessError> {
    let started = Instant::now();
    let ((echo_a, cfg_a), (echo_b, cfg_b)) = load_legs(&args.legs)?;
    let alignment = args.legs.alignment.to_experiment();
    let (art_a, art_b) = experiments::run_pair(
        echo_a.clone(),
        &cfg_a,
        echo_b.clone(),
        &cfg_b,
        args.legs.common.enforce_validity,
    )?;
    let report = experiments::compare(&art_a, &art_b, alignment)?;
    println!(
        "compared {} samples along {}",
        report.rows.len(),
        report.coord_label
    );
    println!("final l2 error = {}", fmt_f64(report.final_error));
    println!("final relative error = {}", fmt_f64(report.final_relative));
    if let Some(dir) = &args.legs.common.out {
        experiments::write_compare(
            &report,
            &echo_a,
            &echo_b,
            alignment,
            started.elapsed().as_secs_f64(),
            dir,
        )?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn scan(args: ScanArgs) -> Result<(), HarnessError> {
    let started = Instant::now();
    let metric = args.metric.to_experiment();
    let alignment = args.legs.alignment.to_experiment();
    let ((echo_a, _), (echo_b, _)) = load_legs(&args.legs)?;
    let uses_b = args.legs.config_b.is_some() || !args.legs.overrides_b.is_empty();
    if metric == ScanMetric::ValidityRatio && uses_b {
        return Err(HarnessError::Config(
            "a validity-ratio scan reruns a single config; drop --config-b/--override-b".into(),
        ));
    }
    let base_b = (metric == ScanMetric::CompareError).then_some(&echo_b);
    let report = experiments::convergence_scan(
        &echo_a,
        base_b,
        alignment,
        &args.param,
        &args.values,
        metric,
        args.legs.common.enforce_validity,
    )?;
    for (value, error) in &report.rows {
        println!("{} = {} -> {} = {}", report.param, fmt_f64(*value), metric_label(metric), fmt_f64(*error));
    }
    match report.slope {
        Some(s) => println!("fitted log-log exponent = {}", fmt_f64(s)),
        None => println!("fitted log-log exponent undefined (metric at the numerical floor)"),
    }
    if let Some(dir) = &args.legs.common.out {
        experiments::write_scan(
            &report,
            &echo_a,
            base_b,
            alignment,
            started.elapsed().as_secs_f64(),
            dir,
        )?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn metric_label(metric: ScanMetric) -> &'static str {
    match metric {
        ScanMetric::CompareError => "relative error",
        ScanMetric::ValidityRatio => "max validity ratio",
    }
}

fn dispersion(args: DispersionArgs) -> Result<(), HarnessError> {
    let started = Instant::now();
    let mut value = load_config_value(&args.common.config)?;
    for spec in &args.common.overrides {
        apply_override(&mut value, spec)?;
    }
    let config = config_from_value(&value)?;
    let art = run(value.clone(), &config, args.common.enforce_validity)?;
    let points = experiments::dispersion_extract(&art)?;
    let worst = points.iter().map(|p| p.relative_error).fold(0.0, f64::max);
    println!("fitted {} modes", points.len());
    println!("max relative dispersion error = {}", fmt_f64(worst));
    if let Some(dir) = &args.common.out {
        experiments::write_dispersion(&points, &value, started.elapsed().as_secs_f64(), dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn resonance(args: ResonanceArgs) -> Result<(), HarnessError> {
    let started = Instant::now();
    let mut value = load_config_value(&args.common.config)?;
    for spec in &args.common.overrides {
        apply_override(&mut value, spec)?;
    }
    let report = experiments::resonance_scan(
        &value,
        &args.frequencies,
        args.common.enforce_validity,
    )?;
    for (freq, growth) in &report.rows {
        println!("frequency = {} -> max backward norm = {}", fmt_f64(*freq), fmt_f64(*growth));
    }
    println!(
        "peak growth {} at frequency {}",
        fmt_f64(report.peak_growth),
        fmt_f64(report.peak_frequency)
    );
    if let Some(dir) = &args.common.out {
        experiments::write_resonance(&report, &value, started.elapsed().as_secs_f64(), dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
