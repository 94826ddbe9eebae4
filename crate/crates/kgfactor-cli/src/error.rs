//! Harness-level errors and their process exit codes.

use thiserror::Error;

/// Exit codes: 2 for anything wrong with the request (config, paths, IO),
/// 3 for a solver blow-up mid-run, 4 for an enforced validity breach.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver diverged at step {step} ({coord_label} = {coord})")]
    Diverged {
        step: usize,
        coord_label: &'static str,
        coord: f64,
    },
    #[error(
        "validity threshold breached at step {step}: ratio {ratio:.6e} > threshold {threshold:.6e}"
    )]
    ValidityBreach {
        step: usize,
        ratio: f64,
        threshold: f64,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 2,
            HarnessError::Diverged { .. } => 3,
            HarnessError::ValidityBreach { .. } => 4,
        }
    }
}
