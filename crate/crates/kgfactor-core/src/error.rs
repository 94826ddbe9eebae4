//! Error type shared by all core operations.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong inside the solver core.
///
/// Variants carry enough context to report the failure without access to the
/// original call site (the harness maps these onto process exit codes).
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A physical constant failed validation (non-finite or out of range).
    InvalidConstants(String),
    /// Grid construction rejected the requested size or length.
    InvalidGrid(String),
    /// Two fields that must share a grid do not.
    GridMismatch,
    /// A field was handed to an operation expecting the other axis kind.
    WrongAxis { expected: crate::grid::Axis },
    /// Derivative order outside the supported set {1, 2}.
    UnsupportedOrder(u32),
    /// Wavepacket does not fit the grid (width or carrier out of range).
    PacketDoesNotFit(String),
    /// Operation requires strictly positive mass.
    MasslessUnsupported,
    /// Tabulated potential length does not match the grid.
    TabulatedLength { expected: usize, got: usize },
    /// Tabulated dynamic potential has no frame for the requested time.
    TabulatedOutOfRange { t: f64 },
    /// Analytic point evaluation requested for a tabulated potential.
    TabulatedPointEval,
    /// A state stopped being finite during integration.
    Diverged { at: f64 },
    /// Frequency bin inside the evanescent mask was used directly.
    EvanescentBin { omega: f64 },
    /// Field carries more relative energy in masked bins than allowed.
    EvanescentContent { fraction: f64 },
    /// Validity ratio is undefined because both components vanish.
    UndefinedRatio,
    /// Catch-all for invalid arguments with a human-readable reason.
    InvalidArgument(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidConstants(why) => write!(f, "invalid constants: {why}"),
            CoreError::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            CoreError::GridMismatch => write!(f, "fields live on different grids"),
            CoreError::WrongAxis { expected } => {
                write!(f, "operation requires a {expected:?}-axis grid")
            }
            CoreError::UnsupportedOrder(n) => {
                write!(f, "derivative order {n} not supported (use 1 or 2)")
            }
            CoreError::PacketDoesNotFit(why) => write!(f, "wavepacket does not fit grid: {why}"),
            CoreError::MasslessUnsupported => {
                write!(f, "operation undefined for zero mass")
            }
            CoreError::TabulatedLength { expected, got } => {
                write!(f, "tabulated potential has {got} samples, grid needs {expected}")
            }
            CoreError::TabulatedOutOfRange { t } => {
                write!(f, "tabulated potential has no frame covering t = {t}")
            }
            CoreError::TabulatedPointEval => {
                write!(f, "tabulated potentials support grid evaluation only")
            }
            CoreError::Diverged { at } => {
                write!(f, "state became non-finite at coordinate {at}")
            }
            CoreError::EvanescentBin { omega } => {
                write!(f, "frequency bin omega = {omega} lies inside the evanescent mask")
            }
            CoreError::EvanescentContent { fraction } => {
                write!(
                    f,
                    "field carries relative energy {fraction:.3e} in evanescent bins (limit 1e-10)"
                )
            }
            CoreError::UndefinedRatio => {
                write!(f, "validity ratio undefined: both components have zero norm")
            }
            CoreError::InvalidArgument(why) => write!(f, "invalid argument: {why}"),
        }
    }
}

impl core::error::Error for CoreError {}
