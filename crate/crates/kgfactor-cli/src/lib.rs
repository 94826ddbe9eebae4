//! Command-line harness over the solver core: configuration, run
//! orchestration, cross-run experiments, and deterministic CSV/JSON output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod parallel;
pub mod run;
