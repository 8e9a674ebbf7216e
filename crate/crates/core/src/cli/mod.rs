//! Command-line front end: configuration, command dispatch and output files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use commands::{
    run_analyze, run_dynamics, run_sensitivity, run_solve, run_sweep, DynamicsOutput, SensitivityOutput,
    SolveOutput, SweepOutput, SweepRow,
};
pub use config::{GameConfig, RunConfig, SweepTarget};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Options shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Shifts only the sampled curvature bounds and monotonicity probes.
    pub seed: u64,
    /// Overrides the solver and dynamics residual tolerances.
    pub tol: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out: PathBuf::from("."),
            seed: 0,
            tol: None,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidNetwork(_)
        | Error::InvalidGame(_)
        | Error::Dimension { .. }
        | Error::Infeasible(_)
        | Error::Unsupported(_)
        | Error::Io(_) => EXIT_CONFIG,
        Error::NotConverged(_) => EXIT_NOT_CONVERGED,
        Error::AsymmetricNetwork(_)
        | Error::StepTooLarge(_)
        | Error::NotKktPoint(_)
        | Error::Regularity(_)
        | Error::Numerical(_) => EXIT_NUMERICAL,
    }
}
