use thiserror::Error;

use crate::elliptic::SolveStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid boundary specification: {0}")]
    Boundary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("{solver} did not converge: {stats}")]
    NotConverged {
        solver: &'static str,
        stats: SolveStats,
    },

    #[error("surface-layer iteration failed after {iterations} iterations (last u_tau = {u_tau})")]
    SurfaceLayer { iterations: usize, u_tau: f64 },

    #[error("unstable stratification (dtheta = {0} K) is not supported")]
    Unstable(f64),

    #[error("CFL number {cfl:.3} exceeds the limit {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("measurement window needs at least {needed} steps, got {got}")]
    ShortRun { needed: usize, got: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::SurfaceLayer { .. } | Error::Cfl { .. }
        )
    }
}
