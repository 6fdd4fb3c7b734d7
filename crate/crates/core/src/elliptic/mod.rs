//! Linear solvers for the three elliptic problems of a time step.
//!
//! * [`mac_project`]: cell-centred 7-point Poisson problem solved with
//!   geometric multigrid V-cycles.
//! * [`nodal_project`]: node-centred 27-point variational Poisson problem,
//!   also multigrid.
//! * [`helmholtz_solve`]: 7-point Helmholtz problems solved with
//!   Jacobi-preconditioned BiCGStab.

mod cell_mg;
mod helmholtz;
mod krylov;
mod node_mg;

use std::fmt;

pub use cell_mg::{apply_cell_poisson, mac_project, CellMultigrid, MacProjection};
pub use helmholtz::{apply_helmholtz, helmholtz_solve, HelmholtzBc, HelmholtzProblem, WallBc};
pub use krylov::{bicgstab, cg};
pub use node_mg::{
    cell_gradient_of_nodes, nodal_divergence, nodal_project, NodalProjection, NodeMultigrid,
};

/// Outcome of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub initial_relative_residual: f64,
    pub final_relative_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

impl fmt::Display for SolveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, relative residual {:.3e} ({}), {:.3} ms",
            self.iterations,
            self.final_relative_residual,
            if self.converged { "converged" } else { "not converged" },
            self.wall_time * 1e3
        )
    }
}

/// Smoother and cycle settings shared by both multigrid hierarchies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgSettings {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub max_vcycles: usize,
    /// Relative residual target of the coarsest-level CG solve.
    pub coarse_tol: f64,
}

impl Default for MgSettings {
    fn default() -> Self {
        MgSettings {
            pre_sweeps: 2,
            post_sweeps: 2,
            max_vcycles: 50,
            coarse_tol: 1e-12,
        }
    }
}
