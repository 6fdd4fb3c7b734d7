//! Shared-memory LES mini-app for the stable atmospheric boundary layer.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom fix the double-precision types the driver uses.

pub mod advection;
pub mod bc;
pub mod case;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod perf;
pub mod real;
pub mod reduce;
pub mod se;
pub mod sgs;
pub mod timestep;
pub mod wall;

pub use case::{boundary_spec, initialize, prepare, weak_scale_domain, CaseConfig};
pub use error::{Error, Result};
pub use grid::{build_grid, Axis, GridSpec};
pub use real::Real;
pub use timestep::{State, StepConfig, Stepper};

pub type CellField64 = field::CellField<f64>;
pub type CellVector64 = field::CellVector<f64>;
pub type State64 = State<f64>;
pub type Stepper64 = Stepper<f64>;
