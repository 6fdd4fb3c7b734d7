//! Case files, restart files and the CSV outputs.

pub mod checkpoint;
pub mod config;
pub mod output;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use config::{parse_config, parse_config_str, serialize_config};
pub use output::{
    design_decisions, profiles_csv, slice_csv, step_timing_csv, write_profiles, write_slice, RunMetadata,
};
