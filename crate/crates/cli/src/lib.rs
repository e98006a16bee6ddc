//! Experiment runner for the lattice and collective mutual-information
//! engines: TOML run configurations, parameter sweeps on a worker pool,
//! ordered CSV output, SVG plots and the verification suites.

pub mod config;
pub mod engines;
pub mod run;
pub mod svg;
pub mod verify;

pub use config::{Engine, RunConfig};
pub use run::{run, Format, RunError, RunOptions};
