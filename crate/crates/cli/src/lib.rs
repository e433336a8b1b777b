//! Experiment runner for the online linearized LASSO.
//!
//! A TOML file describes a simulation; [`runner`] fans replications out over
//! a thread pool and [`csv_io`] writes the results. The `olin` binary wraps
//! this crate.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod runner;
pub mod state_io;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use runner::{run_slope, run_t0_sweep, run_trajectory, RunOptions, SlopeReport};
