//! Steady-state probe transmission, nonreciprocity and group delay for
//! series-coupled chains of spinning optomechanical ring resonators.
//!
//! The pipeline is: [`steady::solve_steady`] for the pumped mean field, then
//! [`response::solve_response`] for the weak-probe linear response at each
//! probe frequency, then the sweeps and derived metrics in [`analysis`].
//!
//! All frequency-like quantities are plain numbers in Hz used directly as
//! rates; see [`params`].

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
mod error;
pub mod manifest;
pub mod params;
pub mod presets;
pub mod response;
pub mod steady;

pub use analysis::{sweep_spectrum, MetricMode, SolverOptions, SpectrumResult};
pub use config::{load_config, parse_config, to_config_string, ConfigError};
pub use error::{Error, Result};
pub use manifest::{replay_manifest, RunManifest};
pub use params::{ChainConfig, DriveSpec, ProbeDirection, ResonatorSpec};
pub use response::{solve_response, ResponseOptions, ResponsePoint};
pub use steady::{solve_steady, SteadyOptions, SteadyState};
