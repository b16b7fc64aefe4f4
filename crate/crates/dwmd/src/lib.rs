//! Experiment harness and file formats around [`dwmd_core`].
//!
//! - [`data`]: synthetic two-domain tasks (rotated moons, shifted Gaussians).
//! - [`csvio`]: CSV feature tables in and out.
//! - [`experiment`]: TOML experiment configs, seeded runs and sweeps.
//! - [`metric`]: one-shot discrepancy between two feature tables.
//! - [`report`]: the report directory written for each run.
//!
//! The `dwmd` binary exposes all of this on the command line.

pub mod csvio;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metric;
pub mod report;

pub use data::{gen_gaussian_shift, gen_moons, Dataset, DomainPair, Task};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_sweep, ExperimentReport, SweepParam, UdaExperiment};
pub use report::{write_report, write_sweep};
