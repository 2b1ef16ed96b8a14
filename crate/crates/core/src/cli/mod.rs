//! Configuration, experiment drivers and output writers behind the `dgns`
//! binary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

pub use config::{DtPolicy, Example, ExperimentKind, RunConfig};
pub use experiments::{run_cavity, run_convergence, run_single, run_steady, CavityReport, Centerlines};
pub use verify::{run_property_suite, Check};

use crate::error::Error;

/// Process exit code for an error: 2 for bad input, 1 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
        _ => 1,
    }
}
