//! Command-line front end: configuration, report documents and the run
//! loop behind the `qobserver` binary.
//!
//! Exit codes: 0 success, 1 design or verification failure, 2 invalid
//! configuration, 3 golden mismatch in `reproduce-example`.

pub mod config;
pub mod error;
pub mod golden;
pub mod numfmt;
pub mod report;
pub mod run;

pub use config::{Args, Command, RunConfig, Units};
pub use error::CliError;
pub use run::{run, RunOutput};
