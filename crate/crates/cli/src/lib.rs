//! Command-line front end for `dirquant-core`: CSV ingestion, optional jitter
//! for degenerate data, and JSON/CSV/SVG artifacts.
//!
//! Exit codes: 0 on success, 2 when `n·τ` is an integer, 3 when the data are
//! not in general position, 1 otherwise.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod report;
pub mod svg;

pub use commands::{run, Command, Format, RunConfig};
pub use error::{CliError, Result};
