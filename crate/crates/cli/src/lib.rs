//! Benchmark harness and simulator front-end.

pub mod bench;
pub mod config;
pub mod error;
pub mod launch;
pub mod pattern;
pub mod report;
pub mod sim;
pub mod stats;

pub use config::{BenchConfig, BenchKind, Output, Transport};
pub use error::{CliError, Result};
pub use report::{emit_csv, emit_table, Row};
