//! Eb/N0 sweeps of the turbo-CRC decoders with CSV or JSON output.

use std::path::PathBuf;

pub mod report;
pub mod spec;

pub use report::{emit, run_sweep, SweepReport, CSV_HEADER};
pub use spec::{parse_spec, EbN0List, Format, RawSpec, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid {field}: {reason}")]
    Spec { field: &'static str, reason: String },
    #[error("cannot parse config file {}: {reason}", path.display())]
    ConfigFile { path: PathBuf, reason: String },
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation failed: {0}")]
    Sim(#[from] turbo_hybrid::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn spec(field: &'static str, reason: impl Into<String>) -> Self {
        Self::Spec { field, reason: reason.into() }
    }
}
