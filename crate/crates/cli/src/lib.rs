//! Library side of the `flatsteer` command: run configuration, JSON reports,
//! the published-table presets and the `solve` / `relax` / `repro` commands.

pub mod config;
pub mod presets;
pub mod report;
pub mod run;
pub mod table;

pub use config::{parse_lambda, Format, ModeName, RunConfig, Tolerances};
pub use report::{AtomRecord, Interval, LowerBoundRecord, RelaxReport, Report, RunReport};
pub use run::{cmd_relax, cmd_repro, cmd_solve, format_report, write_atomic};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}
