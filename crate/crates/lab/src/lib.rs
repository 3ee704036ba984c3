//! File formats, configuration and parallel execution for `heavyreg-core`.

pub mod config;
pub mod io;
pub mod runner;

pub use config::{parse_grid, BoundsConfig};
pub use runner::run_plan_parallel;

/// Version stamped into every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] heavyreg_core::Error),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
