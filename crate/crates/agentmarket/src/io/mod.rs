//! Configuration loading and run artifacts on disk.

mod config;
mod read;
mod write;

use std::path::PathBuf;

use thiserror::Error;

use crate::sim::ConfigError;

pub use config::{
    config_digest, load_scenario, load_sweep_config, parse_scenario, parse_sweep_config, SweepConfig,
};
pub use read::{read_round_summaries, read_stored_efficiency};
pub use write::{
    summary_text, write_run, write_sweep, FileEntry, RunManifest, RunMeta, AGENTS_CSV, ANOMALIES_CSV,
    DECISIONS_JSONL, EFFICIENCY_JSON, MANIFEST_JSON, ORDERS_CSV, ROUNDS_CSV, SUMMARY_TXT, TRADES_CSV, WEALTH_CSV,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}:{line}: {message}", path.display())]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Json(serde_json::Error),
    #[error("invalid configuration at {0}")]
    Config(#[from] ConfigError),
}
