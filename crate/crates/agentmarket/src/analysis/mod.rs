//! Post-run statistics: efficiency, wealth, behaviour, consistency,
//! regressions and decision sweeps.

mod behavior;
mod consistency;
mod efficiency;
mod impact;
mod ols;
mod sweep;
mod wealth;

use thiserror::Error;

use crate::asset::AssetError;
use crate::sim::ConfigError;

pub use behavior::{behavior_report, default_keywords, KeywordLists, TypeBehavior};
pub use consistency::{
    bag_of_words, consistency_metrics, cosine, decision_coherence, default_stopwords, strategy_consistency,
    variance_check, TypeConsistency, VarianceCheck, DEFAULT_STOPWORDS,
};
pub use efficiency::{efficiency, EfficiencyReport, RatioStats, RoundSummary, VolumeStats};
pub use impact::{price_impact, PriceImpact};
pub use ols::{estimate_coefficients, OlsError, OlsFit, RankError};
pub use sweep::{
    decision_sweep, rho_grid, sweep_agent, sweep_snapshot, BookTemplate, DecisionStats, SweepCell, SweepMarket,
    SweepResult, SweepRow,
};
pub use wealth::{wealth_report, WealthRow};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} rounds, got {got}")]
    TooFewRounds { needed: usize, got: usize },
    #[error("bad sweep grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error("invalid configuration at {0}")]
    Config(ConfigError),
    #[error("agent failed: {0}")]
    Agent(String),
}
