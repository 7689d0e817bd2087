//! Scenario configuration and the round-by-round market simulation.

mod engine;
mod record;
mod rng;
mod scenario;
mod surrogate;

pub use engine::{agent_decision, run, Ask, LlmBackend, Outcome, SimError, Simulator};
pub use record::{
    AgentInfo, Anomaly, DecisionRecord, OrderEvent, OrderEventKind, Redemption, RoundRecord, RunOutput,
};
pub use rng::{seeded_shuffle, substream, Domain};
pub use scenario::{
    AgentConfig, AgentEngine, AgentSpec, ConfigError, DividendConfig, Endowment, Engine, LinearConfig, Scenario,
};
pub use surrogate::{surrogate_decide, surrogate_rule};
