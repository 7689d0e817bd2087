//! Scenario configuration and its validation into runnable agent specs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{LinearSpec, RuleKind, StrategyParams};
use crate::asset::{AssetError, AssetParams, DividendProcess, Horizon};
use crate::llm::{LlmClientConfig, LlmMode, Persona};
use crate::money::{Money, Price, Qty};
use crate::orderbook::AgentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

fn one() -> u32 {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DividendConfig {
    #[serde(flatten)]
    pub process: DividendProcess,
    /// Rounds between payments.
    pub interval: u32,
}

// Flattening would let unknown keys through, so `interval` is split off by hand.
impl<'de> Deserialize<'de> for DividendConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut map = serde_json::Map::deserialize(d)?;
        let interval = match map.remove("interval") {
            Some(v) => u32::deserialize(v).map_err(|e| D::Error::custom(format!("interval: {e}")))?,
            None => one(),
        };
        let process = DividendProcess::deserialize(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(DividendConfig { process, interval })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endowment {
    pub cash: Money,
    pub shares: Qty,
}

impl Default for Endowment {
    fn default() -> Self {
        Endowment { cash: Money::from_cents(100_000_000), shares: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Rule,
    Linear,
    #[default]
    Llm,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Rule => "rule",
            Engine::Linear => "linear",
            Engine::Llm => "llm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    #[serde(default)]
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub probit: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    /// Strategy for rule and linear agents, persona for language-model agents.
    #[serde(rename = "type")]
    pub agent_type: String,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default = "one")]
    pub count: u32,
    /// Group name in reports; defaults to `type`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "unit")]
    pub cash_multiplier: f64,
    #[serde(default = "unit")]
    pub shares_multiplier: f64,
    #[serde(default)]
    pub hide_fundamental: Option<bool>,
    #[serde(default)]
    pub params: StrategyParams,
    #[serde(default)]
    pub linear: Option<LinearConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Trading rounds. Defaults to the horizon for finite markets.
    #[serde(default)]
    pub rounds: Option<u32>,
    pub initial_price: Price,
    pub interest_rate: f64,
    pub dividend: DividendConfig,
    pub horizon: Horizon,
    #[serde(default)]
    pub redemption_value: Option<f64>,
    /// Hide the fundamental estimate from every agent unless overridden.
    #[serde(default)]
    pub hide_fundamental: bool,
    #[serde(default)]
    pub endowment: Endowment,
    /// News signal per trading round, starting at round 1; missing rounds are 0.
    #[serde(default)]
    pub news: Vec<f64>,
    #[serde(default)]
    pub llm: LlmClientConfig,
    pub agents: Vec<AgentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentEngine {
    Rule(RuleKind),
    Linear(LinearSpec),
    Llm(Persona),
}

impl AgentEngine {
    pub fn engine(&self) -> Engine {
        match self {
            AgentEngine::Rule(_) => Engine::Rule,
            AgentEngine::Linear(_) => Engine::Linear,
            AgentEngine::Llm(_) => Engine::Llm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: AgentId,
    pub label: String,
    pub engine: AgentEngine,
    pub cash: Money,
    pub shares: Qty,
    pub hide_fundamental: bool,
    pub params: StrategyParams,
}

fn parse_name<T: for<'de> Deserialize<'de>>(name: &str) -> Option<T> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(name)).ok()
}

fn asset_error_path(e: &AssetError) -> &'static str {
    match e {
        AssetError::NonPositiveRate(_) | AssetError::RateTooLow(_) => "interest_rate",
        AssetError::BadProbability(_) => "dividend.probability_high",
        AssetError::BadParameter { name, .. } => name,
        AssetError::PastHorizon { .. } => "rounds",
        AssetError::IncompleteHorizon => "redemption_value",
    }
}

impl Scenario {
    pub fn asset(&self) -> AssetParams {
        AssetParams {
            interest_rate: self.interest_rate,
            dividend: self.dividend.process,
            dividend_interval: self.dividend.interval,
            horizon: self.horizon,
            redemption_value: self.redemption_value,
        }
    }

    /// Number of trading rounds the run will execute.
    pub fn trading_rounds(&self) -> u32 {
        self.rounds.or(self.horizon.rounds()).unwrap_or(0)
    }

    pub fn news_at(&self, round: u32) -> f64 {
        round
            .checked_sub(1)
            .and_then(|i| self.news.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// Checks every field and expands agent groups into one spec per agent.
    pub fn agent_specs(&self) -> Result<Vec<AgentSpec>, ConfigError> {
        if !(self.interest_rate.is_finite() && self.interest_rate > 0.0) {
            return Err(ConfigError::new("interest_rate", format!("must be positive, got {}", self.interest_rate)));
        }
        if self.dividend.interval == 0 {
            return Err(ConfigError::new("dividend.interval", "must be at least 1"));
        }
        if let Horizon::Finite { rounds: 0 } = self.horizon {
            return Err(ConfigError::new("horizon.rounds", "must be at least 1"));
        }
        if let Some(k) = self.redemption_value {
            if !(k.is_finite() && k >= 0.0) {
                return Err(ConfigError::new("redemption_value", "must be finite and non-negative"));
            }
        }
        self.asset()
            .validate()
            .map_err(|e| ConfigError::new(asset_error_path(&e), e.to_string()))?;
        match (self.horizon, self.rounds) {
            (Horizon::Infinite, None) => {
                return Err(ConfigError::new("rounds", "required for an infinite horizon"));
            }
            (_, Some(0)) => return Err(ConfigError::new("rounds", "must be at least 1")),
            (Horizon::Finite { rounds: t }, Some(r)) if r > t => {
                return Err(ConfigError::new("rounds", format!("{r} exceeds the horizon of {t} rounds")));
            }
            _ => {}
        }
        if self.endowment.cash.is_negative() {
            return Err(ConfigError::new("endowment.cash", "must be non-negative"));
        }
        if let Some(i) = self.news.iter().position(|n| !n.is_finite()) {
            return Err(ConfigError::new(format!("news[{i}]"), "must be finite"));
        }
        if self.llm.mode == LlmMode::Http && self.llm.endpoint.is_none() {
            return Err(ConfigError::new("llm.endpoint", "required in http mode"));
        }
        if self.agents.is_empty() {
            return Err(ConfigError::new("agents", "at least one agent is required"));
        }

        let mut specs = Vec::new();
        for (i, a) in self.agents.iter().enumerate() {
            let at = |field: &str| format!("agents[{i}].{field}");
            let engine = match a.engine {
                Engine::Rule => AgentEngine::Rule(
                    parse_name(&a.agent_type)
                        .ok_or_else(|| ConfigError::new(at("type"), format!("unknown strategy `{}`", a.agent_type)))?,
                ),
                Engine::Llm => AgentEngine::Llm(
                    parse_name(&a.agent_type)
                        .ok_or_else(|| ConfigError::new(at("type"), format!("unknown persona `{}`", a.agent_type)))?,
                ),
                Engine::Linear => {
                    let kind: RuleKind = parse_name(&a.agent_type)
                        .ok_or_else(|| ConfigError::new(at("type"), format!("unknown strategy `{}`", a.agent_type)))?;
                    let cfg = a
                        .linear
                        .as_ref()
                        .ok_or_else(|| ConfigError::new(at("linear"), "required for linear agents"))?;
                    let spec = LinearSpec {
                        kind,
                        intercept: cfg.intercept,
                        coefficients: cfg.coefficients.clone(),
                        noise_std: cfg.noise_std,
                        probit: cfg.probit,
                    };
                    spec.validate().map_err(|m| ConfigError::new(at("linear"), m))?;
                    AgentEngine::Linear(spec)
                }
            };
            if a.count == 0 {
                return Err(ConfigError::new(at("count"), "must be at least 1"));
            }
            for (name, m) in [("cash_multiplier", a.cash_multiplier), ("shares_multiplier", a.shares_multiplier)] {
                if !(m.is_finite() && m >= 0.0) {
                    return Err(ConfigError::new(at(name), "must be finite and non-negative"));
                }
            }
            a.params
                .validate()
                .map_err(|e| ConfigError::new(at(&format!("params.{}", e.name)), e.problem))?;

            let cash = Money::from_cents((self.endowment.cash.cents() as f64 * a.cash_multiplier).round() as i64);
            let shares = (self.endowment.shares as f64 * a.shares_multiplier).round() as Qty;
            let mut params = a.params.clone();
            if params.maker_target_inventory.is_none() {
                params.maker_target_inventory = Some(shares);
            }
            for _ in 0..a.count {
                specs.push(AgentSpec {
                    id: AgentId(specs.len() as u32),
                    label: a.label.clone().unwrap_or_else(|| a.agent_type.clone()),
                    engine: engine.clone(),
                    cash,
                    shares,
                    hide_fundamental: a.hide_fundamental.unwrap_or(self.hide_fundamental),
                    params: params.clone(),
                });
            }
        }
        Ok(specs)
    }
}
