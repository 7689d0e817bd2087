//! Scenario and sweep configuration files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{BookTemplate, SweepMarket};
use crate::asset::Horizon;
use crate::sim::{AgentConfig, AgentSpec, ConfigError, DividendConfig, Endowment, Scenario};

use super::IoError;

fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("(file)", e.message().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "(root)".to_string() } else { path };
        ConfigError::new(path, e.inner().message().to_string())
    })
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

/// Parses and fully validates a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let scenario: Scenario = parse_toml(text)?;
    scenario.agent_specs()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    Ok(parse_scenario(&read(path)?)?)
}

/// SHA-256 of the scenario's canonical JSON form (keys sorted).
pub fn config_digest(scenario: &Scenario) -> String {
    let value = serde_json::to_value(scenario).expect("scenarios serialize");
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

/// One agent to sweep and the market it is shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rate")]
    pub interest_rate: f64,
    #[serde(default = "default_dividend")]
    pub dividend: DividendConfig,
    #[serde(default)]
    pub endowment: Endowment,
    #[serde(default)]
    pub book: BookTemplate,
    #[serde(default)]
    pub llm: crate::llm::LlmClientConfig,
    pub agent: AgentConfig,
}

fn default_rate() -> f64 {
    0.05
}

fn default_dividend() -> DividendConfig {
    DividendConfig {
        process: crate::asset::DividendProcess::Bernoulli { base: 1.4, variation: 1.0, probability_high: 0.5 },
        interval: 1,
    }
}

impl SweepConfig {
    /// Validated agent, market and book, checked as a one-agent scenario.
    pub fn parts(&self) -> Result<(AgentSpec, SweepMarket, BookTemplate), ConfigError> {
        let mut agent = self.agent.clone();
        agent.count = 1;
        let probe = Scenario {
            name: "sweep".into(),
            seed: self.seed,
            rounds: Some(1),
            initial_price: crate::money::Price::from_cents(100).expect("positive"),
            interest_rate: self.interest_rate,
            dividend: self.dividend.clone(),
            horizon: Horizon::Infinite,
            redemption_value: None,
            hide_fundamental: false,
            endowment: self.endowment.clone(),
            news: Vec::new(),
            llm: self.llm.clone(),
            agents: vec![agent],
        };
        let spec = probe.agent_specs().map_err(|e| {
            let path = e.path.strip_prefix("agents[0]").map(|rest| format!("agent{rest}")).unwrap_or(e.path);
            ConfigError::new(path, e.message)
        })?;
        if self.book.offsets.iter().any(|o| !(o.is_finite() && *o > 0.0 && *o < 1.0)) {
            return Err(ConfigError::new("book.offsets", "offsets must lie in (0, 1)"));
        }
        let market = SweepMarket { interest_rate: self.interest_rate, dividend: self.dividend.process, seed: self.seed };
        Ok((spec.into_iter().next().expect("one agent"), market, self.book.clone()))
    }
}

pub fn parse_sweep_config(text: &str) -> Result<SweepConfig, ConfigError> {
    let cfg: SweepConfig = parse_toml(text)?;
    cfg.parts()?;
    Ok(cfg)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig, IoError> {
    Ok(parse_sweep_config(&read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
initial_price = 28.0
interest_rate = 0.05
rounds = 2
horizon = { kind = "infinite" }
[dividend]
kind = "bernoulli"
base = 1.4
variation = 1.0
probability_high = 0.5
[[agents]]
type = "value"
engine = "rule"
"#;

    #[test]
    fn minimal_scenario_loads() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.initial_price.cents(), 2800);
        assert_eq!(s.dividend.interval, 1);
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let text = MINIMAL.replace("engine = \"rule\"", "engine = \"rule\"\ncount = \"two\"");
        assert_eq!(parse_scenario(&text).unwrap_err().path, "agents[0].count");
        let text = MINIMAL.replace("base = 1.4", "base = 1.4\nbogus = 1");
        assert!(parse_scenario(&text).unwrap_err().path.starts_with("dividend"));
        let text = MINIMAL.replace("interest_rate = 0.05", "interest_rate = -0.05");
        assert_eq!(parse_scenario(&text).unwrap_err().path, "interest_rate");
    }

    #[test]
    fn digest_follows_behaviour_keys() {
        let a = parse_scenario(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(config_digest(&a), config_digest(&b));
        b.seed = 7;
        assert_ne!(config_digest(&a), config_digest(&b));
    }

    #[test]
    fn sweep_config_paths_name_the_agent() {
        let cfg = parse_sweep_config("[agent]\ntype = \"value\"\nengine = \"rule\"\n").unwrap();
        let (spec, market, book) = cfg.parts().unwrap();
        assert_eq!(spec.label, "value");
        assert!((market.fundamental().unwrap() - 28.0).abs() < 1e-12);
        assert_eq!(book.size, 1000);
        let err = parse_sweep_config("[agent]\ntype = \"whale\"\nengine = \"rule\"\n").unwrap_err();
        assert_eq!(err.path, "agent.type");
    }
}
