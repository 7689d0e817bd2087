//! Agent-side logic: strategy parameters, the deterministic rule agents, their
//! linear approximations, quantity sizing and decision validation.

pub mod linear;
pub mod rules;
pub mod signals;
pub mod sizing;
pub mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Qty;

pub use linear::{linear_decide, linear_features, linear_signal, market_probability, LinearSpec};
pub use rules::strategy_decide;
pub use signals::Signals;
pub use sizing::size_rule;
pub use validate::{validate_decision, AcceptedOrder, RejectReason, Rejection, Validation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Value,
    Momentum,
    MarketMaker,
    Contrarian,
    News,
    Optimistic,
    Speculator,
    Hold,
}

impl RuleKind {
    pub const ALL: [RuleKind; 8] = [
        RuleKind::Value,
        RuleKind::Momentum,
        RuleKind::MarketMaker,
        RuleKind::Contrarian,
        RuleKind::News,
        RuleKind::Optimistic,
        RuleKind::Speculator,
        RuleKind::Hold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Value => "value",
            RuleKind::Momentum => "momentum",
            RuleKind::MarketMaker => "market_maker",
            RuleKind::Contrarian => "contrarian",
            RuleKind::News => "news",
            RuleKind::Optimistic => "optimistic",
            RuleKind::Speculator => "speculator",
            RuleKind::Hold => "hold",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds for every rule type. All are configurable per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    /// Value: trade when `|P/V − 1| > alpha`.
    pub value_alpha: f64,
    /// Value: market order when `|P/V − 1| > beta`.
    pub value_beta: f64,
    /// Momentum: market order when `|ΔP| > gamma·σ`.
    pub momentum_gamma: f64,
    /// Maker: market order when `|I − I*| > delta_fraction·I*`.
    pub maker_delta_fraction: f64,
    /// Maker: half spread is `max(min_half_spread, lambda·σ/P)`.
    pub maker_lambda: f64,
    pub maker_min_half_spread: f64,
    /// Maker: target inventory, defaults to the initial share endowment.
    pub maker_target_inventory: Option<Qty>,
    pub contrarian_eta: f64,
    pub contrarian_mu: f64,
    pub news_nu: f64,
    pub news_xi: f64,
    /// Optimistic: believed value is `multiplier × V`.
    pub optimism_multiplier: f64,
    pub optimism_kappa: f64,
    pub speculator_psi: f64,
    pub speculator_omega: f64,
    pub ma_window: usize,
    pub vol_window: usize,
    pub sigma_floor: f64,
    /// Largest fraction of available cash or shares committed per order.
    pub max_fraction: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            value_alpha: 0.10,
            value_beta: 0.25,
            momentum_gamma: 1.0,
            maker_delta_fraction: 0.2,
            maker_lambda: 1.0,
            maker_min_half_spread: 0.01,
            maker_target_inventory: None,
            contrarian_eta: 2.0,
            contrarian_mu: 2.0,
            news_nu: 1.0,
            news_xi: 1.0,
            optimism_multiplier: 10.0,
            optimism_kappa: 0.0,
            speculator_psi: 0.5,
            speculator_omega: 0.5,
            ma_window: 5,
            vol_window: 5,
            sigma_floor: 1e-6,
            max_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("strategy parameter `{name}` {problem}")]
pub struct ParamError {
    pub name: &'static str,
    pub problem: &'static str,
}

impl StrategyParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let thresholds = [
            ("value_alpha", self.value_alpha),
            ("value_beta", self.value_beta),
            ("momentum_gamma", self.momentum_gamma),
            ("maker_delta_fraction", self.maker_delta_fraction),
            ("maker_lambda", self.maker_lambda),
            ("maker_min_half_spread", self.maker_min_half_spread),
            ("contrarian_eta", self.contrarian_eta),
            ("contrarian_mu", self.contrarian_mu),
            ("news_nu", self.news_nu),
            ("news_xi", self.news_xi),
            ("optimism_multiplier", self.optimism_multiplier),
            ("optimism_kappa", self.optimism_kappa),
            ("speculator_psi", self.speculator_psi),
            ("speculator_omega", self.speculator_omega),
        ];
        for (name, value) in thresholds {
            if !value.is_finite() || value < 0.0 {
                return Err(ParamError { name, problem: "must be finite and non-negative" });
            }
        }
        if self.maker_min_half_spread >= 1.0 {
            return Err(ParamError { name: "maker_min_half_spread", problem: "must be below 1" });
        }
        if self.ma_window == 0 {
            return Err(ParamError { name: "ma_window", problem: "must be at least 1" });
        }
        if self.vol_window == 0 {
            return Err(ParamError { name: "vol_window", problem: "must be at least 1" });
        }
        if !(self.sigma_floor > 0.0 && self.sigma_floor.is_finite()) {
            return Err(ParamError { name: "sigma_floor", problem: "must be positive" });
        }
        if !(self.max_fraction > 0.0 && self.max_fraction <= 1.0) {
            return Err(ParamError { name: "max_fraction", problem: "must lie in (0, 1]" });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        StrategyParams::default().validate().unwrap();
        let bad = StrategyParams { max_fraction: 0.0, ..StrategyParams::default() };
        assert_eq!(bad.validate().unwrap_err().name, "max_fraction");
        let bad = StrategyParams { contrarian_eta: -1.0, ..StrategyParams::default() };
        assert_eq!(bad.validate().unwrap_err().name, "contrarian_eta");
    }
}
