//! Rule stand-ins for language-model personas, used when no model or script
//! is configured so that bundled scenarios still run offline.

use crate::account::AgentAccount;
use crate::agents::{strategy_decide, RuleKind, StrategyParams};
use crate::decision::TradeDecision;
use crate::llm::Persona;
use crate::snapshot::MarketSnapshot;

/// Rule kind and optimism multiplier standing in for `persona`.
pub fn surrogate_rule(persona: Persona) -> (RuleKind, Option<f64>) {
    match persona {
        Persona::Value | Persona::Default => (RuleKind::Value, None),
        Persona::Momentum | Persona::Retail => (RuleKind::Momentum, None),
        Persona::MarketMaker => (RuleKind::MarketMaker, None),
        Persona::Contrarian => (RuleKind::Contrarian, None),
        Persona::Optimistic => (RuleKind::Optimistic, Some(10.0)),
        Persona::Pessimistic => (RuleKind::Optimistic, Some(0.1)),
        Persona::Speculator => (RuleKind::Speculator, None),
        Persona::Hold => (RuleKind::Hold, None),
    }
}

/// Decision of the stand-in. A hidden fundamental is replaced by the value
/// implied by the disclosed dividend and rate terms.
pub fn surrogate_decide(
    persona: Persona,
    params: &StrategyParams,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
) -> TradeDecision {
    let (kind, multiplier) = surrogate_rule(persona);
    let mut params = params.clone();
    if let Some(m) = multiplier {
        params.optimism_multiplier = m;
    }
    let view;
    let snapshot = if snapshot.fundamental.is_none() {
        view = MarketSnapshot { fundamental: snapshot.implied_value(), ..snapshot.clone() };
        &view
    } else {
        snapshot
    };
    strategy_decide(kind, &params, snapshot, account)
}
