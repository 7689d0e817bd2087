//! Linear approximations of the rule agents: a signed desired quantity
//! `q = b0 + Σ bᵢxᵢ + ε` plus a probit choice between market and limit.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::account::AgentAccount;
use crate::decision::{OrderRequest, ReplaceMode, TradeDecision};
use crate::orderbook::Side;
use crate::snapshot::MarketSnapshot;

use super::rules::{price_at, reference_price};
use super::signals::Signals;
use super::sizing::round_half_up;
use super::{RuleKind, StrategyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub kind: RuleKind,
    #[serde(default)]
    pub intercept: f64,
    /// One coefficient per feature of [`linear_features`].
    pub coefficients: Vec<f64>,
    /// Std of the zero-mean noise term.
    #[serde(default)]
    pub noise_std: f64,
    /// `(γ0, γ1, γ2)` of `Pr(Market) = Φ(γ0 + γ1|q| + γ2|ΔP|)`.
    #[serde(default)]
    pub probit: [f64; 3],
}

impl LinearSpec {
    pub fn validate(&self) -> Result<(), String> {
        let expected = feature_names(self.kind).len();
        if self.coefficients.len() != expected {
            return Err(format!(
                "{} takes {expected} coefficients ({}), got {}",
                self.kind,
                feature_names(self.kind).join(", "),
                self.coefficients.len()
            ));
        }
        let all = self
            .coefficients
            .iter()
            .chain(&self.probit)
            .chain([&self.intercept, &self.noise_std]);
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err("coefficients must be finite".into());
        }
        if self.noise_std < 0.0 {
            return Err("noise_std must be non-negative".into());
        }
        Ok(())
    }
}

/// Names of the state variables each type's linear form uses, in order.
pub fn feature_names(kind: RuleKind) -> &'static [&'static str] {
    match kind {
        RuleKind::Value => &["value_gap"],
        RuleKind::Momentum => &["price_change", "volume_change"],
        RuleKind::MarketMaker => &["inventory_gap", "price_vs_average"],
        RuleKind::Contrarian => &["negative_z_score"],
        RuleKind::News => &["news", "price_vs_average"],
        RuleKind::Optimistic => &["optimistic_gap"],
        RuleKind::Speculator => &["expected_change"],
        RuleKind::Hold => &[],
    }
}

/// State variables for `kind`, or `None` when the fundamental is required but
/// hidden. Contrarian uses `−z` so that a positive coefficient fades moves.
pub fn linear_features(
    kind: RuleKind,
    params: &StrategyParams,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
) -> Option<Vec<f64>> {
    let s = Signals::from_snapshot(snapshot, params);
    let p = s.price;
    Some(match kind {
        RuleKind::Value => {
            let v = snapshot.fundamental?;
            vec![(v - p) / v]
        }
        RuleKind::Momentum => vec![s.price_change, s.volume_change],
        RuleKind::MarketMaker => {
            let target = params.maker_target_inventory.unwrap_or(account.shares) as f64;
            vec![target - account.shares as f64, p - s.moving_average]
        }
        RuleKind::Contrarian => vec![-s.z_score()],
        RuleKind::News => vec![snapshot.news, p - s.moving_average],
        RuleKind::Optimistic => vec![params.optimism_multiplier * snapshot.fundamental? - p],
        RuleKind::Speculator => vec![s.expected_change()],
        RuleKind::Hold => vec![],
    })
}

/// Signed desired quantity including noise.
pub fn linear_signal<R: Rng + ?Sized>(
    spec: &LinearSpec,
    params: &StrategyParams,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
    rng: &mut R,
) -> Option<f64> {
    let x = linear_features(spec.kind, params, snapshot, account)?;
    let mean = spec.intercept + spec.coefficients.iter().zip(&x).map(|(b, x)| b * x).sum::<f64>();
    let noise = if spec.noise_std > 0.0 {
        Normal::new(0.0, spec.noise_std).expect("validated std").sample(rng)
    } else {
        0.0
    };
    Some(mean + noise)
}

/// `Φ(γ0 + γ1|q| + γ2|ΔP|)`.
pub fn market_probability(probit: [f64; 3], q: f64, price_change: f64) -> f64 {
    let index = probit[0] + probit[1] * q.abs() + probit[2] * price_change.abs();
    StdNormal::standard().cdf(index)
}

/// Decision of a linear agent: side from the sign of `q`, quantity `|q|`
/// rounded, market with the probit probability, else limit at the type's
/// reference price.
pub fn linear_decide<R: Rng + ?Sized>(
    spec: &LinearSpec,
    params: &StrategyParams,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
    rng: &mut R,
) -> TradeDecision {
    let s = Signals::from_snapshot(snapshot, params);
    let p = s.price;
    let Some(q) = linear_signal(spec, params, snapshot, account, rng) else {
        return TradeDecision::hold(p, p, "fundamental unavailable");
    };
    let quantity = round_half_up(q.abs());
    let valuation = snapshot.fundamental.unwrap_or(p);
    if quantity == 0 {
        return TradeDecision::hold(valuation, p, format!("Linear signal {q:+.2} rounds to no trade."));
    }
    let side = if q > 0.0 { Side::Buy } else { Side::Sell };
    let market = rng.random::<f64>() < market_probability(spec.probit, q, s.price_change);
    let order = if market {
        OrderRequest::market(side, quantity)
    } else {
        OrderRequest::limit(side, quantity, reference_price(spec.kind, side, params, snapshot, &s))
    };
    TradeDecision {
        valuation_reasoning: format!("Linear {} model valuation {valuation:.2}.", spec.kind),
        valuation,
        price_target_reasoning: String::new(),
        price_target: price_at(p).to_f64(),
        orders: vec![order],
        replace_decision: ReplaceMode::Replace,
        reasoning: format!("Linear signal {q:+.2} for {} model.", spec.kind),
    }
}
