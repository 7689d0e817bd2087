//! Deterministic threshold strategies, one per agent type.
//!
//! Every agent sizes a triggered signal at the full per-order cap from
//! [`size_rule`]. Decisions that place orders use `Replace`, so each round's
//! quotes supersede the previous ones; holds keep resting orders.

use crate::account::AgentAccount;
use crate::decision::{OrderRequest, ReplaceMode, TradeDecision};
use crate::money::{Price, Qty};
use crate::orderbook::{OrderKind, Side};
use crate::snapshot::MarketSnapshot;

use super::signals::Signals;
use super::sizing::size_rule;
use super::{RuleKind, StrategyParams};

/// Slack for threshold comparisons so exact boundary ratios count as inside.
const EPS: f64 = 1e-9;

/// Price rounded to the cent, never below one cent.
pub(crate) fn price_at(value: f64) -> Price {
    let cents = (value * 100.0).round().max(1.0);
    Price::from_cents(cents as i64).expect("at least one cent")
}

/// Largest order the agent can place on `side`, assuming its resting orders
/// are cancelled first. Buys are sized at `price`.
pub(crate) fn full_size(
    params: &StrategyParams,
    account: &AgentAccount,
    side: Side,
    price: Price,
) -> Qty {
    let resource = match side {
        Side::Buy => account.main_cash.shares_at(price),
        Side::Sell => account.shares,
    };
    size_rule(params.max_fraction * resource as f64, resource, params.max_fraction)
}

/// Price a market buy is sized and reserved at.
pub(crate) fn market_buy_price(snapshot: &MarketSnapshot) -> Price {
    snapshot.depth.best_ask().unwrap_or(snapshot.last_price)
}

/// Price the rule of `kind` attaches to a limit order on `side`.
pub(crate) fn reference_price(
    kind: RuleKind,
    side: Side,
    params: &StrategyParams,
    snapshot: &MarketSnapshot,
    signals: &Signals,
) -> Price {
    let p = signals.price;
    match kind {
        RuleKind::Value => match (snapshot.fundamental, side) {
            (Some(v), Side::Buy) => price_at(v * (1.0 - params.value_alpha)),
            (Some(v), Side::Sell) => price_at(v * (1.0 + params.value_alpha)),
            (None, _) => price_at(p),
        },
        RuleKind::Contrarian | RuleKind::News => price_at(signals.moving_average),
        RuleKind::Speculator => price_at(p + signals.expected_change()),
        RuleKind::Optimistic => match snapshot.fundamental {
            Some(v) => price_at(v * params.optimism_multiplier),
            None => price_at(p),
        },
        RuleKind::Momentum | RuleKind::MarketMaker | RuleKind::Hold => price_at(p),
    }
}

struct Ctx<'a> {
    kind: RuleKind,
    params: &'a StrategyParams,
    snapshot: &'a MarketSnapshot,
    account: &'a AgentAccount,
    signals: Signals,
}

impl Ctx<'_> {
    fn order(&self, side: Side, market: bool) -> Option<OrderRequest> {
        let (kind, limit) = if market {
            (OrderKind::Market, None)
        } else {
            let limit = reference_price(self.kind, side, self.params, self.snapshot, &self.signals);
            (OrderKind::Limit, Some(limit))
        };
        let sizing_price = match (side, limit) {
            (_, Some(l)) => l,
            (Side::Buy, None) => market_buy_price(self.snapshot),
            (Side::Sell, None) => self.snapshot.last_price,
        };
        let quantity = full_size(self.params, self.account, side, sizing_price);
        (quantity > 0).then_some(OrderRequest {
            side,
            quantity,
            kind,
            price_limit: limit,
        })
    }

    fn decide(&self, side: Option<Side>, market: bool, texts: Texts) -> TradeDecision {
        let orders: Vec<OrderRequest> = side.and_then(|s| self.order(s, market)).into_iter().collect();
        let reasoning = match (side, orders.is_empty()) {
            (Some(_), true) => format!("{} No resources available for the order.", texts.reasoning),
            _ => texts.reasoning,
        };
        TradeDecision {
            valuation_reasoning: texts.valuation_reasoning,
            valuation: texts.valuation,
            price_target_reasoning: texts.target_reasoning,
            price_target: texts.target,
            replace_decision: if orders.is_empty() { ReplaceMode::Add } else { ReplaceMode::Replace },
            orders,
            reasoning,
        }
    }
}

struct Texts {
    valuation_reasoning: String,
    valuation: f64,
    target_reasoning: String,
    target: f64,
    reasoning: String,
}

fn verb(side: Option<Side>) -> &'static str {
    match side {
        Some(Side::Buy) => "buying",
        Some(Side::Sell) => "selling",
        None => "holding",
    }
}

/// Applies the decision rule of `kind` to one snapshot.
pub fn strategy_decide(
    kind: RuleKind,
    params: &StrategyParams,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
) -> TradeDecision {
    let ctx = Ctx {
        kind,
        params,
        snapshot,
        account,
        signals: Signals::from_snapshot(snapshot, params),
    };
    let s = ctx.signals;
    let p = s.price;
    match kind {
        RuleKind::Value => {
            let Some(v) = snapshot.fundamental else {
                return TradeDecision::hold(p, p, "fundamental unavailable");
            };
            let rho = p / v;
            let side = if rho < 1.0 - params.value_alpha - EPS {
                Some(Side::Buy)
            } else if rho > 1.0 + params.value_alpha + EPS {
                Some(Side::Sell)
            } else {
                None
            };
            let market = (rho - 1.0).abs() > params.value_beta + EPS;
            let gap = (rho - 1.0) * 100.0;
            ctx.decide(side, market, Texts {
                valuation_reasoning: format!("Discounted expected dividends give a fundamental value of {v:.2} per share."),
                valuation: v,
                target_reasoning: format!("Price should converge to the fundamental value of {v:.2}."),
                target: v,
                reasoning: format!(
                    "Price {p:.2} is {gap:+.1}% relative to fundamental value {v:.2}; {} against the mispricing.",
                    verb(side)
                ),
            })
        }
        RuleKind::Momentum => {
            let (dp, dv) = (s.price_change, s.volume_change);
            let side = if dp > 0.0 && dv > 0.0 {
                Some(Side::Buy)
            } else if dp < 0.0 || dv < 0.0 {
                Some(Side::Sell)
            } else {
                None
            };
            let market = dp.abs() > params.momentum_gamma * s.volatility;
            ctx.decide(side, market, Texts {
                valuation_reasoning: format!("Recent trend puts value near the last price {p:.2}."),
                valuation: p,
                target_reasoning: format!("Trend continuation implies a move of {dp:+.2}."),
                target: p + dp,
                reasoning: format!(
                    "Price change {dp:+.2} with volume change {dv:+.0}; {} with the trend.",
                    verb(side)
                ),
            })
        }
        RuleKind::MarketMaker => maker_decide(&ctx),
        RuleKind::Contrarian => {
            let z = s.z_score();
            let side = if z < -params.contrarian_eta {
                Some(Side::Buy)
            } else if z > params.contrarian_eta {
                Some(Side::Sell)
            } else {
                None
            };
            let market = z.abs() > params.contrarian_mu;
            let avg = s.moving_average;
            ctx.decide(side, market, Texts {
                valuation_reasoning: format!("The moving average {avg:.2} anchors value after overreactions."),
                valuation: avg,
                target_reasoning: format!("Extreme moves revert toward the moving average {avg:.2}."),
                target: avg,
                reasoning: format!(
                    "Price sits {z:+.1} standard deviations from its moving average; {} against the excess move.",
                    verb(side)
                ),
            })
        }
        RuleKind::News => {
            let n = snapshot.news;
            let avg = s.moving_average;
            let side = if n > 0.0 && p < avg {
                Some(Side::Buy)
            } else if n < 0.0 || p > avg + params.news_xi * n.abs() {
                Some(Side::Sell)
            } else {
                None
            };
            let market = n.abs() > params.news_nu;
            ctx.decide(side, market, Texts {
                valuation_reasoning: format!("News signal {n:+.2} adjusts value around the average {avg:.2}."),
                valuation: avg,
                target_reasoning: format!("Prices react to news relative to the average {avg:.2}."),
                target: avg,
                reasoning: format!("News signal {n:+.2} with price {p:.2}; {} on the news.", verb(side)),
            })
        }
        RuleKind::Optimistic => {
            let Some(v) = snapshot.fundamental else {
                return TradeDecision::hold(p, p, "fundamental unavailable");
            };
            let m = params.optimism_multiplier;
            let believed = m * v;
            let side = if p < believed - params.optimism_kappa {
                Some(Side::Buy)
            } else if p > believed + params.optimism_kappa {
                Some(Side::Sell)
            } else {
                None
            };
            ctx.decide(side, true, Texts {
                valuation_reasoning: format!("True value is {believed:.2}, {m}x the stated estimate of {v:.2}."),
                valuation: believed,
                target_reasoning: format!("Price should rise toward the true value of {believed:.2}."),
                target: believed,
                reasoning: format!(
                    "Price {p:.2} compared with a believed value of {believed:.2}; {} with conviction.",
                    verb(side)
                ),
            })
        }
        RuleKind::Speculator => {
            let e = s.expected_change();
            let side = if e > params.speculator_psi {
                Some(Side::Buy)
            } else if e < -params.speculator_psi {
                Some(Side::Sell)
            } else {
                None
            };
            let market = e.abs() > params.speculator_omega;
            ctx.decide(side, market, Texts {
                valuation_reasoning: format!("Short-term value follows the last price {p:.2}."),
                valuation: p,
                target_reasoning: format!("Expected next move of {e:+.2} from the last change."),
                target: p + e,
                reasoning: format!("Expected price change {e:+.2}; {} to exploit it.", verb(side)),
            })
        }
        RuleKind::Hold => TradeDecision::hold(p, p, "Holding agent never trades."),
    }
}

fn maker_decide(ctx: &Ctx<'_>) -> TradeDecision {
    let (params, s, account) = (ctx.params, ctx.signals, ctx.account);
    let p = s.price;
    let inventory = account.shares as f64;
    let target = params.maker_target_inventory.unwrap_or(account.shares) as f64;
    let lean = if inventory < target && p < s.moving_average {
        Some(Side::Buy)
    } else if inventory > target && p > s.moving_average {
        Some(Side::Sell)
    } else {
        None
    };
    let half_spread = params
        .maker_min_half_spread
        .max(params.maker_lambda * s.volatility / p);
    let texts = |reasoning: String| Texts {
        valuation_reasoning: format!("Fair value is taken as the last price {p:.2}."),
        valuation: p,
        target_reasoning: format!("Quoting {:.2}% either side of {p:.2}.", half_spread * 100.0),
        target: p,
        reasoning,
    };

    if let Some(side) = lean {
        if (inventory - target).abs() > params.maker_delta_fraction * target {
            return ctx.decide(
                Some(side),
                true,
                texts(format!(
                    "Inventory {inventory:.0} is far from target {target:.0}; {} at market to rebalance.",
                    verb(Some(side))
                )),
            );
        }
    }

    let bid = price_at(p * (1.0 - half_spread));
    let mut ask = price_at(p * (1.0 + half_spread));
    if ask <= bid {
        ask = Price::from_cents(bid.cents() + 1).expect("positive");
    }
    let mut bid_qty = full_size(params, account, Side::Buy, bid);
    let mut ask_qty = full_size(params, account, Side::Sell, ask);
    match lean {
        Some(Side::Buy) => ask_qty /= 2,
        Some(Side::Sell) => bid_qty /= 2,
        None => {}
    }
    let mut orders = Vec::new();
    if bid_qty > 0 {
        orders.push(OrderRequest::limit(Side::Buy, bid_qty, bid));
    }
    if ask_qty > 0 {
        orders.push(OrderRequest::limit(Side::Sell, ask_qty, ask));
    }
    let t = texts(format!(
        "Providing liquidity with a bid at {bid} and an ask at {ask}; inventory {inventory:.0} against target {target:.0}."
    ));
    TradeDecision {
        valuation_reasoning: t.valuation_reasoning,
        valuation: t.valuation,
        price_target_reasoning: t.target_reasoning,
        price_target: t.target,
        replace_decision: if orders.is_empty() { ReplaceMode::Add } else { ReplaceMode::Replace },
        orders,
        reasoning: t.reasoning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::Direction;
    use crate::money::Money;
    use crate::orderbook::AgentId;
    use crate::snapshot::fixtures::{px, snapshot};
    use crate::snapshot::HistoryPoint;

    fn account() -> AgentAccount {
        AgentAccount::new(AgentId(0), Money::from_cents(100_000_000), 10_000)
    }

    fn decide(kind: RuleKind, snap: &MarketSnapshot) -> TradeDecision {
        strategy_decide(kind, &StrategyParams::default(), snap, &account())
    }

    fn trend(mut snap: MarketSnapshot, prices: &[i64], volumes: &[u64]) -> MarketSnapshot {
        snap.history = prices
            .iter()
            .zip(volumes)
            .enumerate()
            .map(|(i, (p, v))| HistoryPoint { round: 10 - i as u32, price: px(*p), volume: *v })
            .collect();
        snap.last_price = px(prices[0]);
        snap
    }

    #[test]
    fn value_agent_sells_above_band() {
        let d = decide(RuleKind::Value, &snapshot(3500));
        assert_eq!(d.direction(), Direction::Sell);
        // 25% off is not beyond the market trigger: limit at the band edge.
        assert_eq!(d.orders[0].kind, OrderKind::Limit);
        assert_eq!(d.orders[0].price_limit, Some(px(3080)));
        assert_eq!(d.orders[0].quantity, 1000);
        assert_eq!(d.replace_decision, ReplaceMode::Replace);
    }

    #[test]
    fn value_agent_holds_at_fundamental_and_boundaries() {
        for cents in [2800, 2520, 3080] {
            assert_eq!(decide(RuleKind::Value, &snapshot(cents)).direction(), Direction::Hold, "{cents}");
        }
    }

    #[test]
    fn value_agent_uses_market_orders_far_from_value() {
        let d = decide(RuleKind::Value, &snapshot(1400));
        assert_eq!(d.direction(), Direction::Buy);
        assert_eq!(d.orders[0].kind, OrderKind::Market);
        // 10% of 1,000,000 cash at the best ask of 14.28.
        assert_eq!(d.orders[0].quantity, 7002);
    }

    #[test]
    fn missing_fundamental_holds() {
        let snap = snapshot(3500).without_fundamental();
        for kind in [RuleKind::Value, RuleKind::Optimistic] {
            let d = decide(kind, &snap);
            assert!(d.orders.is_empty());
            assert_eq!(d.reasoning, "fundamental unavailable");
        }
    }

    #[test]
    fn optimistic_buys_far_above_value() {
        let d = decide(RuleKind::Optimistic, &snapshot(11495));
        assert_eq!(d.direction(), Direction::Buy);
        assert_eq!(d.orders[0].kind, OrderKind::Market);
        assert_eq!(d.valuation, 280.0);
    }

    #[test]
    fn value_and_optimistic_disagree_when_overpriced() {
        let snap = snapshot(3500);
        assert_eq!(decide(RuleKind::Value, &snap).direction(), Direction::Sell);
        assert_eq!(decide(RuleKind::Optimistic, &snap).direction(), Direction::Buy);
    }

    #[test]
    fn momentum_follows_price_and_volume() {
        let up = trend(snapshot(3000), &[3000, 2900, 2800], &[300, 200, 100]);
        let d = decide(RuleKind::Momentum, &up);
        assert_eq!(d.direction(), Direction::Buy);
        // |ΔP| = 1.00 exceeds σ of {30, 29, 28} ≈ 0.82.
        assert_eq!(d.orders[0].kind, OrderKind::Market);
        let fading = trend(snapshot(3000), &[3000, 2900], &[100, 200]);
        assert_eq!(decide(RuleKind::Momentum, &fading).direction(), Direction::Sell);
        assert_eq!(decide(RuleKind::Momentum, &snapshot(2800)).direction(), Direction::Hold);
    }

    #[test]
    fn contrarian_fades_large_deviations() {
        let drift = trend(snapshot(3000), &[3000, 2900, 2800, 2800, 2800], &[1, 1, 1, 1, 1]);
        // z = (30 − 28.6)/0.8 = 1.75.
        assert_eq!(decide(RuleKind::Contrarian, &drift).direction(), Direction::Hold);
        let params = StrategyParams { contrarian_eta: 1.5, contrarian_mu: 1.9, ..StrategyParams::default() };
        let d = strategy_decide(RuleKind::Contrarian, &params, &drift, &account());
        assert_eq!(d.direction(), Direction::Sell);
        assert_eq!(d.orders[0].kind, OrderKind::Limit);
        assert_eq!(d.orders[0].price_limit, Some(px(2860)));
    }

    #[test]
    fn news_trader_rules() {
        let mut snap = trend(snapshot(2700), &[2700, 2900], &[1, 1]);
        snap.news = 2.0;
        let d = decide(RuleKind::News, &snap);
        assert_eq!(d.direction(), Direction::Buy);
        assert_eq!(d.orders[0].kind, OrderKind::Market);
        snap.news = -0.5;
        let d = decide(RuleKind::News, &snap);
        assert_eq!(d.direction(), Direction::Sell);
        assert_eq!(d.orders[0].kind, OrderKind::Limit);
        snap.news = 0.0;
        assert_eq!(decide(RuleKind::News, &snap).direction(), Direction::Hold);
    }

    #[test]
    fn speculator_extrapolates_last_change() {
        let up = trend(snapshot(2900), &[2900, 2800], &[1, 1]);
        let d = decide(RuleKind::Speculator, &up);
        assert_eq!(d.direction(), Direction::Buy);
        assert_eq!(d.orders[0].kind, OrderKind::Market);
        let small = trend(snapshot(2840), &[2840, 2800], &[1, 1]);
        assert_eq!(decide(RuleKind::Speculator, &small).direction(), Direction::Hold);
        let mid = trend(snapshot(2740), &[2740, 2800], &[1, 1]);
        let params = StrategyParams { speculator_omega: 1.0, ..StrategyParams::default() };
        let d = strategy_decide(RuleKind::Speculator, &params, &mid, &account());
        assert_eq!(d.direction(), Direction::Sell);
        assert_eq!(d.orders[0].price_limit, Some(px(2680)));
    }

    #[test]
    fn maker_quotes_both_sides_around_last_price() {
        let d = decide(RuleKind::MarketMaker, &snapshot(2800));
        assert_eq!(d.orders.len(), 2);
        assert_eq!(d.orders[0].side, Side::Buy);
        assert_eq!(d.orders[0].price_limit, Some(px(2772)));
        assert_eq!(d.orders[1].price_limit, Some(px(2828)));
        assert_eq!(d.direction(), Direction::Hold);
        assert_eq!(d.replace_decision, ReplaceMode::Replace);
    }

    #[test]
    fn maker_rebalances_at_market_when_inventory_far_off() {
        let mut acct = account();
        acct.shares = 5_000;
        let params = StrategyParams { maker_target_inventory: Some(10_000), ..StrategyParams::default() };
        let falling = trend(snapshot(2700), &[2700, 2800, 2900], &[1, 1, 1]);
        let d = strategy_decide(RuleKind::MarketMaker, &params, &falling, &acct);
        assert_eq!(d.direction(), Direction::Buy);
        assert_eq!(d.orders[0].kind, OrderKind::Market);
    }

    #[test]
    fn decisions_are_deterministic() {
        let snap = trend(snapshot(3100), &[3100, 3000, 2900], &[5, 4, 3]);
        for kind in RuleKind::ALL {
            assert_eq!(decide(kind, &snap), decide(kind, &snap));
        }
    }
}
