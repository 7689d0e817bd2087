//! Turns a decision into orders the account can actually back.

use serde::{Deserialize, Serialize};

use crate::account::Reserve;
use crate::decision::{ReplaceMode, TradeDecision};
use crate::money::{Money, Price, Qty};
use crate::orderbook::{Order, OrderKind, Side};
use crate::snapshot::MarketSnapshot;

use super::rules::market_buy_price;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    InvalidQuantity,
    MissingLimitPrice,
    UnexpectedLimitPrice,
    OrdersWithCancel,
    InsufficientShares,
    InsufficientCash,
    /// Would trade against, or rest through, the agent's own opposite order.
    SelfCross,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::InvalidQuantity => "invalid quantity",
            RejectReason::MissingLimitPrice => "missing limit price",
            RejectReason::UnexpectedLimitPrice => "limit price on market order",
            RejectReason::OrdersWithCancel => "orders submitted with Cancel",
            RejectReason::InsufficientShares => "insufficient shares",
            RejectReason::InsufficientCash => "insufficient cash",
            RejectReason::SelfCross => "crosses own order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// Position in `decision.orders`.
    pub index: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptedOrder {
    pub index: usize,
    pub side: Side,
    pub kind: OrderKind,
    pub requested: Qty,
    pub quantity: Qty,
    pub price_limit: Option<Price>,
    /// What the order holds back while open.
    pub reserve: Reserve,
    /// Set for market buys: the cash the fills may spend.
    pub cash_budget: Option<Money>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub accepted: Vec<AcceptedOrder>,
    pub rejections: Vec<Rejection>,
}

/// Where an existing or accepted order sits, for the self-cross check.
#[derive(Clone, Copy)]
struct Quote {
    side: Side,
    price: Option<Price>,
}

fn crosses(new: Quote, old: Quote) -> bool {
    if new.side == old.side {
        return false;
    }
    match (new.price, old.price) {
        (Some(n), Some(o)) => match new.side {
            Side::Buy => n >= o,
            Side::Sell => n <= o,
        },
        _ => true,
    }
}

/// Clips each requested order to what the agent can back, in order, with
/// resources shrinking as orders are accepted. `available_cash`,
/// `available_shares` and `resting` must already reflect any cancellation
/// the decision implies.
pub fn validate_decision(
    decision: &TradeDecision,
    available_cash: Money,
    available_shares: Qty,
    snapshot: &MarketSnapshot,
    resting: &[Order],
) -> Validation {
    let mut out = Validation::default();
    let mut cash = available_cash;
    let mut shares = available_shares;
    let mut quotes: Vec<Quote> = resting
        .iter()
        .map(|o| Quote { side: o.side, price: o.price_limit })
        .collect();

    for (index, req) in decision.orders.iter().enumerate() {
        let reject = |reason| Rejection { index, reason };
        if decision.replace_decision == ReplaceMode::Cancel {
            out.rejections.push(reject(RejectReason::OrdersWithCancel));
            continue;
        }
        if req.quantity == 0 {
            out.rejections.push(reject(RejectReason::InvalidQuantity));
            continue;
        }
        match (req.kind, req.price_limit) {
            (OrderKind::Limit, None) => {
                out.rejections.push(reject(RejectReason::MissingLimitPrice));
                continue;
            }
            (OrderKind::Market, Some(_)) => {
                out.rejections.push(reject(RejectReason::UnexpectedLimitPrice));
                continue;
            }
            _ => {}
        }
        let quote = Quote { side: req.side, price: req.price_limit };
        if quotes.iter().any(|q| crosses(quote, *q)) {
            out.rejections.push(reject(RejectReason::SelfCross));
            continue;
        }

        let accepted = match req.side {
            Side::Sell => {
                let qty = req.quantity.min(shares);
                if qty == 0 {
                    out.rejections.push(reject(RejectReason::InsufficientShares));
                    continue;
                }
                shares -= qty;
                AcceptedOrder {
                    index,
                    side: req.side,
                    kind: req.kind,
                    requested: req.quantity,
                    quantity: qty,
                    price_limit: req.price_limit,
                    reserve: Reserve { cash: Money::ZERO, shares: qty },
                    cash_budget: None,
                }
            }
            Side::Buy => {
                let unit = req.price_limit.unwrap_or_else(|| market_buy_price(snapshot));
                let qty = req.quantity.min(cash.shares_at(unit));
                if qty == 0 {
                    out.rejections.push(reject(RejectReason::InsufficientCash));
                    continue;
                }
                let cost = unit * qty;
                cash -= cost;
                AcceptedOrder {
                    index,
                    side: req.side,
                    kind: req.kind,
                    requested: req.quantity,
                    quantity: qty,
                    price_limit: req.price_limit,
                    reserve: Reserve { cash: cost, shares: 0 },
                    cash_budget: (req.kind == OrderKind::Market).then_some(cost),
                }
            }
        };
        quotes.push(quote);
        out.accepted.push(accepted);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::OrderRequest;
    use crate::orderbook::{AgentId, OrderId};
    use crate::snapshot::fixtures::{px, snapshot};

    fn decision(orders: Vec<OrderRequest>) -> TradeDecision {
        let mut d = TradeDecision::hold(28.0, 28.0, "");
        d.orders = orders;
        d
    }

    #[test]
    fn limit_buy_commits_quantity_times_limit() {
        let d = decision(vec![OrderRequest::limit(Side::Buy, 400, px(2800))]);
        let v = validate_decision(&d, Money::from_cents(98_850_000), 10_000, &snapshot(2900), &[]);
        assert_eq!(v.accepted[0].reserve.cash, Money::from_cents(1_120_000));
        assert_eq!(v.accepted[0].quantity, 400);
        assert!(v.rejections.is_empty());
    }

    #[test]
    fn sell_without_shares_is_rejected() {
        let d = decision(vec![OrderRequest::limit(Side::Sell, 75, px(2900))]);
        let v = validate_decision(&d, Money::from_cents(1_000), 0, &snapshot(2900), &[]);
        assert!(v.accepted.is_empty());
        assert_eq!(v.rejections, vec![Rejection { index: 0, reason: RejectReason::InsufficientShares }]);
        assert_eq!(RejectReason::InsufficientShares.as_str(), "insufficient shares");
    }

    #[test]
    fn market_buy_clipped_by_best_ask() {
        let mut snap = snapshot(2800);
        snap.depth.asks[0].price = px(2900);
        let d = decision(vec![OrderRequest::market(Side::Buy, 1000)]);
        let v = validate_decision(&d, Money::from_cents(5_000), 0, &snap, &[]);
        assert_eq!(v.accepted[0].quantity, 1);
        assert_eq!(v.accepted[0].cash_budget, Some(Money::from_cents(2_900)));
    }

    #[test]
    fn malformed_orders_rejected() {
        let mut missing = OrderRequest::limit(Side::Buy, 10, px(2800));
        missing.price_limit = None;
        let zero = OrderRequest::market(Side::Sell, 0);
        let d = decision(vec![missing, zero]);
        let v = validate_decision(&d, Money::from_cents(1_000_000), 100, &snapshot(2800), &[]);
        let reasons: Vec<_> = v.rejections.iter().map(|r| r.reason).collect();
        assert_eq!(reasons, vec![RejectReason::MissingLimitPrice, RejectReason::InvalidQuantity]);
    }

    #[test]
    fn resources_shrink_across_orders() {
        let d = decision(vec![
            OrderRequest::limit(Side::Sell, 60, px(3000)),
            OrderRequest::limit(Side::Sell, 60, px(3100)),
        ]);
        let v = validate_decision(&d, Money::ZERO, 100, &snapshot(2800), &[]);
        assert_eq!(v.accepted[0].quantity, 60);
        assert_eq!(v.accepted[1].quantity, 40);
        assert_eq!(v.accepted[1].requested, 60);
    }

    #[test]
    fn self_crossing_orders_rejected() {
        let resting = Order::limit(OrderId(1), AgentId(0), Side::Sell, 10, px(2900), 1, 1);
        let d = decision(vec![
            OrderRequest::limit(Side::Buy, 10, px(2900)),
            OrderRequest::limit(Side::Buy, 10, px(2800)),
            OrderRequest::market(Side::Buy, 10),
        ]);
        let v = validate_decision(&d, Money::from_cents(10_000_000), 0, &snapshot(2800), &[resting]);
        assert_eq!(v.accepted.len(), 1);
        assert_eq!(v.accepted[0].index, 1);
        assert!(v.rejections.iter().all(|r| r.reason == RejectReason::SelfCross));
    }

    #[test]
    fn cancel_with_orders_rejected() {
        let mut d = decision(vec![OrderRequest::market(Side::Sell, 5)]);
        d.replace_decision = ReplaceMode::Cancel;
        let v = validate_decision(&d, Money::ZERO, 10, &snapshot(2800), &[]);
        assert_eq!(v.rejections[0].reason, RejectReason::OrdersWithCancel);
    }
}
