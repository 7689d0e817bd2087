//! The structured decision every agent kind produces once per round.

use serde::{Deserialize, Serialize};

use crate::money::{Price, Qty};
use crate::orderbook::{OrderKind, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReplaceMode {
    /// Keep resting orders and add the new ones.
    Add,
    /// Cancel every resting order; `orders` must be empty.
    Cancel,
    /// Cancel every resting order, then add the new ones.
    Replace,
}

impl ReplaceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplaceMode::Add => "Add",
            ReplaceMode::Cancel => "Cancel",
            ReplaceMode::Replace => "Replace",
        }
    }

    pub fn cancels_resting(self) -> bool {
        !matches!(self, ReplaceMode::Add)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRequest {
    pub side: Side,
    pub quantity: Qty,
    pub kind: OrderKind,
    pub price_limit: Option<Price>,
}

impl OrderRequest {
    pub fn market(side: Side, quantity: Qty) -> Self {
        OrderRequest {
            side,
            quantity,
            kind: OrderKind::Market,
            price_limit: None,
        }
    }

    pub fn limit(side: Side, quantity: Qty, price: Price) -> Self {
        OrderRequest {
            side,
            quantity,
            kind: OrderKind::Limit,
            price_limit: Some(price),
        }
    }
}

/// Net direction of a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Buy,
    Hold,
    Sell,
}

impl Direction {
    /// +1 / 0 / −1.
    pub fn signed(self) -> f64 {
        match self {
            Direction::Buy => 1.0,
            Direction::Hold => 0.0,
            Direction::Sell => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Buy => "Buy",
            Direction::Hold => "Hold",
            Direction::Sell => "Sell",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeDecision {
    pub valuation_reasoning: String,
    pub valuation: f64,
    pub price_target_reasoning: String,
    pub price_target: f64,
    pub orders: Vec<OrderRequest>,
    pub replace_decision: ReplaceMode,
    pub reasoning: String,
}

impl TradeDecision {
    /// No new orders; resting orders stay.
    pub fn hold(valuation: f64, price_target: f64, reasoning: impl Into<String>) -> Self {
        TradeDecision {
            valuation_reasoning: String::new(),
            valuation,
            price_target_reasoning: String::new(),
            price_target,
            orders: Vec::new(),
            replace_decision: ReplaceMode::Add,
            reasoning: reasoning.into(),
        }
    }

    /// Buy or Sell when every order points one way; Hold when there are no
    /// orders or when both sides are quoted.
    pub fn direction(&self) -> Direction {
        let buys = self.orders.iter().any(|o| o.side == Side::Buy);
        let sells = self.orders.iter().any(|o| o.side == Side::Sell);
        match (buys, sells) {
            (true, false) => Direction::Buy,
            (false, true) => Direction::Sell,
            _ => Direction::Hold,
        }
    }

    /// Signed requested quantity: buys positive, sells negative.
    pub fn net_quantity(&self) -> i64 {
        self.orders
            .iter()
            .map(|o| match o.side {
                Side::Buy => o.quantity as i64,
                Side::Sell => -(o.quantity as i64),
            })
            .sum()
    }

    /// All free text of the decision, for text analyses.
    pub fn full_reasoning(&self) -> String {
        [
            self.valuation_reasoning.as_str(),
            self.price_target_reasoning.as_str(),
            self.reasoning.as_str(),
        ]
        .iter()
        .filter(|s| !s.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(c: i64) -> Price {
        Price::from_cents(c).unwrap()
    }

    #[test]
    fn direction_of_one_sided_and_two_sided_decisions() {
        let mut d = TradeDecision::hold(28.0, 28.0, "wait");
        assert_eq!(d.direction(), Direction::Hold);
        d.orders.push(OrderRequest::limit(Side::Sell, 1000, px(2950)));
        assert_eq!(d.direction(), Direction::Sell);
        assert_eq!(d.net_quantity(), -1000);
        d.orders.push(OrderRequest::market(Side::Buy, 10));
        assert_eq!(d.direction(), Direction::Hold);
    }
}
