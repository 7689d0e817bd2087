//! What a run leaves behind, one record per round.

use serde::{Deserialize, Serialize};

use crate::account::AgentAccount;
use crate::agents::Validation;
use crate::decision::{Direction, TradeDecision};
use crate::matching::Trade;
use crate::money::{Money, Price, Qty};
use crate::orderbook::{AgentId, OrderId, OrderKind, Side};

use super::scenario::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderEventKind {
    Placed,
    Filled,
    Partial,
    Cancelled,
    Converted,
}

impl OrderEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderEventKind::Placed => "placed",
            OrderEventKind::Filled => "filled",
            OrderEventKind::Partial => "partial",
            OrderEventKind::Cancelled => "cancelled",
            OrderEventKind::Converted => "converted",
        }
    }
}

/// One line of the order log. Fill events carry the filled quantity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderEvent {
    pub round: u32,
    pub order_id: OrderId,
    pub agent: AgentId,
    pub side: Side,
    pub kind: OrderKind,
    pub quantity: Qty,
    pub price_limit: Option<Price>,
    pub event: OrderEventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomaly {
    pub round: u32,
    pub agent: Option<AgentId>,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub round: u32,
    pub agent: AgentId,
    pub label: String,
    pub engine: Engine,
    /// Price over fundamental when the decision was made, whether or not shown.
    pub pf_ratio: Option<f64>,
    pub prompt_hash: Option<String>,
    pub raw_responses: Vec<String>,
    /// True when no usable response arrived and the agent held instead.
    pub fallback: bool,
    pub decision: TradeDecision,
    pub direction: Direction,
    pub validation: Validation,
    /// Ids given to `validation.accepted`, in the same order.
    pub order_ids: Vec<OrderId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub price: Price,
    /// True fundamental value in cents; absent when it is not defined.
    pub fundamental: Option<Money>,
    pub volume: Qty,
    pub best_bid: Option<Price>,
    pub best_ask: Option<Price>,
    /// Per-share dividend paid after this round's trading.
    pub dividend: Option<Money>,
    pub trades: Vec<Trade>,
    pub accounts: Vec<AgentAccount>,
    pub decisions: Vec<DecisionRecord>,
    pub order_events: Vec<OrderEvent>,
    pub anomalies: Vec<Anomaly>,
}

impl RoundRecord {
    pub fn pf_ratio(&self) -> Option<f64> {
        self.fundamental
            .filter(|v| v.cents() > 0)
            .map(|v| self.price.to_f64() / v.to_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub id: AgentId,
    pub label: String,
    pub engine: Engine,
    pub initial_cash: Money,
    pub initial_shares: Qty,
}

/// Final settlement of a finite market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Redemption {
    pub round: u32,
    pub price: Money,
    pub accounts: Vec<AgentAccount>,
    pub order_events: Vec<OrderEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub agents: Vec<AgentInfo>,
    /// Round 0 is the opening state; trading rounds follow.
    pub records: Vec<RoundRecord>,
    pub redemption: Option<Redemption>,
}

impl RunOutput {
    pub fn final_accounts(&self) -> &[AgentAccount] {
        match &self.redemption {
            Some(r) => &r.accounts,
            None => &self.records.last().expect("round 0 is always recorded").accounts,
        }
    }

    pub fn final_price(&self) -> Price {
        self.records.last().expect("round 0 is always recorded").price
    }
}
