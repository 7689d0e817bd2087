//! Persistent limit order book with price-time priority.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::{Money, Price, Qty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderKind {
    Market,
    Limit,
}

impl OrderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderKind::Market => "market",
            OrderKind::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub agent: AgentId,
    pub side: Side,
    pub kind: OrderKind,
    pub quantity: Qty,
    pub remaining: Qty,
    pub price_limit: Option<Price>,
    pub round: u32,
    pub sequence: u64,
    /// Cash reserved for a market buy. Fills never spend more than this.
    pub cash_budget: Option<Money>,
}

impl Order {
    pub fn limit(
        id: OrderId,
        agent: AgentId,
        side: Side,
        quantity: Qty,
        price: Price,
        round: u32,
        sequence: u64,
    ) -> Order {
        Order {
            id,
            agent,
            side,
            kind: OrderKind::Limit,
            quantity,
            remaining: quantity,
            price_limit: Some(price),
            round,
            sequence,
            cash_budget: None,
        }
    }

    pub fn market(
        id: OrderId,
        agent: AgentId,
        side: Side,
        quantity: Qty,
        round: u32,
        sequence: u64,
    ) -> Order {
        Order {
            id,
            agent,
            side,
            kind: OrderKind::Market,
            quantity,
            remaining: quantity,
            price_limit: None,
            round,
            sequence,
            cash_budget: None,
        }
    }

    pub fn with_budget(mut self, budget: Money) -> Order {
        self.cash_budget = Some(budget);
        self
    }

    pub fn filled(&self) -> Qty {
        self.quantity - self.remaining
    }

    /// Shares this order can still take at `price`, honouring the cash budget.
    pub fn fillable_at(&self, price: Price) -> Qty {
        match self.cash_budget {
            Some(budget) if self.side == Side::Buy => self.remaining.min(budget.shares_at(price)),
            _ => self.remaining,
        }
    }

    pub(crate) fn record_fill(&mut self, price: Price, qty: Qty) {
        self.remaining -= qty;
        if self.side == Side::Buy {
            if let Some(budget) = self.cash_budget.as_mut() {
                *budget -= price * qty;
            }
        }
    }

    /// Structural validity independent of any book state.
    pub fn check(&self) -> Result<(), BookError> {
        if self.quantity == 0 || self.remaining == 0 || self.remaining > self.quantity {
            return Err(BookError::InvalidOrder {
                id: self.id,
                reason: "quantity must be positive and remaining within 1..=quantity",
            });
        }
        match (self.kind, self.price_limit) {
            (OrderKind::Limit, None) => Err(BookError::InvalidOrder {
                id: self.id,
                reason: "limit order without a price",
            }),
            (OrderKind::Market, Some(_)) => Err(BookError::InvalidOrder {
                id: self.id,
                reason: "market order with a price",
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("order {id} is invalid: {reason}")]
    InvalidOrder { id: OrderId, reason: &'static str },
    #[error("order {0} is already resting")]
    DuplicateId(OrderId),
    #[error("order {0} is not resting")]
    NotFound(OrderId),
    #[error("order {id} has sequence {sequence}, not after the tail of its price level")]
    SequenceOrder { id: OrderId, sequence: u64 },
    #[error("only limit orders rest in the book (order {0})")]
    NotResting(OrderId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthLevel {
    pub price: Price,
    pub quantity: Qty,
}

/// Aggregated book depth. Both sides are ordered best first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthSnapshot {
    pub bids: Vec<DepthLevel>,
    pub asks: Vec<DepthLevel>,
}

impl DepthSnapshot {
    pub fn best_bid(&self) -> Option<Price> {
        self.bids.first().map(|l| l.price)
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.first().map(|l| l.price)
    }

    pub fn total(&self, side: Side) -> Qty {
        let levels = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        levels.iter().map(|l| l.quantity).sum()
    }
}

type Levels = BTreeMap<Price, VecDeque<Order>>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OrderBook {
    bids: Levels,
    asks: Levels,
    index: HashMap<OrderId, (Side, Price)>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    fn levels(&self, side: Side) -> &Levels {
        match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        }
    }

    fn levels_mut(&mut self, side: Side) -> &mut Levels {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    pub fn insert(&mut self, order: Order) -> Result<(), BookError> {
        order.check()?;
        if order.kind != OrderKind::Limit {
            return Err(BookError::NotResting(order.id));
        }
        if self.index.contains_key(&order.id) {
            return Err(BookError::DuplicateId(order.id));
        }
        let price = order.price_limit.expect("checked above");
        let out_of_order = self
            .levels(order.side)
            .get(&price)
            .and_then(|level| level.back())
            .is_some_and(|tail| tail.sequence >= order.sequence);
        if out_of_order {
            return Err(BookError::SequenceOrder {
                id: order.id,
                sequence: order.sequence,
            });
        }
        self.index.insert(order.id, (order.side, price));
        self.levels_mut(order.side)
            .entry(price)
            .or_default()
            .push_back(order);
        Ok(())
    }

    pub fn cancel(&mut self, id: OrderId) -> Result<Order, BookError> {
        let (side, price) = self.index.remove(&id).ok_or(BookError::NotFound(id))?;
        let levels = self.levels_mut(side);
        let level = levels.get_mut(&price).expect("index points at a live level");
        let pos = level
            .iter()
            .position(|o| o.id == id)
            .expect("index points at a live order");
        let order = level.remove(pos).expect("position is in range");
        if level.is_empty() {
            levels.remove(&price);
        }
        Ok(order)
    }

    pub fn get(&self, id: OrderId) -> Option<&Order> {
        let (side, price) = self.index.get(&id)?;
        self.levels(*side)
            .get(price)?
            .iter()
            .find(|o| o.id == id)
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.keys().next().copied()
    }

    /// Best price on `side`: highest bid or lowest ask.
    pub fn best(&self, side: Side) -> Option<Price> {
        match side {
            Side::Buy => self.best_bid(),
            Side::Sell => self.best_ask(),
        }
    }

    pub fn depth(&self) -> DepthSnapshot {
        let agg = |level: (&Price, &VecDeque<Order>)| DepthLevel {
            price: *level.0,
            quantity: level.1.iter().map(|o| o.remaining).sum(),
        };
        DepthSnapshot {
            bids: self.bids.iter().rev().map(agg).collect(),
            asks: self.asks.iter().map(agg).collect(),
        }
    }

    /// Resting orders of one side in priority order.
    pub fn side_orders(&self, side: Side) -> Box<dyn Iterator<Item = &Order> + '_> {
        match side {
            Side::Buy => Box::new(self.bids.values().rev().flatten()),
            Side::Sell => Box::new(self.asks.values().flatten()),
        }
    }

    /// All resting orders: bids then asks, each in priority order.
    pub fn orders(&self) -> impl Iterator<Item = &Order> {
        self.side_orders(Side::Buy).chain(self.side_orders(Side::Sell))
    }

    pub fn orders_of(&self, agent: AgentId) -> Vec<&Order> {
        self.orders().filter(|o| o.agent == agent).collect()
    }

    /// Matches `taker` against the side opposite to it, best price first and
    /// FIFO within a level, skipping the taker's own resting orders. `limit`
    /// bounds the prices the taker accepts. Calls `on_fill(maker, price, qty)`
    /// for every execution, with the maker state after the fill.
    pub(crate) fn take(
        &mut self,
        taker: &mut Order,
        limit: Option<Price>,
        mut on_fill: impl FnMut(&Order, Price, Qty),
    ) {
        let side = taker.side.opposite();
        let prices: Vec<Price> = match side {
            Side::Sell => self
                .asks
                .keys()
                .take_while(|p| limit.is_none_or(|l| **p <= l))
                .copied()
                .collect(),
            Side::Buy => self
                .bids
                .keys()
                .rev()
                .take_while(|p| limit.is_none_or(|l| **p >= l))
                .copied()
                .collect(),
        };
        let mut exhausted = false;
        for price in prices {
            if taker.remaining == 0 || exhausted {
                break;
            }
            let levels = self.levels_mut(side);
            let level = levels.get_mut(&price).expect("price collected from keys");
            let mut removed = Vec::new();
            for maker in level.iter_mut() {
                if taker.remaining == 0 {
                    break;
                }
                if maker.agent == taker.agent {
                    continue;
                }
                let qty = taker.fillable_at(price).min(maker.remaining);
                if qty == 0 {
                    // Budget cannot cover one share here; deeper asks cost more.
                    exhausted = true;
                    break;
                }
                taker.record_fill(price, qty);
                maker.remaining -= qty;
                on_fill(maker, price, qty);
                if maker.remaining == 0 {
                    removed.push(maker.id);
                }
            }
            level.retain(|o| o.remaining > 0);
            if level.is_empty() {
                levels.remove(&price);
            }
            for id in removed {
                self.index.remove(&id);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(cents: i64) -> Price {
        Price::from_cents(cents).unwrap()
    }

    fn lim(id: u64, agent: u32, side: Side, qty: Qty, price: i64, seq: u64) -> Order {
        Order::limit(OrderId(id), AgentId(agent), side, qty, px(price), 1, seq)
    }

    #[test]
    fn depth_aggregates_levels_best_first() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Buy, 100, 2800, 1)).unwrap();
        book.insert(lim(2, 2, Side::Buy, 50, 2800, 2)).unwrap();
        book.insert(lim(3, 3, Side::Buy, 10, 2700, 3)).unwrap();
        book.insert(lim(4, 4, Side::Sell, 30, 2900, 4)).unwrap();
        book.insert(lim(5, 4, Side::Sell, 30, 3000, 5)).unwrap();
        let depth = book.depth();
        assert_eq!(depth.bids[0], DepthLevel { price: px(2800), quantity: 150 });
        assert_eq!(depth.bids[1].price, px(2700));
        assert_eq!(depth.asks[0].price, px(2900));
        assert_eq!(book.best_bid(), Some(px(2800)));
        assert_eq!(book.best_ask(), Some(px(2900)));
    }

    #[test]
    fn cancel_unknown_is_not_found() {
        let mut book = OrderBook::new();
        assert_eq!(book.cancel(OrderId(9)), Err(BookError::NotFound(OrderId(9))));
    }

    #[test]
    fn cancel_restores_previous_state() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Buy, 100, 2800, 1)).unwrap();
        let before = book.clone();
        book.insert(lim(2, 2, Side::Buy, 100, 2750, 2)).unwrap();
        book.cancel(OrderId(2)).unwrap();
        assert_eq!(book, before);
    }

    #[test]
    fn rejects_malformed_orders() {
        let mut book = OrderBook::new();
        let mut zero = lim(1, 1, Side::Buy, 1, 2800, 1);
        zero.quantity = 0;
        zero.remaining = 0;
        assert!(matches!(book.insert(zero), Err(BookError::InvalidOrder { .. })));
        let market = Order::market(OrderId(2), AgentId(1), Side::Buy, 5, 1, 2);
        assert_eq!(book.insert(market), Err(BookError::NotResting(OrderId(2))));
        book.insert(lim(3, 1, Side::Buy, 5, 2800, 7)).unwrap();
        assert_eq!(
            book.insert(lim(4, 1, Side::Buy, 5, 2800, 6)),
            Err(BookError::SequenceOrder { id: OrderId(4), sequence: 6 })
        );
        assert_eq!(book.insert(lim(3, 1, Side::Sell, 5, 2900, 8)), Err(BookError::DuplicateId(OrderId(3))));
    }

    #[test]
    fn take_walks_levels_fifo_and_skips_own_orders() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 7, Side::Sell, 10, 2900, 1)).unwrap();
        book.insert(lim(2, 2, Side::Sell, 10, 2900, 2)).unwrap();
        book.insert(lim(3, 3, Side::Sell, 10, 3000, 3)).unwrap();
        let mut taker = Order::market(OrderId(4), AgentId(7), Side::Buy, 15, 1, 4);
        let mut fills = Vec::new();
        book.take(&mut taker, None, |m, p, q| fills.push((m.id, p, q)));
        assert_eq!(fills, vec![(OrderId(2), px(2900), 10), (OrderId(3), px(3000), 5)]);
        assert_eq!(taker.remaining, 0);
        assert!(book.contains(OrderId(1)));
        assert!(!book.contains(OrderId(2)));
        assert_eq!(book.get(OrderId(3)).unwrap().remaining, 5);
    }

    #[test]
    fn take_respects_limit_and_budget() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Sell, 10, 2900, 1)).unwrap();
        book.insert(lim(2, 1, Side::Sell, 10, 3100, 2)).unwrap();
        let mut taker = Order::limit(OrderId(3), AgentId(2), Side::Buy, 20, px(3000), 1, 3);
        let limit = taker.price_limit;
        book.take(&mut taker, limit, |_, _, _| {});
        assert_eq!(taker.remaining, 10);

        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Sell, 10, 2900, 1)).unwrap();
        let mut buyer = Order::market(OrderId(2), AgentId(2), Side::Buy, 10, 1, 2)
            .with_budget(Money::from_cents(5000));
        book.take(&mut buyer, None, |_, _, _| {});
        assert_eq!(buyer.remaining, 9);
        assert_eq!(buyer.cash_budget, Some(Money::from_cents(2100)));
    }
}
