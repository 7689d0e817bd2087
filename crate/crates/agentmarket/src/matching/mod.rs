//! Per-round clearing of a batch of cancels and new orders against the book.
//!
//! Stages, in order: cancels; market-vs-market netting at the reference
//! price; market orders against resting liquidity; new limit orders in
//! sequence order (cross, then rest); conversion of leftover market quantity
//! into aggressive limits.

pub mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::{Money, Price, Qty};
use crate::orderbook::{AgentId, BookError, Order, OrderBook, OrderId, OrderKind, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TradePhase {
    MarketToMarket,
    MarketToBook,
    LimitCross,
}

impl TradePhase {
    pub fn as_str(self) -> &'static str {
        match self {
            TradePhase::MarketToMarket => "market_to_market",
            TradePhase::MarketToBook => "market_to_book",
            TradePhase::LimitCross => "limit_cross",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub id: u64,
    pub round: u32,
    pub price: Price,
    pub quantity: Qty,
    pub buy_order: OrderId,
    pub sell_order: OrderId,
    pub buyer: AgentId,
    pub seller: AgentId,
    pub phase: TradePhase,
}

/// Counters and the price used when a stage needs a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundContext {
    pub round: u32,
    pub reference_price: Option<Price>,
    pub next_trade_id: u64,
    /// Sequence handed to the first order converted this round.
    pub next_sequence: u64,
}

/// A market remainder that became a resting-capable limit order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversion {
    /// The order as converted, before it took any liquidity.
    pub order: Order,
    /// Budget left on the market buy at conversion time.
    pub budget_before: Option<Money>,
    /// Quantity dropped because the budget could not cover it at the new price.
    pub dropped: Qty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult {
    pub trades: Vec<Trade>,
    pub clearing_price: Option<Price>,
    pub volume: Qty,
    pub cancelled: Vec<Order>,
    pub unknown_cancels: Vec<OrderId>,
    pub conversions: Vec<Conversion>,
    /// Market remainders that could not be converted (budget exhausted).
    pub unexecuted: Vec<Order>,
    pub next_trade_id: u64,
    pub next_sequence: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error(transparent)]
    Book(#[from] BookError),
    #[error("order {0} has no counterparty and no reference price to convert at")]
    Unmatchable(OrderId),
}

/// Price formation: last trade, else midpoint, else the only quoted side,
/// else the previous price.
pub fn price_formation(trades: &[Trade], book: &OrderBook, prev: Option<Price>) -> Option<Price> {
    if let Some(last) = trades.last() {
        return Some(last.price);
    }
    match (book.best_bid(), book.best_ask()) {
        (Some(b), Some(a)) => Some(Price::midpoint(b, a)),
        (Some(b), None) => Some(b),
        (None, Some(a)) => Some(a),
        (None, None) => prev,
    }
}

struct TradeLog<'a> {
    ctx: &'a RoundContext,
    next_id: u64,
    trades: Vec<Trade>,
}

/// Identity of the aggressive side of a fill.
#[derive(Clone, Copy)]
struct Party {
    id: OrderId,
    agent: AgentId,
    side: Side,
}

impl Party {
    fn of(order: &Order) -> Party {
        Party {
            id: order.id,
            agent: order.agent,
            side: order.side,
        }
    }
}

impl TradeLog<'_> {
    fn push(&mut self, taker: Party, maker: &Order, price: Price, qty: Qty, phase: TradePhase) {
        let maker = Party::of(maker);
        let (buy, sell) = match taker.side {
            Side::Buy => (taker, maker),
            Side::Sell => (maker, taker),
        };
        self.trades.push(Trade {
            id: self.next_id,
            round: self.ctx.round,
            price,
            quantity: qty,
            buy_order: buy.id,
            sell_order: sell.id,
            buyer: buy.agent,
            seller: sell.agent,
            phase,
        });
        self.next_id += 1;
    }
}

/// Clears one round. The book is left untouched when an error is returned.
pub fn run_round(
    book: &mut OrderBook,
    ctx: RoundContext,
    cancels: &[OrderId],
    new_orders: Vec<Order>,
) -> Result<RoundResult, MatchError> {
    let mut work = book.clone();
    let result = clear(&mut work, &ctx, cancels, new_orders)?;
    *book = work;
    Ok(result)
}

fn clear(
    book: &mut OrderBook,
    ctx: &RoundContext,
    cancels: &[OrderId],
    new_orders: Vec<Order>,
) -> Result<RoundResult, MatchError> {
    for order in &new_orders {
        order.check()?;
    }

    let mut cancelled = Vec::new();
    let mut unknown_cancels = Vec::new();
    for id in cancels {
        match book.cancel(*id) {
            Ok(order) => cancelled.push(order),
            Err(_) => unknown_cancels.push(*id),
        }
    }

    let mut log = TradeLog {
        ctx,
        next_id: ctx.next_trade_id,
        trades: Vec::new(),
    };
    let (mut markets, mut limits): (Vec<Order>, Vec<Order>) = new_orders
        .into_iter()
        .partition(|o| o.kind == OrderKind::Market);
    markets.sort_by_key(|o| o.sequence);
    limits.sort_by_key(|o| o.sequence);

    if let Some(reference) = ctx.reference_price {
        net_market_orders(&mut markets, reference, &mut log);
    }

    for taker in markets.iter_mut().filter(|o| o.remaining > 0) {
        let party = Party::of(taker);
        book.take(taker, None, |maker, price, qty| {
            log.push(party, maker, price, qty, TradePhase::MarketToBook)
        });
    }

    for mut order in limits {
        let (limit, party) = (order.price_limit, Party::of(&order));
        book.take(&mut order, limit, |maker, price, qty| {
            log.push(party, maker, price, qty, TradePhase::LimitCross)
        });
        if order.remaining > 0 {
            book.insert(order)?;
        }
    }

    let mut next_sequence = ctx.next_sequence;
    let mut conversions = Vec::new();
    let mut unexecuted = Vec::new();
    for order in markets.into_iter().filter(|o| o.remaining > 0) {
        let price = book
            .best(order.side.opposite())
            .or(ctx.reference_price)
            .ok_or(MatchError::Unmatchable(order.id))?;
        let keep = order.fillable_at(price);
        if keep == 0 {
            unexecuted.push(order);
            continue;
        }
        let converted = Order {
            kind: OrderKind::Limit,
            price_limit: Some(price),
            remaining: keep,
            sequence: next_sequence,
            cash_budget: None,
            ..order.clone()
        };
        next_sequence += 1;
        conversions.push(Conversion {
            order: converted.clone(),
            budget_before: order.cash_budget,
            dropped: order.remaining - keep,
        });
        let mut taker = converted;
        let party = Party::of(&taker);
        book.take(&mut taker, Some(price), |maker, p, qty| {
            log.push(party, maker, p, qty, TradePhase::LimitCross)
        });
        if taker.remaining > 0 {
            book.insert(taker)?;
        }
    }

    let trades = log.trades;
    let clearing_price = price_formation(&trades, book, ctx.reference_price);
    Ok(RoundResult {
        volume: trades.iter().map(|t| t.quantity).sum(),
        next_trade_id: ctx.next_trade_id + trades.len() as u64,
        trades,
        clearing_price,
        cancelled,
        unknown_cancels,
        conversions,
        unexecuted,
        next_sequence,
    })
}

/// Pairs market buys with market sells in sequence order at the reference price.
fn net_market_orders(markets: &mut [Order], reference: Price, log: &mut TradeLog<'_>) {
    let (buys, sells): (Vec<usize>, Vec<usize>) =
        (0..markets.len()).partition(|&i| markets[i].side == Side::Buy);
    for &b in &buys {
        for &s in &sells {
            if markets[b].agent == markets[s].agent || markets[s].remaining == 0 {
                continue;
            }
            let qty = markets[b].fillable_at(reference).min(markets[s].remaining);
            if qty == 0 {
                break;
            }
            markets[b].record_fill(reference, qty);
            markets[s].record_fill(reference, qty);
            log.push(Party::of(&markets[b]), &markets[s], reference, qty, TradePhase::MarketToMarket);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(cents: i64) -> Price {
        Price::from_cents(cents).unwrap()
    }

    fn ctx(reference: Option<i64>) -> RoundContext {
        RoundContext {
            round: 1,
            reference_price: reference.map(px),
            next_trade_id: 0,
            next_sequence: 1000,
        }
    }

    fn lim(id: u64, agent: u32, side: Side, qty: Qty, price: i64) -> Order {
        Order::limit(OrderId(id), AgentId(agent), side, qty, px(price), 1, id)
    }

    fn mkt(id: u64, agent: u32, side: Side, qty: Qty) -> Order {
        Order::market(OrderId(id), AgentId(agent), side, qty, 1, id)
    }

    #[test]
    fn market_buy_takes_best_ask() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Sell, 500, 2900)).unwrap();
        let res = run_round(&mut book, ctx(Some(2800)), &[], vec![mkt(2, 2, Side::Buy, 300)]).unwrap();
        assert_eq!(res.trades.len(), 1);
        assert_eq!(res.trades[0].price, px(2900));
        assert_eq!(res.trades[0].quantity, 300);
        assert_eq!(res.trades[0].phase, TradePhase::MarketToBook);
        assert_eq!(book.get(OrderId(1)).unwrap().remaining, 200);
        assert_eq!(res.clearing_price, Some(px(2900)));
    }

    #[test]
    fn market_orders_net_at_reference() {
        let mut book = OrderBook::new();
        let res = run_round(
            &mut book,
            ctx(Some(2800)),
            &[],
            vec![mkt(1, 1, Side::Buy, 100), mkt(2, 2, Side::Sell, 100)],
        )
        .unwrap();
        assert_eq!(res.trades.len(), 1);
        assert_eq!(res.trades[0].price, px(2800));
        assert_eq!(res.trades[0].phase, TradePhase::MarketToMarket);
        assert!(book.is_empty());
    }

    #[test]
    fn crossing_limits_trade_at_resting_price() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Buy, 100, 3000)).unwrap();
        let res = run_round(&mut book, ctx(Some(2900)), &[], vec![lim(2, 2, Side::Sell, 100, 2950)]).unwrap();
        assert_eq!(res.trades[0].price, px(3000));
        assert_eq!(res.volume, 100);
        assert!(book.is_empty());
    }

    #[test]
    fn no_trade_uses_midpoint() {
        let mut book = OrderBook::new();
        let res = run_round(
            &mut book,
            ctx(Some(5000)),
            &[],
            vec![lim(1, 1, Side::Buy, 10, 2800), lim(2, 2, Side::Sell, 10, 2900)],
        )
        .unwrap();
        assert!(res.trades.is_empty());
        assert_eq!(res.clearing_price, Some(px(2850)));
    }

    #[test]
    fn empty_round_keeps_previous_price() {
        let mut book = OrderBook::new();
        let res = run_round(&mut book, ctx(Some(2800)), &[], vec![]).unwrap();
        assert_eq!(res.clearing_price, Some(px(2800)));
    }

    #[test]
    fn leftover_market_buy_converts_at_best_ask() {
        let mut book = OrderBook::new();
        let res = run_round(
            &mut book,
            ctx(Some(2800)),
            &[],
            vec![mkt(1, 1, Side::Buy, 100), lim(2, 2, Side::Sell, 40, 3000)],
        )
        .unwrap();
        assert_eq!(res.trades.len(), 1);
        assert_eq!(res.trades[0].price, px(3000));
        assert_eq!(res.conversions.len(), 1);
        let conv = &res.conversions[0].order;
        assert_eq!(conv.price_limit, Some(px(3000)));
        assert_eq!(conv.sequence, 1000);
        let resting = book.get(OrderId(1)).unwrap();
        assert_eq!(resting.remaining, 60);
        assert_eq!(resting.kind, OrderKind::Limit);
        assert_eq!(res.next_sequence, 1001);
    }

    #[test]
    fn conversion_without_any_price_is_unmatchable() {
        let mut book = OrderBook::new();
        book.insert(lim(9, 3, Side::Buy, 10, 2000)).unwrap();
        let before = book.clone();
        let err = run_round(&mut book, ctx(None), &[OrderId(9)], vec![mkt(1, 1, Side::Buy, 5)]).unwrap_err();
        assert_eq!(err, MatchError::Unmatchable(OrderId(1)));
        assert_eq!(book, before);
    }

    #[test]
    fn budget_limits_market_buy_and_drops_remainder() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Sell, 10, 2900)).unwrap();
        let buy = mkt(2, 2, Side::Buy, 1000).with_budget(Money::from_cents(5000));
        let res = run_round(&mut book, ctx(Some(2900)), &[], vec![buy]).unwrap();
        assert_eq!(res.volume, 1);
        assert_eq!(res.unexecuted.len(), 1);
        assert_eq!(res.unexecuted[0].cash_budget, Some(Money::from_cents(2100)));
        assert!(res.conversions.is_empty());
    }

    #[test]
    fn cancels_apply_before_matching() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Sell, 10, 2900)).unwrap();
        let res = run_round(
            &mut book,
            ctx(Some(2900)),
            &[OrderId(1), OrderId(77)],
            vec![lim(2, 2, Side::Buy, 10, 2900)],
        )
        .unwrap();
        assert!(res.trades.is_empty());
        assert_eq!(res.cancelled.len(), 1);
        assert_eq!(res.unknown_cancels, vec![OrderId(77)]);
        assert!(book.contains(OrderId(2)));
    }

    #[test]
    fn own_orders_never_match() {
        let mut book = OrderBook::new();
        book.insert(lim(1, 1, Side::Sell, 10, 2900)).unwrap();
        let res = run_round(
            &mut book,
            ctx(Some(2900)),
            &[],
            vec![mkt(2, 1, Side::Buy, 10), mkt(3, 1, Side::Sell, 5)],
        )
        .unwrap();
        assert!(res.trades.iter().all(|t| t.buyer != t.seller));
        assert!(res.trades.is_empty());
    }
}
