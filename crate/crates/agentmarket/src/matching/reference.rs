//! Naive re-implementation of the clearing rules over a flat list of resting
//! orders. Every fill rescans the whole list for the best counterparty. It is
//! slow and exists only as a differential oracle for [`super::run_round`].

use crate::money::{Price, Qty};
use crate::orderbook::{BookError, Order, OrderId, OrderKind, Side};

use super::{Conversion, MatchError, RoundContext, RoundResult, Trade, TradePhase};

/// Clears one round over `resting` and returns the result plus the resting
/// orders afterwards, bids (best first) then asks (best first).
pub fn reference_match(
    resting: &[Order],
    ctx: RoundContext,
    cancels: &[OrderId],
    new_orders: Vec<Order>,
) -> Result<(RoundResult, Vec<Order>), MatchError> {
    let mut state = Naive {
        resting: resting.to_vec(),
        trades: Vec::new(),
        ctx,
    };
    for order in &new_orders {
        order.check()?;
    }

    let mut cancelled = Vec::new();
    let mut unknown_cancels = Vec::new();
    for id in cancels {
        match state.resting.iter().position(|o| o.id == *id) {
            Some(i) => cancelled.push(state.resting.remove(i)),
            None => unknown_cancels.push(*id),
        }
    }

    let mut markets: Vec<Order> = new_orders
        .iter()
        .filter(|o| o.kind == OrderKind::Market)
        .cloned()
        .collect();
    let mut limits: Vec<Order> = new_orders
        .into_iter()
        .filter(|o| o.kind == OrderKind::Limit)
        .collect();
    markets.sort_by_key(|o| o.sequence);
    limits.sort_by_key(|o| o.sequence);

    if let Some(reference) = ctx.reference_price {
        for b in 0..markets.len() {
            if markets[b].side != Side::Buy {
                continue;
            }
            for s in 0..markets.len() {
                if markets[s].side != Side::Sell
                    || markets[s].agent == markets[b].agent
                    || markets[s].remaining == 0
                {
                    continue;
                }
                let qty = markets[b].fillable_at(reference).min(markets[s].remaining);
                if qty == 0 {
                    break;
                }
                markets[b].record_fill(reference, qty);
                markets[s].record_fill(reference, qty);
                let (buy, sell) = (markets[b].clone(), markets[s].clone());
                state.record(&buy, &sell, reference, qty, TradePhase::MarketToMarket);
            }
        }
    }

    for order in markets.iter_mut() {
        if order.remaining > 0 {
            state.sweep(order, None, TradePhase::MarketToBook);
        }
    }

    for mut order in limits {
        let limit = order.price_limit;
        state.sweep(&mut order, limit, TradePhase::LimitCross);
        if order.remaining > 0 {
            state.rest(order)?;
        }
    }

    let mut next_sequence = ctx.next_sequence;
    let mut conversions = Vec::new();
    let mut unexecuted = Vec::new();
    for order in markets {
        if order.remaining == 0 {
            continue;
        }
        let price = state
            .best_price(order.side.opposite())
            .or(ctx.reference_price)
            .ok_or(MatchError::Unmatchable(order.id))?;
        let keep = order.fillable_at(price);
        if keep == 0 {
            unexecuted.push(order);
            continue;
        }
        let mut converted = order.clone();
        converted.kind = OrderKind::Limit;
        converted.price_limit = Some(price);
        converted.remaining = keep;
        converted.sequence = next_sequence;
        converted.cash_budget = None;
        next_sequence += 1;
        conversions.push(Conversion {
            order: converted.clone(),
            budget_before: order.cash_budget,
            dropped: order.remaining - keep,
        });
        state.sweep(&mut converted, Some(price), TradePhase::LimitCross);
        if converted.remaining > 0 {
            state.rest(converted)?;
        }
    }

    let clearing_price = match state.trades.last() {
        Some(t) => Some(t.price),
        None => match (state.best_price(Side::Buy), state.best_price(Side::Sell)) {
            (Some(b), Some(a)) => Some(
                Price::from_cents((b.cents() + a.cents() + 1) / 2).expect("mean of positive prices"),
            ),
            (Some(b), None) => Some(b),
            (None, Some(a)) => Some(a),
            (None, None) => ctx.reference_price,
        },
    };
    let mut book = state.resting;
    book.sort_by_key(priority_key);
    let trades = state.trades;
    let volume = trades.iter().map(|t| t.quantity).sum();
    let next_trade_id = ctx.next_trade_id + trades.len() as u64;
    Ok((
        RoundResult {
            trades,
            clearing_price,
            volume,
            cancelled,
            unknown_cancels,
            conversions,
            unexecuted,
            next_trade_id,
            next_sequence,
        },
        book,
    ))
}

/// Bids before asks; better price first; then earlier sequence.
fn priority_key(o: &Order) -> (u8, i64, u64) {
    let price = o.price_limit.map_or(0, |p| p.cents());
    match o.side {
        Side::Buy => (0, -price, o.sequence),
        Side::Sell => (1, price, o.sequence),
    }
}

struct Naive {
    resting: Vec<Order>,
    trades: Vec<Trade>,
    ctx: RoundContext,
}

impl Naive {
    fn best_price(&self, side: Side) -> Option<Price> {
        let prices = self
            .resting
            .iter()
            .filter(|o| o.side == side)
            .filter_map(|o| o.price_limit);
        match side {
            Side::Buy => prices.max(),
            Side::Sell => prices.min(),
        }
    }

    fn best_counterparty(&self, taker: &Order, limit: Option<Price>) -> Option<usize> {
        let acceptable = |p: Price| match (taker.side, limit) {
            (_, None) => true,
            (Side::Buy, Some(l)) => p <= l,
            (Side::Sell, Some(l)) => p >= l,
        };
        let mut best: Option<usize> = None;
        for (i, o) in self.resting.iter().enumerate() {
            let price = o.price_limit.expect("resting orders are limits");
            if o.side == taker.side || o.agent == taker.agent || !acceptable(price) {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(j) if priority_key(o) < priority_key(&self.resting[j]) => Some(i),
                keep => keep,
            };
        }
        best
    }

    fn sweep(&mut self, taker: &mut Order, limit: Option<Price>, phase: TradePhase) {
        while taker.remaining > 0 {
            let Some(i) = self.best_counterparty(taker, limit) else {
                break;
            };
            let price = self.resting[i].price_limit.expect("resting orders are limits");
            let qty = taker.fillable_at(price).min(self.resting[i].remaining);
            if qty == 0 {
                break;
            }
            taker.record_fill(price, qty);
            self.resting[i].remaining -= qty;
            let maker = self.resting[i].clone();
            if maker.remaining == 0 {
                self.resting.remove(i);
            }
            let taker_snapshot = taker.clone();
            match taker.side {
                Side::Buy => self.record(&taker_snapshot, &maker, price, qty, phase),
                Side::Sell => self.record(&maker, &taker_snapshot, price, qty, phase),
            }
        }
    }

    fn record(&mut self, buy: &Order, sell: &Order, price: Price, qty: Qty, phase: TradePhase) {
        self.trades.push(Trade {
            id: self.ctx.next_trade_id + self.trades.len() as u64,
            round: self.ctx.round,
            price,
            quantity: qty,
            buy_order: buy.id,
            sell_order: sell.id,
            buyer: buy.agent,
            seller: sell.agent,
            phase,
        });
    }

    fn rest(&mut self, order: Order) -> Result<(), BookError> {
        if self.resting.iter().any(|o| o.id == order.id) {
            return Err(BookError::DuplicateId(order.id));
        }
        let clash = self.resting.iter().any(|o| {
            o.side == order.side && o.price_limit == order.price_limit && o.sequence >= order.sequence
        });
        if clash {
            return Err(BookError::SequenceOrder {
                id: order.id,
                sequence: order.sequence,
            });
        }
        self.resting.push(order);
        Ok(())
    }
}

/// Buyer and seller of a trade never coincide. Exposed for property tests.
pub fn no_self_trades(trades: &[Trade]) -> bool {
    trades.iter().all(|t| t.buyer != t.seller)
}
