use agentmarket::matching::reference::reference_match;
use agentmarket::matching::{run_round, RoundContext};
use agentmarket::money::{Money, Price, Qty};
use agentmarket::orderbook::{AgentId, Order, OrderBook, OrderId, Side};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    resting: Vec<Order>,
    cancels: Vec<OrderId>,
    incoming: Vec<Order>,
    reference: Option<Price>,
}

fn px(cents: i64) -> Price {
    Price::from_cents(cents).unwrap()
}

fn side_of(buy: bool) -> Side {
    if buy {
        Side::Buy
    } else {
        Side::Sell
    }
}

prop_compose! {
    fn resting_orders()(split in 95i64..=105, raw in prop::collection::vec((0u32..4, any::<bool>(), 1u64..50, 0i64..10), 0..8))
        -> Vec<Order> {
        raw.into_iter().enumerate().map(|(i, (agent, buy, qty, offset))| {
            // Bids strictly below the split, asks at or above it: never crossed.
            let price = if buy { split - 1 - offset } else { split + offset };
            Order::limit(OrderId(i as u64), AgentId(agent), side_of(buy), qty, px(price), 0, i as u64)
        }).collect()
    }
}

prop_compose! {
    fn incoming_orders()(raw in prop::collection::vec(
        (0u32..4, any::<bool>(), any::<bool>(), 1u64..60, 90i64..=110, prop::option::of(0i64..8000)), 0..8))
        -> Vec<Order> {
        raw.into_iter().enumerate().map(|(i, (agent, buy, market, qty, price, budget))| {
            let id = OrderId(100 + i as u64);
            let seq = 100 + i as u64;
            if market {
                let order = Order::market(id, AgentId(agent), side_of(buy), qty, 1, seq);
                match (buy, budget) {
                    (true, Some(b)) => order.with_budget(Money::from_cents(b)),
                    _ => order,
                }
            } else {
                Order::limit(id, AgentId(agent), side_of(buy), qty, px(price), 1, seq)
            }
        }).collect()
    }
}

prop_compose! {
    fn cases()(resting in resting_orders(), incoming in incoming_orders(),
               cancel_mask in prop::collection::vec(any::<bool>(), 8), unknown in any::<bool>(),
               reference in prop::option::weighted(0.9, 90i64..=110))
        -> Case {
        let mut cancels: Vec<OrderId> = resting.iter().zip(&cancel_mask)
            .filter(|(_, c)| **c).map(|(o, _)| o.id).collect();
        if unknown {
            cancels.push(OrderId(9999));
        }
        Case { resting, cancels, incoming, reference: reference.map(px) }
    }
}

fn book_of(orders: &[Order]) -> OrderBook {
    let mut book = OrderBook::new();
    for o in orders {
        book.insert(o.clone()).unwrap();
    }
    book
}

fn ctx(reference: Option<Price>) -> RoundContext {
    RoundContext {
        round: 1,
        reference_price: reference,
        next_trade_id: 0,
        next_sequence: 1000,
    }
}

fn total_remaining<'a>(orders: impl IntoIterator<Item = &'a Order>) -> Qty {
    orders.into_iter().map(|o| o.remaining).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn engine_agrees_with_reference(case in cases()) {
        let mut book = book_of(&case.resting);
        let fast = run_round(&mut book, ctx(case.reference), &case.cancels, case.incoming.clone());
        let slow = reference_match(&case.resting, ctx(case.reference), &case.cancels, case.incoming);
        match (fast, slow) {
            (Ok(a), Ok((b, resting))) => {
                prop_assert_eq!(a, b);
                let fast_resting: Vec<Order> = book.orders().cloned().collect();
                prop_assert_eq!(fast_resting, resting);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "outcomes differ: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn quantity_is_conserved(case in cases()) {
        let mut book = book_of(&case.resting);
        let before = total_remaining(&case.resting);
        let incoming = total_remaining(&case.incoming);
        if let Ok(res) = run_round(&mut book, ctx(case.reference), &case.cancels, case.incoming) {
            let cancelled = total_remaining(&res.cancelled);
            let dropped: Qty = res.conversions.iter().map(|c| c.dropped).sum();
            let unexecuted = total_remaining(&res.unexecuted);
            let after = total_remaining(book.orders());
            prop_assert_eq!(before + incoming, after + cancelled + dropped + unexecuted + 2 * res.volume);
            let depth = book.depth();
            prop_assert_eq!(depth.total(Side::Buy) + depth.total(Side::Sell), after);
        }
    }

    #[test]
    fn no_self_trades_and_no_cross_between_agents(case in cases()) {
        let mut book = book_of(&case.resting);
        if let Ok(res) = run_round(&mut book, ctx(case.reference), &case.cancels, case.incoming) {
            prop_assert!(res.trades.iter().all(|t| t.buyer != t.seller));
            for bid in book.side_orders(Side::Buy) {
                for ask in book.side_orders(Side::Sell) {
                    if bid.agent != ask.agent {
                        prop_assert!(bid.price_limit < ask.price_limit);
                    }
                }
            }
        }
    }

    #[test]
    fn market_buys_never_exceed_budget(case in cases()) {
        let mut book = book_of(&case.resting);
        let budgets: Vec<(OrderId, Money)> = case.incoming.iter()
            .filter_map(|o| o.cash_budget.map(|b| (o.id, b))).collect();
        if let Ok(res) = run_round(&mut book, ctx(case.reference), &case.cancels, case.incoming) {
            for (id, budget) in budgets {
                let conversion = res.conversions.iter().find(|c| c.order.id == id);
                let spent_as_market: Money = res.trades.iter()
                    .filter(|t| t.buy_order == id && t.phase != agentmarket::matching::TradePhase::LimitCross)
                    .map(|t| t.price * t.quantity).sum();
                prop_assert!(spent_as_market <= budget);
                if let Some(c) = conversion {
                    let reserved = c.order.price_limit.unwrap() * c.order.remaining;
                    prop_assert!(spent_as_market + reserved <= budget);
                }
            }
        }
    }

    #[test]
    fn cancel_after_insert_restores_book(resting in resting_orders(), agent in 0u32..4, buy in any::<bool>(),
                                         qty in 1u64..50, price in 80i64..120) {
        let mut book = book_of(&resting);
        let before = book.clone();
        let order = Order::limit(OrderId(500), AgentId(agent), side_of(buy), qty, px(price), 1, 500);
        book.insert(order.clone()).unwrap();
        let removed = book.cancel(OrderId(500)).unwrap();
        prop_assert_eq!(removed, order);
        prop_assert_eq!(book, before);
    }
}
