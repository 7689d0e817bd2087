use agentmarket::decision::{OrderRequest, ReplaceMode, TradeDecision};
use agentmarket::llm::{parse_decision, serialize_decision};
use agentmarket::money::Price;
use agentmarket::orderbook::Side;
use proptest::prelude::*;

fn order() -> impl Strategy<Value = OrderRequest> {
    (any::<bool>(), 1u64..1_000_000, prop::option::of(1i64..10_000_000)).prop_map(|(buy, qty, price)| {
        let side = if buy { Side::Buy } else { Side::Sell };
        match price {
            Some(c) => OrderRequest::limit(side, qty, Price::from_cents(c).unwrap()),
            None => OrderRequest::market(side, qty),
        }
    })
}

fn decision() -> impl Strategy<Value = TradeDecision> {
    (
        ".*",
        -1e6f64..1e6,
        ".*",
        -1e6f64..1e6,
        prop::collection::vec(order(), 0..4),
        0usize..3,
        ".*",
    )
        .prop_map(|(vr, v, tr, t, orders, mode, r)| {
            let replace_decision = [ReplaceMode::Add, ReplaceMode::Replace, ReplaceMode::Cancel][mode];
            TradeDecision {
                valuation_reasoning: vr,
                valuation: v,
                price_target_reasoning: tr,
                price_target: t,
                orders: if replace_decision == ReplaceMode::Cancel { Vec::new() } else { orders },
                replace_decision,
                reasoning: r,
            }
        })
}

proptest! {
    #[test]
    fn serialized_decisions_parse_back(d in decision()) {
        let text = serialize_decision(&d);
        prop_assert_eq!(parse_decision(&text).unwrap(), d);
    }
}
