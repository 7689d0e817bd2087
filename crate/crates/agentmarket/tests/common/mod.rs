#![allow(dead_code)]

use agentmarket::account::AgentAccount;
use agentmarket::asset::DividendProcess;
use agentmarket::money::{Money, Price};
use agentmarket::orderbook::{AgentId, DepthLevel, DepthSnapshot, Order, OrderId, Side};
use agentmarket::snapshot::{DividendInfo, HistoryPoint, MarketSnapshot};

pub const GOLDEN_SYSTEM: &str = include_str!("../golden/speculator_system.txt");
pub const GOLDEN_USER: &str = include_str!("../golden/speculator_user.txt");
pub const SPECULATOR_RESPONSE: &str = include_str!("../fixtures/speculator_response.json");

pub fn px(cents: i64) -> Price {
    Price::from_cents(cents).unwrap()
}

fn levels(raw: &[(i64, u64)]) -> Vec<DepthLevel> {
    raw.iter().map(|&(c, q)| DepthLevel { price: px(c), quantity: q }).collect()
}

/// Inputs of the worked speculator prompt: round 4 of an infinite market with
/// the fundamental hidden and one 400-share bid resting at 28.00.
pub fn worked_example() -> (MarketSnapshot, AgentAccount, Vec<Order>) {
    let snapshot = MarketSnapshot {
        round: 4,
        total_rounds: None,
        last_price: px(2900),
        last_volume: 500,
        fundamental: None,
        depth: DepthSnapshot {
            bids: levels(&[(2800, 1900), (2750, 1500), (2700, 2500)]),
            asks: levels(&[(2900, 4400), (2950, 1000), (3000, 2000), (5040, 3800), (5700, 2000)]),
        },
        history: [(3, 2900, 100), (2, 2900, 100), (1, 2800, 100), (0, 5600, 0)]
            .iter()
            .map(|&(round, c, volume)| HistoryPoint { round, price: px(c), volume })
            .collect(),
        dividend: DividendInfo {
            process: DividendProcess::Bernoulli { base: 1.4, variation: 1.0, probability_high: 0.5 },
            expected: 1.4,
            last_paid: Some(Money::from_cents(240)),
            next_payment_in: 1,
            interval: 1,
        },
        interest_rate: 0.05,
        redemption_value: None,
        news: 0.0,
    };
    let mut account = AgentAccount::new(AgentId(7), Money::from_cents(100_000_000), 10_000);
    account.dividend_cash = Money::from_cents(29_692_065);
    account.committed_cash = Money::from_cents(1_150_000);
    let bid = Order::limit(OrderId(31), AgentId(7), Side::Buy, 400, px(2800), 3, 120);
    (snapshot, account, vec![bid])
}

use agentmarket::llm::{ScriptEntry, ScriptedClient};
use agentmarket::sim::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const DIVIDEND: &str = "[dividend]\nkind = \"bernoulli\"\nbase = 1.4\nvariation = 1.0\nprobability_high = 0.5\n";

/// Infinite market around a $28.00 fundamental with the given agent tables.
pub fn scenario(seed: u64, rounds: u32, initial_price: f64, agents: &str) -> Scenario {
    let text = format!(
        "seed = {seed}\nrounds = {rounds}\ninitial_price = {initial_price}\ninterest_rate = 0.05\n\
         horizon = {{ kind = \"infinite\" }}\n{DIVIDEND}{agents}"
    );
    agentmarket::io::parse_scenario(&text).unwrap()
}

/// Four value, two maker and two speculator rule agents.
pub fn discovery_scenario(initial_price: f64) -> Scenario {
    scenario(
        1,
        30,
        initial_price,
        "[[agents]]\ntype = \"value\"\nengine = \"rule\"\ncount = 4\n\
         [[agents]]\ntype = \"market_maker\"\nengine = \"rule\"\ncount = 2\n\
         [[agents]]\ntype = \"speculator\"\nengine = \"rule\"\ncount = 2\n",
    )
}

/// A decision payload with arbitrary orders, including ones that overspend,
/// oversell, self-cross or name absurd prices.
pub fn random_decision(rng: &mut impl Rng) -> Value {
    let n = rng.random_range(0..4);
    let orders: Vec<Value> = (0..n)
        .map(|_| {
            let side = if rng.random_bool(0.5) { "Buy" } else { "Sell" };
            let qty = if rng.random_bool(0.1) { rng.random_range(10_000..200_000) } else { rng.random_range(1..3_000) };
            if rng.random_bool(0.4) {
                json!({"decision": side, "quantity": qty, "order_type": "market"})
            } else {
                let price = rng.random_range(100..6_000) as f64 / 100.0;
                json!({"decision": side, "quantity": qty, "order_type": "limit", "price_limit": price})
            }
        })
        .collect();
    let mode = ["Add", "Replace", "Cancel"][rng.random_range(0..3)];
    let orders = if mode == "Cancel" { Vec::new() } else { orders };
    json!({
        "valuation_reasoning": "random", "valuation": 28.0,
        "price_target_reasoning": "random", "price_target": 28.0,
        "orders": orders, "replace_decision": mode, "reasoning": "random"
    })
}

/// A script with one random decision per agent and round.
pub fn random_script(seed: u64, agents: u32, rounds: u32) -> ScriptedClient {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for round in 1..=rounds {
        for agent in 0..agents {
            entries.push(ScriptEntry { agent, round: Some(round), response: random_decision(&mut rng), repeat: false });
        }
    }
    ScriptedClient::new(entries)
}

/// Random-decision agents, with a market maker for depth.
pub fn random_agents_scenario(seed: u64, agents: u32, rounds: u32) -> Scenario {
    scenario(
        seed,
        rounds,
        28.0,
        &format!(
            "[[agents]]\ntype = \"default\"\ncount = {agents}\n\
             [[agents]]\ntype = \"market_maker\"\nengine = \"rule\"\n"
        ),
    )
}
