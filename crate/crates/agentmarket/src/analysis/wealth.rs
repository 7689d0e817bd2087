//! Wealth trajectories per agent label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::money::{Money, Price};
use crate::sim::{AgentInfo, Redemption, RoundRecord};
use crate::account::AgentAccount;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthRow {
    pub label: String,
    pub round: u32,
    /// True for the row taken after shares were redeemed.
    pub redeemed: bool,
    pub agents: usize,
    /// Main cash, dividend cash and shares at the round's price.
    pub total_wealth: Money,
    /// As `total_wealth` without the dividend account.
    pub trading_wealth: Money,
    /// Percent change of `total_wealth` since round 0.
    pub growth_pct: f64,
    pub trading_growth_pct: f64,
}

fn pct(now: Money, start: Money) -> f64 {
    if start.cents() == 0 {
        0.0
    } else {
        (now.cents() - start.cents()) as f64 / start.cents() as f64 * 100.0
    }
}

fn group_totals(agents: &[AgentInfo], accounts: &[AgentAccount], price: Price) -> BTreeMap<String, (usize, Money, Money)> {
    let mut out: BTreeMap<String, (usize, Money, Money)> = BTreeMap::new();
    for info in agents {
        let a = &accounts[info.id.0 as usize];
        let e = out.entry(info.label.clone()).or_insert((0, Money::ZERO, Money::ZERO));
        e.0 += 1;
        e.1 += a.wealth(price);
        e.2 += a.trading_wealth(price);
    }
    out
}

/// One row per label and round, plus a final row per label after
/// redemption in finite markets.
pub fn wealth_report(agents: &[AgentInfo], records: &[RoundRecord], redemption: Option<&Redemption>) -> Vec<WealthRow> {
    let Some(first) = records.first() else { return Vec::new() };
    let start = group_totals(agents, &first.accounts, first.price);
    let mut rows = Vec::new();
    let mut push = |round: u32, redeemed: bool, accounts: &[AgentAccount], price: Price| {
        for (label, (n, total, trading)) in group_totals(agents, accounts, price) {
            let (_, t0, tr0) = start[&label];
            rows.push(WealthRow {
                growth_pct: pct(total, t0),
                trading_growth_pct: pct(trading, tr0),
                label,
                round,
                redeemed,
                agents: n,
                total_wealth: total,
                trading_wealth: trading,
            });
        }
    };
    for r in records {
        push(r.round, false, &r.accounts, r.price);
    }
    if let Some(red) = redemption {
        let price = records.last().map(|r| r.price).unwrap_or(first.price);
        push(red.round, true, &red.accounts, price);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, LlmBackend, Scenario};

    fn quiet(dividend: &str, extra: &str) -> Scenario {
        toml::from_str(&format!(
            "seed = 3\ninterest_rate = 0.05\n{extra}\n[dividend]\n{dividend}\n\
             [[agents]]\ntype = \"hold\"\nengine = \"rule\"\ncount = 2\n"
        ))
        .unwrap()
    }

    #[test]
    fn idle_market_without_income_is_flat() {
        // zero dividends; interest still accrues, so compare trading wealth
        let s = quiet(
            "kind = \"bernoulli\"\nbase = 0.0\nvariation = 0.0\nprobability_high = 0.5",
            "initial_price = 28.0\nrounds = 3\nhorizon = { kind = \"infinite\" }",
        );
        let out = run(&s, LlmBackend::Surrogate).unwrap();
        let rows = wealth_report(&out.agents, &out.records, None);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.trading_growth_pct == 0.0));
    }

    #[test]
    fn idle_market_gains_exactly_its_income() {
        let s = quiet(
            "kind = \"bernoulli\"\nbase = 1.4\nvariation = 1.0\nprobability_high = 0.5",
            "initial_price = 28.0\nrounds = 4\nhorizon = { kind = \"infinite\" }",
        );
        let out = run(&s, LlmBackend::Surrogate).unwrap();
        let rows = wealth_report(&out.agents, &out.records, None);
        // income per round: dividend × 20,000 shares plus 5% of 2,000,000.00 main cash
        let mut expected = rows[0].total_wealth.cents();
        for (row, rec) in rows.iter().zip(&out.records).skip(1) {
            expected += rec.dividend.unwrap().cents() * 20_000 + 10_000_000;
            assert_eq!(row.total_wealth.cents(), expected);
            assert_eq!(row.trading_wealth, rows[0].trading_wealth);
        }
    }

    #[test]
    fn redemption_row_values_shares_at_redemption() {
        let s = quiet(
            "kind = \"bernoulli\"\nbase = 0.0\nvariation = 0.0\nprobability_high = 0.5",
            "initial_price = 30.0\nhorizon = { kind = \"finite\", rounds = 2 }\nredemption_value = 20.0",
        );
        // 2 agents × (1,000,000.00 + 10,000 × 30.00) = 2,600,000.00 at round 0
        let out = run(&s, LlmBackend::Surrogate).unwrap();
        let rows = wealth_report(&out.agents, &out.records, out.redemption.as_ref());
        let last = rows.last().unwrap();
        assert!(last.redeemed);
        assert_eq!(rows[0].trading_wealth.cents(), 260_000_000);
        assert_eq!(last.trading_wealth.cents(), 240_000_000);
        assert!((last.trading_growth_pct - (-200.0 / 2600.0 * 100.0)).abs() < 1e-9);
    }
}
