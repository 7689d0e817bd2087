//! Decision mix, order types, trading activity and keyword use per label.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::decision::Direction;
use crate::orderbook::OrderKind;
use crate::sim::{AgentInfo, RoundRecord};

/// Named keyword lists counted in reasoning texts.
pub type KeywordLists = BTreeMap<String, Vec<String>>;

pub fn default_keywords() -> KeywordLists {
    let list = |words: &[&str]| words.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    BTreeMap::from([
        ("value".to_string(), list(&["fundamental", "overvalued", "undervalued", "ratio"])),
        ("contrarian".to_string(), list(&["overreaction", "excessive", "reversal", "sentiment"])),
        ("optimistic".to_string(), list(&["upside", "growth", "convergence", "undervalued"])),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeBehavior {
    pub label: String,
    pub decisions: usize,
    pub buy_ratio: f64,
    pub sell_ratio: f64,
    pub hold_ratio: f64,
    /// Share of accepted orders that were market orders.
    pub market_order_share: f64,
    /// Trade participations per trading round, summed over the label's agents.
    pub trades_per_round: f64,
    /// Mean keyword hits per decision, by list name.
    pub keywords: BTreeMap<String, f64>,
    pub mean_pf_at_buys: Option<f64>,
    pub mean_pf_at_sells: Option<f64>,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn keyword_hits(text: &str, words: &[String]) -> usize {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| words.iter().any(|w| w == t))
        .count()
}

pub fn behavior_report(agents: &[AgentInfo], records: &[RoundRecord], keywords: &KeywordLists) -> Vec<TypeBehavior> {
    let label: HashMap<u32, &str> = agents.iter().map(|a| (a.id.0, a.label.as_str())).collect();
    let trading_rounds = records.iter().filter(|r| r.round > 0).count();
    let mut labels: Vec<&str> = agents.iter().map(|a| a.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();

    labels
        .into_iter()
        .map(|l| {
            let decisions: Vec<_> =
                records.iter().flat_map(|r| &r.decisions).filter(|d| label[&d.agent.0] == l).collect();
            let count = |dir: Direction| decisions.iter().filter(|d| d.direction == dir).count();
            let accepted: Vec<_> = decisions.iter().flat_map(|d| &d.validation.accepted).collect();
            let markets = accepted.iter().filter(|o| o.kind == OrderKind::Market).count();
            let trades: usize = records
                .iter()
                .flat_map(|r| &r.trades)
                .map(|t| (label[&t.buyer.0] == l) as usize + (label[&t.seller.0] == l) as usize)
                .sum();
            let pf = |dir: Direction| -> Vec<f64> {
                decisions.iter().filter(|d| d.direction == dir).filter_map(|d| d.pf_ratio).collect()
            };
            let texts: Vec<String> = decisions.iter().map(|d| d.decision.full_reasoning()).collect();
            let kw = keywords
                .iter()
                .map(|(name, words)| {
                    let hits: usize = texts.iter().map(|t| keyword_hits(t, words)).sum();
                    (name.clone(), ratio(hits, texts.len()))
                })
                .collect();
            TypeBehavior {
                label: l.to_string(),
                decisions: decisions.len(),
                buy_ratio: ratio(count(Direction::Buy), decisions.len()),
                sell_ratio: ratio(count(Direction::Sell), decisions.len()),
                hold_ratio: ratio(count(Direction::Hold), decisions.len()),
                market_order_share: ratio(markets, accepted.len()),
                trades_per_round: ratio(trades, trading_rounds),
                keywords: kw,
                mean_pf_at_buys: mean(&pf(Direction::Buy)),
                mean_pf_at_sells: mean(&pf(Direction::Sell)),
            }
        })
        .collect()
}
