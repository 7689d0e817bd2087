//! Decision sweep: query one agent on synthetic markets priced at `ρ·V`.

use serde::{Deserialize, Serialize};

use crate::account::AgentAccount;
use crate::asset::{fundamental_value, AssetParams, DividendProcess, Horizon};
use crate::decision::Direction;
use crate::money::{Money, Price, Qty};
use crate::orderbook::{AgentId, DepthLevel, DepthSnapshot, OrderKind};
use crate::sim::{agent_decision, Ask, LlmBackend, SimError};
use crate::sim::AgentSpec;
use crate::snapshot::{DividendInfo, HistoryPoint, MarketSnapshot};

use super::AnalysisError;

/// Symmetric book around the price: one level per offset on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BookTemplate {
    /// Fractions of the price, e.g. 0.01 puts levels at `P(1 ± 0.01)`.
    pub offsets: Vec<f64>,
    pub size: Qty,
}

impl Default for BookTemplate {
    fn default() -> Self {
        BookTemplate { offsets: vec![0.01, 0.02, 0.03], size: 1000 }
    }
}

/// Market terms the synthetic snapshots share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMarket {
    pub interest_rate: f64,
    pub dividend: DividendProcess,
    pub seed: u64,
}

impl SweepMarket {
    fn asset(&self) -> AssetParams {
        AssetParams {
            interest_rate: self.interest_rate,
            dividend: self.dividend,
            dividend_interval: 1,
            horizon: Horizon::Infinite,
            redemption_value: None,
        }
    }

    pub fn fundamental(&self) -> Result<f64, AnalysisError> {
        Ok(fundamental_value(&self.asset(), 1)?)
    }
}

/// `start, start + step, …` up to `end` inclusive, with values rounded to
/// the step's decimal precision so that `0.1:3.5:0.1` has 35 exact points.
pub fn rho_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>, AnalysisError> {
    let bad = |m: &str| Err(AnalysisError::Grid(m.to_string()));
    if !(start.is_finite() && end.is_finite() && step.is_finite()) {
        return bad("bounds must be finite");
    }
    if start <= 0.0 {
        return bad("values must be positive");
    }
    if step <= 0.0 || end < start {
        return bad("need start <= end and a positive step");
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return bad("grid is too large");
    }
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn cents(x: f64) -> Price {
    Price::from_cents(((x * 100.0).round() as i64).max(1)).expect("clamped to a positive price")
}

/// Snapshot at `P = ρV` with a flat history and the template book.
pub fn sweep_snapshot(market: &SweepMarket, rho: f64, template: &BookTemplate) -> Result<MarketSnapshot, AnalysisError> {
    let v = market.fundamental()?;
    let price = cents(rho * v);
    let p = price.to_f64();
    let level = |sign: f64| -> Vec<DepthLevel> {
        template.offsets.iter().map(|o| DepthLevel { price: cents(p * (1.0 + sign * o)), quantity: template.size }).collect()
    };
    Ok(MarketSnapshot {
        round: 1,
        total_rounds: None,
        last_price: price,
        last_volume: 0,
        fundamental: Some(v),
        depth: DepthSnapshot { bids: level(-1.0), asks: level(1.0) },
        history: vec![HistoryPoint { round: 0, price, volume: 0 }],
        dividend: DividendInfo {
            process: market.dividend,
            expected: market.dividend.expected(),
            last_paid: None,
            next_payment_in: 1,
            interval: 1,
        },
        interest_rate: market.interest_rate,
        redemption_value: None,
        news: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStats {
    pub decision: Direction,
    pub probability: f64,
    /// Mean requested quantity as a percentage of the share endowment, over
    /// trials that chose this decision.
    pub mean_qty_pct: f64,
    /// Fraction of those trials' orders that were market orders.
    pub market_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rho: f64,
    pub price: Price,
    /// Buy, Hold, Sell in that order.
    pub outcomes: [DecisionStats; 3],
    pub mean_valuation: f64,
    pub mean_price_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub agent_type: String,
    pub trials: u32,
    pub cells: Vec<SweepCell>,
}

/// One row of the long-format sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub agent_type: String,
    pub rho: f64,
    pub decision: Direction,
    pub probability: f64,
    pub mean_qty_pct: f64,
    pub market_share: f64,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.outcomes.iter().map(move |o| SweepRow {
                    agent_type: self.agent_type.clone(),
                    rho: c.rho,
                    decision: o.decision,
                    probability: o.probability,
                    mean_qty_pct: o.mean_qty_pct,
                    market_share: o.market_share,
                })
            })
            .collect()
    }

    /// Most likely decision per cell, ties going Buy, Hold, Sell.
    pub fn modal_decisions(&self) -> Vec<(f64, Direction)> {
        self.cells
            .iter()
            .map(|c| {
                let best = c.outcomes.iter().fold(&c.outcomes[0], |a, b| if b.probability > a.probability { b } else { a });
                (c.rho, best.decision)
            })
            .collect()
    }
}

const ORDER: [Direction; 3] = [Direction::Buy, Direction::Hold, Direction::Sell];

/// Queries `agent` `trials` times per grid point. Trial `k` of cell `i` is
/// asked as round `i·trials + k + 1`, which keys both scripted replies and
/// the random draws of linear agents.
pub fn decision_sweep(
    agent: &AgentSpec,
    market: &SweepMarket,
    grid: &[f64],
    trials: u32,
    template: &BookTemplate,
    backend: &mut LlmBackend<'_>,
) -> Result<SweepResult, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::Grid("trials must be at least 1".into()));
    }
    if let Some(bad) = grid.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(AnalysisError::Grid(format!("grid value {bad} is not positive")));
    }
    let account = AgentAccount::new(AgentId(agent.id.0), agent.cash, agent.shares);
    let endowment = agent.shares.max(1) as f64;
    let mut cells = Vec::with_capacity(grid.len());
    for (i, &rho) in grid.iter().enumerate() {
        let mut snapshot = sweep_snapshot(market, rho, template)?;
        if agent.hide_fundamental {
            snapshot = snapshot.without_fundamental();
        }
        let mut counts = [0u32; 3];
        let mut qty = [0.0f64; 3];
        let mut orders = [0usize; 3];
        let mut markets = [0usize; 3];
        let (mut valuation, mut target) = (0.0, 0.0);
        for k in 0..trials {
            let ask = Ask { seed: market.seed, round: i as u32 * trials + k + 1, max_retries: 3, recent: &[] };
            let out = agent_decision(agent, &snapshot, &account, &[], backend, ask).map_err(|e| match e {
                SimError::Config(c) => AnalysisError::Config(c),
                other => AnalysisError::Agent(other.to_string()),
            })?;
            let d = out.decision;
            let slot = ORDER.iter().position(|x| *x == d.direction()).expect("three directions");
            counts[slot] += 1;
            qty[slot] += d.net_quantity().unsigned_abs() as f64 / endowment * 100.0;
            orders[slot] += d.orders.len();
            markets[slot] += d.orders.iter().filter(|o| o.kind == OrderKind::Market).count();
            valuation += d.valuation;
            target += d.price_target;
        }
        let n = trials as f64;
        let outcomes = std::array::from_fn(|s| DecisionStats {
            decision: ORDER[s],
            probability: counts[s] as f64 / n,
            mean_qty_pct: if counts[s] == 0 { 0.0 } else { qty[s] / counts[s] as f64 },
            market_share: if orders[s] == 0 { 0.0 } else { markets[s] as f64 / orders[s] as f64 },
        });
        cells.push(SweepCell {
            rho,
            price: snapshot.last_price,
            outcomes,
            mean_valuation: valuation / n,
            mean_price_target: target / n,
        });
    }
    Ok(SweepResult { agent_type: agent.label.clone(), trials, cells })
}

/// A single agent spec for sweeps, with the usual endowment.
pub fn sweep_agent(label: &str, engine: crate::sim::AgentEngine, params: crate::agents::StrategyParams) -> AgentSpec {
    let shares = 10_000;
    let mut params = params;
    params.maker_target_inventory.get_or_insert(shares);
    AgentSpec {
        id: AgentId(0),
        label: label.to_string(),
        engine,
        cash: Money::from_cents(100_000_000),
        shares,
        hide_fundamental: false,
        params,
    }
}
