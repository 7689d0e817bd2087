//! What an agent sees at the start of a round.

use serde::{Deserialize, Serialize};

use crate::asset::{fundamental_value, AssetParams, DividendProcess, Horizon};
use crate::money::{Money, Price, Qty};
use crate::orderbook::DepthSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub round: u32,
    pub price: Price,
    pub volume: Qty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DividendInfo {
    pub process: DividendProcess,
    pub expected: f64,
    pub last_paid: Option<Money>,
    pub next_payment_in: u32,
    pub interval: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub round: u32,
    /// Absent for an infinite horizon.
    pub total_rounds: Option<u32>,
    pub last_price: Price,
    pub last_volume: Qty,
    pub fundamental: Option<f64>,
    pub depth: DepthSnapshot,
    /// Most recent first; the first entry is the round that set `last_price`.
    pub history: Vec<HistoryPoint>,
    pub dividend: DividendInfo,
    pub interest_rate: f64,
    pub redemption_value: Option<f64>,
    /// Signed news signal for this round.
    pub news: f64,
}

impl MarketSnapshot {
    pub fn pf_ratio(&self) -> Option<f64> {
        self.fundamental
            .filter(|v| *v > 0.0)
            .map(|v| self.last_price.to_f64() / v)
    }

    pub fn without_fundamental(mut self) -> Self {
        self.fundamental = None;
        self
    }

    /// Value an agent could derive itself from the disclosed dividend, rate
    /// and redemption terms, whether or not the estimate is shown.
    pub fn implied_value(&self) -> Option<f64> {
        let params = AssetParams {
            interest_rate: self.interest_rate,
            dividend: self.dividend.process,
            dividend_interval: self.dividend.interval,
            horizon: match self.total_rounds {
                Some(rounds) => Horizon::Finite { rounds },
                None => Horizon::Infinite,
            },
            redemption_value: self.redemption_value,
        };
        fundamental_value(&params, self.round.min(self.total_rounds.unwrap_or(u32::MAX))).ok()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;

    #[test]
    fn ratio_follows_fundamental_visibility() {
        let s = snapshot(3500);
        assert!((s.pf_ratio().unwrap() - 1.25).abs() < 1e-12);
        let hidden = s.without_fundamental();
        assert_eq!(hidden.pf_ratio(), None);
        assert!((hidden.implied_value().unwrap() - 28.0).abs() < 1e-12);
    }
}
