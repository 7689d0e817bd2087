//! Derived state variables shared by the rule and linear agents.

use serde::{Deserialize, Serialize};

use crate::snapshot::MarketSnapshot;

use super::StrategyParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    pub price: f64,
    /// Moving average over the last `ma_window` history prices.
    pub moving_average: f64,
    /// Population std of the last `vol_window` history prices, floored.
    pub volatility: f64,
    pub price_change: f64,
    pub volume_change: f64,
}

impl Signals {
    pub fn from_snapshot(snapshot: &MarketSnapshot, params: &StrategyParams) -> Signals {
        let price = snapshot.last_price.to_f64();
        let prices: Vec<f64> = snapshot.history.iter().map(|h| h.price.to_f64()).collect();

        let ma_slice = &prices[..prices.len().min(params.ma_window)];
        let moving_average = if ma_slice.is_empty() {
            price
        } else {
            ma_slice.iter().sum::<f64>() / ma_slice.len() as f64
        };

        let vol_slice = &prices[..prices.len().min(params.vol_window)];
        let volatility = if vol_slice.len() < 2 {
            params.sigma_floor
        } else {
            let mean = vol_slice.iter().sum::<f64>() / vol_slice.len() as f64;
            let var = vol_slice.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / vol_slice.len() as f64;
            var.sqrt().max(params.sigma_floor)
        };

        let (price_change, volume_change) = match snapshot.history.as_slice() {
            [latest, before, ..] => (
                latest.price.to_f64() - before.price.to_f64(),
                latest.volume as f64 - before.volume as f64,
            ),
            _ => (0.0, 0.0),
        };

        Signals {
            price,
            moving_average,
            volatility,
            price_change,
            volume_change,
        }
    }

    /// `(P − P̄) / σ`.
    pub fn z_score(&self) -> f64 {
        (self.price - self.moving_average) / self.volatility
    }

    /// Speculator's expected price change: the last observed change.
    pub fn expected_change(&self) -> f64 {
        self.price_change
    }
}
