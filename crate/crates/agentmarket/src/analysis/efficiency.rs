//! Price-to-fundamental, volatility and volume statistics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::RoundRecord;

use super::AnalysisError;

/// The columns of `rounds.csv` the efficiency report needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub price: f64,
    pub fundamental: Option<f64>,
    pub volume: u64,
    pub trades: u64,
}

impl RoundSummary {
    pub fn from_record(r: &RoundRecord) -> Self {
        RoundSummary {
            round: r.round,
            price: r.price.to_f64(),
            fundamental: r.fundamental.map(|v| v.to_f64()),
            volume: r.volume,
            trades: r.trades.len() as u64,
        }
    }

    fn ratio(&self) -> Option<f64> {
        self.fundamental.filter(|v| *v > 0.0).map(|v| self.price / v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub start: f64,
    pub end: f64,
    pub change: f64,
    /// Mean of `|P/V − 1|`.
    pub mean_deviation: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeStats {
    pub total_volume: u64,
    pub total_trades: u64,
    pub mean_volume: f64,
    pub trades_per_round: f64,
    /// Shares per trade; 0 when nothing traded.
    pub avg_trade_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub rounds: usize,
    /// P/F ratio per row, `None` where the fundamental is undefined.
    pub ratios: Vec<Option<f64>>,
    /// Absent when any row lacks a positive fundamental.
    pub ratio: Option<RatioStats>,
    pub fundamental_missing: bool,
    /// Population std of simple returns between consecutive rows.
    pub volatility: f64,
    pub volume: VolumeStats,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Efficiency statistics over `rows`, ordered by round. The first row is the
/// opening state: it counts for the ratio statistics but not for volume.
pub fn efficiency(rows: &[RoundSummary]) -> Result<EfficiencyReport, AnalysisError> {
    if rows.len() < 2 {
        return Err(AnalysisError::TooFewRounds { needed: 2, got: rows.len() });
    }
    let ratios: Vec<Option<f64>> = rows.iter().map(RoundSummary::ratio).collect();
    let complete: Option<Vec<f64>> = ratios.iter().copied().collect();
    let ratio = complete.as_ref().map(|r| {
        let deviations: Vec<f64> = r.iter().map(|x| (x - 1.0).abs()).collect();
        RatioStats {
            start: r[0],
            end: r[r.len() - 1],
            change: r[r.len() - 1] - r[0],
            mean_deviation: mean(&deviations),
            min: r.iter().copied().fold(f64::INFINITY, f64::min),
            max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: population_std(r),
        }
    });
    let returns: Vec<f64> = rows.windows(2).map(|w| w[1].price / w[0].price - 1.0).collect();
    let trading = &rows[1..];
    let total_volume: u64 = trading.iter().map(|r| r.volume).sum();
    let total_trades: u64 = trading.iter().map(|r| r.trades).sum();
    let n = trading.len() as f64;
    Ok(EfficiencyReport {
        rounds: trading.len(),
        ratios,
        fundamental_missing: ratio.is_none(),
        ratio,
        volatility: population_std(&returns),
        volume: VolumeStats {
            total_volume,
            total_trades,
            mean_volume: total_volume as f64 / n,
            trades_per_round: total_trades as f64 / n,
            avg_trade_size: if total_trades == 0 { 0.0 } else { total_volume as f64 / total_trades as f64 },
        },
    })
}

impl fmt::Display for EfficiencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Market efficiency over {} trading rounds", self.rounds)?;
        match &self.ratio {
            Some(r) => {
                writeln!(f, "  P/F ratio: start {:.4}, end {:.4}, change {:+.4}", r.start, r.end, r.change)?;
                writeln!(
                    f,
                    "  P/F ratio: mean |P/F-1| {:.4}, min {:.4}, max {:.4}, std {:.4}",
                    r.mean_deviation, r.min, r.max, r.std
                )?;
            }
            None => writeln!(f, "  P/F ratio: unavailable (fundamental value missing)")?,
        }
        writeln!(f, "  Return volatility: {:.6}", self.volatility)?;
        let v = &self.volume;
        writeln!(
            f,
            "  Volume: total {}, mean {:.2}/round, trades {} ({:.2}/round), avg size {:.2}",
            v.total_volume, v.mean_volume, v.total_trades, v.trades_per_round, v.avg_trade_size
        )
    }
}
