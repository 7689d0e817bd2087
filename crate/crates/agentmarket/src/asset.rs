//! Dividend-paying asset: fundamental value, dividend draws and interest.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::AgentAccount;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssetError {
    #[error("interest rate must be positive for an infinite horizon, got {0}")]
    NonPositiveRate(f64),
    #[error("interest rate must be greater than -1, got {0}")]
    RateTooLow(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("{name} must be finite and non-negative, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("round {round} is past the final round {last}")]
    PastHorizon { round: u32, last: u32 },
    #[error("a finite horizon needs at least one round and a redemption value")]
    IncompleteHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DividendProcess {
    /// `base ± variation`, high with `probability_high`.
    Bernoulli {
        base: f64,
        variation: f64,
        probability_high: f64,
    },
    /// Arithmetic Brownian step on the dividend level: `D += drift + volatility·z`.
    Gbm {
        initial: f64,
        drift: f64,
        volatility: f64,
    },
}

impl DividendProcess {
    pub fn expected(&self) -> f64 {
        match *self {
            DividendProcess::Bernoulli {
                base,
                variation,
                probability_high,
            } => base + variation * (2.0 * probability_high - 1.0),
            DividendProcess::Gbm { initial, .. } => initial,
        }
    }

    pub fn validate(&self) -> Result<(), AssetError> {
        let non_negative = |name, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(AssetError::BadParameter { name, value })
            }
        };
        match *self {
            DividendProcess::Bernoulli {
                base,
                variation,
                probability_high,
            } => {
                non_negative("dividend.base", base)?;
                non_negative("dividend.variation", variation)?;
                if !(0.0..=1.0).contains(&probability_high) {
                    return Err(AssetError::BadProbability(probability_high));
                }
                Ok(())
            }
            DividendProcess::Gbm {
                initial,
                drift,
                volatility,
            } => {
                non_negative("dividend.initial", initial)?;
                non_negative("dividend.volatility", volatility)?;
                if drift.is_finite() {
                    Ok(())
                } else {
                    Err(AssetError::BadParameter { name: "dividend.drift", value: drift })
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Horizon {
    Infinite,
    Finite { rounds: u32 },
}

impl Horizon {
    pub fn rounds(&self) -> Option<u32> {
        match self {
            Horizon::Infinite => None,
            Horizon::Finite { rounds } => Some(*rounds),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssetParams {
    pub interest_rate: f64,
    pub dividend: DividendProcess,
    /// Rounds between dividend payments.
    pub dividend_interval: u32,
    pub horizon: Horizon,
    /// Paid per share after the last round of a finite market.
    pub redemption_value: Option<f64>,
}

impl AssetParams {
    pub fn validate(&self) -> Result<(), AssetError> {
        self.dividend.validate()?;
        let r = self.interest_rate;
        if !r.is_finite() || r <= -1.0 {
            return Err(AssetError::RateTooLow(r));
        }
        match self.horizon {
            Horizon::Infinite if r <= 0.0 => Err(AssetError::NonPositiveRate(r)),
            Horizon::Finite { rounds } if rounds == 0 || self.redemption_value.is_none() => {
                Err(AssetError::IncompleteHorizon)
            }
            _ => Ok(()),
        }
    }
}

/// Risk-neutral value of the share at the start of `round` (1-based; round 0
/// is the opening state).
pub fn fundamental_value(params: &AssetParams, round: u32) -> Result<f64, AssetError> {
    let r = params.interest_rate;
    let expected = params.dividend.expected();
    match params.horizon {
        Horizon::Infinite => {
            if r <= 0.0 {
                return Err(AssetError::NonPositiveRate(r));
            }
            Ok(expected / r)
        }
        Horizon::Finite { rounds } => {
            if round > rounds {
                return Err(AssetError::PastHorizon { round, last: rounds });
            }
            let redemption = params.redemption_value.ok_or(AssetError::IncompleteHorizon)?;
            let periods = rounds - round + 1;
            let growth = 1.0 + r;
            let dividends: f64 = (1..=periods).map(|k| expected / growth.powi(k as i32)).sum();
            Ok(dividends + redemption / growth.powi(periods as i32))
        }
    }
}

/// Drift that keeps the expected dividend path consistent with a target value
/// `v_star` given terminal value `terminal` and `remaining` rounds.
pub fn calibrated_gbm_drift(rate: f64, v_star: f64, terminal: f64, remaining: f64) -> f64 {
    rate * v_star - rate * terminal * (-rate * remaining).exp()
}

/// Mutable state of the dividend process over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DividendState {
    process: DividendProcess,
    level: f64,
    last_paid: Option<Money>,
}

impl DividendState {
    pub fn new(process: DividendProcess) -> Self {
        let level = match process {
            DividendProcess::Gbm { initial, .. } => initial,
            DividendProcess::Bernoulli { base, .. } => base,
        };
        DividendState {
            process,
            level,
            last_paid: None,
        }
    }

    pub fn last_paid(&self) -> Option<Money> {
        self.last_paid
    }

    /// Draws this period's per-share dividend. Negative draws pay nothing.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Money {
        let value = match self.process {
            DividendProcess::Bernoulli {
                base,
                variation,
                probability_high,
            } => {
                if rng.random::<f64>() < probability_high {
                    base + variation
                } else {
                    base - variation
                }
            }
            DividendProcess::Gbm {
                drift, volatility, ..
            } => {
                let z: f64 = rng.sample(StandardNormal);
                self.level += drift + volatility * z;
                self.level
            }
        };
        let paid = Money::from_f64(value.max(0.0)).unwrap_or(Money::ZERO);
        self.last_paid = Some(paid);
        paid
    }
}

/// Credits `per_share × shares` to every dividend account.
pub fn pay_dividend(accounts: &mut [AgentAccount], per_share: Money) {
    for acct in accounts {
        acct.dividend_cash += Money::from_cents(per_share.cents() * acct.shares as i64);
    }
}

/// Credits `rate × main_cash` to every dividend account.
pub fn accrue_interest(accounts: &mut [AgentAccount], rate: f64) {
    for acct in accounts {
        acct.dividend_cash += acct.main_cash.scale(rate);
    }
}
