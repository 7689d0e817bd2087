//! Descriptive price-impact regressions: round price change on the net
//! shares each label bought in that round.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::sim::{AgentInfo, RoundRecord};

use super::ols::estimate_coefficients;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceImpact {
    pub label: String,
    pub observations: usize,
    pub intercept: Option<f64>,
    /// Price change per share of net buying.
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

pub fn price_impact(agents: &[AgentInfo], records: &[RoundRecord]) -> Vec<PriceImpact> {
    let label: HashMap<u32, &str> = agents.iter().map(|a| (a.id.0, a.label.as_str())).collect();
    let mut labels: Vec<&str> = agents.iter().map(|a| a.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    labels
        .into_iter()
        .map(|l| {
            let mut dp = Vec::new();
            let mut flow = Vec::new();
            for w in records.windows(2) {
                let net: i64 = w[1]
                    .trades
                    .iter()
                    .map(|t| {
                        let q = t.quantity as i64;
                        (label[&t.buyer.0] == l) as i64 * q - (label[&t.seller.0] == l) as i64 * q
                    })
                    .sum();
                dp.push(w[1].price.to_f64() - w[0].price.to_f64());
                flow.push(net as f64);
            }
            let n = dp.len();
            let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { flow[i] });
            let fit = estimate_coefficients(&x, &DVector::from_vec(dp)).ok();
            PriceImpact {
                label: l.to_string(),
                observations: n,
                intercept: fit.as_ref().map(|f| f.coefficients[0]),
                slope: fit.as_ref().map(|f| f.coefficients[1]),
                r_squared: fit.and_then(|f| f.r_squared),
            }
        })
        .collect()
}
