//! Structured decision payloads: strict parsing and the matching serializer.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::decision::{OrderRequest, ReplaceMode, TradeDecision};
use crate::money::{Price, Qty};
use crate::orderbook::{OrderKind, Side};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at `{path}`: {message}")]
pub struct ParseError {
    /// Field path such as `orders[0].price_limit`; `.` is the whole payload.
    pub path: String,
    pub message: String,
}

impl ParseError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError { path: path.into(), message: message.into() }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

fn number<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let value = match NumberOrText::deserialize(d)? {
        NumberOrText::Number(x) => x,
        NumberOrText::Text(s) => s
            .trim()
            .trim_start_matches('$')
            .parse::<f64>()
            .map_err(|_| de::Error::custom(format!("`{s}` is not a number")))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(de::Error::custom("number must be finite"))
    }
}

fn quantity<'de, D: Deserializer<'de>>(d: D) -> Result<Qty, D::Error> {
    let x = number(d)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(de::Error::custom(format!("quantity must be a whole number of shares, got {x}")));
    }
    Ok(x as Qty)
}

fn order_type<'de, D: Deserializer<'de>>(d: D) -> Result<OrderKind, D::Error> {
    let s = String::deserialize(d)?;
    match s.to_ascii_lowercase().as_str() {
        "market" => Ok(OrderKind::Market),
        "limit" => Ok(OrderKind::Limit),
        _ => Err(de::Error::custom(format!("unknown order_type `{s}`, expected market or limit"))),
    }
}

#[derive(Deserialize)]
struct WireOrder {
    decision: Side,
    #[serde(deserialize_with = "quantity")]
    quantity: Qty,
    #[serde(deserialize_with = "order_type")]
    order_type: OrderKind,
    #[serde(default)]
    price_limit: Option<Price>,
}

#[derive(Deserialize)]
struct WireDecision {
    valuation_reasoning: String,
    #[serde(deserialize_with = "number")]
    valuation: f64,
    #[serde(default)]
    price_target_reasoning: String,
    #[serde(deserialize_with = "number")]
    price_target: f64,
    orders: Vec<WireOrder>,
    replace_decision: ReplaceMode,
    reasoning: String,
}

/// Parses one decision object. The text must hold that object and nothing
/// else; unknown fields are ignored.
pub fn parse_decision(text: &str) -> Result<TradeDecision, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let wire: WireDecision = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ParseError::at(path, e.into_inner().to_string())
    })?;
    de.end()
        .map_err(|e| ParseError::at(".", format!("unexpected text after the decision: {e}")))?;

    if wire.replace_decision == ReplaceMode::Cancel && !wire.orders.is_empty() {
        return Err(ParseError::at("orders", "must be empty when replace_decision is Cancel"));
    }
    let mut orders = Vec::with_capacity(wire.orders.len());
    for (i, o) in wire.orders.into_iter().enumerate() {
        if o.quantity == 0 {
            return Err(ParseError::at(format!("orders[{i}].quantity"), "must be positive"));
        }
        match (o.order_type, o.price_limit) {
            (OrderKind::Limit, None) => {
                return Err(ParseError::at(format!("orders[{i}].price_limit"), "required for limit orders"))
            }
            (OrderKind::Market, Some(_)) => {
                return Err(ParseError::at(format!("orders[{i}].price_limit"), "not allowed on market orders"))
            }
            _ => {}
        }
        orders.push(OrderRequest {
            side: o.decision,
            quantity: o.quantity,
            kind: o.order_type,
            price_limit: o.price_limit,
        });
    }
    Ok(TradeDecision {
        valuation_reasoning: wire.valuation_reasoning,
        valuation: wire.valuation,
        price_target_reasoning: wire.price_target_reasoning,
        price_target: wire.price_target,
        orders,
        replace_decision: wire.replace_decision,
        reasoning: wire.reasoning,
    })
}

#[derive(Serialize)]
struct WireOrderOut {
    decision: Side,
    quantity: Qty,
    order_type: &'static str,
    price_limit: Option<Price>,
}

/// Compact JSON in the same shape [`parse_decision`] reads.
pub fn serialize_decision(d: &TradeDecision) -> String {
    let orders: Vec<WireOrderOut> = d
        .orders
        .iter()
        .map(|o| WireOrderOut {
            decision: o.side,
            quantity: o.quantity,
            order_type: o.kind.as_str(),
            price_limit: o.price_limit,
        })
        .collect();
    json!({
        "valuation_reasoning": d.valuation_reasoning,
        "valuation": d.valuation,
        "price_target_reasoning": d.price_target_reasoning,
        "price_target": d.price_target,
        "orders": orders,
        "replace_decision": d.replace_decision,
        "reasoning": d.reasoning,
    })
    .to_string()
}

/// JSON schema sent to endpoints that support constrained output.
pub fn decision_schema() -> serde_json::Value {
    json!({
        "type": "object",
        "properties": {
            "valuation_reasoning": {"type": "string"},
            "valuation": {"type": "number"},
            "price_target_reasoning": {"type": "string"},
            "price_target": {"type": "number"},
            "orders": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "decision": {"type": "string", "enum": ["Buy", "Sell"]},
                        "quantity": {"type": "integer"},
                        "order_type": {"type": "string", "enum": ["market", "limit"]},
                        "price_limit": {"type": ["number", "null"]}
                    },
                    "required": ["decision", "quantity", "order_type", "price_limit"],
                    "additionalProperties": false
                }
            },
            "replace_decision": {"type": "string", "enum": ["Add", "Cancel", "Replace"]},
            "reasoning": {"type": "string"}
        },
        "required": [
            "valuation_reasoning", "valuation", "price_target_reasoning",
            "price_target", "orders", "replace_decision", "reasoning"
        ],
        "additionalProperties": false
    })
}
