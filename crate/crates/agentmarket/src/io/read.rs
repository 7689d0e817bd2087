//! Reading run artifacts back.

use std::path::Path;

use serde::Deserialize;

use crate::analysis::{EfficiencyReport, RoundSummary};

use super::write::{EFFICIENCY_JSON, ROUNDS_CSV};
use super::IoError;

#[derive(Deserialize)]
struct RoundRow {
    round: u32,
    price: String,
    fundamental: String,
    volume: u64,
    trades: u64,
}

fn number(path: &Path, line: usize, field: &str, text: &str) -> Result<f64, IoError> {
    text.parse().map_err(|_| IoError::Malformed {
        path: path.to_path_buf(),
        line,
        message: format!("{field} `{text}` is not a number"),
    })
}

/// The efficiency inputs of a run directory's `rounds.csv`.
pub fn read_round_summaries(dir: &Path) -> Result<Vec<RoundSummary>, IoError> {
    let path = dir.join(ROUNDS_CSV);
    let mut reader = csv::Reader::from_path(&path).map_err(|source| IoError::Csv { path: path.clone(), source })?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RoundRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|source| IoError::Csv { path: path.clone(), source })?;
        out.push(RoundSummary {
            round: row.round,
            price: number(&path, line, "price", &row.price)?,
            fundamental: match row.fundamental.as_str() {
                "" => None,
                text => Some(number(&path, line, "fundamental", text)?),
            },
            volume: row.volume,
            trades: row.trades,
        });
    }
    Ok(out)
}

/// The efficiency report saved at run time, if the directory has one.
pub fn read_stored_efficiency(dir: &Path) -> Result<Option<EfficiencyReport>, IoError> {
    let path = dir.join(EFFICIENCY_JSON);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map(Some).map_err(IoError::Json),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(IoError::Read { path, source }),
    }
}
