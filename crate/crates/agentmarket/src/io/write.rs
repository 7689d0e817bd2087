//! Run artifacts: CSV tables, the decision log, a text summary and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    behavior_report, consistency_metrics, default_keywords, default_stopwords, efficiency, price_impact,
    variance_check, wealth_report, RoundSummary, SweepResult,
};
use crate::money::Price;
use crate::sim::{OrderEvent, RunOutput, Scenario};

use super::config::config_digest;
use super::IoError;

pub const ROUNDS_CSV: &str = "rounds.csv";
pub const TRADES_CSV: &str = "trades.csv";
pub const ORDERS_CSV: &str = "orders.csv";
pub const AGENTS_CSV: &str = "agents.csv";
pub const DECISIONS_JSONL: &str = "decisions.jsonl";
pub const ANOMALIES_CSV: &str = "anomalies.csv";
pub const WEALTH_CSV: &str = "wealth.csv";
pub const EFFICIENCY_JSON: &str = "efficiency.json";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const MANIFEST_JSON: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    /// Data rows, excluding any header.
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config_digest: String,
    pub llm_mode: String,
    pub model: Option<String>,
    pub started_at: String,
    pub finished_at: String,
    pub rounds: u32,
    pub files: Vec<FileEntry>,
}

/// Facts about the invocation that the outputs cannot know.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMeta {
    pub llm_mode: String,
    pub model: Option<String>,
    pub started_at: String,
    pub finished_at: String,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
    rows: usize,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, IoError> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path).map_err(|source| IoError::Csv { path: path.clone(), source })?;
        writer.write_record(header).map_err(|source| IoError::Csv { path: path.clone(), source })?;
        Ok(Table { path, writer, rows: 0 })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<(), IoError> {
        self.rows += 1;
        self.writer.write_record(&fields).map_err(|source| IoError::Csv { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<usize, IoError> {
        self.writer.flush().map_err(|source| IoError::Write { path: self.path.clone(), source })?;
        Ok(self.rows)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

fn entry(dir: &Path, name: &str, rows: usize) -> Result<FileEntry, IoError> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|source| IoError::Read { path, source })?;
    Ok(FileEntry { name: name.to_string(), sha256: hex::encode(Sha256::digest(&bytes)), rows })
}

fn order_row(stage: &str, e: &OrderEvent) -> Vec<String> {
    vec![
        e.round.to_string(),
        stage.to_string(),
        e.order_id.to_string(),
        e.agent.to_string(),
        e.side.as_str().to_string(),
        e.kind.as_str().to_string(),
        e.event.as_str().to_string(),
        e.quantity.to_string(),
        opt(e.price_limit),
    ]
}

/// Human-readable summary of every report the run supports.
pub fn summary_text(scenario: &Scenario, output: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Scenario {} (seed {})", scenario.name, scenario.seed);
    let _ = writeln!(s, "Final price {}", output.final_price());
    let rows: Vec<RoundSummary> = output.records.iter().map(RoundSummary::from_record).collect();
    match efficiency(&rows) {
        Ok(e) => {
            let _ = write!(s, "{e}");
        }
        Err(e) => {
            let _ = writeln!(s, "Market efficiency: {e}");
        }
    }

    let _ = writeln!(s, "Wealth (final, by label)");
    let wealth = wealth_report(&output.agents, &output.records, output.redemption.as_ref());
    let last_round = wealth.last().map(|w| (w.round, w.redeemed));
    for w in wealth.iter().filter(|w| Some((w.round, w.redeemed)) == last_round) {
        let _ = writeln!(
            s,
            "  {:<14} total {:>16} ({:+.2}%)  trading {:>16} ({:+.2}%)",
            w.label, w.total_wealth, w.growth_pct, w.trading_wealth, w.trading_growth_pct
        );
    }

    let _ = writeln!(s, "Behaviour (by label)");
    for b in behavior_report(&output.agents, &output.records, &default_keywords()) {
        let kw: Vec<String> = b.keywords.iter().map(|(k, v)| format!("{k} {v:.2}")).collect();
        let _ = writeln!(
            s,
            "  {:<14} buy {:.3} sell {:.3} hold {:.3} market {:.3} trades/round {:.2}  keywords: {}",
            b.label,
            b.buy_ratio,
            b.sell_ratio,
            b.hold_ratio,
            b.market_order_share,
            b.trades_per_round,
            kw.join(", ")
        );
    }

    let na = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "NA".into());
    let _ = writeln!(s, "Consistency (by label)");
    for c in consistency_metrics(&output.agents, &output.records, &default_stopwords()) {
        let _ = writeln!(s, "  {:<14} SC {}  DC {}", c.label, na(c.sc), na(c.dc));
    }
    if let Some(v) = variance_check(&output.agents, &output.records) {
        let _ = writeln!(
            s,
            "Decision variance: within-type {:.4}, pooled {:.4} ({})",
            v.within,
            v.pooled,
            if v.holds() { "types separate" } else { "types do not separate" }
        );
    }
    let _ = writeln!(s, "Price impact (price change per net share bought)");
    for p in price_impact(&output.agents, &output.records) {
        let _ = writeln!(s, "  {:<14} slope {}  n {}", p.label, p.slope.map(|v| format!("{v:.6}")).unwrap_or("NA".into()), p.observations);
    }
    s
}

/// Writes every artifact of `output` into `dir` and returns the manifest.
pub fn write_run(dir: &Path, scenario: &Scenario, output: &RunOutput, meta: &RunMeta) -> Result<RunManifest, IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.to_path_buf(), source })?;
    let mut files = Vec::new();

    let mut t = Table::create(
        dir,
        ROUNDS_CSV,
        &["round", "price", "fundamental", "pf_ratio", "volume", "trades", "best_bid", "best_ask", "dividend"],
    )?;
    for r in &output.records {
        t.row(vec![
            r.round.to_string(),
            r.price.to_string(),
            opt(r.fundamental),
            r.pf_ratio().map(|x| format!("{x:.6}")).unwrap_or_default(),
            r.volume.to_string(),
            r.trades.len().to_string(),
            opt(r.best_bid),
            opt(r.best_ask),
            opt(r.dividend),
        ])?;
    }
    files.push(entry(dir, ROUNDS_CSV, t.finish()?)?);

    let mut t = Table::create(
        dir,
        TRADES_CSV,
        &["round", "trade_id", "phase", "price", "quantity", "buyer", "seller", "buy_order", "sell_order"],
    )?;
    for tr in output.records.iter().flat_map(|r| &r.trades) {
        t.row(vec![
            tr.round.to_string(),
            tr.id.to_string(),
            tr.phase.as_str().to_string(),
            tr.price.to_string(),
            tr.quantity.to_string(),
            tr.buyer.to_string(),
            tr.seller.to_string(),
            tr.buy_order.to_string(),
            tr.sell_order.to_string(),
        ])?;
    }
    files.push(entry(dir, TRADES_CSV, t.finish()?)?);

    let mut t = Table::create(
        dir,
        ORDERS_CSV,
        &["round", "stage", "order_id", "agent", "side", "kind", "event", "quantity", "price_limit"],
    )?;
    for e in output.records.iter().flat_map(|r| &r.order_events) {
        t.row(order_row("trading", e))?;
    }
    if let Some(red) = &output.redemption {
        for e in &red.order_events {
            t.row(order_row("redemption", e))?;
        }
    }
    files.push(entry(dir, ORDERS_CSV, t.finish()?)?);

    let mut t = Table::create(
        dir,
        AGENTS_CSV,
        &[
            "round", "stage", "agent", "label", "engine", "main_cash", "dividend_cash", "shares", "committed_cash",
            "committed_shares", "wealth", "trading_wealth",
        ],
    )?;
    let mut snapshot = |round: u32, stage: &str, price: Price, accounts: &[crate::account::AgentAccount]| {
        for (info, a) in output.agents.iter().zip(accounts) {
            t.row(vec![
                round.to_string(),
                stage.to_string(),
                info.id.to_string(),
                info.label.clone(),
                info.engine.as_str().to_string(),
                a.main_cash.to_string(),
                a.dividend_cash.to_string(),
                a.shares.to_string(),
                a.committed_cash.to_string(),
                a.committed_shares.to_string(),
                a.wealth(price).to_string(),
                a.trading_wealth(price).to_string(),
            ])?;
        }
        Ok::<(), IoError>(())
    };
    for r in &output.records {
        snapshot(r.round, "trading", r.price, &r.accounts)?;
    }
    if let Some(red) = &output.redemption {
        snapshot(red.round, "redemption", output.final_price(), &red.accounts)?;
    }
    files.push(entry(dir, AGENTS_CSV, t.finish()?)?);

    let mut log = String::new();
    let mut lines = 0;
    for d in output.records.iter().flat_map(|r| &r.decisions) {
        log.push_str(&serde_json::to_string(d).map_err(IoError::Json)?);
        log.push('\n');
        lines += 1;
    }
    write_file(&dir.join(DECISIONS_JSONL), &log)?;
    files.push(entry(dir, DECISIONS_JSONL, lines)?);

    let mut t = Table::create(dir, ANOMALIES_CSV, &["round", "agent", "kind", "detail"])?;
    for a in output.records.iter().flat_map(|r| &r.anomalies) {
        t.row(vec![a.round.to_string(), opt(a.agent), a.kind.clone(), a.detail.clone()])?;
    }
    files.push(entry(dir, ANOMALIES_CSV, t.finish()?)?);

    let mut t = Table::create(
        dir,
        WEALTH_CSV,
        &["label", "round", "redeemed", "agents", "total_wealth", "trading_wealth", "growth_pct", "trading_growth_pct"],
    )?;
    for w in wealth_report(&output.agents, &output.records, output.redemption.as_ref()) {
        t.row(vec![
            w.label,
            w.round.to_string(),
            w.redeemed.to_string(),
            w.agents.to_string(),
            w.total_wealth.to_string(),
            w.trading_wealth.to_string(),
            format!("{:.4}", w.growth_pct),
            format!("{:.4}", w.trading_growth_pct),
        ])?;
    }
    files.push(entry(dir, WEALTH_CSV, t.finish()?)?);

    let rows: Vec<RoundSummary> = output.records.iter().map(RoundSummary::from_record).collect();
    if let Ok(report) = efficiency(&rows) {
        let json = serde_json::to_string_pretty(&report).map_err(IoError::Json)?;
        write_file(&dir.join(EFFICIENCY_JSON), &json)?;
        files.push(entry(dir, EFFICIENCY_JSON, 1)?);
    }

    let summary = summary_text(scenario, output);
    write_file(&dir.join(SUMMARY_TXT), &summary)?;
    files.push(entry(dir, SUMMARY_TXT, summary.lines().count())?);

    let manifest = RunManifest {
        artifact: "agentmarket".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        config_digest: config_digest(scenario),
        llm_mode: meta.llm_mode.clone(),
        model: meta.model.clone(),
        started_at: meta.started_at.clone(),
        finished_at: meta.finished_at.clone(),
        rounds: output.records.len().saturating_sub(1) as u32,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(IoError::Json)?;
    write_file(&dir.join(MANIFEST_JSON), &json)?;
    Ok(manifest)
}

/// Writes the long-format sweep table and a wide per-cell table.
pub fn write_sweep(dir: &Path, results: &[SweepResult]) -> Result<Vec<FileEntry>, IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.to_path_buf(), source })?;
    let mut t = Table::create(
        dir,
        "sweep.csv",
        &["agent_type", "rho", "decision", "probability", "mean_qty_pct", "market_share"],
    )?;
    for r in results {
        for row in r.rows() {
            t.row(vec![
                row.agent_type,
                row.rho.to_string(),
                row.decision.as_str().to_string(),
                format!("{:.6}", row.probability),
                format!("{:.6}", row.mean_qty_pct),
                format!("{:.6}", row.market_share),
            ])?;
        }
    }
    let long = entry(dir, "sweep.csv", t.finish()?)?;

    let mut t = Table::create(
        dir,
        "sweep_cells.csv",
        &["agent_type", "rho", "price", "buy", "hold", "sell", "mean_valuation", "mean_price_target"],
    )?;
    for r in results {
        for c in &r.cells {
            t.row(vec![
                r.agent_type.clone(),
                c.rho.to_string(),
                c.price.to_string(),
                format!("{:.6}", c.outcomes[0].probability),
                format!("{:.6}", c.outcomes[1].probability),
                format!("{:.6}", c.outcomes[2].probability),
                format!("{:.4}", c.mean_valuation),
                format!("{:.4}", c.mean_price_target),
            ])?;
        }
    }
    let wide = entry(dir, "sweep_cells.csv", t.finish()?)?;
    Ok(vec![long, wide])
}
