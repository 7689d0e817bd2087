//! The round loop: snapshots, decisions, validation, clearing, settlement,
//! dividends and interest, with conservation checked after every round.

use std::collections::{BTreeSet, HashMap, HashSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::account::{AccountError, AgentAccount, Reservations, Reserve};
use crate::agents::{linear_decide, strategy_decide, validate_decision};
use crate::asset::{accrue_interest, fundamental_value, pay_dividend, AssetError, AssetParams, DividendState};
use crate::decision::TradeDecision;
use crate::llm::{assemble_prompt_with_recall, parse_decision, ChatClient, ClientError, Persona};
use crate::matching::{run_round, MatchError, RoundContext, RoundResult};
use crate::money::{Money, Price, Qty};
use crate::orderbook::{AgentId, Order, OrderBook, OrderId, OrderKind, Side};
use crate::snapshot::{DividendInfo, HistoryPoint, MarketSnapshot};

use super::record::{
    AgentInfo, Anomaly, DecisionRecord, OrderEvent, OrderEventKind, Redemption, RoundRecord, RunOutput,
};
use super::rng::{seeded_shuffle, substream, Domain};
use super::scenario::{AgentEngine, AgentSpec, ConfigError, Scenario};
use super::surrogate::surrogate_decide;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario at {0}")]
    Config(#[from] ConfigError),
    #[error("conservation violated in round {round}: {detail}")]
    Conservation { round: u32, detail: String },
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Account(#[from] AccountError),
    #[error(transparent)]
    Asset(#[from] AssetError),
}

/// Where language-model agents get their decisions.
pub enum LlmBackend<'a> {
    Client(&'a mut dyn ChatClient),
    /// Rule stand-ins per persona; no model is called.
    Surrogate,
}

/// A decision together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub decision: TradeDecision,
    pub prompt_hash: Option<String>,
    pub raw: Vec<String>,
    pub fallback: bool,
    /// Why the agent fell back to holding.
    pub anomaly: Option<String>,
}

/// Round context for a single decision.
#[derive(Debug, Clone, Copy)]
pub struct Ask<'a> {
    pub seed: u64,
    pub round: u32,
    pub max_retries: u32,
    /// The agent's own earlier decisions for its prompt, newest first.
    pub recent: &'a [(u32, &'a TradeDecision)],
}

impl Outcome {
    fn plain(decision: TradeDecision) -> Self {
        Outcome { decision, prompt_hash: None, raw: Vec::new(), fallback: false, anomaly: None }
    }
}

pub struct Simulator<'a> {
    scenario: Scenario,
    specs: Vec<AgentSpec>,
    asset: AssetParams,
    backend: LlmBackend<'a>,
    accounts: Vec<AgentAccount>,
    book: OrderBook,
    reservations: Reservations,
    dividend: DividendState,
    last_price: Price,
    history: Vec<HistoryPoint>,
    round: u32,
    rounds: u32,
    next_order_id: u64,
    next_sequence: u64,
    next_trade_id: u64,
    total_cash: Money,
    total_shares: Qty,
    records: Vec<RoundRecord>,
}

fn hash_prompt(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update(b"\n");
    h.update(user.as_bytes());
    hex::encode(h.finalize())
}

fn reserve_for(order: &Order) -> Reserve {
    match order.side {
        Side::Buy => Reserve { cash: order.price_limit.expect("resting orders are limits") * order.remaining, shares: 0 },
        Side::Sell => Reserve { cash: Money::ZERO, shares: order.remaining },
    }
}

impl<'a> Simulator<'a> {
    /// Validates the scenario and records the opening state as round 0.
    pub fn new(scenario: &Scenario, backend: LlmBackend<'a>) -> Result<Self, SimError> {
        let specs = scenario.agent_specs()?;
        let asset = scenario.asset();
        let accounts: Vec<AgentAccount> =
            specs.iter().map(|s| AgentAccount::new(s.id, s.cash, s.shares)).collect();
        let mut sim = Simulator {
            asset,
            backend,
            total_cash: accounts.iter().map(|a| a.main_cash).sum(),
            total_shares: accounts.iter().map(|a| a.shares).sum(),
            accounts,
            book: OrderBook::new(),
            reservations: Reservations::new(),
            dividend: DividendState::new(scenario.dividend.process),
            last_price: scenario.initial_price,
            history: vec![HistoryPoint { round: 0, price: scenario.initial_price, volume: 0 }],
            round: 0,
            rounds: scenario.trading_rounds(),
            next_order_id: 1,
            next_sequence: 1,
            next_trade_id: 1,
            records: Vec::new(),
            specs,
            scenario: scenario.clone(),
        };
        let opening = RoundRecord {
            round: 0,
            price: sim.last_price,
            fundamental: sim.fundamental_money(0)?,
            volume: 0,
            best_bid: None,
            best_ask: None,
            dividend: None,
            trades: Vec::new(),
            accounts: sim.accounts.clone(),
            decisions: Vec::new(),
            order_events: Vec::new(),
            anomalies: Vec::new(),
        };
        sim.records.push(opening);
        Ok(sim)
    }

    pub fn agents(&self) -> Vec<AgentInfo> {
        self.specs
            .iter()
            .map(|s| AgentInfo {
                id: s.id,
                label: s.label.clone(),
                engine: s.engine.engine(),
                initial_cash: s.cash,
                initial_shares: s.shares,
            })
            .collect()
    }

    pub fn accounts(&self) -> &[AgentAccount] {
        &self.accounts
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.rounds
    }

    fn fundamental(&self, round: u32) -> Result<f64, AssetError> {
        fundamental_value(&self.asset, round)
    }

    fn fundamental_money(&self, round: u32) -> Result<Option<Money>, AssetError> {
        Ok(Money::from_f64(self.fundamental(round)?).ok())
    }

    fn snapshot(&self, round: u32) -> Result<MarketSnapshot, SimError> {
        let interval = self.asset.dividend_interval;
        let until = (interval - round % interval) % interval;
        Ok(MarketSnapshot {
            round,
            total_rounds: self.asset.horizon.rounds(),
            last_price: self.last_price,
            last_volume: self.history[0].volume,
            fundamental: Some(self.fundamental(round)?),
            depth: self.book.depth(),
            history: self.history.clone(),
            dividend: DividendInfo {
                process: self.asset.dividend,
                expected: self.asset.dividend.expected(),
                last_paid: self.dividend.last_paid(),
                next_payment_in: until + 1,
                interval,
            },
            interest_rate: self.asset.interest_rate,
            redemption_value: self.asset.redemption_value,
            news: self.scenario.news_at(round),
        })
    }

    fn decide(&mut self, spec: &AgentSpec, snapshot: &MarketSnapshot, round: u32) -> Result<Outcome, SimError> {
        let account = &self.accounts[spec.id.0 as usize];
        let outstanding: Vec<Order> = self.book.orders_of(spec.id).into_iter().cloned().collect();
        let recall = self.scenario.llm.recall_decisions;
        let recent: Vec<(u32, &TradeDecision)> = self
            .records
            .iter()
            .rev()
            .filter_map(|r| r.decisions.iter().find(|d| d.agent == spec.id).map(|d| (r.round, &d.decision)))
            .take(recall)
            .collect();
        let ask = Ask { seed: self.scenario.seed, round, max_retries: self.scenario.llm.max_retries, recent: &recent };
        agent_decision(spec, snapshot, account, &outstanding, &mut self.backend, ask)
    }

    /// Runs one trading round.
    pub fn step(&mut self) -> Result<&RoundRecord, SimError> {
        if self.is_finished() {
            return Err(SimError::Config(ConfigError::new("rounds", "all rounds have been run")));
        }
        let round = self.round + 1;
        let base = self.snapshot(round)?;
        let true_ratio = base.pf_ratio();
        let specs = self.specs.clone();
        let mut anomalies = Vec::new();

        let mut outcomes = Vec::with_capacity(specs.len());
        for spec in &specs {
            let view = if spec.hide_fundamental { base.clone().without_fundamental() } else { base.clone() };
            let outcome = self.decide(spec, &view, round)?;
            if let Some(detail) = &outcome.anomaly {
                anomalies.push(Anomaly {
                    round,
                    agent: Some(spec.id),
                    kind: "llm_fallback".into(),
                    detail: detail.clone(),
                });
            }
            outcomes.push(Some(outcome));
        }

        let ids: Vec<AgentId> = specs.iter().map(|s| s.id).collect();
        let mut decisions = Vec::with_capacity(specs.len());
        let mut cancels = Vec::new();
        let mut new_orders = Vec::new();
        let mut events = Vec::new();
        for agent in seeded_shuffle(&ids, self.scenario.seed, round) {
            let i = agent.0 as usize;
            let spec = &specs[i];
            let outcome = outcomes[i].take().expect("one decision per agent");
            let d = &outcome.decision;
            let resting: Vec<Order> = self.book.orders_of(agent).into_iter().cloned().collect();
            let account = &mut self.accounts[i];
            let mut cash = account.available_cash();
            let mut shares = account.available_shares();
            let visible: &[Order] = if d.replace_decision.cancels_resting() {
                for o in &resting {
                    let held = self.reservations.get(o.id).unwrap_or_default();
                    cash += held.cash;
                    shares += held.shares;
                    cancels.push(o.id);
                }
                &[]
            } else {
                &resting
            };
            let validation = validate_decision(d, cash, shares, &base, visible);
            let mut order_ids = Vec::with_capacity(validation.accepted.len());
            for acc in &validation.accepted {
                let id = OrderId(self.next_order_id);
                self.next_order_id += 1;
                let sequence = self.next_sequence;
                self.next_sequence += 1;
                let order = match (acc.kind, acc.price_limit) {
                    (OrderKind::Limit, Some(p)) => Order::limit(id, agent, acc.side, acc.quantity, p, round, sequence),
                    _ => {
                        let o = Order::market(id, agent, acc.side, acc.quantity, round, sequence);
                        match acc.cash_budget {
                            Some(b) => o.with_budget(b),
                            None => o,
                        }
                    }
                };
                self.reservations.hold(account, id, acc.reserve);
                events.push(OrderEvent {
                    round,
                    order_id: id,
                    agent,
                    side: acc.side,
                    kind: acc.kind,
                    quantity: acc.quantity,
                    price_limit: acc.price_limit,
                    event: OrderEventKind::Placed,
                });
                order_ids.push(id);
                new_orders.push(order);
            }
            decisions.push(DecisionRecord {
                round,
                agent,
                label: spec.label.clone(),
                engine: spec.engine.engine(),
                pf_ratio: true_ratio,
                prompt_hash: outcome.prompt_hash.clone(),
                raw_responses: outcome.raw.clone(),
                fallback: outcome.fallback,
                direction: outcome.decision.direction(),
                decision: outcome.decision,
                validation,
                order_ids,
            });
        }
        decisions.sort_by_key(|d| d.agent);

        let mut known: HashMap<OrderId, Order> = self.book.orders().map(|o| (o.id, o.clone())).collect();
        known.extend(new_orders.iter().map(|o| (o.id, o.clone())));
        let new_ids: Vec<OrderId> = new_orders.iter().map(|o| o.id).collect();

        let ctx = RoundContext {
            round,
            reference_price: Some(self.last_price),
            next_trade_id: self.next_trade_id,
            next_sequence: self.next_sequence,
        };
        let result = run_round(&mut self.book, ctx, &cancels, new_orders)?;
        self.next_trade_id = result.next_trade_id;
        self.next_sequence = result.next_sequence;

        self.settle(round, &result, &new_ids, &mut known, &mut events, &mut anomalies)?;

        self.last_price = result.clearing_price.unwrap_or(self.last_price);
        self.history.insert(0, HistoryPoint { round, price: self.last_price, volume: result.volume });

        let interval = self.asset.dividend_interval;
        let dividend = if round.is_multiple_of(interval) {
            let per_share = self.dividend.draw(&mut substream(self.scenario.seed, Domain::Dividend, round, 0));
            pay_dividend(&mut self.accounts, per_share);
            Some(per_share)
        } else {
            None
        };
        accrue_interest(&mut self.accounts, self.asset.interest_rate);

        self.round = round;
        self.check_invariants(round)?;
        let record = RoundRecord {
            round,
            price: self.last_price,
            fundamental: self.fundamental_money(round)?,
            volume: result.volume,
            best_bid: self.book.best_bid(),
            best_ask: self.book.best_ask(),
            dividend,
            trades: result.trades,
            accounts: self.accounts.clone(),
            decisions,
            order_events: events,
            anomalies,
        };
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    fn settle(
        &mut self,
        round: u32,
        result: &RoundResult,
        new_ids: &[OrderId],
        known: &mut HashMap<OrderId, Order>,
        events: &mut Vec<OrderEvent>,
        anomalies: &mut Vec<Anomaly>,
    ) -> Result<(), SimError> {
        let event = |o: &Order, quantity: Qty, kind: OrderEventKind| OrderEvent {
            round,
            order_id: o.id,
            agent: o.agent,
            side: o.side,
            kind: o.kind,
            quantity,
            price_limit: o.price_limit,
            event: kind,
        };

        for o in &result.cancelled {
            self.reservations.close(&mut self.accounts[o.agent.0 as usize], o.id)?;
            events.push(event(o, o.remaining, OrderEventKind::Cancelled));
        }
        for id in &result.unknown_cancels {
            anomalies.push(Anomaly {
                round,
                agent: None,
                kind: "unknown_cancel".into(),
                detail: format!("order {id} was not resting"),
            });
        }

        let conversions: HashMap<OrderId, _> = result.conversions.iter().map(|c| (c.order.id, c)).collect();
        let mut converted = HashSet::new();
        let mut convert = |id: OrderId, known: &mut HashMap<OrderId, Order>, events: &mut Vec<OrderEvent>| {
            if let Some(c) = conversions.get(&id) {
                if converted.insert(id) {
                    if c.dropped > 0 {
                        events.push(event(&known[&id], c.dropped, OrderEventKind::Cancelled));
                    }
                    events.push(event(&c.order, c.order.remaining, OrderEventKind::Converted));
                    known.insert(id, c.order.clone());
                }
            }
        };

        let mut touched: BTreeSet<OrderId> = new_ids.iter().copied().collect();
        for t in &result.trades {
            let value = t.price * t.quantity;
            let (b, s) = (t.buyer.0 as usize, t.seller.0 as usize);
            self.reservations.release(&mut self.accounts[b], t.buy_order, Reserve { cash: value, shares: 0 })?;
            self.accounts[b].main_cash -= value;
            self.accounts[b].shares += t.quantity;
            self.reservations
                .release(&mut self.accounts[s], t.sell_order, Reserve { cash: Money::ZERO, shares: t.quantity })?;
            self.accounts[s].main_cash += value;
            self.accounts[s].shares -= t.quantity;

            for id in [t.buy_order, t.sell_order] {
                touched.insert(id);
                if t.phase == crate::matching::TradePhase::LimitCross
                    && known.get(&id).is_some_and(|o| o.kind == OrderKind::Market)
                {
                    convert(id, known, events);
                }
                let o = known.get_mut(&id).ok_or_else(|| SimError::Conservation {
                    round,
                    detail: format!("trade {} references unknown order {id}", t.id),
                })?;
                o.remaining -= t.quantity;
                let kind = if o.remaining == 0 { OrderEventKind::Filled } else { OrderEventKind::Partial };
                events.push(event(o, t.quantity, kind));
            }
        }
        for c in &result.conversions {
            convert(c.order.id, known, events);
            if c.dropped > 0 {
                anomalies.push(Anomaly {
                    round,
                    agent: Some(c.order.agent),
                    kind: "market_remainder_dropped".into(),
                    detail: format!("order {}: {} shares beyond the remaining budget", c.order.id, c.dropped),
                });
            }
        }
        for o in &result.unexecuted {
            events.push(event(o, o.remaining, OrderEventKind::Cancelled));
            anomalies.push(Anomaly {
                round,
                agent: Some(o.agent),
                kind: "market_remainder_unexecuted".into(),
                detail: format!("order {}: {} shares left without budget", o.id, o.remaining),
            });
        }

        for id in touched {
            let Some(held) = self.reservations.get(id) else { continue };
            let owner = known.get(&id).map(|o| o.agent.0 as usize).ok_or_else(|| SimError::Conservation {
                round,
                detail: format!("reservation for unknown order {id}"),
            })?;
            match self.book.get(id) {
                Some(resting) => {
                    let target = reserve_for(resting);
                    if target.cash > held.cash || target.shares > held.shares {
                        return Err(SimError::Conservation {
                            round,
                            detail: format!("order {id} holds {held:?} but needs {target:?}"),
                        });
                    }
                    let excess = Reserve { cash: held.cash - target.cash, shares: held.shares - target.shares };
                    self.reservations.release(&mut self.accounts[owner], id, excess)?;
                }
                None => {
                    self.reservations.close(&mut self.accounts[owner], id)?;
                }
            }
        }
        Ok(())
    }

    fn check_invariants(&self, round: u32) -> Result<(), SimError> {
        let fail = |detail: String| Err(SimError::Conservation { round, detail });
        let cash: Money = self.accounts.iter().map(|a| a.main_cash).sum();
        if cash != self.total_cash {
            return fail(format!("main cash totals {cash}, expected {}", self.total_cash));
        }
        let shares: Qty = self.accounts.iter().map(|a| a.shares).sum();
        if shares != self.total_shares {
            return fail(format!("shares total {shares}, expected {}", self.total_shares));
        }
        let totals = self.reservations.totals();
        for a in &self.accounts {
            a.check()?;
            let r = totals.get(&a.agent_id).copied().unwrap_or_default();
            if r.cash != a.committed_cash || r.shares != a.committed_shares {
                return fail(format!("agent {} commitments {:?} disagree with its orders", a.agent_id, r));
            }
        }
        let booked: BTreeSet<OrderId> = self.book.orders().map(|o| o.id).collect();
        let reserved: BTreeSet<OrderId> = self.reservations.order_ids().collect();
        if booked != reserved {
            return fail(format!("resting orders {booked:?} differ from reservations {reserved:?}"));
        }
        for o in self.book.orders() {
            if self.reservations.get(o.id) != Some(reserve_for(o)) {
                return fail(format!("order {} reservation does not match its remaining size", o.id));
            }
        }
        if let (Some(b), Some(a)) = (self.book.best_bid(), self.book.best_ask()) {
            if b >= a {
                return fail(format!("book crossed at bid {b} ask {a}"));
            }
        }
        Ok(())
    }

    /// Cancels resting orders and pays out every share at the redemption value.
    fn redeem(&mut self) -> Result<Option<Redemption>, SimError> {
        let Some(k) = self.asset.redemption_value.filter(|_| self.asset.horizon.rounds().is_some()) else {
            return Ok(None);
        };
        let price = Money::from_f64(k).map_err(|e| ConfigError::new("redemption_value", e.to_string()))?;
        let mut events = Vec::new();
        let resting: Vec<Order> = self.book.orders().cloned().collect();
        for o in resting {
            self.book.cancel(o.id).map_err(MatchError::from)?;
            self.reservations.close(&mut self.accounts[o.agent.0 as usize], o.id)?;
            events.push(OrderEvent {
                round: self.round,
                order_id: o.id,
                agent: o.agent,
                side: o.side,
                kind: o.kind,
                quantity: o.remaining,
                price_limit: o.price_limit,
                event: OrderEventKind::Cancelled,
            });
        }
        for a in &mut self.accounts {
            a.main_cash += Money::from_cents(price.cents() * a.shares as i64);
            a.shares = 0;
            a.check()?;
        }
        Ok(Some(Redemption { round: self.round, price, accounts: self.accounts.clone(), order_events: events }))
    }

    /// Runs the remaining rounds and, for a finite market, the redemption.
    pub fn finish(mut self) -> Result<RunOutput, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        let redemption = self.redeem()?;
        Ok(RunOutput { agents: self.agents(), records: self.records, redemption })
    }
}

/// Asks the model, re-asking on unusable payloads. A missing scripted reply
/// on the first ask is a configuration error; any later failure holds.
fn ask_model(
    client: &mut dyn ChatClient,
    agent: AgentId,
    round: u32,
    bundle: &crate::llm::PromptBundle,
    max_retries: u32,
    persona: Persona,
    price: f64,
) -> Result<Outcome, SimError> {
    let mut raw = Vec::new();
    let mut last_error = String::new();
    for attempt in 0..=max_retries {
        match client.complete(agent, round, bundle) {
            Ok(completion) => {
                let parsed = parse_decision(&completion.text);
                raw.push(completion.text);
                match parsed {
                    Ok(decision) => {
                        return Ok(Outcome { decision, prompt_hash: None, raw, fallback: false, anomaly: None });
                    }
                    Err(e) => last_error = format!("unparseable response: {e}"),
                }
            }
            Err(e @ ClientError::ScriptExhausted { .. }) if attempt == 0 => {
                return Err(ConfigError::new("llm.script", e.to_string()).into());
            }
            Err(e) => {
                last_error = e.to_string();
                break;
            }
        }
    }
    let decision = TradeDecision::hold(price, price, format!("No usable {persona} response; holding."));
    Ok(Outcome { decision, prompt_hash: None, raw, fallback: true, anomaly: Some(last_error) })
}

/// One agent's decision on `snapshot`, through whichever engine it uses.
pub fn agent_decision(
    spec: &AgentSpec,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
    outstanding: &[Order],
    backend: &mut LlmBackend<'_>,
    ask: Ask<'_>,
) -> Result<Outcome, SimError> {
    match &spec.engine {
        AgentEngine::Rule(kind) => Ok(Outcome::plain(strategy_decide(*kind, &spec.params, snapshot, account))),
        AgentEngine::Linear(lin) => {
            let mut rng = substream(ask.seed, Domain::Linear, ask.round, spec.id.0);
            Ok(Outcome::plain(linear_decide(lin, &spec.params, snapshot, account, &mut rng)))
        }
        AgentEngine::Llm(persona) => {
            let bundle = assemble_prompt_with_recall(*persona, snapshot, account, outstanding, ask.recent);
            let hash = hash_prompt(&bundle.system_prompt, &bundle.user_prompt);
            let mut out = match backend {
                LlmBackend::Surrogate => Outcome::plain(surrogate_decide(*persona, &spec.params, snapshot, account)),
                LlmBackend::Client(client) => ask_model(
                    &mut **client,
                    spec.id,
                    ask.round,
                    &bundle,
                    ask.max_retries,
                    *persona,
                    snapshot.last_price.to_f64(),
                )?,
            };
            out.prompt_hash = Some(hash);
            Ok(out)
        }
    }
}

/// Runs `scenario` to completion.
pub fn run(scenario: &Scenario, backend: LlmBackend<'_>) -> Result<RunOutput, SimError> {
    Simulator::new(scenario, backend)?.finish()
}
