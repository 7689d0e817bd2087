//! System prompts per persona and the per-round user prompt.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::account::AgentAccount;
use crate::asset::DividendProcess;
use crate::decision::TradeDecision;
use crate::orderbook::{DepthLevel, Order, Side};
use crate::snapshot::MarketSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persona {
    Value,
    Momentum,
    MarketMaker,
    Contrarian,
    Optimistic,
    Pessimistic,
    Speculator,
    Retail,
    Hold,
    Default,
}

impl Persona {
    pub const ALL: [Persona; 10] = [
        Persona::Value,
        Persona::Momentum,
        Persona::MarketMaker,
        Persona::Contrarian,
        Persona::Optimistic,
        Persona::Pessimistic,
        Persona::Speculator,
        Persona::Retail,
        Persona::Hold,
        Persona::Default,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Persona::Value => "value",
            Persona::Momentum => "momentum",
            Persona::MarketMaker => "market_maker",
            Persona::Contrarian => "contrarian",
            Persona::Optimistic => "optimistic",
            Persona::Pessimistic => "pessimistic",
            Persona::Speculator => "speculator",
            Persona::Retail => "retail",
            Persona::Hold => "hold",
            Persona::Default => "default",
        }
    }

    pub fn system_prompt(self) -> &'static str {
        match self {
            Persona::Value => VALUE,
            Persona::Momentum => MOMENTUM,
            Persona::MarketMaker => MARKET_MAKER,
            Persona::Contrarian => CONTRARIAN,
            Persona::Optimistic => OPTIMISTIC,
            Persona::Pessimistic => PESSIMISTIC,
            Persona::Speculator => SPECULATOR,
            Persona::Retail => RETAIL,
            Persona::Hold => HOLD,
            Persona::Default => DEFAULT,
        }
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const VALUE: &str = "You are a value investor who focuses on fundamental analysis.
You believe in mean reversion and try to buy undervalued assets and sell overvalued ones.";

const MOMENTUM: &str = "You are a momentum trader who focuses on price trends and volume.
You believe that 'the trend is your friend' and try to identify and follow market momentum.";

const MARKET_MAKER: &str = "You are a professional market maker who provides liquidity to the market.

Your profit comes from capturing the spread between bid and ask prices, not from directional price movement.

IMPORTANT: There is NO SHORT SELLING allowed. You can only sell shares you already own.

Trading Guidelines:
- Place LIMIT buy orders slightly below the current market price (1-3% below)
- Place LIMIT sell orders slightly above the current market price (1-3% above)
- Your spread should be proportional to volatility but typically 2-6% of the price
- NEVER place sell orders more than 10% above the current price
- Adjust your spread width based on recent price volatility

Inventory Management (No Short Selling):
- Monitor your current inventory in the market data
- Only place sell orders for quantities you actually own
- If you have no inventory, focus on buy orders first
- As you acquire inventory, gradually place sell orders
- If inventory grows too large, reduce or pause buy orders
- Adjust your buy/sell ratio based on current inventory level

Example: If price = $100, you might place buy orders at $97-99 and sell orders at $101-103,
but limit your sell quantity to what you currently own.

Remember that extreme spreads (e.g., buying at $3 and selling at $30) will not execute and will lead to losses.";

const CONTRARIAN: &str = "You are a contrarian trader who looks for excessive market moves to trade against.
You believe markets often overreact and try to profit from reversals.";

const OPTIMISTIC: &str = "You are an optimistic trader who firmly believes assets are significantly undervalued.

Your Core Beliefs:
- The probability of maximum dividends is much higher than stated (80-90%)";

const PESSIMISTIC: &str = "You are a pessimistic trader who firmly believes assets are significantly overvalued.

Your Core Beliefs:
- The probability of minimum dividends is much higher than stated (80-90%)";

const SPECULATOR: &str = "You are a speculator who tries to profit from market inefficiencies.";

const RETAIL: &str = "You are a retail trader.";

const HOLD: &str = "You are a holding agent that never trades.";

const DEFAULT: &str = "You are a trader in an experimental asset market.
Use the market information provided to decide whether to buy, sell, or hold.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_prompt: String,
}

/// Builds both prompts. `outstanding` are the agent's resting orders.
pub fn assemble_prompt(
    persona: Persona,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
    outstanding: &[Order],
) -> PromptBundle {
    assemble_prompt_with_recall(persona, snapshot, account, outstanding, &[])
}

/// As [`assemble_prompt`], with the agent's own earlier decisions (newest
/// first, tagged by round) listed after the price history.
pub fn assemble_prompt_with_recall(
    persona: Persona,
    snapshot: &MarketSnapshot,
    account: &AgentAccount,
    outstanding: &[Order],
    recent: &[(u32, &TradeDecision)],
) -> PromptBundle {
    let mut blocks = vec![
        market_state(snapshot),
        market_depth(snapshot),
        position(account, outstanding),
        price_history(snapshot),
    ];
    if !recent.is_empty() {
        blocks.push(recent_decisions(recent));
    }
    blocks.extend([fundamentals(snapshot), ANALYSIS.to_string(), OPTIONS.to_string()]);
    PromptBundle {
        system_prompt: persona.system_prompt().to_string(),
        user_prompt: blocks.join("\n"),
    }
}

const ANALYSIS: &str = "Your analysis should include:
valuation_reasoning: Your numerical analysis of the asset's fundamental value
valuation: Your estimate of the asset's current fundamental value
price_target_reasoning: Your numerical analysis of the asset's price target
price_target: Your predicted price for the next round
reasoning: Your explanation for the trading decision
";

const OPTIONS: &str = "Trading Options:
New Orders (replace_decision='Add'):
Single or multiple orders allowed
For each order:
Market order: Set order_type='market'
Limit order: Set order_type='limit' and specify price_limit
IMPORTANT: Sell orders require sufficient available shares
Short selling is NOT allowed
Cancel Orders (replace_decision='Cancel'):
Return an empty orders list: orders=[]
";

fn market_state(s: &MarketSnapshot) -> String {
    let mut out = String::from("Market State:\n");
    let horizon = s.total_rounds.map_or("Infinite".to_string(), |t| t.to_string());
    let fundamental = s.fundamental.map_or("Unavailable".to_string(), |v| format!("${v:.2}"));
    let ratio = s.pf_ratio().map_or("Unavailable".to_string(), |r| format!("{r:.2}"));
    let _ = writeln!(out, "Last Price: ${}", s.last_price);
    let _ = writeln!(out, "Round Number: {}/{horizon}", s.round);
    let _ = writeln!(out, "Best Public Estimate of Risk-Neutral Fundamental Value: {fundamental}");
    let _ = writeln!(out, "Last Trading Volume: {:.2}", s.last_volume as f64);
    let _ = writeln!(out, "Price/Fundamental Ratio: {ratio}");
    out
}

fn levels(out: &mut String, levels: impl Iterator<Item = DepthLevel>) {
    let mut any = false;
    for level in levels {
        any = true;
        let _ = writeln!(out, "{} shares @ ${}", level.quantity, level.price);
    }
    if !any {
        out.push_str("None\n");
    }
}

fn market_depth(s: &MarketSnapshot) -> String {
    let mut out = String::from("Market Depth:\n");
    let best = |p: Option<crate::money::Price>| p.map_or("None".to_string(), |p| format!("${p}"));
    let _ = writeln!(out, "Best Bid: {}", best(s.depth.best_bid()));
    let _ = writeln!(out, "Best Ask: {}", best(s.depth.best_ask()));
    // Both sides are listed from the highest price down.
    out.push_str("Sell Orders:\n");
    levels(&mut out, s.depth.asks.iter().rev().copied());
    out.push_str("Buy Orders:\n");
    levels(&mut out, s.depth.bids.iter().copied());
    out
}

fn position(a: &AgentAccount, outstanding: &[Order]) -> String {
    let mut out = String::from("Your Outstanding Orders:\n");
    if outstanding.is_empty() {
        out.push_str("None\n");
    }
    for (side, title) in [(Side::Buy, "Buy Orders:"), (Side::Sell, "Sell Orders:")] {
        let mut orders: Vec<&Order> = outstanding.iter().filter(|o| o.side == side).collect();
        if orders.is_empty() {
            continue;
        }
        orders.sort_by_key(|o| {
            let cents = o.price_limit.map_or(0, |p| p.cents());
            (if side == Side::Buy { -cents } else { cents }, o.sequence)
        });
        let _ = writeln!(out, "{title}");
        for o in orders {
            match o.price_limit {
                Some(p) => writeln!(out, "{} shares @ ${p}", o.remaining),
                None => writeln!(out, "{} shares @ market", o.remaining),
            }
            .ok();
        }
    }
    let available = a.available_cash();
    out.push_str("Your Position:\n");
    let _ = writeln!(out, "Available Shares: {} shares (Short selling is not allowed)", a.available_shares());
    let _ = writeln!(out, "Main Cash Account: ${available}");
    let _ = writeln!(out, "Dividend Cash Account (not available for trading): ${}", a.dividend_cash);
    let _ = writeln!(out, "Total Available Cash: ${available} (Borrowing is not allowed)");
    let _ = writeln!(out, "Shares in Orders: {} shares", a.committed_shares);
    let _ = writeln!(out, "Cash in Orders: ${}", a.committed_cash);
    out
}

fn price_history(s: &MarketSnapshot) -> String {
    let mut out = String::from("Price History (last 5 rounds):\n");
    for h in s.history.iter().take(5) {
        let _ = writeln!(out, "Round {}: ${} (Volume: {})", h.round, h.price, h.volume);
    }
    out
}

fn recent_decisions(recent: &[(u32, &TradeDecision)]) -> String {
    let mut out = format!("Your Recent Decisions (last {} rounds):\n", recent.len());
    for (round, d) in recent {
        let orders: Vec<String> = d
            .orders
            .iter()
            .map(|o| match o.price_limit {
                Some(p) => format!("{} {} {} @ ${p}", o.side.as_str(), o.quantity, o.kind.as_str()),
                None => format!("{} {} {}", o.side.as_str(), o.quantity, o.kind.as_str()),
            })
            .collect();
        let orders = if orders.is_empty() { "no orders".to_string() } else { orders.join(", ") };
        let _ = writeln!(out, "Round {round}: {} ({orders}; {})", d.direction().as_str(), d.replace_decision.as_str());
        let _ = writeln!(out, "Valuation: ${:.2}, Price Target: ${:.2}", d.valuation, d.price_target);
        let _ = writeln!(out, "Reasoning: {}", d.reasoning.replace('\n', " "));
    }
    out
}

fn fundamentals(s: &MarketSnapshot) -> String {
    let d = &s.dividend;
    let mut out = String::from("Dividend Information:\n");
    let last = d.last_paid.map_or("None".to_string(), |m| format!("${m}"));
    let _ = writeln!(out, "Last Paid Dividend: {last}");
    let _ = writeln!(out, "Expected Dividend: ${:.2}", d.expected);
    match d.process {
        DividendProcess::Bernoulli { base, variation, probability_high } => {
            let high = probability_high * 100.0;
            let _ = writeln!(out, "Base Dividend: ${base:.2}");
            let _ = writeln!(out, "Variation Amount: ${variation:.2}");
            let _ = writeln!(out, "Maximum Scenario: ${:.2} with {high:.0}% probability", base + variation);
            let _ = writeln!(out, "Minimum Scenario: ${:.2} with {:.0}% probability", base - variation, 100.0 - high);
        }
        DividendProcess::Gbm { drift, volatility, .. } => {
            let _ = writeln!(out, "Dividend Drift: ${drift:.2} per round");
            let _ = writeln!(out, "Dividend Volatility: ${volatility:.2} per round");
        }
    }
    out.push_str("Payment Schedule:\n");
    let _ = writeln!(out, "Next Payment in: {} rounds", d.next_payment_in);
    out.push_str("Payment Destination: dividend account (non-tradeable)\n");
    out.push_str("Redemption Information:\n");
    match (s.total_rounds, s.redemption_value) {
        (Some(t), Some(k)) => {
            let _ = writeln!(out, "This market has a finite horizon of {t} rounds.");
            let _ = writeln!(out, "Shares will be redeemed at ${k:.2} per share after round {t}.");
        }
        _ => out.push_str("This market has an infinite time horizon. Shares will not be redeemed.\n"),
    }
    out.push_str("Interest Rate Information:\n");
    let _ = writeln!(out, "Base Rate: {:.1}%", s.interest_rate * 100.0);
    out.push_str("Compound Frequency: 1 times per round\n");
    out.push_str("Payment Destination: dividend account (separate from trading)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Money;
    use crate::orderbook::{AgentId, OrderId};
    use crate::snapshot::fixtures::{px, snapshot};

    fn account() -> AgentAccount {
        AgentAccount::new(AgentId(0), Money::from_cents(100_000_000), 10_000)
    }

    #[test]
    fn hidden_fundamental_renders_unavailable() {
        let snap = snapshot(2900).without_fundamental();
        let b = assemble_prompt(Persona::Speculator, &snap, &account(), &[]);
        assert_eq!(b.system_prompt, "You are a speculator who tries to profit from market inefficiencies.");
        assert!(b.user_prompt.contains("Best Public Estimate of Risk-Neutral Fundamental Value: Unavailable\n"));
        assert!(b.user_prompt.contains("Price/Fundamental Ratio: Unavailable\n"));
        assert!(b.user_prompt.contains("This market has an infinite time horizon. Shares will not be redeemed."));
        assert!(b.user_prompt.contains("Round Number: 4/Infinite\n"));
    }

    #[test]
    fn recalled_decisions_sit_after_the_history() {
        use crate::decision::{OrderRequest, ReplaceMode};
        let snap = snapshot(2900);
        let sell = TradeDecision {
            valuation_reasoning: String::new(),
            valuation: 28.0,
            price_target_reasoning: String::new(),
            price_target: 29.0,
            orders: vec![OrderRequest::limit(Side::Sell, 1000, px(2950))],
            replace_decision: ReplaceMode::Add,
            reasoning: "Too rich.\nTrim.".into(),
        };
        let hold = TradeDecision::hold(28.0, 28.0, "Wait.");
        let plain = assemble_prompt(Persona::Value, &snap, &account(), &[]);
        let same = assemble_prompt_with_recall(Persona::Value, &snap, &account(), &[], &[]);
        assert_eq!(plain, same);
        let b = assemble_prompt_with_recall(Persona::Value, &snap, &account(), &[], &[(3, &sell), (2, &hold)]);
        let block = "Your Recent Decisions (last 2 rounds):\n\
                     Round 3: Sell (sell 1000 limit @ $29.50; Add)\n\
                     Valuation: $28.00, Price Target: $29.00\n\
                     Reasoning: Too rich. Trim.\n\
                     Round 2: Hold (no orders; Add)\n\
                     Valuation: $28.00, Price Target: $28.00\n\
                     Reasoning: Wait.\n";
        let at = b.user_prompt.find(block).expect("block present");
        assert!(at > b.user_prompt.find("Price History").unwrap());
        assert_eq!(b.user_prompt.len(), plain.user_prompt.len() + block.len() + 1);
    }

    #[test]
    fn finite_horizon_and_visible_value() {
        let mut snap = snapshot(3500);
        snap.total_rounds = Some(20);
        snap.redemption_value = Some(28.0);
        let b = assemble_prompt(Persona::Value, &snap, &account(), &[]);
        assert!(b.user_prompt.contains("Round Number: 4/20\n"));
        assert!(b.user_prompt.contains("Fundamental Value: $28.00\n"));
        assert!(b.user_prompt.contains("Price/Fundamental Ratio: 1.25\n"));
        assert!(b.user_prompt.contains("redeemed at $28.00 per share after round 20."));
    }

    #[test]
    fn outstanding_orders_listed() {
        let order = Order::limit(OrderId(5), AgentId(0), Side::Buy, 400, px(2800), 3, 9);
        let b = assemble_prompt(Persona::Speculator, &snapshot(2900), &account(), &[order]);
        assert!(b.user_prompt.contains("Your Outstanding Orders:\nBuy Orders:\n400 shares @ $28.00\n"));
        let none = assemble_prompt(Persona::Speculator, &snapshot(2900), &account(), &[]);
        assert!(none.user_prompt.contains("Your Outstanding Orders:\nNone\n"));
    }

    #[test]
    fn blocks_in_order() {
        let b = assemble_prompt(Persona::MarketMaker, &snapshot(2900), &account(), &[]);
        let heads = [
            "Market State:",
            "Market Depth:",
            "Your Outstanding Orders:",
            "Your Position:",
            "Price History",
            "Dividend Information:",
            "Redemption Information:",
            "Interest Rate Information:",
            "Your analysis should include:",
            "Trading Options:",
        ];
        let at: Vec<usize> = heads.iter().map(|h| b.user_prompt.find(h).unwrap()).collect();
        assert!(at.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn every_persona_has_a_prompt() {
        for p in Persona::ALL {
            assert!(p.system_prompt().starts_with("You are"), "{p}");
        }
    }
}
