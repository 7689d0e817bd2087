//! Agent balances and the per-order reservations backing them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::{Money, Price, Qty};
use crate::orderbook::{AgentId, OrderId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentAccount {
    pub agent_id: AgentId,
    /// Tradeable cash, including the part committed to open buy orders.
    pub main_cash: Money,
    /// Dividends and interest. Never usable for trading.
    pub dividend_cash: Money,
    pub shares: Qty,
    pub committed_cash: Money,
    pub committed_shares: Qty,
}

impl AgentAccount {
    pub fn new(agent_id: AgentId, cash: Money, shares: Qty) -> Self {
        AgentAccount {
            agent_id,
            main_cash: cash,
            dividend_cash: Money::ZERO,
            shares,
            committed_cash: Money::ZERO,
            committed_shares: 0,
        }
    }

    pub fn available_cash(&self) -> Money {
        self.main_cash - self.committed_cash
    }

    pub fn available_shares(&self) -> Qty {
        self.shares.saturating_sub(self.committed_shares)
    }

    /// Cash in both accounts plus shares marked at `price`.
    pub fn wealth(&self, price: Price) -> Money {
        self.main_cash + self.dividend_cash + price * self.shares
    }

    /// Wealth excluding the dividend/interest account.
    pub fn trading_wealth(&self, price: Price) -> Money {
        self.main_cash + price * self.shares
    }

    pub fn check(&self) -> Result<(), AccountError> {
        if self.committed_cash.is_negative() || self.committed_cash > self.main_cash {
            return Err(AccountError::CashOvercommitted(self.agent_id));
        }
        if self.committed_shares > self.shares {
            return Err(AccountError::SharesOvercommitted(self.agent_id));
        }
        if self.dividend_cash.is_negative() {
            return Err(AccountError::NegativeDividendCash(self.agent_id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccountError {
    #[error("agent {0} has more cash committed than it holds")]
    CashOvercommitted(AgentId),
    #[error("agent {0} has more shares committed than it holds")]
    SharesOvercommitted(AgentId),
    #[error("agent {0} has a negative dividend account")]
    NegativeDividendCash(AgentId),
    #[error("order {0} has no reservation")]
    UnknownReservation(OrderId),
    #[error("releasing more than reserved for order {0}")]
    OverRelease(OrderId),
}

/// What an open order holds back from its owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Reserve {
    pub cash: Money,
    pub shares: Qty,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reservations {
    by_order: BTreeMap<OrderId, (AgentId, Reserve)>,
}

impl Reservations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: OrderId) -> Option<Reserve> {
        self.by_order.get(&id).map(|(_, r)| *r)
    }

    pub fn hold(&mut self, account: &mut AgentAccount, id: OrderId, reserve: Reserve) {
        account.committed_cash += reserve.cash;
        account.committed_shares += reserve.shares;
        self.by_order.insert(id, (account.agent_id, reserve));
    }

    /// Gives back part of a reservation.
    pub fn release(
        &mut self,
        account: &mut AgentAccount,
        id: OrderId,
        amount: Reserve,
    ) -> Result<(), AccountError> {
        let (_, held) = self
            .by_order
            .get_mut(&id)
            .ok_or(AccountError::UnknownReservation(id))?;
        if amount.cash > held.cash || amount.shares > held.shares {
            return Err(AccountError::OverRelease(id));
        }
        held.cash -= amount.cash;
        held.shares -= amount.shares;
        account.committed_cash -= amount.cash;
        account.committed_shares -= amount.shares;
        Ok(())
    }

    /// Drops the reservation entirely and returns what was still held.
    pub fn close(&mut self, account: &mut AgentAccount, id: OrderId) -> Result<Reserve, AccountError> {
        let (_, held) = self
            .by_order
            .remove(&id)
            .ok_or(AccountError::UnknownReservation(id))?;
        account.committed_cash -= held.cash;
        account.committed_shares -= held.shares;
        Ok(held)
    }

    /// Sum of open reservations per agent.
    pub fn totals(&self) -> BTreeMap<AgentId, Reserve> {
        let mut out: BTreeMap<AgentId, Reserve> = BTreeMap::new();
        for (agent, r) in self.by_order.values() {
            let entry = out.entry(*agent).or_default();
            entry.cash += r.cash;
            entry.shares += r.shares;
        }
        out
    }

    pub fn order_ids(&self) -> impl Iterator<Item = OrderId> + '_ {
        self.by_order.keys().copied()
    }
}
