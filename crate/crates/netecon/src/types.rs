//! Domain state: agents, the directed trade graph, and invariant checking.
//!
//! Agents carry dense integer identifiers assigned at scenario creation and
//! never reused, so share maps and provider edges stay unambiguous across
//! firm removals. Producers sell; an edge `(a, b)` means `a` sells to `b` and
//! is stored as an entry in `b`'s provider list.

use serde::{Deserialize, Serialize};

/// Dense agent identifier. Producers come first, consumers after.
pub type AgentId = u32;

/// One inbound trade edge: the provider sells to the owner of this link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderLink {
    pub id: AgentId,
    /// Output (producers) or utility (consumers) elasticity of this good.
    pub elasticity: f64,
}

/// A firm producing one differentiated good.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProducerState {
    pub id: AgentId,
    /// Technology constant A.
    pub tech: f64,
    /// Output elasticity of labour.
    pub labour_elasticity: f64,
    /// Input goods, sorted by provider id.
    pub providers: Vec<ProviderLink>,
    /// Degree of homogeneity: the elasticity sum this firm keeps for life.
    pub kappa: f64,
    pub price: f64,
    /// Price adjustment factor; decays by 10% whenever an adjustment would
    /// push the price non-positive.
    pub price_adjust: f64,
    pub inventory: f64,
    pub wealth: f64,
    /// Fraction of positive profit retained; the rest goes to shareholders.
    pub prr: f64,
    /// Shareholders (consumer id, share), shares summing to 1.
    pub shares: Vec<(AgentId, f64)>,
    /// Market demand faced in the most recent period.
    pub last_demand: f64,
    pub marked_for_removal: bool,
}

impl ProducerState {
    pub fn elasticity_sum(&self) -> f64 {
        self.providers.iter().map(|l| l.elasticity).sum::<f64>() + self.labour_elasticity
    }
}

/// A consumer selling labour and buying goods from its providers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsumerState {
    pub id: AgentId,
    /// Goods consumed, sorted by provider id.
    pub providers: Vec<ProviderLink>,
    /// Utility elasticity of income.
    pub income_elasticity: f64,
    /// Utility elasticity of leisure.
    pub leisure_elasticity: f64,
    /// Time per period, split between labour and leisure.
    pub time_budget: f64,
    pub wealth: f64,
    /// Profit income received last period; the naive expectation for this one.
    pub last_profit_income: f64,
    pub last_labour_sold: f64,
    pub last_utility: f64,
}

impl ConsumerState {
    pub fn elasticity_sum(&self) -> f64 {
        self.providers.iter().map(|l| l.elasticity).sum::<f64>()
            + self.income_elasticity
            + self.leisure_elasticity
    }
}

/// Why a run stopped before its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HaltReason {
    SingleProducerLeft,
    ConsumerWealthZero,
    ProducersExhausted,
}

/// The full mutable world for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EconomyState {
    pub period: u32,
    /// Live producers, sorted by id. Removed firms are dropped outright.
    pub producers: Vec<ProducerState>,
    /// All consumers, sorted by id. Consumers are never removed.
    pub consumers: Vec<ConsumerState>,
    pub wage: f64,
    /// Economy-wide wage adjustment factor; decays like `price_adjust`.
    pub wage_adjust: f64,
    /// Firms created at scenario time, for cumulative shut-firm counts.
    pub initial_producer_count: u32,
    /// Aggregate consumer endowment at creation; the wealth-exhaustion
    /// termination threshold is relative to this.
    pub initial_consumer_wealth_total: f64,
    /// Wealth still booked to firms at the moment they were removed. Removed
    /// firms never trade again, but their balances stay on this ledger so
    /// total wealth remains an invariant of the run.
    pub retired_producer_wealth: f64,
    pub halted: Option<HaltReason>,
}

impl EconomyState {
    pub fn producer(&self, id: AgentId) -> Option<&ProducerState> {
        self.producers.iter().find(|p| p.id == id)
    }

    pub fn producer_mut(&mut self, id: AgentId) -> Option<&mut ProducerState> {
        self.producers.iter_mut().find(|p| p.id == id)
    }

    pub fn consumer_mut(&mut self, id: AgentId) -> Option<&mut ConsumerState> {
        self.consumers.iter_mut().find(|c| c.id == id)
    }

    pub fn live_producer_ids(&self) -> Vec<AgentId> {
        self.producers.iter().map(|p| p.id).collect()
    }

    pub fn shut_firm_count(&self) -> u32 {
        self.initial_producer_count - self.producers.len() as u32
    }

    /// Directed edges (seller, buyer) implied by the provider lists.
    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for p in &self.producers {
            for l in &p.providers {
                out.push((l.id, p.id));
            }
        }
        for c in &self.consumers {
            for l in &c.providers {
                out.push((l.id, c.id));
            }
        }
        out
    }

    pub fn total_producer_wealth(&self) -> f64 {
        self.producers.iter().map(|p| p.wealth).sum()
    }

    pub fn total_consumer_wealth(&self) -> f64 {
        self.consumers.iter().map(|c| c.wealth).sum()
    }

    /// Wealth of every live agent plus the retired-firm ledger. Constant over
    /// a run up to floating-point drift.
    pub fn total_wealth(&self) -> f64 {
        self.total_producer_wealth() + self.total_consumer_wealth() + self.retired_producer_wealth
    }
}

pub const ELASTICITY_SUM_TOL: f64 = 1e-9;
pub const SHARE_SUM_TOL: f64 = 1e-9;

/// Check every structural invariant, returning one description per violation.
/// Reports, never panics; callers assert emptiness where they need to.
pub fn validate_economy(state: &EconomyState) -> Vec<String> {
    let mut out = Vec::new();
    let live: Vec<AgentId> = state.live_producer_ids();

    if state.wage <= 0.0 || !state.wage.is_finite() {
        out.push(format!("wage not positive finite: {}", state.wage));
    }
    if state.wage_adjust <= 0.0 || !state.wage_adjust.is_finite() {
        out.push(format!(
            "wage_adjust not positive finite: {}",
            state.wage_adjust
        ));
    }

    for p in &state.producers {
        let sum = p.elasticity_sum();
        if (sum - p.kappa).abs() > ELASTICITY_SUM_TOL {
            out.push(format!(
                "producer {}: elasticity sum {} drifted from kappa {}",
                p.id, sum, p.kappa
            ));
        }
        let share_sum: f64 = p.shares.iter().map(|(_, s)| s).sum();
        if (share_sum - 1.0).abs() > SHARE_SUM_TOL {
            out.push(format!("producer {}: shares sum to {}", p.id, share_sum));
        }
        if p.price <= 0.0 || !p.price.is_finite() {
            out.push(format!(
                "producer {}: price not positive finite: {}",
                p.id, p.price
            ));
        }
        if p.price_adjust <= 0.0 || !p.price_adjust.is_finite() {
            out.push(format!(
                "producer {}: price_adjust not positive finite: {}",
                p.id, p.price_adjust
            ));
        }
        if p.inventory < 0.0 || !p.inventory.is_finite() {
            out.push(format!(
                "producer {}: inventory not non-negative finite: {}",
                p.id, p.inventory
            ));
        }
        if !p.wealth.is_finite() {
            out.push(format!("producer {}: wealth not finite", p.id));
        }
        if !(0.0..=1.0).contains(&p.prr) {
            out.push(format!("producer {}: prr {} outside [0,1]", p.id, p.prr));
        }
        for l in &p.providers {
            if l.id == p.id {
                out.push(format!("producer {}: self-loop provider", p.id));
            }
            if !live.contains(&l.id) {
                out.push(format!("producer {}: provider {} is not live", p.id, l.id));
            }
            if l.elasticity <= 0.0 || !l.elasticity.is_finite() {
                out.push(format!(
                    "producer {}: elasticity for provider {} not positive",
                    p.id, l.id
                ));
            }
        }
        if p.labour_elasticity <= 0.0 || p.labour_elasticity.is_nan() {
            out.push(format!("producer {}: labour elasticity not positive", p.id));
        }
    }

    for c in &state.consumers {
        if c.time_budget <= 0.0 || c.time_budget.is_nan() {
            out.push(format!("consumer {}: time budget not positive", c.id));
        }
        if c.last_labour_sold < -1e-12 || c.last_labour_sold > c.time_budget + 1e-9 {
            out.push(format!(
                "consumer {}: labour sold {} outside [0, {}]",
                c.id, c.last_labour_sold, c.time_budget
            ));
        }
        if !c.wealth.is_finite() {
            out.push(format!("consumer {}: wealth not finite", c.id));
        }
        for l in &c.providers {
            if !live.contains(&l.id) {
                out.push(format!("consumer {}: provider {} is not live", c.id, l.id));
            }
            if l.elasticity <= 0.0 || !l.elasticity.is_finite() {
                out.push(format!(
                    "consumer {}: elasticity for provider {} not positive",
                    c.id, l.id
                ));
            }
        }
        if c.income_elasticity <= 0.0
            || c.leisure_elasticity <= 0.0
            || !c.income_elasticity.is_finite()
            || !c.leisure_elasticity.is_finite()
        {
            out.push(format!(
                "consumer {}: income/leisure elasticity not positive",
                c.id
            ));
        }
    }

    out
}
