//! Per-period aggregate statistics.

use serde::{Deserialize, Serialize};

use crate::engine::PeriodLedger;
use crate::types::EconomyState;

/// End-of-period view of one firm, for the long-format price export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProducerSnapshot {
    pub id: u32,
    pub price: f64,
    pub inventory: f64,
    pub demand: f64,
    pub price_adjust: f64,
}

/// One row of per-period aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: u32,
    pub wage: f64,
    pub wage_adjust: f64,
    pub producer_wealth: f64,
    pub consumer_wealth: f64,
    pub gini_producers: f64,
    pub gini_consumers: f64,
    pub total_utility: f64,
    /// Percent of the aggregate time endowment not worked.
    pub leisure_pct: f64,
    /// Labour demand minus labour supply.
    pub excess_labour: f64,
    pub live_producers: u32,
    pub shut_firms: u32,
    /// Live firms at end of period.
    pub producers: Vec<ProducerSnapshot>,
}

impl PeriodRecord {
    pub fn all_finite(&self) -> bool {
        let scalars = [
            self.wage,
            self.wage_adjust,
            self.producer_wealth,
            self.consumer_wealth,
            self.gini_producers,
            self.gini_consumers,
            self.total_utility,
            self.leisure_pct,
            self.excess_labour,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self.producers.iter().all(|p| {
                p.price.is_finite()
                    && p.inventory.is_finite()
                    && p.demand.is_finite()
                    && p.price_adjust.is_finite()
            })
    }
}

/// Mean-absolute-difference Gini: `Σ|x_i − x_j| / (2 n² mean)`.
/// Undefined (None) for an empty vector or a zero total.
pub fn gini(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    debug_assert!(values.iter().all(|&v| v >= 0.0));
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let n = values.len() as f64;
    let mut diff_sum = 0.0;
    for &a in values {
        for &b in values {
            diff_sum += (a - b).abs();
        }
    }
    Some(diff_sum / (2.0 * n * total))
}

/// Percent of aggregate time not sold as labour.
pub fn leisure_proportion(time_budgets: &[f64], labour_sold: &[f64]) -> f64 {
    let total_time: f64 = time_budgets.iter().sum();
    if total_time <= 0.0 {
        return 0.0;
    }
    let leisure: f64 = time_budgets
        .iter()
        .zip(labour_sold)
        .map(|(t, l)| t - l)
        .sum();
    100.0 * leisure / total_time
}

/// Sum of realized utilities this period.
pub fn total_utility(ledger: &PeriodLedger) -> f64 {
    ledger.consumer_flows.iter().map(|f| f.utility).sum()
}

/// Aggregate labour demand minus supply this period.
pub fn excess_labour(ledger: &PeriodLedger) -> f64 {
    ledger.labour_demand - ledger.labour_supply
}

/// Negative balances are floored at zero for inequality purposes; the Gini
/// input must be non-negative.
fn wealth_gini(wealths: impl Iterator<Item = f64>) -> f64 {
    let clamped: Vec<f64> = wealths.map(|w| w.max(0.0)).collect();
    gini(&clamped).unwrap_or(0.0)
}

/// Assemble the period row from the post-period state and the flow ledger.
pub fn build_record(state: &EconomyState, ledger: &PeriodLedger) -> PeriodRecord {
    let time_budgets: Vec<f64> = state.consumers.iter().map(|c| c.time_budget).collect();
    let labour_sold: Vec<f64> = ledger
        .consumer_flows
        .iter()
        .map(|f| f.labour_sold)
        .collect();
    PeriodRecord {
        period: state.period,
        wage: state.wage,
        wage_adjust: state.wage_adjust,
        producer_wealth: state.total_producer_wealth(),
        consumer_wealth: state.total_consumer_wealth(),
        gini_producers: wealth_gini(state.producers.iter().map(|p| p.wealth)),
        gini_consumers: wealth_gini(state.consumers.iter().map(|c| c.wealth)),
        total_utility: total_utility(ledger),
        leisure_pct: leisure_proportion(&time_budgets, &labour_sold),
        excess_labour: excess_labour(ledger),
        live_producers: state.producers.len() as u32,
        shut_firms: state.shut_firm_count(),
        producers: state
            .producers
            .iter()
            .map(|p| ProducerSnapshot {
                id: p.id,
                price: p.price,
                inventory: p.inventory,
                demand: p.last_demand,
                price_adjust: p.price_adjust,
            })
            .collect(),
    }
}
