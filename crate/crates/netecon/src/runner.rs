//! Whole-run execution and the parallel sweep harness.
//!
//! A run samples a scenario, seeds inventories, then advances periods until
//! the horizon or a termination condition. The runner keeps the per-period
//! records, full-agent snapshots at the start and end, the series needed for
//! classification, and an invariant tally used by verification sweeps.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use crate::engine::{self, PeriodLedger};
use crate::equilibrium::{classify_run, DetectorConfig, Outcome};
use crate::metrics::{gini, PeriodRecord};
use crate::rng::derive_streams;
use crate::scenario::{bootstrap_inventories, sample_scenario, ConfigError, ScenarioConfig};
use crate::types::{validate_economy, EconomyState};

/// Classification label plus final aggregates for one `(s1, s2)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub s1: u64,
    pub s2: u64,
    pub outcome: Outcome,
    /// Periods actually executed.
    pub periods: u32,
    pub live_producers: u32,
    pub shut_firms: u32,
    pub producer_wealth: f64,
    pub consumer_wealth: f64,
    pub gini_producers: f64,
    pub gini_consumers: f64,
    /// Consumer wealth Gini at creation, before any trade.
    pub gini_consumers_initial: f64,
    pub total_utility: f64,
    pub wage: f64,
    pub leisure_pct: f64,
    /// Structural invariant breaches observed across the whole run.
    pub invariant_violations: u32,
}

/// Full-agent view stored at the start of a run and at its end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub period: u32,
    pub wage: f64,
    pub producers: Vec<ProducerNode>,
    pub consumers: Vec<ConsumerNode>,
    /// Directed (seller, buyer) pairs.
    pub edges: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProducerNode {
    pub id: u32,
    pub wealth: f64,
    pub price: f64,
    pub inventory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumerNode {
    pub id: u32,
    pub wealth: f64,
}

fn snapshot(state: &EconomyState) -> Snapshot {
    Snapshot {
        period: state.period,
        wage: state.wage,
        producers: state
            .producers
            .iter()
            .map(|p| ProducerNode {
                id: p.id,
                wealth: p.wealth,
                price: p.price,
                inventory: p.inventory,
            })
            .collect(),
        consumers: state
            .consumers
            .iter()
            .map(|c| ConsumerNode {
                id: c.id,
                wealth: c.wealth,
            })
            .collect(),
        edges: state.edges(),
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub records: Vec<PeriodRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Relative tolerance on total wealth against the initial endowment.
pub const CONSERVATION_TOL: f64 = 1e-6;

fn rationing_violations(ledger: &PeriodLedger) -> u32 {
    let mut count = 0;
    for flow in &ledger.producer_flows {
        let mut delivered_total = 0.0;
        for &(_, demanded, delivered) in &flow.sales {
            if delivered > demanded * (1.0 + 1e-9) + 1e-12 {
                count += 1;
            }
            delivered_total += delivered;
        }
        let tol = 1e-9 * flow.sold.abs().max(1.0);
        if delivered_total > flow.sold + tol || flow.sold > flow.demand * (1.0 + 1e-9) + 1e-12 {
            count += 1;
        }
    }
    count
}

/// Execute one simulation to its horizon or halt.
pub fn run_simulation(config: &ScenarioConfig, s1: u64, s2: u64) -> Result<RunResult, ConfigError> {
    config.validate()?;
    let mut streams = derive_streams(s1, s2);
    let mut state = sample_scenario(config, &mut streams)?;
    bootstrap_inventories(&mut state);

    let initial_total = state.total_wealth();
    let initial_consumer_wealths: Vec<f64> =
        state.consumers.iter().map(|c| c.wealth.max(0.0)).collect();
    let gini_consumers_initial = gini(&initial_consumer_wealths).unwrap_or(0.0);

    let mut snapshots = vec![snapshot(&state)];
    let mut records: Vec<PeriodRecord> = Vec::with_capacity(config.horizon as usize);
    let mut wage_series: Vec<f64> = Vec::with_capacity(config.horizon as usize);
    let mut price_series: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut violations: u32 = 0;

    for _ in 0..config.horizon {
        let (record, ledger) =
            engine::advance_period(&mut state, &mut streams).expect("engine advanced past a halt");

        violations += validate_economy(&state).len() as u32;
        violations += rationing_violations(&ledger);
        if !record.all_finite() {
            violations += 1;
        }
        if !(0.0..=1.0).contains(&record.gini_producers)
            || !(0.0..=1.0).contains(&record.gini_consumers)
            || !(-1e-9..=100.0 + 1e-9).contains(&record.leisure_pct)
        {
            violations += 1;
        }
        let drift = (state.total_wealth() - initial_total).abs();
        if drift > CONSERVATION_TOL * initial_total.abs().max(1.0) {
            violations += 1;
        }
        debug_assert!(
            validate_economy(&state).is_empty(),
            "invariants broken at period {}: {:?}",
            state.period,
            validate_economy(&state)
        );

        wage_series.push(record.wage);
        for p in &record.producers {
            price_series.entry(p.id).or_default().push(p.price);
        }
        records.push(record);
        if state.halted.is_some() {
            break;
        }
    }

    snapshots.push(snapshot(&state));

    let survivor_series: Vec<(u32, Vec<f64>)> = state
        .producers
        .iter()
        .filter_map(|p| price_series.get(&p.id).map(|s| (p.id, s.clone())))
        .collect();
    let detector = DetectorConfig::from(config);
    let outcome = classify_run(&survivor_series, &wage_series, &detector, state.halted);

    let last = records.last();
    let summary = RunSummary {
        s1,
        s2,
        outcome,
        periods: state.period,
        live_producers: state.producers.len() as u32,
        shut_firms: state.shut_firm_count(),
        producer_wealth: last.map_or(state.total_producer_wealth(), |r| r.producer_wealth),
        consumer_wealth: last.map_or(state.total_consumer_wealth(), |r| r.consumer_wealth),
        gini_producers: last.map_or(0.0, |r| r.gini_producers),
        gini_consumers: last.map_or(0.0, |r| r.gini_consumers),
        gini_consumers_initial,
        total_utility: last.map_or(0.0, |r| r.total_utility),
        wage: state.wage,
        leisure_pct: last.map_or(0.0, |r| r.leisure_pct),
        invariant_violations: violations,
    };

    Ok(RunResult {
        summary,
        records,
        snapshots,
    })
}

/// One sweep line: a finished run or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepItem {
    Done(RunSummary),
    Failed { s1: u64, s2: u64, error: String },
}

impl SweepItem {
    pub fn seeds(&self) -> (u64, u64) {
        match self {
            SweepItem::Done(s) => (s.s1, s.s2),
            SweepItem::Failed { s1, s2, .. } => (*s1, *s2),
        }
    }
}

/// Serialize one sweep item as its output line.
pub fn sweep_line(item: &SweepItem) -> String {
    serde_json::to_string(item).expect("sweep item serializes")
}

/// Run every seed pair across `jobs` workers, invoking `sink` strictly in
/// input order as each prefix completes. Results are independent of `jobs`;
/// a panicking run becomes a `Failed` item and the sweep continues.
pub fn sweep(
    config: &ScenarioConfig,
    pairs: &[(u64, u64)],
    jobs: usize,
    mut sink: impl FnMut(usize, &SweepItem),
) {
    let jobs = jobs.max(1).min(pairs.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, SweepItem)>();

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= pairs.len() {
                    break;
                }
                let (s1, s2) = pairs[i];
                let item = match catch_unwind(AssertUnwindSafe(|| {
                    run_simulation(config, s1, s2).map(|r| r.summary)
                })) {
                    Ok(Ok(summary)) => SweepItem::Done(summary),
                    Ok(Err(e)) => SweepItem::Failed {
                        s1,
                        s2,
                        error: e.to_string(),
                    },
                    Err(panic) => {
                        let msg = panic
                            .downcast_ref::<&str>()
                            .map(|s| s.to_string())
                            .or_else(|| panic.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "run panicked".to_string());
                        SweepItem::Failed { s1, s2, error: msg }
                    }
                };
                if tx.send((i, item)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Reorder completions so the sink sees strictly ascending indices.
        let mut pending: BTreeMap<usize, SweepItem> = BTreeMap::new();
        let mut emitted = 0usize;
        for (i, item) in rx {
            pending.insert(i, item);
            while let Some(item) = pending.remove(&emitted) {
                sink(emitted, &item);
                emitted += 1;
            }
        }
    });
}

/// Convenience wrapper collecting sweep items in order.
pub fn sweep_collect(config: &ScenarioConfig, pairs: &[(u64, u64)], jobs: usize) -> Vec<SweepItem> {
    let mut out = Vec::with_capacity(pairs.len());
    sweep(config, pairs, jobs, |_, item| out.push(item.clone()));
    out
}
