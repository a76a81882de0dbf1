//! One period of economic activity.
//!
//! A period runs in a fixed order: demand collection, goods trade with
//! proportional rationing, an aggregate labour market, production and
//! inventory update, price and wage adjustment with factor decay, profit
//! distribution, consumer settlement, rewiring around exiting firms,
//! regeneration of stranded consumers, firm removal, and termination checks.
//!
//! Payments follow deliveries: a buyer pays price times delivered quantity,
//! a firm pays wage times allocated labour. Together with the profit
//! distribution rule this keeps total wealth constant over a run.

use thiserror::Error;

use crate::metrics::{self, PeriodRecord};
use crate::optimizer::{
    consumer_choose_bundle, producer_choose_inputs, Bundle, ConsumerProblem, ProducerProblem,
};
use crate::rng::{SeedStreams, Stream};
use crate::types::{AgentId, ConsumerState, EconomyState, HaltReason, ProviderLink};

/// Inventory at or below this is treated as an empty shelf and the firm exits.
pub const REMOVAL_INVENTORY_EPS: f64 = 1e-12;

/// Fraction of the initial consumer endowment below which aggregate consumer
/// wealth counts as exhausted.
pub const CONSUMER_WEALTH_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("simulation already halted: {0:?}")]
    AlreadyHalted(HaltReason),
}

/// Planned demands for one period, before any trade.
#[derive(Debug, Clone)]
pub struct Demands {
    /// Input bundles per live producer (labour last), aligned with
    /// `state.producers`.
    pub producer_bundles: Vec<Bundle>,
    /// Goods/labour bundles per consumer, aligned with `state.consumers`.
    pub consumer_bundles: Vec<Bundle>,
    /// Market demand faced by each live producer.
    pub market_demand: Vec<f64>,
}

/// Realized flows for one period.
#[derive(Debug, Clone, Default)]
pub struct PeriodLedger {
    pub producer_flows: Vec<ProducerFlow>,
    pub consumer_flows: Vec<ConsumerFlow>,
    pub labour_demand: f64,
    pub labour_supply: f64,
    pub labour_traded: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ProducerFlow {
    pub id: AgentId,
    /// Market demand faced this period.
    pub demand: f64,
    /// Quantity leaving the shelf: min(inventory, demand).
    pub sold: f64,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    pub produced: f64,
    pub labour_demanded: f64,
    pub labour_allocated: f64,
    /// (buyer, demanded, delivered) per order received.
    pub sales: Vec<(AgentId, f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct ConsumerFlow {
    pub id: AgentId,
    pub goods_spend: f64,
    pub labour_offered: f64,
    pub labour_sold: f64,
    pub wage_income: f64,
    pub profit_income: f64,
    pub utility: f64,
}

fn position_index(state: &EconomyState) -> Vec<Option<usize>> {
    let max_id = state
        .producers
        .iter()
        .map(|p| p.id)
        .max()
        .unwrap_or(0)
        .max(1) as usize;
    let mut index = vec![None; max_id + 1];
    for (i, p) in state.producers.iter().enumerate() {
        index[p.id as usize] = Some(i);
    }
    index
}

/// Every agent plans its period: producers choose inputs and labour from
/// their wealth, consumers choose goods and a labour offer from theirs, with
/// last period's profit income as the expectation for this one.
pub fn collect_demands(state: &EconomyState) -> Demands {
    let index = position_index(state);
    let mut market_demand = vec![0.0; state.producers.len()];

    let mut producer_bundles = Vec::with_capacity(state.producers.len());
    for p in &state.producers {
        let mut input_prices: Vec<f64> = p
            .providers
            .iter()
            .map(|l| state.producers[index[l.id as usize].expect("live provider")].price)
            .collect();
        input_prices.push(state.wage);
        let mut elasticities: Vec<f64> = p.providers.iter().map(|l| l.elasticity).collect();
        elasticities.push(p.labour_elasticity);
        let problem = ProducerProblem {
            own_price: p.price,
            tech: p.tech,
            input_prices,
            elasticities,
            budget: p.wealth.max(0.0),
        };
        let bundle = producer_choose_inputs(&problem);
        for (l, &q) in p.providers.iter().zip(&bundle.quantities) {
            market_demand[index[l.id as usize].expect("live provider")] += q;
        }
        producer_bundles.push(bundle);
    }

    let mut consumer_bundles = Vec::with_capacity(state.consumers.len());
    for c in &state.consumers {
        let problem = ConsumerProblem {
            goods_prices: c
                .providers
                .iter()
                .map(|l| state.producers[index[l.id as usize].expect("live provider")].price)
                .collect(),
            goods_elasticities: c.providers.iter().map(|l| l.elasticity).collect(),
            income_elasticity: c.income_elasticity,
            leisure_elasticity: c.leisure_elasticity,
            wage: state.wage,
            time_budget: c.time_budget,
            expected_profit_income: c.last_profit_income,
            budget: c.wealth.max(0.0),
        };
        let bundle = consumer_choose_bundle(&problem);
        for (l, &q) in c.providers.iter().zip(&bundle.quantities) {
            market_demand[index[l.id as usize].expect("live provider")] += q;
        }
        consumer_bundles.push(bundle);
    }

    Demands {
        producer_bundles,
        consumer_bundles,
        market_demand,
    }
}

/// Cobb-Douglas output from allocated labour and delivered inputs.
pub fn production_output(
    tech: f64,
    labour_elasticity: f64,
    labour: f64,
    input_elasticities: &[f64],
    delivered: &[f64],
) -> f64 {
    tech * labour.powf(labour_elasticity)
        * input_elasticities
            .iter()
            .zip(delivered)
            .map(|(&a, &q)| q.powf(a))
            .product::<f64>()
}

/// Shelf update: sales leave, fresh output arrives.
pub fn update_inventory(inventory: f64, demand: f64, produced: f64) -> f64 {
    inventory - inventory.min(demand) + produced
}

/// Proportional rationing: full delivery when supply covers demand, otherwise
/// every order is scaled by supply/demand. All-zero demand short-circuits.
pub fn ration_goods(supply: f64, demands: &[f64]) -> Vec<f64> {
    let total: f64 = demands.iter().sum();
    if total <= 0.0 {
        return vec![0.0; demands.len()];
    }
    if total <= supply {
        return demands.to_vec();
    }
    let factor = supply / total;
    demands.iter().map(|d| d * factor).collect()
}

/// Hard floor on adjusted prices and the wage. Without it a collapsing price
/// lets demand (wealth/price) and therefore production grow geometrically
/// until inventories overflow; at this floor every downstream quantity stays
/// finite while the price signal is still effectively zero.
pub const MIN_PRICE: f64 = 1e-9;

/// Tatonnement step with factor decay: the adjustment factor shrinks by 10%
/// as many times as needed to keep the result positive. The factor never
/// decays below the smallest normal float and the result never drops below
/// [`MIN_PRICE`].
pub fn adjust_price(price: f64, sigma: f64, excess: f64) -> (f64, f64) {
    debug_assert!(price > 0.0 && sigma > 0.0);
    let mut sigma = sigma;
    let mut candidate = price + sigma * excess;
    while candidate <= 0.0 && sigma > f64::MIN_POSITIVE {
        sigma *= 0.9;
        candidate = price + sigma * excess;
    }
    (candidate.max(MIN_PRICE), sigma.max(f64::MIN_POSITIVE))
}

/// Zero live producers first, then the single-survivor case, then consumer
/// wealth exhaustion relative to the initial endowment.
pub fn check_termination(state: &EconomyState) -> Option<HaltReason> {
    if state.producers.is_empty() {
        return Some(HaltReason::ProducersExhausted);
    }
    if state.producers.len() == 1 {
        return Some(HaltReason::SingleProducerLeft);
    }
    if state.total_consumer_wealth() <= CONSUMER_WEALTH_EPS * state.initial_consumer_wealth_total {
        return Some(HaltReason::ConsumerWealthZero);
    }
    None
}

/// Scale a producer's input and labour elasticities so they sum to its
/// returns-to-scale constant again.
fn renormalize_producer(providers: &mut [ProviderLink], labour_elasticity: &mut f64, kappa: f64) {
    let sum: f64 = providers.iter().map(|l| l.elasticity).sum::<f64>() + *labour_elasticity;
    let factor = kappa / sum;
    for l in providers.iter_mut() {
        l.elasticity *= factor;
    }
    *labour_elasticity *= factor;
}

/// Scale a consumer's goods, income and leisure elasticities back to the
/// total they summed to before an edge changed.
fn renormalize_consumer(c: &mut ConsumerState, target_total: f64) {
    let sum = c.elasticity_sum();
    let factor = target_total / sum;
    for l in c.providers.iter_mut() {
        l.elasticity *= factor;
    }
    c.income_elasticity *= factor;
    c.leisure_elasticity *= factor;
}

enum RewireChoice {
    Drop,
    Replace { id: AgentId, elasticity: f64 },
}

/// Decide drop-or-replace for one demander of an exiting firm. The coin is
/// only tossed when a replacement candidate exists.
fn choose_rewire(stream: &mut Stream, candidates: &[AgentId]) -> RewireChoice {
    if candidates.is_empty() {
        return RewireChoice::Drop;
    }
    if stream.chance(0.5) {
        let id = candidates[stream.below(candidates.len() as u64) as usize];
        let elasticity = stream.uniform_positive(1.0);
        RewireChoice::Replace { id, elasticity }
    } else {
        RewireChoice::Drop
    }
}

/// Every live demander of each exiting firm drops the edge or replaces it
/// with a uniformly drawn live producer not already supplying it, then has
/// its elasticities renormalized so the agent's total is unchanged.
pub fn rewire_demanders(state: &mut EconomyState, stream: &mut Stream) {
    let marked: Vec<AgentId> = state
        .producers
        .iter()
        .filter(|p| p.marked_for_removal)
        .map(|p| p.id)
        .collect();
    if marked.is_empty() {
        return;
    }
    let live: Vec<AgentId> = state
        .producers
        .iter()
        .filter(|p| !p.marked_for_removal)
        .map(|p| p.id)
        .collect();

    for &dead in &marked {
        let producer_ids: Vec<AgentId> = state
            .producers
            .iter()
            .filter(|p| !p.marked_for_removal)
            .map(|p| p.id)
            .collect();
        for id in producer_ids {
            let p = state.producer(id).expect("live producer");
            if !p.providers.iter().any(|l| l.id == dead) {
                continue;
            }
            let candidates: Vec<AgentId> = live
                .iter()
                .copied()
                .filter(|&x| x != id && !p.providers.iter().any(|l| l.id == x))
                .collect();
            let choice = choose_rewire(stream, &candidates);
            let p = state.producer_mut(id).expect("live producer");
            p.providers.retain(|l| l.id != dead);
            if let RewireChoice::Replace {
                id: new_id,
                elasticity,
            } = choice
            {
                p.providers.push(ProviderLink {
                    id: new_id,
                    elasticity,
                });
                p.providers.sort_by_key(|l| l.id);
            }
            let kappa = p.kappa;
            renormalize_producer(&mut p.providers, &mut p.labour_elasticity, kappa);
        }

        let consumer_ids: Vec<AgentId> = state.consumers.iter().map(|c| c.id).collect();
        for id in consumer_ids {
            let c = state
                .consumers
                .iter()
                .find(|c| c.id == id)
                .expect("consumer");
            if !c.providers.iter().any(|l| l.id == dead) {
                continue;
            }
            let candidates: Vec<AgentId> = live
                .iter()
                .copied()
                .filter(|&x| !c.providers.iter().any(|l| l.id == x))
                .collect();
            let choice = choose_rewire(stream, &candidates);
            let c = state.consumer_mut(id).expect("consumer");
            let target_total = c.elasticity_sum();
            c.providers.retain(|l| l.id != dead);
            if let RewireChoice::Replace {
                id: new_id,
                elasticity,
            } = choice
            {
                c.providers.push(ProviderLink {
                    id: new_id,
                    elasticity,
                });
                c.providers.sort_by_key(|l| l.id);
            }
            renormalize_consumer(c, target_total);
        }
    }
}

/// Redraw a stranded consumer's provider set and utility elasticities from
/// the regeneration stream. Wealth and the other dynamic fields survive.
pub fn regenerate_consumer(state: &mut EconomyState, stream: &mut Stream, consumer_id: AgentId) {
    let live: Vec<AgentId> = state
        .producers
        .iter()
        .filter(|p| !p.marked_for_removal)
        .map(|p| p.id)
        .collect();
    debug_assert!(!live.is_empty());
    let count = stream.range_inclusive(1, live.len() as u64) as usize;
    let mut ids: Vec<AgentId> = stream
        .sample_indices(live.len(), count)
        .into_iter()
        .map(|i| live[i])
        .collect();
    ids.sort_unstable();
    let providers: Vec<ProviderLink> = ids
        .into_iter()
        .map(|id| ProviderLink {
            id,
            elasticity: stream.uniform_positive(1.0),
        })
        .collect();
    let income_elasticity = stream.uniform_positive(1.0);
    let leisure_elasticity = stream.uniform_positive(1.0);
    let c = state.consumer_mut(consumer_id).expect("consumer");
    c.providers = providers;
    c.income_elasticity = income_elasticity;
    c.leisure_elasticity = leisure_elasticity;
}

/// Run one full period. Emits the period's aggregate record and the realized
/// flow ledger; sets `state.halted` when a termination condition fires at the
/// end of the period.
pub fn advance_period(
    state: &mut EconomyState,
    streams: &mut SeedStreams,
) -> Result<(PeriodRecord, PeriodLedger), EngineError> {
    if let Some(reason) = state.halted {
        return Err(EngineError::AlreadyHalted(reason));
    }

    let demands = collect_demands(state);
    let index = position_index(state);
    let n_prod = state.producers.len();
    let n_cons = state.consumers.len();

    let mut ledger = PeriodLedger {
        producer_flows: state
            .producers
            .iter()
            .map(|p| ProducerFlow {
                id: p.id,
                ..Default::default()
            })
            .collect(),
        consumer_flows: state
            .consumers
            .iter()
            .map(|c| ConsumerFlow {
                id: c.id,
                ..Default::default()
            })
            .collect(),
        ..Default::default()
    };

    // Goods trade: one proportional rationing factor per seller.
    let mut ration_factor = vec![1.0; n_prod];
    for (i, p) in state.producers.iter().enumerate() {
        let demand = demands.market_demand[i];
        let sold = demand.min(p.inventory);
        ration_factor[i] = if demand > p.inventory && demand > 0.0 {
            p.inventory / demand
        } else {
            1.0
        };
        let flow = &mut ledger.producer_flows[i];
        flow.demand = demand;
        flow.sold = sold;
    }

    // Producers buy inputs; consumers buy goods. Payment is for the
    // delivered quantity, and the seller books the identical amount.
    let mut delivered_inputs: Vec<Vec<f64>> = Vec::with_capacity(n_prod);
    for (i, p) in state.producers.iter().enumerate() {
        let bundle = &demands.producer_bundles[i];
        let mut delivered = Vec::with_capacity(p.providers.len());
        let mut purchase_cost = 0.0;
        for (l, &q) in p.providers.iter().zip(&bundle.quantities) {
            let s = index[l.id as usize].expect("live provider");
            let got = q * ration_factor[s];
            let paid = got * state.producers[s].price;
            purchase_cost += paid;
            ledger.producer_flows[s].revenue += paid;
            ledger.producer_flows[s].sales.push((p.id, q, got));
            delivered.push(got);
        }
        ledger.producer_flows[i].cost += purchase_cost;
        delivered_inputs.push(delivered);
    }
    let mut delivered_goods: Vec<Vec<f64>> = Vec::with_capacity(n_cons);
    for (j, c) in state.consumers.iter().enumerate() {
        let bundle = &demands.consumer_bundles[j];
        let mut delivered = Vec::with_capacity(c.providers.len());
        let mut spend = 0.0;
        for (l, &q) in c.providers.iter().zip(&bundle.quantities) {
            let s = index[l.id as usize].expect("live provider");
            let got = q * ration_factor[s];
            let paid = got * state.producers[s].price;
            spend += paid;
            ledger.producer_flows[s].revenue += paid;
            ledger.producer_flows[s].sales.push((c.id, q, got));
            delivered.push(got);
        }
        ledger.consumer_flows[j].goods_spend = spend;
        delivered_goods.push(delivered);
    }

    // Aggregate labour market: the short side is fully served.
    let labour_demands: Vec<f64> = demands
        .producer_bundles
        .iter()
        .map(|b| *b.quantities.last().expect("labour coordinate"))
        .collect();
    let labour_supplies: Vec<f64> = demands
        .consumer_bundles
        .iter()
        .map(|b| b.labour_supply.expect("labour supply"))
        .collect();
    ledger.labour_demand = labour_demands.iter().sum();
    ledger.labour_supply = labour_supplies.iter().sum();
    ledger.labour_traded = ledger.labour_demand.min(ledger.labour_supply);
    let allocations = ration_goods(ledger.labour_traded, &labour_demands);
    let sold_labour = ration_goods(ledger.labour_traded, &labour_supplies);
    for i in 0..n_prod {
        let flow = &mut ledger.producer_flows[i];
        flow.labour_demanded = labour_demands[i];
        flow.labour_allocated = allocations[i];
        flow.cost += state.wage * allocations[i];
    }
    for j in 0..n_cons {
        let flow = &mut ledger.consumer_flows[j];
        flow.labour_offered = labour_supplies[j];
        flow.labour_sold = sold_labour[j];
        flow.wage_income = state.wage * sold_labour[j];
    }

    // Production from delivered inputs and allocated labour; inventory
    // update; exit marking.
    for (i, p) in state.producers.iter_mut().enumerate() {
        let input_elasticities: Vec<f64> = p.providers.iter().map(|l| l.elasticity).collect();
        let output = production_output(
            p.tech,
            p.labour_elasticity,
            allocations[i],
            &input_elasticities,
            &delivered_inputs[i],
        );
        let flow = &mut ledger.producer_flows[i];
        flow.produced = output;
        flow.profit = flow.revenue - flow.cost;
        p.inventory = update_inventory(p.inventory, flow.demand, output);
        p.last_demand = flow.demand;
        if p.inventory <= REMOVAL_INVENTORY_EPS {
            p.marked_for_removal = true;
        }
    }

    // Price adjustment against the updated inventory; wage adjustment
    // against aggregate excess labour demand.
    for (i, p) in state.producers.iter_mut().enumerate() {
        let excess = ledger.producer_flows[i].demand - p.inventory;
        let (price, sigma) = adjust_price(p.price, p.price_adjust, excess);
        p.price = price;
        p.price_adjust = sigma;
    }
    let excess_labour = ledger.labour_demand - ledger.labour_supply;
    let (wage, wage_sigma) = adjust_price(state.wage, state.wage_adjust, excess_labour);
    state.wage = wage;
    state.wage_adjust = wage_sigma;

    distribute_profits(state, &mut ledger);
    settle_consumer_wealth(state, &mut ledger, &delivered_goods);

    rewire_demanders(state, &mut streams.rewire);

    let live_count = state
        .producers
        .iter()
        .filter(|p| !p.marked_for_removal)
        .count();
    if live_count > 0 {
        let stranded: Vec<AgentId> = state
            .consumers
            .iter()
            .filter(|c| c.providers.is_empty())
            .map(|c| c.id)
            .collect();
        for id in stranded {
            regenerate_consumer(state, &mut streams.regen, id);
        }
    }

    // Remove exiting firms; their balances move to the retired ledger.
    let retired: f64 = state
        .producers
        .iter()
        .filter(|p| p.marked_for_removal)
        .map(|p| p.wealth)
        .sum();
    state.retired_producer_wealth += retired;
    state.producers.retain(|p| !p.marked_for_removal);

    state.period += 1;
    state.halted = check_termination(state);

    let record = metrics::build_record(state, &ledger);
    Ok((record, ledger))
}

/// Positive profit is split between the firm (its reinvestment share) and its
/// shareholders; a firm marked for exit distributes everything. Losses stay
/// with the firm.
pub fn distribute_profits(state: &mut EconomyState, ledger: &mut PeriodLedger) {
    let mut payouts: Vec<(AgentId, f64)> = Vec::new();
    for (i, p) in state.producers.iter_mut().enumerate() {
        let profit = ledger.producer_flows[i].profit;
        if profit > 0.0 {
            let keep = if p.marked_for_removal { 0.0 } else { p.prr };
            p.wealth += keep * profit;
            let distributed = (1.0 - keep) * profit;
            for &(holder, share) in &p.shares {
                payouts.push((holder, share * distributed));
            }
        } else {
            p.wealth += profit;
        }
    }
    for (holder, amount) in payouts {
        let j = state
            .consumers
            .binary_search_by_key(&holder, |c| c.id)
            .expect("shareholder exists");
        ledger.consumer_flows[j].profit_income += amount;
    }
}

/// Settle each consumer: wealth moves by income minus goods spending, and
/// realized utility is evaluated at delivered goods, actual labour sold and
/// actual income.
pub fn settle_consumer_wealth(
    state: &mut EconomyState,
    ledger: &mut PeriodLedger,
    delivered_goods: &[Vec<f64>],
) {
    for (j, c) in state.consumers.iter_mut().enumerate() {
        let flow = &mut ledger.consumer_flows[j];
        c.wealth += flow.wage_income + flow.profit_income - flow.goods_spend;
        let income = flow.wage_income + flow.profit_income;
        let leisure = c.time_budget - flow.labour_sold;
        let goods: f64 = c
            .providers
            .iter()
            .zip(&delivered_goods[j])
            .map(|(l, &q)| q.powf(l.elasticity))
            .product();
        flow.utility =
            income.powf(c.income_elasticity) * leisure.powf(c.leisure_elasticity) * goods;
        c.last_utility = flow.utility;
        c.last_labour_sold = flow.labour_sold;
        c.last_profit_income = flow.profit_income;
    }
}
