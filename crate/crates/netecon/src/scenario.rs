//! Scenario configuration and initial-state sampling.
//!
//! A scenario is sampled from the exogenous parameter set by the two seed
//! families: seed 1 drives prices, returns to scale and shareholding; seed 2
//! drives the trade graph and every elasticity. Sampling is a pure function
//! of `(config, s1, s2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine;
use crate::rng::SeedStreams;
use crate::types::{AgentId, ConsumerState, EconomyState, ProducerState, ProviderLink};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// All exogenous parameters plus solver/detector settings. Every field has a
/// default; JSON configs may override any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub producers: u32,
    pub consumers: u32,
    pub wage_adjust_factor: f64,
    pub price_adjust_factor: f64,
    /// Technology constant applied to every firm.
    pub tech_level: f64,
    /// Calendar length of a period; carried in the parameter set but not
    /// consumed by any update rule.
    pub time_period: u32,
    pub profit_reinvestment_ratio: f64,
    pub initial_wage: f64,
    pub initial_producer_wealth: f64,
    pub initial_consumer_wealth: f64,
    /// Initial prices are Uniform(0, this), resampled away from exact zero.
    pub initial_price_max: f64,
    /// Returns to scale are |Normal(mean, sd)|.
    pub returns_to_scale_mean: f64,
    pub returns_to_scale_sd: f64,
    /// Time endowment per consumer per period.
    pub time_budget: f64,
    /// Periods to run unless a termination condition fires first.
    pub horizon: u32,
    /// Absolute tolerance on smoothed first differences for the
    /// equilibrium verdict.
    pub equilibrium_tolerance: f64,
    /// Rolling-average window for the equilibrium verdict.
    pub rolling_window: usize,
    /// Scan window, in period coordinates, where a convergence point may
    /// be declared.
    pub scan_start: usize,
    pub scan_end: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            producers: 10,
            consumers: 80,
            wage_adjust_factor: 0.0005,
            price_adjust_factor: 0.3,
            tech_level: 10.0,
            time_period: 365,
            profit_reinvestment_ratio: 0.9,
            initial_wage: 30.0,
            initial_producer_wealth: 1_000_000.0,
            initial_consumer_wealth: 1_000.0,
            initial_price_max: 100.0,
            returns_to_scale_mean: 0.9,
            returns_to_scale_sd: 0.6,
            time_budget: 24.0,
            horizon: 1000,
            equilibrium_tolerance: 1e-3,
            rolling_window: 100,
            scan_start: 500,
            scan_end: 900,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.producers < 1 {
            return Err(invalid("producers", "must be at least 1"));
        }
        if self.consumers < 1 {
            return Err(invalid("consumers", "must be at least 1"));
        }
        if self.wage_adjust_factor <= 0.0 || self.wage_adjust_factor.is_nan() {
            return Err(invalid("wage_adjust_factor", "must be positive"));
        }
        if self.price_adjust_factor <= 0.0 || self.price_adjust_factor.is_nan() {
            return Err(invalid("price_adjust_factor", "must be positive"));
        }
        if self.tech_level <= 0.0 || self.tech_level.is_nan() {
            return Err(invalid("tech_level", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.profit_reinvestment_ratio) {
            return Err(invalid("profit_reinvestment_ratio", "must lie in [0, 1]"));
        }
        if self.initial_wage <= 0.0 || self.initial_wage.is_nan() {
            return Err(invalid("initial_wage", "must be positive"));
        }
        if self.initial_producer_wealth < 0.0 || self.initial_producer_wealth.is_nan() {
            return Err(invalid("initial_producer_wealth", "must be non-negative"));
        }
        if self.initial_consumer_wealth <= 0.0 || self.initial_consumer_wealth.is_nan() {
            return Err(invalid("initial_consumer_wealth", "must be positive"));
        }
        if self.initial_price_max <= 0.0 || self.initial_price_max.is_nan() {
            return Err(invalid("initial_price_max", "must be positive"));
        }
        if self.returns_to_scale_sd < 0.0 || self.returns_to_scale_sd.is_nan() {
            return Err(invalid("returns_to_scale_sd", "must be non-negative"));
        }
        if self.time_budget <= 0.0 || self.time_budget.is_nan() {
            return Err(invalid("time_budget", "must be positive"));
        }
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.equilibrium_tolerance <= 0.0 || self.equilibrium_tolerance.is_nan() {
            return Err(invalid("equilibrium_tolerance", "must be positive"));
        }
        if self.rolling_window < 1 {
            return Err(invalid("rolling_window", "must be at least 1"));
        }
        if self.scan_start >= self.scan_end {
            return Err(invalid("scan_start", "must be below scan_end"));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable fingerprint of the full parameter set, for run provenance.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        format!("{h:016x}")
    }
}

/// Sample a complete initial state. Producer ids are `0..P`, consumer ids
/// `P..P+C`. Inventories start at zero; see [`bootstrap_inventories`].
pub fn sample_scenario(
    config: &ScenarioConfig,
    streams: &mut SeedStreams,
) -> Result<EconomyState, ConfigError> {
    config.validate()?;
    let p_n = config.producers as usize;
    let c_n = config.consumers as usize;
    let consumer_base = config.producers;

    let mut prices = Vec::with_capacity(p_n);
    for _ in 0..p_n {
        prices.push(streams.prices.uniform_positive(config.initial_price_max));
    }
    let mut kappas = Vec::with_capacity(p_n);
    for _ in 0..p_n {
        kappas.push(
            streams
                .kappa
                .abs_normal_positive(config.returns_to_scale_mean, config.returns_to_scale_sd),
        );
    }

    // Shareholders: count, members, then raw shares renormalized to 1.
    let mut share_maps: Vec<Vec<(AgentId, f64)>> = Vec::with_capacity(p_n);
    for _ in 0..p_n {
        let count = streams.shareholders.range_inclusive(1, c_n as u64) as usize;
        let members = streams.shareholders.sample_indices(c_n, count);
        let mut raw: Vec<(AgentId, f64)> = members
            .iter()
            .map(|&i| {
                (
                    consumer_base + i as AgentId,
                    streams.shareholders.uniform_positive(1.0),
                )
            })
            .collect();
        let total: f64 = raw.iter().map(|(_, s)| s).sum();
        for entry in &mut raw {
            entry.1 /= total;
        }
        raw.sort_by_key(|(id, _)| *id);
        share_maps.push(raw);
    }

    // Provider sets. Producers draw from the other firms (no self-loops), so
    // the drawn count is capped by the candidate pool.
    let mut producer_providers: Vec<Vec<AgentId>> = Vec::with_capacity(p_n);
    for y in 0..p_n {
        let candidates: Vec<AgentId> = (0..p_n as AgentId).filter(|&x| x != y as AgentId).collect();
        let drawn = streams.providers.range_inclusive(1, p_n as u64) as usize;
        let take = drawn.min(candidates.len());
        let mut ids: Vec<AgentId> = if take == 0 {
            Vec::new()
        } else {
            streams
                .providers
                .sample_indices(candidates.len(), take)
                .into_iter()
                .map(|i| candidates[i])
                .collect()
        };
        ids.sort_unstable();
        producer_providers.push(ids);
    }
    let mut consumer_providers: Vec<Vec<AgentId>> = Vec::with_capacity(c_n);
    for _ in 0..c_n {
        let count = streams.providers.range_inclusive(1, p_n as u64) as usize;
        let mut ids: Vec<AgentId> = streams
            .providers
            .sample_indices(p_n, count)
            .into_iter()
            .map(|i| i as AgentId)
            .collect();
        ids.sort_unstable();
        consumer_providers.push(ids);
    }

    // Elasticities: producers renormalize their raw draws to the firm's
    // returns to scale; consumers keep the raw draws.
    let mut producers = Vec::with_capacity(p_n);
    for y in 0..p_n {
        let ids = &producer_providers[y];
        let mut raw: Vec<f64> = (0..=ids.len())
            .map(|_| streams.elasticities.uniform_positive(1.0))
            .collect();
        let total: f64 = raw.iter().sum();
        let factor = kappas[y] / total;
        for v in &mut raw {
            *v *= factor;
        }
        let labour_elasticity = raw.pop().expect("labour draw present");
        let providers = ids
            .iter()
            .zip(&raw)
            .map(|(&id, &elasticity)| ProviderLink { id, elasticity })
            .collect();
        producers.push(ProducerState {
            id: y as AgentId,
            tech: config.tech_level,
            labour_elasticity,
            providers,
            kappa: kappas[y],
            price: prices[y],
            price_adjust: config.price_adjust_factor,
            inventory: 0.0,
            wealth: config.initial_producer_wealth,
            prr: config.profit_reinvestment_ratio,
            shares: share_maps[y].clone(),
            last_demand: 0.0,
            marked_for_removal: false,
        });
    }

    let mut consumers = Vec::with_capacity(c_n);
    for (j, ids) in consumer_providers.iter().enumerate() {
        let providers: Vec<ProviderLink> = ids
            .iter()
            .map(|&id| ProviderLink {
                id,
                elasticity: streams.elasticities.uniform_positive(1.0),
            })
            .collect();
        let income_elasticity = streams.elasticities.uniform_positive(1.0);
        let leisure_elasticity = streams.elasticities.uniform_positive(1.0);
        consumers.push(ConsumerState {
            id: consumer_base + j as AgentId,
            providers,
            income_elasticity,
            leisure_elasticity,
            time_budget: config.time_budget,
            wealth: config.initial_consumer_wealth,
            last_profit_income: 0.0,
            last_labour_sold: 0.0,
            last_utility: 0.0,
        });
    }

    Ok(EconomyState {
        period: 0,
        producers,
        consumers,
        wage: config.initial_wage,
        wage_adjust: config.wage_adjust_factor,
        initial_producer_count: config.producers,
        initial_consumer_wealth_total: config.initial_consumer_wealth * config.consumers as f64,
        retired_producer_wealth: 0.0,
        halted: None,
    })
}

/// Seed each firm's starting inventory with the demand it will face in the
/// first period: a side-effect-free demand pre-pass at the initial prices,
/// wage, wealths and zero expected profit income.
pub fn bootstrap_inventories(state: &mut EconomyState) {
    let demands = engine::collect_demands(state);
    for (i, p) in state.producers.iter_mut().enumerate() {
        p.inventory = demands.market_demand[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_streams;
    use crate::types::validate_economy;

    #[test]
    fn defaults_match_the_documented_parameter_set() {
        let cfg = ScenarioConfig::default();
        let mut streams = derive_streams(78, 178);
        let state = sample_scenario(&cfg, &mut streams).unwrap();
        assert_eq!(state.producers.len(), 10);
        assert_eq!(state.consumers.len(), 80);
        assert!(state.consumers.iter().all(|c| c.wealth == 1000.0));
        assert!(state.producers.iter().all(|p| p.wealth == 1_000_000.0));
        assert_eq!(state.wage, 30.0);
        assert!(validate_economy(&state).is_empty());
    }

    #[test]
    fn producer_elasticities_sum_to_kappa() {
        let cfg = ScenarioConfig::default();
        for (s1, s2) in [(1, 1), (78, 178), (47, 121), (9999, 3)] {
            let mut streams = derive_streams(s1, s2);
            let state = sample_scenario(&cfg, &mut streams).unwrap();
            for p in &state.producers {
                assert!(
                    (p.elasticity_sum() - p.kappa).abs() <= 1e-9,
                    "kappa drift for {:?}",
                    (s1, s2, p.id)
                );
                assert!(p.kappa > 0.0);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let mut a = derive_streams(5, 7);
        let mut b = derive_streams(5, 7);
        let sa = sample_scenario(&cfg, &mut a).unwrap();
        let sb = sample_scenario(&cfg, &mut b).unwrap();
        assert_eq!(
            serde_json::to_string(&sa).unwrap(),
            serde_json::to_string(&sb).unwrap()
        );
    }

    #[test]
    fn shares_sum_to_one_and_providers_are_valid() {
        let cfg = ScenarioConfig::default();
        let mut streams = derive_streams(11, 13);
        let state = sample_scenario(&cfg, &mut streams).unwrap();
        for p in &state.producers {
            let sum: f64 = p.shares.iter().map(|(_, s)| s).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.providers.iter().all(|l| l.id != p.id));
        }
        for c in &state.consumers {
            assert!(!c.providers.is_empty());
            assert!(c.providers.iter().all(|l| (l.id as usize) < 10));
        }
    }

    #[test]
    fn invalid_config_names_the_field() {
        let cfg = ScenarioConfig {
            profit_reinvestment_ratio: 1.5,
            ..Default::default()
        };
        match cfg.validate() {
            Err(ConfigError::Invalid { field, .. }) => {
                assert_eq!(field, "profit_reinvestment_ratio")
            }
            other => panic!("expected invalid-field error, got {other:?}"),
        }
    }

    #[test]
    fn partial_json_overrides_defaults() {
        let cfg = ScenarioConfig::from_json_str(r#"{"producers": 4, "horizon": 50}"#).unwrap();
        assert_eq!(cfg.producers, 4);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.consumers, 80);
    }

    #[test]
    fn unknown_json_keys_are_rejected() {
        assert!(ScenarioConfig::from_json_str(r#"{"producrs": 4}"#).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = ScenarioConfig::default();
        let b = ScenarioConfig {
            horizon: 999,
            ..Default::default()
        };
        assert_eq!(a.fingerprint(), ScenarioConfig::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
