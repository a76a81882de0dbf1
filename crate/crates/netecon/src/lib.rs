//! Deterministic simulator of a networked market economy.
//!
//! Heterogeneous producers and consumers with Cobb-Douglas objectives trade
//! goods and labour over a directed provider graph. Trade happens out of
//! equilibrium: inventories buffer supply, excess demand is rationed
//! proportionally, and prices and the wage follow tatonnement with decaying
//! adjustment factors. Unprofitable firms exit, their demanders rewire, and
//! finished runs are classified by a rolling-average convergence test.
//!
//! Everything is reproducible from two seeds: one for prices, returns to
//! scale and shareholding, one for the trade graph and elasticities.

pub mod engine;
pub mod equilibrium;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod types;

pub use equilibrium::Outcome;
pub use runner::{run_simulation, RunResult, RunSummary};
pub use scenario::ScenarioConfig;
pub use types::EconomyState;
