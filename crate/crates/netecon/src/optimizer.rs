//! Closed-form input and consumption choices for Cobb-Douglas objectives.
//!
//! Producers maximize `P·A·Π x_i^{α_i} − Σ P_i x_i` subject to a wealth
//! budget. With elasticity sum strictly below one the interior stationary
//! point solves a log-linear system; otherwise (or when the interior point is
//! unaffordable) the optimum lies on the budget surface, where the share rule
//! `x_i = α_i W / (P_i Σα)` is the global constrained maximum. Consumers
//! always use the share rule for goods plus a one-dimensional labour/leisure
//! split.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// The elasticity sum at or above which the log-linear system is treated as
/// singular and the boundary solution is used instead.
pub const SINGULAR_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    /// Elasticity sum within `SINGULAR_MARGIN` of 1 (or above): the interior
    /// first-order system has no finite unique solution.
    #[error("elasticity sum {0} leaves the first-order system singular")]
    SingularSystem(f64),
}

/// A producer's period decision problem.
#[derive(Debug, Clone)]
pub struct ProducerProblem {
    /// Price of the firm's own good.
    pub own_price: f64,
    /// Technology constant.
    pub tech: f64,
    /// Provider prices, then the wage as the last entry.
    pub input_prices: Vec<f64>,
    /// Provider elasticities, then the labour elasticity last.
    pub elasticities: Vec<f64>,
    /// Spendable wealth; non-negative.
    pub budget: f64,
}

impl ProducerProblem {
    pub fn elasticity_sum(&self) -> f64 {
        self.elasticities.iter().sum()
    }
}

/// A consumer's period decision problem.
#[derive(Debug, Clone)]
pub struct ConsumerProblem {
    pub goods_prices: Vec<f64>,
    pub goods_elasticities: Vec<f64>,
    pub income_elasticity: f64,
    pub leisure_elasticity: f64,
    pub wage: f64,
    pub time_budget: f64,
    /// Expected profit income: last period's receipts.
    pub expected_profit_income: f64,
    /// Spendable wealth; non-negative.
    pub budget: f64,
}

/// A chosen bundle. `quantities` aligns with the problem's input vector
/// (labour last for producers); consumers also report a labour supply.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub quantities: Vec<f64>,
    pub labour_supply: Option<f64>,
}

impl Bundle {
    pub fn cost(&self, prices: &[f64]) -> f64 {
        self.quantities.iter().zip(prices).map(|(q, p)| q * p).sum()
    }
}

/// Producer profit at a candidate input bundle.
pub fn producer_profit(p: &ProducerProblem, quantities: &[f64]) -> f64 {
    let output: f64 = quantities
        .iter()
        .zip(&p.elasticities)
        .map(|(&q, &a)| q.powf(a))
        .product();
    let cost: f64 = quantities
        .iter()
        .zip(&p.input_prices)
        .map(|(q, pr)| q * pr)
        .sum();
    p.own_price * p.tech * output - cost
}

/// Consumer utility at a goods bundle and labour choice.
pub fn consumer_utility(c: &ConsumerProblem, goods: &[f64], labour: f64) -> f64 {
    let income = c.wage * labour + c.expected_profit_income;
    let leisure = c.time_budget - labour;
    let goods_part: f64 = goods
        .iter()
        .zip(&c.goods_elasticities)
        .map(|(&q, &a)| q.powf(a))
        .product();
    income.powf(c.income_elasticity) * leisure.powf(c.leisure_elasticity) * goods_part
}

/// Interior stationary point of the unconstrained profit problem.
///
/// Solves `M · log x = b` with `M = 1·αᵀ − I` and
/// `b_i = log(P_i / (α_i · P · A))` by LU with partial pivoting.
pub fn solve_unconstrained_producer(p: &ProducerProblem) -> Result<Bundle, SolveError> {
    let n = p.elasticities.len();
    let sum = p.elasticity_sum();
    if sum > 1.0 - SINGULAR_MARGIN {
        return Err(SolveError::SingularSystem(sum));
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = p.elasticities[j];
        }
        m[(i, i)] -= 1.0;
        b[i] = (p.input_prices[i] / (p.elasticities[i] * p.own_price * p.tech)).ln();
    }
    let log_x = m.lu().solve(&b).ok_or(SolveError::SingularSystem(sum))?;
    Ok(Bundle {
        quantities: log_x.iter().map(|&l| l.exp()).collect(),
        labour_supply: None,
    })
}

/// Budget-surface share rule: `x_i = α_i W / (P_i Σα)`. Exhausts the budget
/// exactly and is the constrained global maximum for any elasticity sum.
pub fn solve_constrained_shares(elasticities: &[f64], prices: &[f64], budget: f64) -> Bundle {
    let sum: f64 = elasticities.iter().sum();
    let quantities = elasticities
        .iter()
        .zip(prices)
        .map(|(&a, &p)| a * budget / (p * sum))
        .collect();
    Bundle {
        quantities,
        labour_supply: None,
    }
}

/// Full producer decision: interior optimum when it exists and is affordable,
/// otherwise the budget-surface share rule. Labour is the last coordinate.
pub fn producer_choose_inputs(p: &ProducerProblem) -> Bundle {
    if p.elasticity_sum() <= 1.0 - SINGULAR_MARGIN {
        // Unwrap is safe: the sum check above is the only error path.
        let interior = solve_unconstrained_producer(p).expect("sum checked");
        if interior.cost(&p.input_prices) <= p.budget {
            return interior;
        }
    }
    solve_constrained_shares(&p.elasticities, &p.input_prices, p.budget)
}

/// Consumer decision: goods by the share rule over the combined elasticity
/// total, labour from the income/leisure trade-off clamped to `[0, T]`.
pub fn consumer_choose_bundle(c: &ConsumerProblem) -> Bundle {
    let total: f64 =
        c.goods_elasticities.iter().sum::<f64>() + c.income_elasticity + c.leisure_elasticity;
    let quantities: Vec<f64> = c
        .goods_prices
        .iter()
        .zip(&c.goods_elasticities)
        .map(|(&p, &a)| a * c.budget / (p * total))
        .collect();
    let beta = c.income_elasticity;
    let gamma = c.leisure_elasticity;
    let raw = (c.wage * beta * c.time_budget - gamma * c.expected_profit_income)
        / (c.wage * (beta + gamma));
    let labour = raw.clamp(0.0, c.time_budget);
    Bundle {
        quantities,
        labour_supply: Some(labour),
    }
}
