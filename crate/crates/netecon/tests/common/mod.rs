//! Brute-force oracles and instance generators shared by the optimizer and
//! acceptance suites. Everything here evaluates raw objectives only; none of
//! it calls the closed-form solvers it is used to check.

#![allow(dead_code)]

use netecon::optimizer::{ConsumerProblem, ProducerProblem};
use netecon::rng::Stream;

/// Profit at an input bundle, evaluated directly from the objective.
pub fn profit_at(p: &ProducerProblem, x: &[f64]) -> f64 {
    let output: f64 = x
        .iter()
        .zip(&p.elasticities)
        .map(|(&q, &a)| q.powf(a))
        .product();
    let cost: f64 = x.iter().zip(&p.input_prices).map(|(&q, &pr)| q * pr).sum();
    p.own_price * p.tech * output - cost
}

/// Utility at a goods bundle and labour choice, evaluated directly.
pub fn utility_at(c: &ConsumerProblem, goods: &[f64], labour: f64) -> f64 {
    let income = c.wage * labour + c.expected_profit_income;
    let leisure = c.time_budget - labour;
    let goods_part: f64 = goods
        .iter()
        .zip(&c.goods_elasticities)
        .map(|(&q, &a)| q.powf(a))
        .product();
    income.powf(c.income_elasticity) * leisure.powf(c.leisure_elasticity) * goods_part
}

/// Best profit over an axis-aligned grid of the box `[lo_i, hi_i]`,
/// restricted to points whose cost fits the budget. Returns (point, profit).
pub fn grid_max_profit_in_box(
    p: &ProducerProblem,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
) -> (Vec<f64>, f64) {
    let n = p.elasticities.len();
    let mut best = (vec![0.0; n], f64::NEG_INFINITY);
    let mut point = vec![0.0; n];
    fn walk(
        p: &ProducerProblem,
        lo: &[f64],
        hi: &[f64],
        resolution: usize,
        dim: usize,
        point: &mut Vec<f64>,
        best: &mut (Vec<f64>, f64),
    ) {
        if dim == point.len() {
            let cost: f64 = point
                .iter()
                .zip(&p.input_prices)
                .map(|(&q, &pr)| q * pr)
                .sum();
            if cost <= p.budget {
                let v = profit_at(p, point);
                if v > best.1 {
                    *best = (point.clone(), v);
                }
            }
            return;
        }
        for k in 0..=resolution {
            point[dim] = lo[dim] + (hi[dim] - lo[dim]) * k as f64 / resolution as f64;
            walk(p, lo, hi, resolution, dim + 1, point, best);
        }
    }
    walk(p, lo, hi, resolution, 0, &mut point, &mut best);
    best
}

/// Zooming grid search for the unconstrained profit maximum: repeated
/// box grids centred on the best cell. Sound because the objective is
/// unimodal on the positive orthant when the elasticity sum is below one.
pub fn zoom_max_profit(
    p: &ProducerProblem,
    initial_hi: &[f64],
    resolution: usize,
    rounds: usize,
) -> (Vec<f64>, f64) {
    let n = p.elasticities.len();
    let mut lo = vec![0.0; n];
    let mut hi = initial_hi.to_vec();
    let mut best = (vec![0.0; n], f64::NEG_INFINITY);
    for _ in 0..rounds {
        let (point, value) = grid_max_profit_in_box(p, &lo, &hi, resolution);
        if value > best.1 {
            best = (point.clone(), value);
        }
        for i in 0..n {
            let cell = (hi[i] - lo[i]) / resolution as f64;
            lo[i] = (point[i] - cell).max(0.0);
            hi[i] = point[i] + cell;
        }
    }
    best
}

/// Enumerate budget allocations over `n` goods in `resolution` equal money
/// steps (compositions of the budget), calling `visit` with each bundle on
/// the surface `Σ P_i x_i = budget`.
pub fn for_each_budget_surface_point(
    prices: &[f64],
    budget: f64,
    resolution: usize,
    visit: &mut impl FnMut(&[f64]),
) {
    let n = prices.len();
    let mut shares = vec![0usize; n];
    #[allow(clippy::too_many_arguments)]
    fn walk(
        prices: &[f64],
        budget: f64,
        resolution: usize,
        dim: usize,
        left: usize,
        shares: &mut Vec<usize>,
        point: &mut Vec<f64>,
        visit: &mut impl FnMut(&[f64]),
    ) {
        if dim + 1 == shares.len() {
            shares[dim] = left;
            for i in 0..shares.len() {
                point[i] = budget * shares[i] as f64 / (resolution as f64 * prices[i]);
            }
            visit(point);
            return;
        }
        for k in 0..=left {
            shares[dim] = k;
            walk(
                prices,
                budget,
                resolution,
                dim + 1,
                left - k,
                shares,
                point,
                visit,
            );
        }
    }
    let mut point = vec![0.0; n];
    walk(
        prices,
        budget,
        resolution,
        0,
        resolution,
        &mut shares,
        &mut point,
        visit,
    );
}

/// Best profit among budget-surface gridpoints.
pub fn surface_max_profit(p: &ProducerProblem, resolution: usize) -> (Vec<f64>, f64) {
    let mut best = (vec![0.0; p.elasticities.len()], f64::NEG_INFINITY);
    for_each_budget_surface_point(&p.input_prices, p.budget, resolution, &mut |x| {
        let v = profit_at(p, x);
        if v > best.1 {
            best = (x.to_vec(), v);
        }
    });
    best
}

/// Best utility over the goods surface `Σ P q = goods_outlay` crossed with a
/// labour grid on `[0, T]`.
pub fn surface_max_utility(
    c: &ConsumerProblem,
    goods_outlay: f64,
    goods_resolution: usize,
    labour_resolution: usize,
) -> (Vec<f64>, f64, f64) {
    let mut best = (vec![0.0; c.goods_prices.len()], 0.0, f64::NEG_INFINITY);
    for_each_budget_surface_point(&c.goods_prices, goods_outlay, goods_resolution, &mut |q| {
        for k in 0..=labour_resolution {
            let labour = c.time_budget * k as f64 / labour_resolution as f64;
            let v = utility_at(c, q, labour);
            if v > best.2 {
                best = (q.to_vec(), labour, v);
            }
        }
    });
    best
}

/// Central finite difference of profit along coordinate `i`.
pub fn profit_fd(p: &ProducerProblem, x: &[f64], i: usize) -> f64 {
    let h = 1e-5 * x[i].max(1e-3);
    let mut plus = x.to_vec();
    plus[i] += h;
    let mut minus = x.to_vec();
    minus[i] -= h;
    (profit_at(p, &plus) - profit_at(p, &minus)) / (2.0 * h)
}

/// A producer instance with a known interior optimum, built by inverting the
/// first-order conditions: pick the optimum and the elasticities first, then
/// set each input price to its marginal product value.
pub struct KnownOptimum {
    pub problem: ProducerProblem,
    pub optimum: Vec<f64>,
    pub optimum_cost: f64,
}

pub fn known_interior_instance(stream: &mut Stream, max_inputs: usize) -> KnownOptimum {
    let n = 1 + stream.below(max_inputs as u64) as usize;
    let target_sum = stream.uniform(0.10, 0.985);
    let mut alphas: Vec<f64> = (0..n).map(|_| stream.uniform(0.05, 1.0)).collect();
    let raw: f64 = alphas.iter().sum();
    for a in &mut alphas {
        *a *= target_sum / raw;
    }
    let own_price = stream.uniform(0.2, 5.0);
    let tech = stream.uniform(0.2, 10.0);
    let optimum: Vec<f64> = (0..n).map(|_| stream.uniform(0.1, 10.0)).collect();
    let output: f64 = optimum
        .iter()
        .zip(&alphas)
        .map(|(&x, &a)| x.powf(a))
        .product();
    let input_prices: Vec<f64> = optimum
        .iter()
        .zip(&alphas)
        .map(|(&x, &a)| a * own_price * tech * output / x)
        .collect();
    let optimum_cost: f64 = optimum
        .iter()
        .zip(&input_prices)
        .map(|(&x, &pr)| x * pr)
        .sum();
    KnownOptimum {
        problem: ProducerProblem {
            own_price,
            tech,
            input_prices,
            elasticities: alphas,
            budget: 2.0 * optimum_cost,
        },
        optimum,
        optimum_cost,
    }
}

/// A producer instance with an arbitrary elasticity sum (no interior optimum
/// guaranteed), for the budget-surface suites.
pub fn constrained_instance(stream: &mut Stream, max_inputs: usize) -> ProducerProblem {
    let n = 1 + stream.below(max_inputs as u64) as usize;
    let target_sum = stream.uniform(0.2, 2.5);
    let mut alphas: Vec<f64> = (0..n).map(|_| stream.uniform(0.05, 1.0)).collect();
    let raw: f64 = alphas.iter().sum();
    for a in &mut alphas {
        *a *= target_sum / raw;
    }
    ProducerProblem {
        own_price: stream.uniform(0.2, 5.0),
        tech: stream.uniform(0.2, 10.0),
        input_prices: (0..n).map(|_| stream.uniform(0.1, 5.0)).collect(),
        elasticities: alphas,
        budget: stream.uniform(0.1, 1000.0),
    }
}

/// A consumer instance with up to three goods.
pub fn consumer_instance(stream: &mut Stream) -> ConsumerProblem {
    let n = 1 + stream.below(3) as usize;
    ConsumerProblem {
        goods_prices: (0..n).map(|_| stream.uniform(0.1, 5.0)).collect(),
        goods_elasticities: (0..n).map(|_| stream.uniform(0.05, 1.0)).collect(),
        income_elasticity: stream.uniform(0.05, 1.0),
        leisure_elasticity: stream.uniform(0.05, 1.0),
        wage: stream.uniform(0.5, 50.0),
        time_budget: 24.0,
        expected_profit_income: stream.uniform(0.0, 100.0),
        budget: stream.uniform(1.0, 2000.0),
    }
}
