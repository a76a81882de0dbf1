//! Convergence detection and run classification.
//!
//! A raw series converges when the absolute first differences of its
//! rolling average stay below an absolute tolerance from some point inside
//! the scan window through the end of the run. A run that reached its
//! horizon is an equilibrium only when every surviving firm's price series
//! and the wage series all converge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioConfig;
use crate::types::HaltReason;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("rolling window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
}

/// Final classification of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Equilibrium,
    Disequilibrium,
    ConsumerWealthZero,
    SingleProducerLeft,
    ProducersExhausted,
}

impl From<HaltReason> for Outcome {
    fn from(reason: HaltReason) -> Self {
        match reason {
            HaltReason::SingleProducerLeft => Outcome::SingleProducerLeft,
            HaltReason::ConsumerWealthZero => Outcome::ConsumerWealthZero,
            HaltReason::ProducersExhausted => Outcome::ProducersExhausted,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Outcome::Equilibrium => "Equilibrium",
            Outcome::Disequilibrium => "Disequilibrium",
            Outcome::ConsumerWealthZero => "ConsumerWealthZero",
            Outcome::SingleProducerLeft => "SingleProducerLeft",
            Outcome::ProducersExhausted => "ProducersExhausted",
        };
        f.write_str(name)
    }
}

/// Verdict for one series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesVerdict {
    pub series: String,
    pub converged: bool,
    /// First scan position (in difference-sequence coordinates) from which
    /// every later element stays below tolerance.
    pub first_converged_index: Option<usize>,
}

/// Detector settings in raw period coordinates.
#[derive(Debug, Clone, Copy)]
pub struct DetectorConfig {
    pub tolerance: f64,
    pub window: usize,
    pub scan_start: usize,
    pub scan_end: usize,
}

impl From<&ScenarioConfig> for DetectorConfig {
    fn from(cfg: &ScenarioConfig) -> Self {
        Self {
            tolerance: cfg.equilibrium_tolerance,
            window: cfg.rolling_window,
            scan_start: cfg.scan_start,
            scan_end: cfg.scan_end,
        }
    }
}

/// Forward rolling mean: `out[k] = mean(series[k .. k+window])`, length
/// `len − window + 1`.
pub fn rolling_average(series: &[f64], window: usize) -> Result<Vec<f64>, SeriesError> {
    if window == 0 || window > series.len() {
        return Err(SeriesError::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    let inv = 1.0 / window as f64;
    let mut out = Vec::with_capacity(series.len() - window + 1);
    let mut acc: f64 = series[..window].iter().sum();
    out.push(acc * inv);
    for k in window..series.len() {
        acc += series[k] - series[k - window];
        out.push(acc * inv);
    }
    Ok(out)
}

/// Absolute first differences.
pub fn abs_first_differences(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// Scan `diffs` (already smoothed absolute differences) for a position in
/// `scan` from which every element through the end stays below `tolerance`.
pub fn converged_tail(
    diffs: &[f64],
    tolerance: f64,
    scan: std::ops::Range<usize>,
    series_name: &str,
) -> SeriesVerdict {
    let end = scan.end.min(diffs.len());
    let mut first = None;
    for t in scan.start..end {
        if diffs[t..].iter().all(|&d| d < tolerance) {
            first = Some(t);
            break;
        }
    }
    SeriesVerdict {
        series: series_name.to_string(),
        converged: first.is_some(),
        first_converged_index: first,
    }
}

/// Full pipeline for one raw series. Scan positions are configured in raw
/// period coordinates; the difference at raw period t compares the window
/// ending at t with the window ending at t−1, so position t maps to index
/// t − window in the difference sequence. A series too short for the window
/// never converges.
pub fn series_converged(raw: &[f64], cfg: &DetectorConfig, name: &str) -> SeriesVerdict {
    let smoothed = match rolling_average(raw, cfg.window) {
        Ok(s) => s,
        Err(_) => {
            return SeriesVerdict {
                series: name.to_string(),
                converged: false,
                first_converged_index: None,
            }
        }
    };
    let diffs = abs_first_differences(&smoothed);
    let start = cfg.scan_start.saturating_sub(cfg.window);
    let end = cfg.scan_end.saturating_sub(cfg.window);
    converged_tail(&diffs, cfg.tolerance, start..end, name)
}

/// Classify a finished run. A termination label wins outright; otherwise the
/// verdict is Equilibrium only if every surviving firm's price series and the
/// wage series converge.
pub fn classify_run(
    price_series: &[(u32, Vec<f64>)],
    wage_series: &[f64],
    cfg: &DetectorConfig,
    termination: Option<HaltReason>,
) -> Outcome {
    if let Some(reason) = termination {
        return reason.into();
    }
    let all_converged = price_series
        .iter()
        .all(|(id, series)| series_converged(series, cfg, &format!("price[{id}]")).converged)
        && series_converged(wage_series, cfg, "wage").converged;
    if all_converged {
        Outcome::Equilibrium
    } else {
        Outcome::Disequilibrium
    }
}
