//! Rank-scaled performance.
//!
//! Raw performance values are integrality gaps (lower is better) and may be
//! `+∞` when a run found no incumbent or bound. They are turned into
//! `ρ ∈ [0,1]` with 1 meaning best:
//!
//! 1. every value above the largest finite gap `p̂` is replaced by `p̂ + γ`;
//! 2. values get ascending average ranks (ties share the mean rank);
//! 3. ranks are min–max scaled to `[0,1]`;
//! 4. `ρ = 1 − scaled`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 1.0;

/// Raw gaps keyed by `(instance_id, config_id)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawPerformance {
    pub keys: Vec<(String, String)>,
    pub values: Vec<f64>,
}

impl RawPerformance {
    pub fn new(keys: Vec<(String, String)>, values: Vec<f64>) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(Error::Dimension {
                expected: keys.len(),
                found: values.len(),
            });
        }
        validate_gaps(&values)?;
        Ok(Self { keys, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `ρ` values aligned with the keys of the input, plus the `γ` used.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPerformance {
    pub keys: Vec<(String, String)>,
    pub rho: Vec<f64>,
    pub gamma: f64,
}

fn validate_gaps(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Data(format!(
                "performance value #{i} is {v}; gaps must be nonnegative or +inf"
            )));
        }
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Argument(format!(
            "gamma must be a positive finite real, got {gamma}"
        )));
    }
    Ok(())
}

/// Replaces every value above the largest finite value `p̂` with `p̂ + γ`.
pub fn clip_infinities(values: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    validate_gaps(values)?;
    let p_hat = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or_else(|| Error::DegenerateData("no finite performance value to clip against".into()))?;
    Ok(values
        .iter()
        .map(|&v| if v > p_hat { p_hat + gamma } else { v })
        .collect())
}

/// Ascending average ranks (1-based); equal values share the mean of the
/// rank positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// `ρ` for a plain list of gaps. An all-equal list maps to 1 everywhere.
pub fn rank_scale_values(values: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let clipped = clip_infinities(values, gamma)?;
    let ranks = average_ranks(&clipped);
    let (lo, hi) = ranks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
        (lo.min(r), hi.max(r))
    });
    if hi <= lo {
        return Ok(vec![1.0; ranks.len()]);
    }
    let span = hi - lo;
    Ok(ranks.iter().map(|&r| 1.0 - (r - lo) / span).collect())
}

pub fn rank_scale(values: &RawPerformance, gamma: f64) -> Result<ScaledPerformance> {
    let rho = rank_scale_values(&values.values, gamma)?;
    Ok(ScaledPerformance {
        keys: values.keys.clone(),
        rho,
        gamma,
    })
}
