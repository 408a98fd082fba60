//! Per-run metrics and their sum/mean/stdev aggregation.
//!
//! Ratios (`im`, `nw`) are averaged per run, so the mean row is the mean of
//! the run ratios rather than the pooled count ratio. The stdev row is the
//! population standard deviation of the per-run values.

use alloc::vec::Vec;

use crate::pipeline::evaluate::InstanceRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub im: usize,
    pub nw: usize,
    /// Successful solves; the denominator of `im` and `nw`.
    pub attempts: usize,
    /// Mean `pd` over the run's records (0 when there are none).
    pub pd: f64,
    pub cpu_seconds: f64,
}

impl RunMetrics {
    pub fn from_records(records: &[InstanceRecord], cpu_seconds: f64) -> Self {
        let attempts = records.len();
        let pd = if attempts == 0 {
            0.0
        } else {
            records.iter().map(|r| r.pd).sum::<f64>() / attempts as f64
        };
        Self {
            im: records.iter().filter(|r| r.improved).count(),
            nw: records.iter().filter(|r| r.non_worsened).count(),
            attempts,
            pd,
            cpu_seconds,
        }
    }

    pub fn im_ratio(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.im as f64 / self.attempts as f64)
    }

    pub fn nw_ratio(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.nw as f64 / self.attempts as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRow {
    pub im: usize,
    pub nw: usize,
    pub attempts: usize,
    pub pd: f64,
    pub cpu_seconds: f64,
}

/// Four statistics over the per-run values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatRow {
    pub im: f64,
    pub nw: f64,
    pub pd: f64,
    pub cpu_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub sum: SumRow,
    pub mean: StatRow,
    /// `None` with fewer than two runs.
    pub stdev: Option<StatRow>,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn stdev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    libm::sqrt(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

/// Runs without any successful solve have no ratio and no `pd`, and are
/// left out of the mean and stdev of those columns.
pub fn aggregate(runs: &[RunMetrics]) -> Aggregate {
    let sum = SumRow {
        im: runs.iter().map(|r| r.im).sum(),
        nw: runs.iter().map(|r| r.nw).sum(),
        attempts: runs.iter().map(|r| r.attempts).sum(),
        pd: runs.iter().filter(|r| r.attempts > 0).map(|r| r.pd).sum(),
        cpu_seconds: runs.iter().map(|r| r.cpu_seconds).sum(),
    };
    let im: Vec<f64> = runs.iter().filter_map(RunMetrics::im_ratio).collect();
    let nw: Vec<f64> = runs.iter().filter_map(RunMetrics::nw_ratio).collect();
    let pd: Vec<f64> = runs.iter().filter(|r| r.attempts > 0).map(|r| r.pd).collect();
    let cpu: Vec<f64> = runs.iter().map(|r| r.cpu_seconds).collect();
    let stat = |f: fn(&[f64]) -> f64| StatRow {
        im: f(&im),
        nw: f(&nw),
        pd: f(&pd),
        cpu_seconds: f(&cpu),
    };
    Aggregate {
        sum,
        mean: stat(mean),
        stdev: (runs.len() >= 2).then(|| stat(stdev)),
    }
}
