//! Experiment configuration files and a parallel runner.

use std::path::PathBuf;
use std::time::Instant;

use confsearch_core::cssp::{Formulation, DEFAULT_R_GRID_POINTS};
use confsearch_core::logreg::TrainConfig;
use confsearch_core::pipeline::{
    run_once, summarize, Clock, Dataset, ExperimentConfig, ExperimentResult, NoClock, VariantSelection,
    DEFAULT_FRACTIONS,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainDoc {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_init_scale: f64,
    pub l2_penalty: f64,
}

impl Default for TrainDoc {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            weight_init_scale: d.weight_init_scale,
            l2_penalty: d.l2_penalty,
        }
    }
}

impl TrainDoc {
    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: 0,
            weight_init_scale: self.weight_init_scale,
            l2_penalty: self.l2_penalty,
        }
    }
}

/// The experiment file. Everything but `dataset` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub dataset: PathBuf,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default = "default_formulation")]
    pub formulation: String,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_n_out")]
    pub n_out: usize,
    #[serde(default = "default_clusters")]
    pub cluster_count: usize,
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub train: TrainDoc,
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default = "default_grid")]
    pub r_grid_points: usize,
}

fn default_variant() -> String {
    "both".into()
}
fn default_formulation() -> String {
    Formulation::PaoWeighted.name().into()
}
fn default_repeats() -> usize {
    10
}
fn default_n_out() -> usize {
    11
}
fn default_clusters() -> usize {
    5
}
fn default_fractions() -> [f64; 3] {
    DEFAULT_FRACTIONS
}
fn default_grid() -> usize {
    DEFAULT_R_GRID_POINTS
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid experiment file: {e}")))
    }

    /// Resolves the configuration; `seed` (from the command line) wins over
    /// the file's `master_seed`, which wins over 0.
    pub fn to_config(&self, seed: Option<u64>) -> Result<ExperimentConfig> {
        let variants: VariantSelection = self.variant.parse()?;
        let pao_formulation: Formulation = self.formulation.parse()?;
        if !pao_formulation.is_pao() {
            return Err(Error::Usage(format!(
                "`formulation` selects the PaO formulation; `{}` is not one",
                self.formulation
            )));
        }
        let cfg = ExperimentConfig {
            variants,
            pao_formulation,
            repeats: self.repeats,
            n_out: self.n_out,
            cluster_count: self.cluster_count,
            fractions: self.fractions,
            master_seed: seed.or(self.master_seed).unwrap_or(0),
            train: self.train.to_config(),
            patience: self.patience,
            r_grid_points: self.r_grid_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Wall-clock seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Runs every (run, variant) task on a pool of `jobs` threads. Results do
/// not depend on `jobs`; only the measured times do. With `timing` off all
/// times are 0 and the output is reproducible byte for byte.
pub fn run_parallel(ds: &Dataset, cfg: &ExperimentConfig, jobs: usize, timing: bool) -> Result<ExperimentResult> {
    cfg.validate()?;
    let tasks: Vec<_> = (0..cfg.repeats)
        .flat_map(|run| cfg.variants.variants().iter().map(move |&v| (run, v)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let clock = WallClock::default();
    let reports = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(run, variant)| {
                let c: &(dyn Clock + Sync) = if timing { &clock } else { &NoClock };
                run_once(ds, cfg, run, variant, c)
            })
            .collect::<confsearch_core::Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult {
        summary: summarize(cfg, &reports),
        reports,
    })
}
