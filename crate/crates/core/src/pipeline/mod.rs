//! The experiment loop: split instances, learn the performance map on the
//! in-sample part, configure every out-of-sample instance, and score the
//! chosen configurations against the default one.
//!
//! Randomness is derived from `(master_seed, run_index)`: run `k` uses
//! `derive_seed(master_seed, k)`, whose child streams 0..=3 drive the
//! instance split, k-means, the stratified row split and training.

pub mod dataset;
pub mod evaluate;
pub mod kmeans;
pub mod split;
pub mod summary;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::config_space::{Configuration, ConstraintSystem};
use crate::cssp::{self, CsspProblem, CsspSolution, Formulation, ModelRef};
use crate::error::{Error, Result};
use crate::logreg::{self, EarlyStopping, LinearModel, MultiOutputModel, TrainConfig, TrainingSet};
use crate::seed::derive_seed;

pub use dataset::{assemble_training, config_id, Assembled, ConfigEntry, Dataset, FeatureScaling, Variant};
pub use evaluate::{evaluate_instance, InstanceRecord, NON_WORSENING_TOLERANCE};
pub use kmeans::{kmeans, Clustering};
pub use split::{split_instances, stratified_split, InstanceSplit, RowSplit, DEFAULT_FRACTIONS};
pub use summary::{aggregate, Aggregate, RunMetrics};

/// Monotonic time source in seconds; the origin is arbitrary.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances, for environments without timers.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSelection {
    Pao,
    Pai,
    Both,
}

impl VariantSelection {
    pub fn variants(self) -> &'static [Variant] {
        match self {
            VariantSelection::Pao => &[Variant::Pao],
            VariantSelection::Pai => &[Variant::Pai],
            VariantSelection::Both => &[Variant::Pao, Variant::Pai],
        }
    }
}

impl core::str::FromStr for VariantSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pao" => Ok(Self::Pao),
            "pai" => Ok(Self::Pai),
            "both" => Ok(Self::Both),
            _ => Err(Error::Argument(format!(
                "unknown variant `{s}` (expected pao, pai or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub variants: VariantSelection,
    /// Formulation used for the PaO variant; PaI always uses [`Formulation::Pai`].
    pub pao_formulation: Formulation,
    pub repeats: usize,
    pub n_out: usize,
    pub cluster_count: usize,
    pub fractions: [f64; 3],
    pub master_seed: u64,
    pub train: TrainConfig,
    /// Validation patience for early stopping; `None` trains for the full epoch budget.
    pub patience: Option<usize>,
    pub r_grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variants: VariantSelection::Both,
            pao_formulation: Formulation::PaoWeighted,
            repeats: 10,
            n_out: 11,
            cluster_count: 5,
            fractions: DEFAULT_FRACTIONS,
            master_seed: 0,
            train: TrainConfig::default(),
            patience: None,
            r_grid_points: cssp::DEFAULT_R_GRID_POINTS,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Argument("repeats must be positive".into()));
        }
        if !self.pao_formulation.is_pao() {
            return Err(Error::Argument(
                "pao_formulation must be one of the PaO formulations".into(),
            ));
        }
        if self.cluster_count == 0 {
            return Err(Error::Argument("cluster_count must be positive".into()));
        }
        if self.r_grid_points < 2 {
            return Err(Error::Argument("r_grid_points must be at least 2".into()));
        }
        split::check_fractions(&self.fractions)?;
        self.train.validate()
    }

    pub fn formulation(&self, variant: Variant) -> Formulation {
        match variant {
            Variant::Pao => self.pao_formulation,
            Variant::Pai => Formulation::Pai,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerformanceMap {
    Pao(LinearModel),
    Pai(MultiOutputModel),
}

impl PerformanceMap {
    pub fn variant(&self) -> Variant {
        match self {
            PerformanceMap::Pao(_) => Variant::Pao,
            PerformanceMap::Pai(_) => Variant::Pai,
        }
    }

    pub fn as_model_ref(&self) -> ModelRef<'_> {
        match self {
            PerformanceMap::Pao(m) => ModelRef::Pao(m),
            PerformanceMap::Pai(m) => ModelRef::Pai(m),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            PerformanceMap::Pao(m) => m.input_dim(),
            PerformanceMap::Pai(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            PerformanceMap::Pao(_) => 1,
            PerformanceMap::Pai(m) => m.output_dim(),
        }
    }

    /// Mean binary cross-entropy per target entry on `set`.
    pub fn loss(&self, set: &TrainingSet) -> Result<f64> {
        let ll = match self {
            PerformanceMap::Pao(m) => logreg::log_likelihood(m, set.x(), &set.y().col(0))?,
            PerformanceMap::Pai(m) => logreg::log_likelihood_multi(m, set.x(), set.y())?,
        };
        Ok(-ll / (set.len() * set.output_dim()) as f64)
    }
}

/// How the performance map was fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
    pub cluster_count: usize,
    /// The vectors k-means ran on.
    pub clustered_on: &'static str,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub test_loss: Option<f64>,
    /// Largest epoch count over the outputs.
    pub epochs_run: usize,
    pub early_stopping: bool,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedMap {
    pub map: PerformanceMap,
    pub scaling: FeatureScaling,
    pub report: TrainingReport,
}

impl FittedMap {
    pub fn variant(&self) -> Variant {
        self.map.variant()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub cluster_count: usize,
    pub fractions: [f64; 3],
    pub seed: u64,
    pub train: TrainConfig,
    pub patience: Option<usize>,
}

impl FitOptions {
    pub fn from_experiment(cfg: &ExperimentConfig, seed: u64) -> Self {
        Self {
            cluster_count: cfg.cluster_count,
            fractions: cfg.fractions,
            seed,
            train: cfg.train.clone(),
            patience: cfg.patience,
        }
    }
}

/// Standardizes features on `in_sample`, assembles the training rows,
/// clusters them, splits each cluster into train/validation/test and trains
/// the map on the training rows. Early stopping, when enabled, watches the
/// validation rows; the test rows are only scored.
pub fn fit_map(ds: &Dataset, variant: Variant, in_sample: &[String], opts: &FitOptions) -> Result<FittedMap> {
    let scaling = FeatureScaling::fit(
        in_sample
            .iter()
            .map(|id| ds.instance_features(id))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let assembled = assemble_training(variant, ds, in_sample, Some(&scaling))?;
    let all = &assembled.set;
    let clusters = kmeans(all.x(), opts.cluster_count, derive_seed(opts.seed, 1))?;
    let rows = stratified_split(&clusters.labels, &opts.fractions, derive_seed(opts.seed, 2))?;
    if rows.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let train_set = all.subset(&rows.train)?;
    let validation = (!rows.validation.is_empty())
        .then(|| all.subset(&rows.validation))
        .transpose()?;
    let test = (!rows.test.is_empty()).then(|| all.subset(&rows.test)).transpose()?;

    let cfg = opts.train.with_seed(derive_seed(opts.seed, 3));
    let early = opts.patience.map(|patience| EarlyStopping { patience });
    let (map, epochs_run, stopped_early) = match (variant, &validation) {
        (Variant::Pao, Some(val)) => {
            let out = logreg::train_validated(&train_set, val, &cfg, early)?;
            (PerformanceMap::Pao(out.model), out.epochs_run, out.stopped_early)
        }
        (Variant::Pao, None) => (PerformanceMap::Pao(logreg::train(&train_set, &cfg)?), cfg.epochs, false),
        (Variant::Pai, Some(val)) => {
            let (model, outs) = logreg::train_multi_validated(&train_set, val, &cfg, early)?;
            let epochs = outs.iter().map(|o| o.epochs_run).max().unwrap_or(0);
            (PerformanceMap::Pai(model), epochs, outs.iter().any(|o| o.stopped_early))
        }
        (Variant::Pai, None) => (
            PerformanceMap::Pai(logreg::train_multi(&train_set, &cfg)?),
            cfg.epochs,
            false,
        ),
    };

    let report = TrainingReport {
        train_rows: rows.train.len(),
        validation_rows: rows.validation.len(),
        test_rows: rows.test.len(),
        cluster_count: opts.cluster_count,
        clustered_on: match variant {
            Variant::Pao => "training inputs (features, configuration)",
            Variant::Pai => "training inputs (features, rho)",
        },
        train_loss: map.loss(&train_set)?,
        validation_loss: validation.as_ref().map(|v| map.loss(v)).transpose()?,
        test_loss: test.as_ref().map(|v| map.loss(v)).transpose()?,
        epochs_run,
        early_stopping: early.is_some() && validation.is_some(),
        stopped_early,
    };
    Ok(FittedMap { map, scaling, report })
}

/// Solves the configuration search for raw (unscaled) instance features.
pub fn configure(
    map: &PerformanceMap,
    scaling: &FeatureScaling,
    formulation: Formulation,
    raw_features: &[f64],
    feasible: &[Configuration],
    constraints: &ConstraintSystem,
    r_grid_points: usize,
) -> Result<CsspSolution> {
    let features = scaling.apply(raw_features)?;
    let problem = CsspProblem::new(formulation, map.as_model_ref(), &features, feasible, constraints)?
        .with_r_grid_points(r_grid_points);
    cssp::solve(&problem)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub run_index: usize,
    pub variant: Variant,
    pub formulation: Formulation,
    pub seed: u64,
    pub out_of_sample: Vec<String>,
    pub records: Vec<InstanceRecord>,
    /// `(instance, error)` for solves that failed; they are not attempts.
    pub failures: Vec<(String, String)>,
    /// Wall-clock seconds per successful solve, aligned with `records`.
    pub solve_seconds: Vec<f64>,
    pub train_seconds: f64,
    pub training: TrainingReport,
    pub metrics: RunMetrics,
}

pub fn run_seed(master_seed: u64, run_index: usize) -> u64 {
    derive_seed(master_seed, run_index as u64)
}

/// The instance split of run `run_index`.
pub fn run_split(ds: &Dataset, cfg: &ExperimentConfig, run_index: usize) -> Result<InstanceSplit> {
    split_instances(
        &ds.instance_ids(),
        cfg.n_out,
        derive_seed(run_seed(cfg.master_seed, run_index), 0),
    )
}

/// One repetition for one variant.
pub fn run_once(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    run_index: usize,
    variant: Variant,
    clock: &dyn Clock,
) -> Result<RunReport> {
    cfg.validate()?;
    let seed = run_seed(cfg.master_seed, run_index);
    let split = run_split(ds, cfg, run_index)?;
    let started = clock.seconds();
    let fitted = fit_map(
        ds,
        variant,
        &split.in_sample,
        &FitOptions::from_experiment(cfg, derive_seed(seed, 1)),
    )?;
    let train_seconds = clock.seconds() - started;

    let formulation = cfg.formulation(variant);
    let feasible = ds.config_list();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut solve_seconds = Vec::new();
    for g in &split.out_of_sample {
        let raw = ds.instance_features(g)?;
        let t0 = clock.seconds();
        match configure(
            &fitted.map,
            &fitted.scaling,
            formulation,
            raw,
            &feasible,
            &ds.constraints,
            cfg.r_grid_points,
        ) {
            Ok(sol) => {
                solve_seconds.push(clock.seconds() - t0);
                records.push(evaluate_instance(ds, g, &sol.config)?);
            }
            Err(e) => failures.push((g.clone(), format!("{e}"))),
        }
    }
    let metrics = RunMetrics::from_records(&records, solve_seconds.iter().sum());
    Ok(RunReport {
        run_index,
        variant,
        formulation,
        seed,
        out_of_sample: split.out_of_sample,
        records,
        failures,
        solve_seconds,
        train_seconds,
        training: fitted.report,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: Variant,
    pub formulation: Formulation,
    pub runs: Vec<RunMetrics>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub variants: Vec<VariantSummary>,
}

impl ExperimentSummary {
    pub fn get(&self, variant: Variant) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.variant == variant)
    }
}

/// Groups run reports by variant (in `cfg` order) and aggregates them.
pub fn summarize(cfg: &ExperimentConfig, reports: &[RunReport]) -> ExperimentSummary {
    let variants = cfg
        .variants
        .variants()
        .iter()
        .map(|&variant| {
            let mut mine: Vec<&RunReport> = reports.iter().filter(|r| r.variant == variant).collect();
            mine.sort_by_key(|r| r.run_index);
            let runs: Vec<RunMetrics> = mine.iter().map(|r| r.metrics).collect();
            VariantSummary {
                variant,
                formulation: cfg.formulation(variant),
                aggregate: aggregate(&runs),
                runs,
            }
        })
        .collect();
    ExperimentSummary { variants }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    /// Ordered by run index, then variant.
    pub reports: Vec<RunReport>,
}

/// Runs every repetition sequentially.
pub fn run_experiment(ds: &Dataset, cfg: &ExperimentConfig, clock: &dyn Clock) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut reports = Vec::new();
    for run_index in 0..cfg.repeats {
        for &variant in cfg.variants.variants() {
            reports.push(run_once(ds, cfg, run_index, variant, clock)?);
        }
    }
    Ok(ExperimentResult {
        summary: summarize(cfg, &reports),
        reports,
    })
}
