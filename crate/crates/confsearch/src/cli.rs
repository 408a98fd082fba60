//! The `confsearch` command line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use confsearch_core::config_space::{decode_configuration, Configuration, ConstraintSystem, ParameterSchema};
use confsearch_core::cssp::{CsspSolution, Formulation, DEFAULT_R_GRID_POINTS};
use confsearch_core::logreg::TrainConfig;
use confsearch_core::perf_map::DEFAULT_GAMMA;
use confsearch_core::pipeline::{
    configure, evaluate_instance, fit_map, split_instances, FeatureScaling, FitOptions, InstanceRecord, PerformanceMap,
    RunMetrics, Variant,
};
use confsearch_core::seed::derive_seed;
use serde::Serialize;

use crate::error::{Error, ExitStatus, Result};
use crate::experiment::{run_parallel, ExperimentFile};
use crate::persist::{self, StoredModel, DATASET_FORMAT, DATASET_VERSION, MODEL_FORMAT, MODEL_VERSION};
use crate::report;
use crate::schema_file::load_schema;
use crate::source::{build_dataset, feasible_entries, DefaultChoice, PerformanceSource};
use crate::tables::load_features_csv;

pub const RECORD_FORMAT: &str = "confsearch-configuration";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "confsearch",
    version,
    about = "Learn solver configurations from recorded performance"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a rank-scaled dataset from features, a schema and a performance source.
    DatasetBuild(DatasetBuildArgs),
    /// Train a performance map on a dataset.
    Train(TrainArgs),
    /// Pick a configuration for one feature vector.
    Configure(ConfigureArgs),
    /// Configure dataset instances with a trained model and score them against the default.
    Evaluate(EvaluateArgs),
    /// Run the repeated split/train/configure/evaluate experiment.
    Experiment(ExperimentArgs),
    /// Print the summary table of a finished experiment.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DatasetBuildArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// `csv:PATH`, `synthetic:SPEC.json` or `external:SPEC.json`.
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// `first`, `middle`, or a configuration id such as `0-2-1`.
    #[arg(long = "default", default_value = "first")]
    pub default_config: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().weight_init_scale)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub clusters: usize,
    /// Train/validation/test fractions, comma separated.
    #[arg(long, value_parser = parse_fractions, default_value = "0.75,0.2,0.05")]
    pub fractions: [f64; 3],
    /// Hold this many randomly chosen instances out of training.
    #[arg(long, default_value_t = 0)]
    pub n_out: usize,
}

#[derive(Debug, Args)]
pub struct ConfigureArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Schema document describing the configuration space.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub schema: Option<PathBuf>,
    /// Take the configuration space (and `--instance` features) from a dataset.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Comma-separated feature values.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["features_file", "instance"])]
    pub features: Option<String>,
    /// Features CSV; pick the row with `--instance`.
    #[arg(long, requires = "instance")]
    pub features_file: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long, value_parser = parse_formulation)]
    pub formulation: Formulation,
    #[arg(long, default_value_t = DEFAULT_R_GRID_POINTS)]
    pub r_grid: usize,
    /// Write a JSON record of the solution here.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_parser = parse_formulation)]
    pub formulation: Formulation,
    /// Comma-separated instance ids; all instances by default.
    #[arg(long, value_delimiter = ',')]
    pub instances: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_R_GRID_POINTS)]
    pub r_grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for summary.txt, summary.csv and runs/<k>/records.csv.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Report zero CPU times so that the output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    /// Overrides the file's master_seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// An experiment output directory.
    #[arg(long, default_value = "results")]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: confsearch_core::Error| e.to_string())
}

fn parse_formulation(s: &str) -> std::result::Result<Formulation, String> {
    s.parse().map_err(|e: confsearch_core::Error| e.to_string())
}

fn parse_fractions(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected three comma-separated fractions".to_string())
}

fn parse_features(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| match p.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Usage(format!("feature `{p}` is not a finite number"))),
        })
        .collect()
}

/// Named settings of `c`, in schema order.
pub fn named_settings(schema: &ParameterSchema, c: &Configuration) -> Result<Vec<(String, String)>> {
    let idx = decode_configuration(schema, c)?;
    Ok(schema
        .parameters()
        .iter()
        .zip(idx)
        .map(|(p, k)| (p.name.clone(), p.settings[k].clone()))
        .collect())
}

#[derive(Debug, Serialize)]
struct ConfigurationRecord<'a> {
    format: &'a str,
    version: u32,
    master_seed: u64,
    formulation: &'a str,
    config_id: String,
    bits: String,
    settings: BTreeMap<String, String>,
    r: f64,
    objective: f64,
    predicted: Option<f64>,
}

fn io_err<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io("<stdout>", e))
}

fn check_compatible(model: &StoredModel, formulation: Formulation, schema: &ParameterSchema) -> Result<()> {
    let variant = model.map.variant();
    if formulation.is_pao() != (variant == Variant::Pao) {
        return Err(confsearch_core::Error::Incompatible(format!(
            "a {} model cannot be used with the {formulation} formulation",
            variant.name()
        ))
        .into());
    }
    if model.config_dim() != schema.dimension() {
        return Err(confsearch_core::Error::Incompatible(format!(
            "the model was trained for {} configuration bits, the schema has {}",
            model.config_dim(),
            schema.dimension()
        ))
        .into());
    }
    Ok(())
}

fn solve_for(
    map: &PerformanceMap,
    scaling: &FeatureScaling,
    formulation: Formulation,
    features: &[f64],
    feasible: &[Configuration],
    cs: &ConstraintSystem,
    grid: usize,
) -> Result<CsspSolution> {
    let sol = configure(map, scaling, formulation, features, feasible, cs, grid)?;
    if cs.first_violation(&sol.config)?.is_some() {
        return Err(confsearch_core::Error::Data("solver returned an infeasible configuration".into()).into());
    }
    Ok(sol)
}

fn cmd_dataset_build(a: &DatasetBuildArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    io_err(writeln!(err, "seed: {}", a.seed))?;
    io_err(writeln!(err, "format: {DATASET_FORMAT} v{DATASET_VERSION}"))?;
    let spec = load_schema(&a.schema)?;
    let features = load_features_csv(&a.features)?;
    let source = PerformanceSource::from_arg(&a.source)?;
    if let Some(s) = source.seed() {
        io_err(writeln!(err, "synthetic oracle seed: {s}"))?;
    }
    let default: DefaultChoice = a.default_config.parse()?;
    let ds = build_dataset(features, &spec, &source, a.gamma, &default)?;
    persist::save_dataset(&a.out, &ds, &spec.extra, a.seed)?;
    io_err(writeln!(
        out,
        "{} instances x {} configurations = {} rho entries (gamma {}, default {}) -> {}",
        ds.features.len(),
        ds.configs.len(),
        ds.rho.len(),
        ds.gamma,
        ds.default_config_id,
        a.out.display()
    ))
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    io_err(writeln!(err, "seed: {}", a.seed))?;
    io_err(writeln!(
        err,
        "formats: {DATASET_FORMAT} v{DATASET_VERSION}, {MODEL_FORMAT} v{MODEL_VERSION}"
    ))?;
    let stored = persist::load_dataset(&a.dataset)?;
    let ds = &stored.dataset;
    let ids = ds.instance_ids();
    let in_sample = if a.n_out == 0 {
        ids
    } else {
        let split = split_instances(&ids, a.n_out, derive_seed(a.seed, 0))?;
        io_err(writeln!(out, "held out: {}", split.out_of_sample.join(",")))?;
        split.in_sample
    };
    let train = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: 0,
        weight_init_scale: a.init_scale,
        l2_penalty: a.l2,
    };
    let opts = FitOptions {
        cluster_count: a.clusters,
        fractions: a.fractions,
        seed: derive_seed(a.seed, 1),
        train: train.clone(),
        patience: a.patience,
    };
    let fit = fit_map(ds, a.variant, &in_sample, &opts)?;
    let r = &fit.report;
    let loss = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
    io_err(writeln!(
        out,
        "rows: train {}, validation {}, test {} ({} clusters on {})",
        r.train_rows, r.validation_rows, r.test_rows, r.cluster_count, r.clustered_on
    ))?;
    io_err(writeln!(
        out,
        "loss: train {:.6}, validation {}, test {}",
        r.train_loss,
        loss(r.validation_loss),
        loss(r.test_loss)
    ))?;
    io_err(writeln!(
        out,
        "epochs: {}{}",
        r.epochs_run,
        if r.stopped_early { " (stopped early)" } else { "" }
    ))?;
    let model = StoredModel {
        map: fit.map,
        scaling: fit.scaling,
        train_config: train,
        patience: a.patience,
        master_seed: a.seed,
    };
    persist::save_model(&a.out, &model)?;
    io_err(writeln!(
        out,
        "{} model: input_dim {}, output_dim {} -> {}",
        a.variant.name(),
        model.map.input_dim(),
        model.map.output_dim(),
        a.out.display()
    ))
}

fn cmd_configure(a: &ConfigureArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    io_err(writeln!(err, "seed: {}", a.seed))?;
    io_err(writeln!(
        err,
        "formats: {MODEL_FORMAT} v{MODEL_VERSION}, {RECORD_FORMAT} v{RECORD_VERSION}"
    ))?;
    let model = persist::load_model(&a.model)?;
    let (schema, cs, feasible, dataset) = match (&a.schema, &a.dataset) {
        (Some(path), _) => {
            let spec = load_schema(path)?;
            let feasible: Vec<Configuration> = feasible_entries(&spec)?.into_iter().map(|e| e.config).collect();
            (spec.schema, spec.constraints, feasible, None)
        }
        (None, Some(path)) => {
            let ds = persist::load_dataset(path)?.dataset;
            (ds.schema.clone(), ds.constraints.clone(), ds.config_list(), Some(ds))
        }
        (None, None) => return Err(Error::Usage("give --schema or --dataset".into())),
    };
    check_compatible(&model, a.formulation, &schema)?;
    let features = match (&a.features, &a.features_file, &a.instance, &dataset) {
        (Some(text), _, _, _) => parse_features(text)?,
        (None, Some(path), Some(id), _) => load_features_csv(path)?
            .remove(id)
            .ok_or_else(|| confsearch_core::Error::Data(format!("instance `{id}` not in {}", path.display())))?,
        (None, None, Some(id), Some(ds)) => ds.instance_features(id)?.to_vec(),
        _ => {
            return Err(Error::Usage(
                "give --features, --features-file with --instance, or --dataset with --instance".into(),
            ))
        }
    };
    if features.len() != model.feature_dim() {
        return Err(Error::Usage(format!(
            "the model expects {} features, got {}",
            model.feature_dim(),
            features.len()
        )));
    }
    let master_seed = a.seed;
    let sol = solve_for(
        &model.map,
        &model.scaling,
        a.formulation,
        &features,
        &feasible,
        &cs,
        a.r_grid,
    )?;
    let named = named_settings(&schema, &sol.config)?;
    let id = confsearch_core::pipeline::config_id(&schema, &sol.config)?;
    io_err(writeln!(out, "formulation: {}", a.formulation))?;
    io_err(writeln!(out, "configuration: {id}"))?;
    for (name, value) in &named {
        io_err(writeln!(out, "  {name} = {value}"))?;
    }
    io_err(writeln!(out, "bits: {}", sol.config))?;
    io_err(writeln!(out, "r*: {}", sol.r))?;
    io_err(writeln!(out, "objective: {}", sol.objective))?;
    if let Some(p) = sol.predicted {
        io_err(writeln!(out, "predicted: {p}"))?;
    }
    if let Some(path) = &a.record {
        let record = ConfigurationRecord {
            format: RECORD_FORMAT,
            version: RECORD_VERSION,
            master_seed,
            formulation: a.formulation.name(),
            config_id: id,
            bits: sol.config.to_string(),
            settings: named.into_iter().collect(),
            r: sol.r,
            objective: sol.objective,
            predicted: sol.predicted,
        };
        persist::write_text(path, &persist::to_json(&record))?;
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    io_err(writeln!(err, "seed: {}", a.seed))?;
    io_err(writeln!(
        err,
        "formats: {DATASET_FORMAT} v{DATASET_VERSION}, {MODEL_FORMAT} v{MODEL_VERSION}"
    ))?;
    let ds = persist::load_dataset(&a.dataset)?.dataset;
    let model = persist::load_model(&a.model)?;
    check_compatible(&model, a.formulation, &ds.schema)?;
    let ids = if a.instances.is_empty() {
        ds.instance_ids()
    } else {
        a.instances.clone()
    };
    let feasible = ds.config_list();
    let mut records: Vec<InstanceRecord> = Vec::new();
    for g in &ids {
        let sol = solve_for(
            &model.map,
            &model.scaling,
            a.formulation,
            ds.instance_features(g)?,
            &feasible,
            &ds.constraints,
            a.r_grid,
        )?;
        let rec = evaluate_instance(&ds, g, &sol.config)?;
        io_err(writeln!(
            out,
            "{g}: {} rho {:.4} vs default {:.4} pd {:.4}{}",
            rec.config_id,
            rec.rho_chosen,
            rec.rho_default,
            rec.pd,
            if rec.improved {
                " improved"
            } else if rec.non_worsened {
                " non-worsened"
            } else {
                " worsened"
            }
        ))?;
        records.push(rec);
    }
    let m = RunMetrics::from_records(&records, 0.0);
    io_err(writeln!(
        out,
        "im {}/{}, nw {}/{}, mean pd {:.4}",
        m.im, m.attempts, m.nw, m.attempts, m.pd
    ))?;
    if let Some(path) = &a.out {
        let mut text = report::records_header();
        let secs = vec![0.0; records.len()];
        report::push_records(&mut text, model.map.variant(), &records, &secs, &[]);
        persist::write_text(path, &text)?;
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let file = ExperimentFile::parse(&text)?;
    let cfg = file.to_config(a.seed)?;
    io_err(writeln!(err, "master seed: {}", cfg.master_seed))?;
    let seeds: Vec<String> = (0..cfg.repeats)
        .map(|k| format!("{}", confsearch_core::pipeline::run_seed(cfg.master_seed, k)))
        .collect();
    io_err(writeln!(err, "run seeds: {}", seeds.join(",")))?;
    io_err(writeln!(err, "format: {DATASET_FORMAT} v{DATASET_VERSION}"))?;
    // A relative dataset path is taken relative to the experiment file.
    let dataset = match a.config.parent() {
        Some(dir) if file.dataset.is_relative() => dir.join(&file.dataset),
        _ => file.dataset.clone(),
    };
    let ds = persist::load_dataset(&dataset)?.dataset;
    let result = run_parallel(&ds, &cfg, a.jobs, !a.no_timing)?;
    report::write_reports(&a.out, &result.summary, &result.reports)?;
    io_err(write!(out, "{}", report::summary_table(&result.summary)))
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    io_err(writeln!(err, "seed: {}", a.seed))?;
    let path = a.dir.join("summary.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let summary = report::read_summary_csv(&path, &text)?;
    io_err(write!(out, "{}", report::summary_table(&summary)))
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::DatasetBuild(a) => cmd_dataset_build(a, out, err),
        Command::Train(a) => cmd_train(a, out, err),
        Command::Configure(a) => cmd_configure(a, out, err),
        Command::Evaluate(a) => cmd_evaluate(a, out, err),
        Command::Experiment(a) => cmd_experiment(a, out, err),
        Command::Report(a) => cmd_report(a, out, err),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                ExitStatus::Usage as i32
            } else {
                ExitStatus::Success as i32
            };
        }
    };
    match run(&cli, out, err) {
        Ok(()) => ExitStatus::Success as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_status() as i32
        }
    }
}
