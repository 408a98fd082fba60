//! Where raw performance comes from, and assembling a dataset from it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use confsearch_core::config_space::enumerate_feasible;
use confsearch_core::perf_map::{rank_scale, RawPerformance};
use confsearch_core::pipeline::{config_id, ConfigEntry, Dataset};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::external::{run_external, CommandSpec};
use crate::schema_file::SchemaSpec;
use crate::synthetic::{synthetic_performance, SyntheticSpec};
use crate::tables::load_performance_csv;

#[derive(Debug, Clone, PartialEq)]
pub enum PerformanceSource {
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
    External(CommandSpec),
}

impl PerformanceSource {
    /// Parses `csv:PATH`, `synthetic:SPEC.json` or `external:SPEC.json`.
    pub fn from_arg(arg: &str) -> Result<Self> {
        let (kind, path) = arg
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("source `{arg}` must look like KIND:PATH")))?;
        let path = PathBuf::from(path);
        let read_json = |p: &Path| -> Result<String> { std::fs::read_to_string(p).map_err(|e| Error::io(p, e)) };
        match kind {
            "csv" => Ok(Self::Csv(path)),
            "synthetic" => serde_json::from_str(&read_json(&path)?)
                .map(Self::Synthetic)
                .map_err(|e| Error::Persistence(format!("{}: {e}", path.display()))),
            "external" => serde_json::from_str(&read_json(&path)?)
                .map(Self::External)
                .map_err(|e| Error::Persistence(format!("{}: {e}", path.display()))),
            _ => Err(Error::Usage(format!(
                "unknown source kind `{kind}` (csv, synthetic, external)"
            ))),
        }
    }

    /// Master seed recorded as provenance for datasets built from this source.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Synthetic(s) => Some(s.seed),
            _ => None,
        }
    }
}

/// Which feasible configuration serves as the baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefaultChoice {
    /// The lexicographically smallest feasible configuration.
    First,
    /// The feasible configuration at position `len / 2`.
    Middle,
    Id(String),
}

impl FromStr for DefaultChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "first" => Self::First,
            "middle" => Self::Middle,
            _ => Self::Id(s.to_string()),
        })
    }
}

impl DefaultChoice {
    pub fn resolve(&self, configs: &[ConfigEntry]) -> Result<String> {
        match self {
            Self::First => Ok(configs[0].id.clone()),
            Self::Middle => Ok(configs[configs.len() / 2].id.clone()),
            Self::Id(id) if configs.iter().any(|e| &e.id == id) => Ok(id.clone()),
            Self::Id(id) => {
                Err(confsearch_core::Error::Data(format!("default configuration `{id}` is not feasible")).into())
            }
        }
    }
}

pub fn feasible_entries(spec: &SchemaSpec) -> Result<Vec<ConfigEntry>> {
    let configs = enumerate_feasible(&spec.schema, &spec.constraints)?;
    if configs.is_empty() {
        return Err(confsearch_core::Error::EmptyFeasibleSet.into());
    }
    configs
        .into_iter()
        .map(|config| {
            Ok(ConfigEntry {
                id: config_id(&spec.schema, &config)?,
                config,
            })
        })
        .collect()
}

/// Raw gaps for every (instance, configuration) pair, keys ascending.
pub fn collect_performance(
    source: &PerformanceSource,
    features: &BTreeMap<String, Vec<f64>>,
    spec: &SchemaSpec,
    configs: &[ConfigEntry],
) -> Result<RawPerformance> {
    let pairs: Vec<(&String, &ConfigEntry)> = features
        .keys()
        .flat_map(|i| configs.iter().map(move |c| (i, c)))
        .collect();
    let mut keyed: Vec<((String, String), f64)> = match source {
        PerformanceSource::Csv(path) => {
            let raw = load_performance_csv(path)?;
            let table: BTreeMap<(String, String), f64> = raw.keys.into_iter().zip(raw.values).collect();
            let ids: std::collections::BTreeSet<&str> = configs.iter().map(|c| c.id.as_str()).collect();
            if let Some((inst, cfg)) = table
                .keys()
                .find(|(i, c)| !features.contains_key(i) || !ids.contains(c.as_str()))
            {
                return Err(confsearch_core::Error::Data(format!(
                    "{}: pair ({inst}, {cfg}) names an unknown instance or infeasible configuration",
                    path.display()
                ))
                .into());
            }
            pairs
                .iter()
                .map(|(i, c)| {
                    let key = ((*i).clone(), c.id.clone());
                    match table.get(&key) {
                        Some(&v) => Ok((key, v)),
                        None => Err(confsearch_core::Error::Data(format!(
                            "{}: no runs for pair ({i}, {})",
                            path.display(),
                            c.id
                        ))
                        .into()),
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
        PerformanceSource::Synthetic(s) => pairs
            .iter()
            .map(|(i, c)| {
                Ok((
                    ((*i).clone(), c.id.clone()),
                    synthetic_performance(s, &features[*i], &c.config)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        PerformanceSource::External(cmd) => {
            cmd.validate(&spec.schema)?;
            let run = |(i, c): &(&String, &ConfigEntry)| -> Result<((String, String), f64)> {
                Ok((
                    ((*i).clone(), c.id.clone()),
                    run_external(cmd, i, &c.config, &spec.schema)?,
                ))
            };
            if cmd.parallel_pairs {
                pairs.par_iter().map(run).collect::<Result<Vec<_>>>()?
            } else {
                pairs.iter().map(run).collect::<Result<Vec<_>>>()?
            }
        }
    };
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let (keys, values) = keyed.into_iter().unzip();
    Ok(RawPerformance::new(keys, values)?)
}

/// Enumerates the feasible configurations, collects and rank-scales the
/// performance of every pair, and assembles the dataset.
pub fn build_dataset(
    features: BTreeMap<String, Vec<f64>>,
    spec: &SchemaSpec,
    source: &PerformanceSource,
    gamma: f64,
    default: &DefaultChoice,
) -> Result<Dataset> {
    let configs = feasible_entries(spec)?;
    let default_config_id = default.resolve(&configs)?;
    let raw = collect_performance(source, &features, spec, &configs)?;
    let scaled = rank_scale(&raw, gamma)?;
    let rho = scaled.keys.into_iter().zip(scaled.rho).collect();
    Ok(Dataset::new(
        spec.schema.clone(),
        spec.constraints.clone(),
        features,
        configs,
        rho,
        default_config_id,
        gamma,
    )?)
}
