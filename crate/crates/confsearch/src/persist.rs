//! Versioned JSON files for datasets and trained performance maps.
//!
//! Floats are written in shortest round-trip form, so every value reads
//! back bit-for-bit. Each file carries a format tag, a version and the
//! master seed it was produced with.

use std::collections::BTreeMap;
use std::path::Path;

use confsearch_core::config_space::{Configuration, LinearInequality};
use confsearch_core::logreg::{LinearModel, MultiOutputModel, TrainConfig};
use confsearch_core::pipeline::{config_id, ConfigEntry, Dataset, FeatureScaling, PerformanceMap, Variant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema_file::SchemaDoc;

pub const DATASET_FORMAT: &str = "confsearch-dataset";
pub const DATASET_VERSION: u32 = 1;
pub const MODEL_FORMAT: &str = "confsearch-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub id: String,
    /// One-hot bits, e.g. `"0100110"`.
    pub bits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoDoc {
    pub instance: String,
    pub config: String,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub format: String,
    pub version: u32,
    pub master_seed: u64,
    pub gamma: f64,
    pub schema: SchemaDoc,
    pub default_config_id: String,
    pub configs: Vec<ConfigDoc>,
    pub features: BTreeMap<String, Vec<f64>>,
    pub rho: Vec<RhoDoc>,
}

/// A dataset plus the provenance stored with it.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub dataset: Dataset,
    pub extra_constraints: Vec<LinearInequality>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigDoc {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weight_init_scale: f64,
    pub l2_penalty: f64,
    #[serde(default)]
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDoc {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub master_seed: u64,
    pub variant: String,
    pub input_dim: usize,
    pub output_dim: usize,
    /// One row per output.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub train_config: TrainConfigDoc,
    pub feature_scaling: ScalingDoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    pub map: PerformanceMap,
    pub scaling: FeatureScaling,
    pub train_config: TrainConfig,
    pub patience: Option<usize>,
    pub master_seed: u64,
}

impl StoredModel {
    pub fn feature_dim(&self) -> usize {
        self.scaling.mean.len()
    }

    /// Number of configuration bits `s` the model was trained for.
    pub fn config_dim(&self) -> usize {
        match &self.map {
            PerformanceMap::Pao(m) => m.input_dim() - self.feature_dim(),
            PerformanceMap::Pai(m) => m.output_dim(),
        }
    }
}

fn persistence(e: impl std::fmt::Display) -> Error {
    Error::Persistence(e.to_string())
}

fn check_header(format: &str, version: u32, want_format: &str, want_version: u32) -> Result<()> {
    if format != want_format {
        return Err(persistence(format!(
            "expected a `{want_format}` file, found `{format}`"
        )));
    }
    if version != want_version {
        return Err(persistence(format!(
            "unsupported {want_format} version {version} (this build reads version {want_version})"
        )));
    }
    Ok(())
}

fn parse_bits(text: &str) -> Result<Configuration> {
    let bits = text
        .chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(persistence(format!("bad configuration bit string `{text}`"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    Configuration::from_bits(bits).map_err(persistence)
}

impl DatasetFile {
    pub fn from_dataset(ds: &Dataset, extra: &[LinearInequality], master_seed: u64) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            master_seed,
            gamma: ds.gamma,
            schema: SchemaDoc::from_spec(&ds.schema, extra),
            default_config_id: ds.default_config_id.clone(),
            configs: ds
                .configs
                .iter()
                .map(|e| ConfigDoc {
                    id: e.id.clone(),
                    bits: e.config.to_string(),
                })
                .collect(),
            features: ds.features.clone(),
            rho: ds
                .rho
                .iter()
                .map(|((instance, config), &rho)| RhoDoc {
                    instance: instance.clone(),
                    config: config.clone(),
                    rho,
                })
                .collect(),
        }
    }

    pub fn into_dataset(self) -> Result<StoredDataset> {
        check_header(&self.format, self.version, DATASET_FORMAT, DATASET_VERSION)?;
        let spec = self.schema.to_spec().map_err(persistence)?;
        let configs = self
            .configs
            .iter()
            .map(|c| {
                let config = parse_bits(&c.bits)?;
                let expected = config_id(&spec.schema, &config).map_err(persistence)?;
                if expected != c.id {
                    return Err(persistence(format!(
                        "configuration `{}` has bits of `{expected}`",
                        c.id
                    )));
                }
                Ok(ConfigEntry {
                    id: c.id.clone(),
                    config,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rho = BTreeMap::new();
        for r in self.rho {
            if rho.insert((r.instance.clone(), r.config.clone()), r.rho).is_some() {
                return Err(persistence(format!(
                    "duplicate rho entry ({}, {})",
                    r.instance, r.config
                )));
            }
        }
        let dataset = Dataset::new(
            spec.schema,
            spec.constraints,
            self.features,
            configs,
            rho,
            self.default_config_id,
            self.gamma,
        )
        .map_err(persistence)?;
        Ok(StoredDataset {
            dataset,
            extra_constraints: spec.extra,
            master_seed: self.master_seed,
        })
    }
}

impl ModelFile {
    pub fn from_model(m: &StoredModel) -> Self {
        let (variant, outputs): (Variant, Vec<&LinearModel>) = match &m.map {
            PerformanceMap::Pao(l) => (Variant::Pao, vec![l]),
            PerformanceMap::Pai(mm) => (Variant::Pai, mm.outputs().iter().collect()),
        };
        let c = &m.train_config;
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            master_seed: m.master_seed,
            variant: variant.name().into(),
            input_dim: m.map.input_dim(),
            output_dim: m.map.output_dim(),
            weights: outputs.iter().map(|o| o.weights.clone()).collect(),
            biases: outputs.iter().map(|o| o.bias).collect(),
            train_config: TrainConfigDoc {
                learning_rate: c.learning_rate,
                epochs: c.epochs,
                batch_size: c.batch_size,
                seed: c.seed,
                weight_init_scale: c.weight_init_scale,
                l2_penalty: c.l2_penalty,
                patience: m.patience,
            },
            feature_scaling: ScalingDoc {
                mean: m.scaling.mean.clone(),
                scale: m.scaling.scale.clone(),
            },
        }
    }

    pub fn into_model(self) -> Result<StoredModel> {
        check_header(&self.format, self.version, MODEL_FORMAT, MODEL_VERSION)?;
        let variant: Variant = self.variant.parse().map_err(persistence)?;
        if self.weights.len() != self.output_dim || self.biases.len() != self.output_dim {
            return Err(persistence("weights/biases do not match output_dim"));
        }
        if self.weights.iter().any(|w| w.len() != self.input_dim) {
            return Err(persistence("weight rows do not match input_dim"));
        }
        let t = self.feature_scaling.mean.len();
        if self.feature_scaling.scale.len() != t {
            return Err(persistence("feature scaling vectors differ in length"));
        }
        let outputs = self
            .weights
            .into_iter()
            .zip(self.biases)
            .map(|(w, b)| LinearModel::new(w, b).map_err(persistence))
            .collect::<Result<Vec<_>>>()?;
        let map = match variant {
            Variant::Pao => {
                if self.output_dim != 1 || self.input_dim <= t {
                    return Err(persistence(
                        "a pao model needs output_dim 1 and input_dim > feature count",
                    ));
                }
                PerformanceMap::Pao(outputs.into_iter().next().expect("one output"))
            }
            Variant::Pai => {
                if self.input_dim != t + 1 {
                    return Err(persistence("a pai model needs input_dim = feature count + 1"));
                }
                PerformanceMap::Pai(MultiOutputModel::new(outputs).map_err(persistence)?)
            }
        };
        let c = self.train_config;
        Ok(StoredModel {
            map,
            scaling: FeatureScaling {
                mean: self.feature_scaling.mean,
                scale: self.feature_scaling.scale,
            },
            train_config: TrainConfig {
                learning_rate: c.learning_rate,
                epochs: c.epochs,
                batch_size: c.batch_size,
                seed: c.seed,
                weight_init_scale: c.weight_init_scale,
                l2_penalty: c.l2_penalty,
            },
            patience: c.patience,
            master_seed: self.master_seed,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(persistence)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn dataset_to_string(ds: &Dataset, extra: &[LinearInequality], master_seed: u64) -> String {
    to_json(&DatasetFile::from_dataset(ds, extra, master_seed))
}

pub fn dataset_from_str(text: &str) -> Result<StoredDataset> {
    from_json::<DatasetFile>(text)?.into_dataset()
}

pub fn save_dataset(path: &Path, ds: &Dataset, extra: &[LinearInequality], master_seed: u64) -> Result<()> {
    write_text(path, &dataset_to_string(ds, extra, master_seed))
}

pub fn load_dataset(path: &Path) -> Result<StoredDataset> {
    dataset_from_str(&read_text(path)?).map_err(|e| match e {
        Error::Persistence(m) => Error::Persistence(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn model_to_string(m: &StoredModel) -> String {
    to_json(&ModelFile::from_model(m))
}

pub fn model_from_str(text: &str) -> Result<StoredModel> {
    from_json::<ModelFile>(text)?.into_model()
}

pub fn save_model(path: &Path, m: &StoredModel) -> Result<()> {
    write_text(path, &model_to_string(m))
}

pub fn load_model(path: &Path) -> Result<StoredModel> {
    model_from_str(&read_text(path)?).map_err(|e| match e {
        Error::Persistence(m) => Error::Persistence(format!("{}: {m}", path.display())),
        other => other,
    })
}
