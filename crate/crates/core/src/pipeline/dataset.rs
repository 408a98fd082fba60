use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::config_space::{
    decode_configuration, is_feasible, settings_key, Configuration, ConstraintSystem, ParameterSchema,
};
use crate::error::{Error, Result};
use crate::logreg::TrainingSet;
use crate::matrix::Matrix;

/// Which way round the performance map is learnt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// `(f, c) → ρ`
    Pao,
    /// `(f, ρ) → c`
    Pai,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Pao => "pao",
            Variant::Pai => "pai",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Pao => "PaO",
            Variant::Pai => "PaI",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pao" => Ok(Variant::Pao),
            "pai" => Ok(Variant::Pai),
            _ => Err(Error::Argument(format!("unknown variant `{s}` (expected pao or pai)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub id: String,
    pub config: Configuration,
}

/// Instance features, the feasible configurations, and `ρ` for every
/// (instance, configuration) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: ParameterSchema,
    pub constraints: ConstraintSystem,
    pub features: BTreeMap<String, Vec<f64>>,
    pub configs: Vec<ConfigEntry>,
    pub rho: BTreeMap<(String, String), f64>,
    pub default_config_id: String,
    pub gamma: f64,
    index: BTreeMap<Configuration, usize>,
}

impl Dataset {
    pub fn new(
        schema: ParameterSchema,
        constraints: ConstraintSystem,
        features: BTreeMap<String, Vec<f64>>,
        configs: Vec<ConfigEntry>,
        rho: BTreeMap<(String, String), f64>,
        default_config_id: String,
        gamma: f64,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("dataset has no instances".into()));
        }
        let t = features.values().next().map_or(0, Vec::len);
        for (id, f) in &features {
            if f.len() != t {
                return Err(Error::Data(format!(
                    "instance `{id}` has {} features, expected {t}",
                    f.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("instance `{id}` has a non-finite feature")));
            }
        }
        if configs.is_empty() {
            return Err(Error::Data("dataset has no configurations".into()));
        }
        let mut index = BTreeMap::new();
        let mut ids = BTreeMap::new();
        for (i, e) in configs.iter().enumerate() {
            if e.config.len() != schema.dimension() {
                return Err(Error::Dimension {
                    expected: schema.dimension(),
                    found: e.config.len(),
                });
            }
            if !is_feasible(&constraints, &e.config)? {
                return Err(Error::Data(format!(
                    "configuration `{}` violates the constraints",
                    e.id
                )));
            }
            if ids.insert(e.id.clone(), i).is_some() || index.insert(e.config.clone(), i).is_some() {
                return Err(Error::Data(format!("configuration `{}` listed twice", e.id)));
            }
        }
        if !ids.contains_key(&default_config_id) {
            return Err(Error::Data(format!(
                "default configuration `{default_config_id}` is not in the dataset"
            )));
        }
        for ((inst, cfg), v) in &rho {
            if !features.contains_key(inst) || !ids.contains_key(cfg) {
                return Err(Error::Data(format!(
                    "performance entry ({inst}, {cfg}) has an unknown key"
                )));
            }
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Data(format!("rho({inst}, {cfg}) = {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            schema,
            constraints,
            features,
            configs,
            rho,
            default_config_id,
            gamma,
            index,
        })
    }

    /// Feature dimension `t`.
    pub fn feature_dim(&self) -> usize {
        self.features.values().next().map_or(0, Vec::len)
    }

    pub fn instance_ids(&self) -> Vec<String> {
        self.features.keys().cloned().collect()
    }

    pub fn config_list(&self) -> Vec<Configuration> {
        self.configs.iter().map(|e| e.config.clone()).collect()
    }

    pub fn config_position(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn default_config(&self) -> &ConfigEntry {
        self.configs
            .iter()
            .find(|e| e.id == self.default_config_id)
            .expect("validated in Dataset::new")
    }

    pub fn rho(&self, instance: &str, config_id: &str) -> Result<f64> {
        self.rho
            .get(&(String::from(instance), String::from(config_id)))
            .copied()
            .ok_or_else(|| Error::Data(format!("no performance value for ({instance}, {config_id})")))
    }

    pub fn instance_features(&self, instance: &str) -> Result<&[f64]> {
        self.features
            .get(instance)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Data(format!("unknown instance `{instance}`")))
    }
}

/// Canonical id of a schema-valid configuration.
pub fn config_id(schema: &ParameterSchema, c: &Configuration) -> Result<String> {
    Ok(settings_key(&decode_configuration(schema, c)?))
}

/// Per-feature standardization fitted on the in-sample instances.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaling {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureScaling {
    pub fn identity(t: usize) -> Self {
        Self {
            mean: alloc::vec![0.0; t],
            scale: alloc::vec![1.0; t],
        }
    }

    /// Mean and population standard deviation over `rows`; zero-variance
    /// features keep a scale of 1.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let first = rows
            .first()
            .ok_or_else(|| Error::Data("cannot fit scaling on zero rows".into()))?;
        let t = first.len();
        let n = rows.len() as f64;
        let mut mean = alloc::vec![0.0; t];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        let mut scale = alloc::vec![0.0; t];
        for r in &rows {
            for ((s, v), m) in scale.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut scale {
            *s = libm::sqrt(*s);
            if *s <= 1e-12 {
                *s = 1.0;
            }
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                found: f.len(),
            });
        }
        Ok(f.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

/// A training set plus the instance each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub set: TrainingSet,
    pub row_instances: Vec<String>,
}

/// Builds the PaO or PaI training set over `in_sample × configs`, rows
/// ordered by instance id then configuration list order. Features pass
/// through `scaling` when given.
pub fn assemble_training(
    variant: Variant,
    ds: &Dataset,
    in_sample: &[String],
    scaling: Option<&FeatureScaling>,
) -> Result<Assembled> {
    if in_sample.is_empty() {
        return Err(Error::Data("in-sample instance set is empty".into()));
    }
    let mut instances: Vec<&String> = in_sample.iter().collect();
    instances.sort();
    instances.dedup();
    let t = ds.feature_dim();
    let s = ds.schema.dimension();
    let (m, k) = match variant {
        Variant::Pao => (t + s, 1),
        Variant::Pai => (t + 1, s),
    };
    let n = instances.len() * ds.configs.len();
    let mut x = Vec::with_capacity(n * m);
    let mut y = Vec::with_capacity(n * k);
    let mut row_instances = Vec::with_capacity(n);
    for inst in instances {
        let raw = ds.instance_features(inst)?;
        let f = match scaling {
            Some(sc) => sc.apply(raw)?,
            None => raw.to_vec(),
        };
        for e in &ds.configs {
            let rho = ds.rho(inst, &e.id)?;
            x.extend_from_slice(&f);
            match variant {
                Variant::Pao => {
                    x.extend(e.config.to_f64());
                    y.push(rho);
                }
                Variant::Pai => {
                    x.push(rho);
                    y.extend(e.config.to_f64());
                }
            }
            row_instances.push(inst.clone());
        }
    }
    let set = TrainingSet::new(Matrix::from_vec(n, m, x)?, Matrix::from_vec(n, k, y)?)?;
    Ok(Assembled { set, row_instances })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::config_space::{build_constraints, enumerate_feasible, Parameter};
    use alloc::string::ToString;
    use alloc::vec;

    /// Two instances × the six configurations of `[(p1,2),(p2,3)]`.
    pub(crate) fn toy_dataset() -> Dataset {
        let schema = ParameterSchema::new(vec![Parameter::numbered("p1", 2), Parameter::numbered("p2", 3)]).unwrap();
        let cs = build_constraints(&schema, &[]).unwrap();
        let configs: Vec<ConfigEntry> = enumerate_feasible(&schema, &cs)
            .unwrap()
            .into_iter()
            .map(|c| ConfigEntry {
                id: config_id(&schema, &c).unwrap(),
                config: c,
            })
            .collect();
        let mut features = BTreeMap::new();
        features.insert("a".to_string(), vec![1.0, 2.0]);
        features.insert("b".to_string(), vec![3.0, -1.0]);
        let mut rho = BTreeMap::new();
        for (k, inst) in ["a", "b"].iter().enumerate() {
            for (i, e) in configs.iter().enumerate() {
                rho.insert((inst.to_string(), e.id.clone()), ((i + k) % 6) as f64 / 5.0);
            }
        }
        Dataset::new(schema, cs, features, configs, rho, "1-0".into(), 1.0).unwrap()
    }

    #[test]
    fn pao_shape() {
        let ds = toy_dataset();
        let a = assemble_training(Variant::Pao, &ds, &["b".into(), "a".into()], None).unwrap();
        assert_eq!((a.set.len(), a.set.input_dim(), a.set.output_dim()), (12, 2 + 5, 1));
        assert_eq!(a.set.x().row(0), &[1.0, 2.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.set.y().get(0, 0), 0.0);
        assert_eq!(a.row_instances[6], "b");
    }

    #[test]
    fn pai_shape() {
        let ds = toy_dataset();
        let a = assemble_training(Variant::Pai, &ds, &["a".into(), "b".into()], None).unwrap();
        assert_eq!((a.set.len(), a.set.input_dim(), a.set.output_dim()), (12, 3, 5));
        assert_eq!(a.set.x().row(1), &[1.0, 2.0, 0.2]);
        assert_eq!(a.set.y().row(1), &[1.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_or_missing() {
        let ds = toy_dataset();
        assert!(matches!(
            assemble_training(Variant::Pao, &ds, &[], None),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            assemble_training(Variant::Pao, &ds, &["zz".into()], None),
            Err(Error::Data(_))
        ));
        let mut partial = ds.clone();
        partial.rho.remove(&("a".to_string(), "0-1".to_string()));
        assert!(matches!(
            assemble_training(Variant::Pai, &partial, &["a".into()], None),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn scaling() {
        let rows: [&[f64]; 3] = [&[1.0, 5.0], &[3.0, 5.0], &[5.0, 5.0]];
        let sc = FeatureScaling::fit(rows).unwrap();
        assert_eq!(sc.mean, vec![3.0, 5.0]);
        assert_eq!(sc.scale[1], 1.0);
        let z = sc.apply(&[5.0, 5.0]).unwrap();
        assert!((z[0] - 2.0 / (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn rejects_unknown_default() {
        let ds = toy_dataset();
        let r = Dataset::new(
            ds.schema.clone(),
            ds.constraints.clone(),
            ds.features.clone(),
            ds.configs.clone(),
            ds.rho.clone(),
            "9-9".into(),
            1.0,
        );
        assert!(matches!(r, Err(Error::Data(_))));
    }
}
