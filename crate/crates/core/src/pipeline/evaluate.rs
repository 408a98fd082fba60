use alloc::format;
use alloc::string::String;

use crate::config_space::{is_feasible, Configuration};
use crate::error::{Error, Result};
use crate::pipeline::dataset::Dataset;

/// `ρ(g, c*) ≥ ρ(g, d) − NON_WORSENING_TOLERANCE` counts as non-worsening.
pub const NON_WORSENING_TOLERANCE: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub config_id: String,
    pub config: Configuration,
    pub rho_chosen: f64,
    pub rho_default: f64,
    pub improved: bool,
    pub non_worsened: bool,
    /// `|ρ(g, c*) − ρ(g, d)|`
    pub pd: f64,
}

/// Looks up the stored `ρ` of the chosen and the default configuration for
/// instance `g` and compares them.
pub fn evaluate_instance(ds: &Dataset, g: &str, chosen: &Configuration) -> Result<InstanceRecord> {
    if !is_feasible(&ds.constraints, chosen)? {
        return Err(Error::Data(format!("configuration {chosen} violates the constraints")));
    }
    let pos = ds
        .config_position(chosen)
        .ok_or_else(|| Error::Data(format!("configuration {chosen} is not in the dataset")))?;
    let entry = &ds.configs[pos];
    let rho_chosen = ds.rho(g, &entry.id)?;
    let rho_default = ds.rho(g, &ds.default_config_id)?;
    Ok(InstanceRecord {
        instance_id: g.into(),
        config_id: entry.id.clone(),
        config: chosen.clone(),
        rho_chosen,
        rho_default,
        improved: rho_chosen > rho_default,
        non_worsened: rho_chosen >= rho_default - NON_WORSENING_TOLERANCE,
        pd: libm::fabs(rho_chosen - rho_default),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::dataset::tests::toy_dataset;
    use alloc::string::ToString;

    fn with_rho(chosen: f64, default: f64) -> Dataset {
        let mut ds = toy_dataset();
        ds.rho.insert(("a".to_string(), "0-2".to_string()), chosen);
        ds.rho.insert(("a".to_string(), "1-0".to_string()), default);
        ds
    }

    fn cfg(ds: &Dataset, id: &str) -> Configuration {
        ds.configs.iter().find(|e| e.id == id).unwrap().config.clone()
    }

    #[test]
    fn improvement() {
        let ds = with_rho(0.7, 0.5);
        let r = evaluate_instance(&ds, "a", &cfg(&ds, "0-2")).unwrap();
        assert!(r.improved && r.non_worsened);
        assert!((r.pd - 0.2).abs() < 1e-15);
    }

    #[test]
    fn within_tolerance() {
        let ds = with_rho(0.4995, 0.5);
        let r = evaluate_instance(&ds, "a", &cfg(&ds, "0-2")).unwrap();
        assert!(!r.improved && r.non_worsened);
        assert!((r.pd - 0.0005).abs() < 1e-15);
    }

    #[test]
    fn default_is_neutral() {
        let ds = with_rho(0.3, 0.5);
        let r = evaluate_instance(&ds, "a", &cfg(&ds, "1-0")).unwrap();
        assert!(!r.improved && r.non_worsened);
        assert_eq!(r.pd, 0.0);
    }

    #[test]
    fn unknown_configuration() {
        let ds = toy_dataset();
        let infeasible = Configuration::from_bits(alloc::vec![1, 1, 0, 0, 1]).unwrap();
        assert!(matches!(evaluate_instance(&ds, "a", &infeasible), Err(Error::Data(_))));
        let mut ds = ds;
        let c = ds.configs.remove(2).config;
        let ds = Dataset::new(
            ds.schema,
            ds.constraints,
            ds.features,
            ds.configs,
            alloc::collections::BTreeMap::new(),
            ds.default_config_id,
            1.0,
        )
        .unwrap();
        assert!(matches!(evaluate_instance(&ds, "a", &c), Err(Error::Data(_))));
    }
}
