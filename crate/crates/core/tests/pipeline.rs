use std::collections::BTreeMap;

use confsearch_core::config_space::{build_constraints, enumerate_feasible, Parameter, ParameterSchema};
use confsearch_core::cssp::Formulation;
use confsearch_core::logreg::TrainConfig;
use confsearch_core::perf_map::rank_scale_values;
use confsearch_core::pipeline::{
    config_id, fit_map, run_experiment, run_split, ConfigEntry, Dataset, ExperimentConfig, FitOptions, NoClock,
    Variant, VariantSelection,
};

/// 12 instances over a 3×2×2 space; ρ comes from a fixed linear score.
fn dataset() -> Dataset {
    let schema = ParameterSchema::new(vec![
        Parameter::numbered("x", 3),
        Parameter::numbered("y", 2),
        Parameter::numbered("z", 2),
    ])
    .unwrap();
    let cs = build_constraints(&schema, &[]).unwrap();
    let configs: Vec<ConfigEntry> = enumerate_feasible(&schema, &cs)
        .unwrap()
        .into_iter()
        .map(|c| ConfigEntry {
            id: config_id(&schema, &c).unwrap(),
            config: c,
        })
        .collect();
    let weights = [0.8, -0.4, 0.1, 0.5, -0.5, -0.3, 0.3];
    let mut features = BTreeMap::new();
    let mut keys = Vec::new();
    let mut scores = Vec::new();
    for i in 0..12 {
        let f = vec![(i as f64 * 0.37).sin(), (i % 4) as f64 / 3.0];
        for e in &configs {
            let bits: f64 = e.config.to_f64().zip(weights).map(|(b, w)| b * w).sum();
            scores.push(5.0 - (f[0] * 0.6 + f[1] * 0.2 + bits));
            keys.push((format!("g{i:02}"), e.id.clone()));
        }
        features.insert(format!("g{i:02}"), f);
    }
    let rho = rank_scale_values(&scores, 1.0).unwrap();
    let default = configs[configs.len() / 2].id.clone();
    Dataset::new(
        schema,
        cs,
        features,
        configs,
        keys.into_iter().zip(rho).collect(),
        default,
        1.0,
    )
    .unwrap()
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        variants: VariantSelection::Both,
        repeats: 3,
        n_out: 3,
        cluster_count: 3,
        master_seed: 17,
        train: TrainConfig {
            epochs: 40,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn experiment_is_deterministic() {
    let ds = dataset();
    let a = run_experiment(&ds, &config(), &NoClock).unwrap();
    let b = run_experiment(&ds, &config(), &NoClock).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.reports.len(), 6);

    let other = ExperimentConfig {
        master_seed: 18,
        ..config()
    };
    let c = run_experiment(&ds, &other, &NoClock).unwrap();
    assert_ne!(
        a.reports.iter().map(|r| &r.out_of_sample).collect::<Vec<_>>(),
        c.reports.iter().map(|r| &r.out_of_sample).collect::<Vec<_>>()
    );
}

#[test]
fn both_variants_share_the_split_of_a_run() {
    let ds = dataset();
    let result = run_experiment(&ds, &config(), &NoClock).unwrap();
    for pair in result.reports.chunks(2) {
        assert_eq!(pair[0].run_index, pair[1].run_index);
        assert_eq!(pair[0].variant, Variant::Pao);
        assert_eq!(pair[1].variant, Variant::Pai);
        assert_eq!(pair[0].out_of_sample, pair[1].out_of_sample);
        assert_eq!(pair[1].formulation, Formulation::Pai);
    }
}

#[test]
fn held_out_instances_do_not_influence_training() {
    let ds = dataset();
    let cfg = config();
    let split = run_split(&ds, &cfg, 0).unwrap();
    let opts = FitOptions::from_experiment(&cfg, 5);
    let mut tampered = ds.clone();
    for ((inst, _), v) in tampered.rho.iter_mut() {
        if split.out_of_sample.contains(inst) {
            *v = 1.0 - *v;
        }
    }
    for g in &split.out_of_sample {
        tampered.features.get_mut(g).unwrap()[0] += 100.0;
    }
    for variant in [Variant::Pao, Variant::Pai] {
        let a = fit_map(&ds, variant, &split.in_sample, &opts).unwrap();
        let b = fit_map(&tampered, variant, &split.in_sample, &opts).unwrap();
        assert_eq!(a.map, b.map);
        assert_eq!(a.scaling, b.scaling);
    }
}

#[test]
fn records_are_consistent() {
    let ds = dataset();
    let result = run_experiment(&ds, &config(), &NoClock).unwrap();
    for report in &result.reports {
        assert!(report.failures.is_empty());
        assert_eq!(report.records.len(), 3);
        for rec in &report.records {
            assert!(report.out_of_sample.contains(&rec.instance_id));
            if rec.improved {
                assert!(rec.non_worsened);
            }
            assert!((rec.pd - (rec.rho_chosen - rec.rho_default).abs()).abs() < 1e-15);
        }
        let m = report.metrics;
        assert!(m.im <= m.nw && m.nw <= m.attempts);
    }
    let pao = result.summary.get(Variant::Pao).unwrap();
    assert_eq!(pao.runs.len(), 3);
    assert!(pao.aggregate.stdev.is_some());
}

#[test]
fn invalid_settings_are_rejected() {
    let ds = dataset();
    for cfg in [
        ExperimentConfig { n_out: 0, ..config() },
        ExperimentConfig { n_out: 12, ..config() },
        ExperimentConfig { repeats: 0, ..config() },
        ExperimentConfig {
            pao_formulation: Formulation::Pai,
            ..config()
        },
        ExperimentConfig {
            fractions: [0.5, 0.2, 0.2],
            ..config()
        },
    ] {
        assert!(run_experiment(&ds, &cfg, &NoClock).is_err(), "{cfg:?}");
    }
}
