use std::path::{Path, PathBuf};

use confsearch::cli::main_with;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with(
        std::iter::once("confsearch").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn ok(args: &[&str]) -> Run {
    let r = run(args);
    assert_eq!(r.code, 0, "{args:?}\n{}", r.stderr);
    r
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// Builds the demo dataset into `dir` and returns its path.
fn build_dataset(dir: &Path) -> String {
    let out = path(dir, "dataset.json");
    ok(&[
        "dataset-build",
        "--features",
        &data("demo_features.csv"),
        "--schema",
        &data("demo_schema.json"),
        "--source",
        &format!("synthetic:{}", data("demo_synthetic.json")),
        "--default",
        "middle",
        "--out",
        &out,
    ]);
    out
}

fn train(dir: &Path, dataset: &str, variant: &str) -> String {
    let out = path(dir, &format!("{variant}.json"));
    ok(&[
        "train",
        "--dataset",
        dataset,
        "--variant",
        variant,
        "--out",
        &out,
        "--seed",
        "3",
        "--epochs",
        "30",
        "--n-out",
        "6",
    ]);
    out
}

fn write_experiment(dir: &Path, dataset: &str, repeats: usize) -> PathBuf {
    let cfg = dir.join(format!("experiment-{repeats}.json"));
    let doc = serde_json::json!({
        "dataset": dataset,
        "repeats": repeats,
        "n_out": 5,
        "cluster_count": 3,
        "master_seed": 9,
        "train": {"epochs": 20},
    });
    std::fs::write(&cfg, doc.to_string()).unwrap();
    cfg
}

#[test]
fn build_train_configure_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let ds = build_dataset(dir.path());
    let pao = train(dir.path(), &ds, "pao");
    let pai = train(dir.path(), &ds, "pai");

    let r = ok(&[
        "configure",
        "--model",
        &pao,
        "--dataset",
        &ds,
        "--instance",
        "inst01",
        "--formulation",
        "pao-weighted",
    ]);
    assert!(r.stdout.contains("configuration: "));
    assert!(r.stdout.contains("r*: "));
    assert!(r.stderr.contains("confsearch-model v1"));

    let record = path(dir.path(), "record.json");
    let r = ok(&[
        "configure",
        "--model",
        &pai,
        "--schema",
        &data("demo_schema.json"),
        "--features",
        "-0.1,0.2,0.3,-0.5,0.2,0",
        "--formulation",
        "pai",
        "--record",
        &record,
    ]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&record).unwrap()).unwrap();
    assert_eq!(doc["format"], "confsearch-configuration");
    let id = doc["config_id"].as_str().unwrap();
    assert!(r.stdout.contains(&format!("configuration: {id}")));

    let r = ok(&[
        "configure",
        "--model",
        &pao,
        "--schema",
        &data("demo_schema.json"),
        "--features-file",
        &data("demo_features.csv"),
        "--instance",
        "inst02",
        "--formulation",
        "pao-likelihood",
    ]);
    assert!(r.stdout.contains("formulation: pao-likelihood"));

    let records = path(dir.path(), "records.csv");
    let r = ok(&[
        "evaluate",
        "--dataset",
        &ds,
        "--model",
        &pao,
        "--formulation",
        "pao-weighted",
        "--instances",
        "inst01,inst02,inst03",
        "--out",
        &records,
    ]);
    assert!(r.stdout.contains("/3"));
    let text = std::fs::read_to_string(&records).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("variant,instance_id,status"));
}

#[test]
fn experiment_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ds = build_dataset(dir.path());
    let cfg = write_experiment(dir.path(), &ds, 2);
    let cfg = cfg.to_string_lossy();
    let a = path(dir.path(), "a");
    let b = path(dir.path(), "b");
    let first = ok(&["experiment", "--config", &cfg, "--out", &a, "--no-timing"]);
    let second = ok(&[
        "experiment",
        "--config",
        &cfg,
        "--out",
        &b,
        "--no-timing",
        "--jobs",
        "3",
    ]);
    assert_eq!(first.stdout, second.stdout);
    for file in ["summary.csv", "summary.txt", "runs/1/records.csv", "runs/2/records.csv"] {
        let x = std::fs::read(Path::new(&a).join(file)).unwrap();
        let y = std::fs::read(Path::new(&b).join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    assert!(first.stderr.contains("master seed: 9"));
    assert!(first.stdout.contains("PaO = pao-weighted, PaI = pai"));

    let report = ok(&["report", "--dir", &a]);
    assert_eq!(report.stdout, first.stdout);

    let other = ok(&[
        "experiment",
        "--config",
        &cfg,
        "--out",
        &b,
        "--no-timing",
        "--seed",
        "10",
    ]);
    assert!(other.stderr.contains("master seed: 10"));
}

#[test]
fn single_run_has_no_stdev() {
    let dir = tempfile::tempdir().unwrap();
    let ds = build_dataset(dir.path());
    let cfg = write_experiment(dir.path(), &ds, 1);
    let out = path(dir.path(), "res");
    let r = ok(&[
        "experiment",
        "--config",
        &cfg.to_string_lossy(),
        "--out",
        &out,
        "--no-timing",
    ]);
    let stdev = r.stdout.lines().find(|l| l.starts_with("stdev")).unwrap();
    assert!(stdev.contains("n/a"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["no-such-command"]).code, 1);
    assert_eq!(run(&["train", "--dataset"]).code, 1);

    let missing = path(dir.path(), "missing.json");
    let r = run(&[
        "train",
        "--dataset",
        &missing,
        "--variant",
        "pao",
        "--out",
        &path(dir.path(), "m.json"),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("missing.json"));

    let ds = build_dataset(dir.path());
    let pai = train(dir.path(), &ds, "pai");
    let r = run(&[
        "configure",
        "--model",
        &pai,
        "--dataset",
        &ds,
        "--instance",
        "inst01",
        "--formulation",
        "pao-direct",
    ]);
    assert_eq!(r.code, 1);

    let r = run(&[
        "configure",
        "--model",
        &pai,
        "--schema",
        &data("milp_schema.json"),
        "--features",
        "0,0,0,0,0,0",
        "--formulation",
        "pai",
    ]);
    assert_eq!(r.code, 1);

    let r = run(&[
        "configure",
        "--model",
        &pai,
        "--dataset",
        &ds,
        "--features",
        "1,2",
        "--formulation",
        "pai",
    ]);
    assert_eq!(r.code, 1, "{}", r.stderr);

    let truncated = path(dir.path(), "truncated.json");
    let text = std::fs::read_to_string(&ds).unwrap();
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    let r = run(&[
        "train",
        "--dataset",
        &truncated,
        "--variant",
        "pao",
        "--out",
        &path(dir.path(), "m.json"),
    ]);
    assert_eq!(r.code, 2);

    let bad_rate = run(&[
        "train",
        "--dataset",
        &ds,
        "--variant",
        "pao",
        "--out",
        &path(dir.path(), "m.json"),
        "--learning-rate",
        "0",
    ]);
    assert_eq!(bad_rate.code, 1);
}

#[test]
fn bad_inputs_to_dataset_build() {
    let dir = tempfile::tempdir().unwrap();
    let features = path(dir.path(), "features.csv");
    std::fs::write(&features, "instance_id,f1\na,1\nb,oops\n").unwrap();
    let r = run(&[
        "dataset-build",
        "--features",
        &features,
        "--schema",
        &data("demo_schema.json"),
        "--source",
        &format!("synthetic:{}", data("demo_synthetic.json")),
        "--out",
        &path(dir.path(), "ds.json"),
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("features.csv:3:"), "{}", r.stderr);

    let r = run(&[
        "dataset-build",
        "--features",
        &data("demo_features.csv"),
        "--schema",
        &data("demo_schema.json"),
        "--source",
        "carrier-pigeon:x",
        "--out",
        &path(dir.path(), "ds.json"),
    ]);
    assert_eq!(r.code, 1);
}
