//! Table-shaped experiment reports: an aligned text table, a CSV summary
//! and one CSV of instance records per run.

use std::fmt::Write as _;
use std::path::Path;

use confsearch_core::pipeline::{
    aggregate, ExperimentSummary, InstanceRecord, RunMetrics, RunReport, Variant, VariantSummary,
};

use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "row,variant,formulation,run,im,nw,attempts,im_ratio,nw_ratio,pd,cpu_seconds";
pub const RECORDS_HEADER: &str =
    "variant,instance_id,status,config_id,bits,rho_chosen,rho_default,improved,non_worsened,pd,solve_seconds";

const RUN_WIDTH: usize = 6;
const CELL_WIDTH: usize = 9;

fn cell(out: &mut String, text: &str) {
    let _ = write!(out, "{text:>CELL_WIDTH$}");
}

fn count(n: usize, d: usize) -> String {
    format!("{n}/{d}")
}

fn fixed(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v:.2}")
    }
}

/// Aligned table: one column group per metric, one sub-column per variant.
pub fn summary_table(summary: &ExperimentSummary) -> String {
    let vs = &summary.variants;
    let group = CELL_WIDTH * vs.len();
    let mut out = String::new();
    let _ = write!(out, "{:<RUN_WIDTH$}", "run");
    for metric in ["im", "nw", "pd", "CPU"] {
        let _ = write!(out, "{metric:>group$}");
    }
    out.push('\n');
    let _ = write!(out, "{:<RUN_WIDTH$}", "");
    for _ in 0..4 {
        for v in vs {
            cell(&mut out, v.variant.label());
        }
    }
    out.push('\n');

    let runs = vs.iter().map(|v| v.runs.len()).max().unwrap_or(0);
    for k in 0..runs {
        let _ = write!(out, "{:<RUN_WIDTH$}", k + 1);
        let get = |v: &VariantSummary| v.runs.get(k).copied();
        for v in vs {
            cell(&mut out, &get(v).map_or("-".into(), |r| count(r.im, r.attempts)));
        }
        for v in vs {
            cell(&mut out, &get(v).map_or("-".into(), |r| count(r.nw, r.attempts)));
        }
        for v in vs {
            cell(
                &mut out,
                &get(v).filter(|r| r.attempts > 0).map_or("-".into(), |r| fixed(r.pd)),
            );
        }
        for v in vs {
            cell(&mut out, &get(v).map_or("-".into(), |r| fixed(r.cpu_seconds)));
        }
        out.push('\n');
    }

    let _ = write!(out, "{:<RUN_WIDTH$}", "sum");
    for v in vs {
        cell(&mut out, &count(v.aggregate.sum.im, v.aggregate.sum.attempts));
    }
    for v in vs {
        cell(&mut out, &count(v.aggregate.sum.nw, v.aggregate.sum.attempts));
    }
    for v in vs {
        cell(&mut out, &fixed(v.aggregate.sum.pd));
    }
    for v in vs {
        cell(&mut out, &fixed(v.aggregate.sum.cpu_seconds));
    }
    out.push('\n');

    for (label, pick) in [("mean", 0), ("stdev", 1)] {
        let _ = write!(out, "{label:<RUN_WIDTH$}");
        let row = |v: &VariantSummary| {
            if pick == 0 {
                Some(v.aggregate.mean)
            } else {
                v.aggregate.stdev
            }
        };
        for field in 0..4 {
            for v in vs {
                let text = row(v).map_or("n/a".into(), |r| fixed([r.im, r.nw, r.pd, r.cpu_seconds][field]));
                cell(&mut out, &text);
            }
        }
        out.push('\n');
    }
    let legend: Vec<String> = vs
        .iter()
        .map(|v| format!("{} = {}", v.variant.label(), v.formulation))
        .collect();
    let _ = writeln!(out, "\n{}", legend.join(", "));
    out
}

fn opt(v: Option<f64>) -> String {
    v.filter(|x| !x.is_nan()).map_or(String::new(), |x| format!("{x}"))
}

pub fn summary_csv(summary: &ExperimentSummary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for v in &summary.variants {
        let (name, form) = (v.variant.name(), v.formulation.name());
        for (k, r) in v.runs.iter().enumerate() {
            let pd = (r.attempts > 0).then_some(r.pd);
            let _ = writeln!(
                out,
                "run,{name},{form},{},{},{},{},{},{},{},{}",
                k + 1,
                r.im,
                r.nw,
                r.attempts,
                opt(r.im_ratio()),
                opt(r.nw_ratio()),
                opt(pd),
                r.cpu_seconds
            );
        }
        let a = &v.aggregate;
        let s = &a.sum;
        let _ = writeln!(
            out,
            "sum,{name},{form},,{},{},{},,,{},{}",
            s.im, s.nw, s.attempts, s.pd, s.cpu_seconds
        );
        for (label, row) in [("mean", Some(a.mean)), ("stdev", a.stdev)] {
            let f = |g: fn(&confsearch_core::pipeline::summary::StatRow) -> f64| opt(row.as_ref().map(g));
            let _ = writeln!(
                out,
                "{label},{name},{form},,,,,{},{},{},{}",
                f(|r| r.im),
                f(|r| r.nw),
                f(|r| r.pd),
                f(|r| r.cpu_seconds)
            );
        }
    }
    out
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, field: &str, text: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad {field} `{text}`"),
    })
}

/// Rebuilds a summary from the `run` rows of a summary CSV; the aggregate
/// rows are recomputed.
pub fn read_summary_csv(path: &Path, text: &str) -> Result<ExperimentSummary> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{SUMMARY_HEADER}`"),
        });
    }
    let mut variants: Vec<VariantSummary> = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i as u64 + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n,
                message: format!("expected 11 fields, found {}", f.len()),
            });
        }
        if f[0] != "run" {
            continue;
        }
        let variant: Variant = parse_field(path, n, "variant", f[1])?;
        let formulation = parse_field(path, n, "formulation", f[2])?;
        let pd = if f[9].is_empty() {
            0.0
        } else {
            parse_field(path, n, "pd", f[9])?
        };
        let metrics = RunMetrics {
            im: parse_field(path, n, "im", f[4])?,
            nw: parse_field(path, n, "nw", f[5])?,
            attempts: parse_field(path, n, "attempts", f[6])?,
            pd,
            cpu_seconds: parse_field(path, n, "cpu_seconds", f[10])?,
        };
        match variants.iter_mut().find(|v| v.variant == variant) {
            Some(v) => v.runs.push(metrics),
            None => variants.push(VariantSummary {
                variant,
                formulation,
                runs: vec![metrics],
                aggregate: aggregate(&[]),
            }),
        }
    }
    for v in &mut variants {
        v.aggregate = aggregate(&v.runs);
    }
    Ok(ExperimentSummary { variants })
}

pub fn records_header() -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    out
}

/// Appends one line per record (aligned with `solve_seconds`) and per failed instance.
pub fn push_records(
    out: &mut String,
    variant: Variant,
    records: &[InstanceRecord],
    solve_seconds: &[f64],
    failures: &[(String, String)],
) {
    let name = variant.name();
    for (rec, secs) in records.iter().zip(solve_seconds) {
        let _ = writeln!(
            out,
            "{name},{},ok,{},{},{},{},{},{},{},{}",
            rec.instance_id,
            rec.config_id,
            rec.config,
            rec.rho_chosen,
            rec.rho_default,
            rec.improved,
            rec.non_worsened,
            rec.pd,
            secs
        );
    }
    for (instance, _) in failures {
        let _ = writeln!(out, "{name},{instance},failed,,,,,,,,");
    }
}

/// Records of one run, all variants.
pub fn records_csv(reports: &[&RunReport]) -> String {
    let mut out = records_header();
    for r in reports {
        push_records(&mut out, r.variant, &r.records, &r.solve_seconds, &r.failures);
    }
    out
}

/// Writes `summary.txt`, `summary.csv` and `runs/<k>/records.csv` under `dir`.
pub fn write_reports(dir: &Path, summary: &ExperimentSummary, reports: &[RunReport]) -> Result<()> {
    crate::persist::write_text(&dir.join("summary.txt"), &summary_table(summary))?;
    crate::persist::write_text(&dir.join("summary.csv"), &summary_csv(summary))?;
    let runs = reports.iter().map(|r| r.run_index).max().map_or(0, |m| m + 1);
    for k in 0..runs {
        let mine: Vec<&RunReport> = reports.iter().filter(|r| r.run_index == k).collect();
        let path = dir.join("runs").join((k + 1).to_string()).join("records.csv");
        crate::persist::write_text(&path, &records_csv(&mine))?;
    }
    Ok(())
}
