//! CSV inputs: recorded solver runs and instance features.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use confsearch_core::perf_map::RawPerformance;

use crate::error::{Error, Result};

pub const PERFORMANCE_HEADER: [&str; 4] = ["instance_id", "config_id", "seed", "gap"];

/// Second-smallest value of a seed multiset (the only value for one seed).
pub fn second_best(gaps: &[f64]) -> Option<f64> {
    let mut sorted = gaps.to_vec();
    sorted.sort_by(f64::total_cmp);
    match sorted.len() {
        0 => None,
        1 => Some(sorted[0]),
        _ => Some(sorted[1]),
    }
}

/// Parses a gap: a nonnegative decimal or `inf`.
pub fn parse_gap(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("+inf") {
        return Some(f64::INFINITY);
    }
    let v: f64 = t.parse().ok()?;
    (v.is_finite() && v >= 0.0).then_some(v)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Raw gaps per `(instance_id, config_id)`, keys in ascending order, each
/// reduced over its seeds with [`second_best`].
pub fn read_performance<R: Read>(path: &Path, input: R) -> Result<RawPerformance> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != PERFORMANCE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", PERFORMANCE_HEADER.join(",")),
        });
    }
    let mut runs: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", record.len())));
        }
        let (instance, config) = (&record[0], &record[1]);
        if instance.is_empty() || config.is_empty() {
            return Err(bad("empty instance_id or config_id".into()));
        }
        record[2]
            .parse::<i64>()
            .map_err(|_| bad(format!("seed `{}` is not an integer", &record[2])))?;
        let gap = parse_gap(&record[3])
            .ok_or_else(|| bad(format!("gap `{}` is not a nonnegative number or inf", &record[3])))?;
        runs.entry((instance.to_string(), config.to_string()))
            .or_default()
            .push(gap);
    }
    let (keys, values): (Vec<_>, Vec<_>) = runs
        .into_iter()
        .map(|(k, gaps)| {
            let v = second_best(&gaps).expect("every key has at least one run");
            (k, v)
        })
        .unzip();
    Ok(RawPerformance::new(keys, values)?)
}

pub fn load_performance_csv(path: &Path) -> Result<RawPerformance> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_performance(path, file)
}

/// Features keyed by instance id. The header row is mandatory and fixes `t`.
pub fn read_features<R: Read>(path: &Path, input: R) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 2 || &header[0] != "instance_id" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `instance_id,f_1,...,f_t`".into(),
        });
    }
    let t = header.len() - 1;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != t + 1 {
            return Err(bad(format!("expected {} fields, found {}", t + 1, record.len())));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(bad(format!("feature `{v}` is not a finite number"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if out.insert(record[0].to_string(), values).is_some() {
            return Err(bad(format!("instance `{}` listed twice", &record[0])));
        }
    }
    if out.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no instances".into(),
        });
    }
    Ok(out)
}

pub fn load_features_csv(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_features(path, file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perf(text: &str) -> Result<RawPerformance> {
        read_performance(Path::new("perf.csv"), text.as_bytes())
    }

    #[test]
    fn reduces_seeds_to_second_best() {
        let raw = perf("instance_id,config_id,seed,gap\ng,0-1,1,0.2\ng,0-1,2,0.5\ng,0-1,3,0.1\nh,0-1,1,0.3\nk,0-1,1,inf\nk,0-1,2,inf\nk,0-1,3,0.4\n").unwrap();
        assert_eq!(raw.keys[0], ("g".to_string(), "0-1".to_string()));
        assert_eq!(raw.values, vec![0.2, 0.3, f64::INFINITY]);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let err = perf("instance_id,config_id,seed,gap\ng,0,1,0.2\ng,0,2,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = perf("instance_id,config_id,seed,gap\ng,0,1,-0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(perf("a,b,c,d\n").is_err());
        let err = perf("instance_id,config_id,seed,gap\ng,0,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn features_need_a_header_and_consistent_rows() {
        let f = read_features(Path::new("f.csv"), "instance_id,f_1,f_2\na,1,2\nb,3,-1\n".as_bytes()).unwrap();
        assert_eq!(f["b"], vec![3.0, -1.0]);
        assert!(read_features(Path::new("f.csv"), "a,1,2\n".as_bytes()).is_err());
        assert!(read_features(Path::new("f.csv"), "instance_id,f_1\na,1\na,2\n".as_bytes()).is_err());
        assert!(read_features(Path::new("f.csv"), "instance_id,f_1\na,nan\n".as_bytes()).is_err());
    }

    fn gap() -> impl Strategy<Value = f64> {
        prop_oneof![4 => (0u32..50).prop_map(|k| f64::from(k) / 10.0), 1 => Just(f64::INFINITY)]
    }

    proptest! {
        #[test]
        fn second_best_matches_brute_force(gaps in prop::collection::vec(gap(), 1..8)) {
            // The smallest value strictly after removing one copy of the minimum.
            let min_pos = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
            let rest: Vec<f64> = gaps.iter().enumerate().filter(|&(i, _)| i != min_pos).map(|(_, &v)| v).collect();
            let expected = rest.iter().copied().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
            prop_assert_eq!(second_best(&gaps), Some(expected.unwrap_or(gaps[0])));
        }
    }
}
