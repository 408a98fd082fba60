//! Runs an external solver command once per seed and reads the gap from
//! its output. Commands are spawned directly (no shell), with placeholders
//! substituted per argument.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use confsearch_core::config_space::{decode_configuration, Configuration, ParameterSchema};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{parse_gap, second_best};

pub const DEFAULT_GAP_PATTERN: &str = r"gap\s*[=:]\s*([0-9.eE+\-]+|inf)";

fn default_seeds() -> usize {
    3
}

fn default_pattern() -> String {
    DEFAULT_GAP_PATTERN.to_string()
}

fn default_grace() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandSpec {
    /// Program and arguments. Placeholders: `{instance}`, `{seed}`,
    /// `{timelimit}` and `{param:NAME}` for every schema parameter.
    pub command: Vec<String>,
    pub time_limit_seconds: f64,
    /// Extra wall time before a run is killed and counted as `+∞`.
    #[serde(default = "default_grace")]
    pub kill_grace_seconds: f64,
    #[serde(default = "default_seeds")]
    pub seeds_per_pair: usize,
    #[serde(default)]
    pub first_seed: u64,
    /// Regular expression whose first capture group is the gap; the last
    /// match in the output wins.
    #[serde(default = "default_pattern")]
    pub gap_pattern: String,
    #[serde(default)]
    pub log_dir: Option<PathBuf>,
    #[serde(default)]
    pub parallel_pairs: bool,
    /// Instance file per instance id; ids missing here are used as paths.
    #[serde(default)]
    pub instance_paths: BTreeMap<String, PathBuf>,
}

fn placeholders(arg: &str) -> impl Iterator<Item = &str> {
    arg.match_indices('{')
        .filter_map(move |(i, _)| arg[i + 1..].find('}').map(|j| &arg[i + 1..i + 1 + j]))
}

impl CommandSpec {
    pub fn validate(&self, schema: &ParameterSchema) -> Result<Regex> {
        let usage = |m: String| Error::Usage(m);
        if self.command.is_empty() {
            return Err(usage("command template is empty".into()));
        }
        let mut seen_instance = false;
        let mut seen_seed = false;
        for name in self.command.iter().flat_map(|a| placeholders(a)) {
            match name {
                "instance" => seen_instance = true,
                "seed" => seen_seed = true,
                "timelimit" => {}
                _ => match name.strip_prefix("param:") {
                    Some(p) if schema.parameter_index(p).is_some() => {}
                    _ => return Err(usage(format!("unknown placeholder `{{{name}}}` in command template"))),
                },
            }
        }
        if !(seen_instance && seen_seed) {
            return Err(usage("command template must contain {instance} and {seed}".into()));
        }
        if self.seeds_per_pair == 0 {
            return Err(usage("seeds_per_pair must be positive".into()));
        }
        if !(self.time_limit_seconds > 0.0 && self.time_limit_seconds.is_finite())
            || !(self.kill_grace_seconds >= 0.0 && self.kill_grace_seconds.is_finite())
        {
            return Err(usage("time limits must be positive and finite".into()));
        }
        let re = Regex::new(&self.gap_pattern).map_err(|e| usage(format!("bad gap pattern: {e}")))?;
        if re.captures_len() < 2 {
            return Err(usage("gap pattern needs a capture group".into()));
        }
        Ok(re)
    }

    pub fn instance_path(&self, instance_id: &str) -> PathBuf {
        self.instance_paths
            .get(instance_id)
            .cloned()
            .unwrap_or_else(|| PathBuf::from(instance_id))
    }

    fn render(&self, instance: &Path, seed: u64, settings: &BTreeMap<&str, &str>) -> Vec<String> {
        self.command
            .iter()
            .map(|arg| {
                let mut out = arg
                    .replace("{instance}", &instance.to_string_lossy())
                    .replace("{seed}", &seed.to_string())
                    .replace("{timelimit}", &format_seconds(self.time_limit_seconds));
                for (name, value) in settings {
                    out = out.replace(&format!("{{param:{name}}}"), value);
                }
                out
            })
            .collect()
    }
}

fn format_seconds(s: f64) -> String {
    if s.fract() == 0.0 {
        format!("{}", s as u64)
    } else {
        format!("{s}")
    }
}

/// Last match of the pattern's first group, as a gap; `None` when absent or unparseable.
pub fn parse_output(re: &Regex, output: &str) -> Option<f64> {
    re.captures_iter(output)
        .last()
        .and_then(|c| c.get(1))
        .and_then(|m| parse_gap(m.as_str()))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || "-_.".contains(ch) {
                ch
            } else {
                '_'
            }
        })
        .collect()
}

/// Gap of one run, `+∞` if it timed out or printed no parseable gap.
fn run_seed(args: &[String], out_path: &Path, limit: Duration, re: &Regex) -> Result<f64> {
    let stdout = File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    let stderr = stdout.try_clone().map_err(|e| Error::io(out_path, e))?;
    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .spawn()
        .map_err(|e| Error::External(format!("cannot start `{}`: {e}", args[0])))?;
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= limit => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(f64::INFINITY);
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(Error::External(format!("waiting for `{}`: {e}", args[0]))),
        }
    }
    let bytes = std::fs::read(out_path).map_err(|e| Error::io(out_path, e))?;
    Ok(parse_output(re, &String::from_utf8_lossy(&bytes)).unwrap_or(f64::INFINITY))
}

/// Runs the command `seeds_per_pair` times for one (instance, configuration)
/// pair and returns the second-best gap. Output of seed `k` goes to
/// `<log_dir>/<instance>/<config>/seed-<k>.log`, or to a scratch directory
/// that is removed afterwards when no log directory is set.
pub fn run_external(spec: &CommandSpec, instance_id: &str, c: &Configuration, schema: &ParameterSchema) -> Result<f64> {
    let re = spec.validate(schema)?;
    let settings_idx = decode_configuration(schema, c)?;
    let settings: BTreeMap<&str, &str> = schema
        .parameters()
        .iter()
        .zip(&settings_idx)
        .map(|(p, &k)| (p.name.as_str(), p.settings[k].as_str()))
        .collect();
    let config_key = confsearch_core::config_space::settings_key(&settings_idx);

    let scratch;
    let dir = match &spec.log_dir {
        Some(root) => {
            let d = root.join(sanitize(instance_id)).join(sanitize(&config_key));
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            d
        }
        None => {
            scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            scratch.path().to_path_buf()
        }
    };
    let instance = spec.instance_path(instance_id);
    let limit = Duration::from_secs_f64(spec.time_limit_seconds + spec.kill_grace_seconds);
    let mut gaps = Vec::with_capacity(spec.seeds_per_pair);
    for k in 0..spec.seeds_per_pair {
        let seed = spec.first_seed + k as u64;
        let args = spec.render(&instance, seed, &settings);
        gaps.push(run_seed(&args, &dir.join(format!("seed-{k}.log")), limit, &re)?);
    }
    Ok(second_best(&gaps).expect("at least one seed"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use confsearch_core::config_space::{Parameter, ParameterSchema};

    fn schema() -> ParameterSchema {
        ParameterSchema::new(vec![Parameter::new("alg", ["primal", "dual"])]).unwrap()
    }

    fn spec(command: &[&str]) -> CommandSpec {
        serde_json::from_value(serde_json::json!({
            "command": command,
            "time_limit_seconds": 1.0,
            "kill_grace_seconds": 0.5,
        }))
        .unwrap()
    }

    #[test]
    fn last_match_wins() {
        let re = Regex::new(DEFAULT_GAP_PATTERN).unwrap();
        assert_eq!(parse_output(&re, "gap = 0.5\n... gap=0.25\n"), Some(0.25));
        assert_eq!(parse_output(&re, "gap: inf"), Some(f64::INFINITY));
        assert_eq!(parse_output(&re, "no result"), None);
    }

    #[test]
    fn validates_placeholders() {
        let s = schema();
        assert!(spec(&["solver", "{instance}", "{seed}", "{param:alg}", "{timelimit}"])
            .validate(&s)
            .is_ok());
        assert!(spec(&["solver", "{instance}"]).validate(&s).is_err());
        assert!(spec(&["solver", "{instance}", "{seed}", "{param:nope}"])
            .validate(&s)
            .is_err());
        assert!(spec(&[]).validate(&s).is_err());
    }

    #[test]
    fn renders_named_settings() {
        let s = spec(&[
            "solver",
            "--file={instance}",
            "-s",
            "{seed}",
            "alg={param:alg}",
            "t={timelimit}",
        ]);
        let settings = BTreeMap::from([("alg", "dual")]);
        assert_eq!(
            s.render(Path::new("x.lp"), 4, &settings),
            vec!["solver", "--file=x.lp", "-s", "4", "alg=dual", "t=1"]
        );
    }
}
