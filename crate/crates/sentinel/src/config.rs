//! Settings resolution: command-line flags override the environment, which
//! overrides the config file, which overrides built-in defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use tree_sentinel_core::Parameters;

use crate::solver::{DEFAULT_SOLVER_CMD, SOLVER_ENV};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{0} must be a non-negative number of seconds")]
    Seconds(&'static str),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub n_est: Option<Vec<usize>>,
    pub max_d: Option<Vec<usize>>,
    pub s: Option<Vec<usize>>,
}

/// Contents of a TOML config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub solver_cmd: Option<String>,
    pub r_a: Option<f64>,
    pub r_b: Option<f64>,
    pub r_c: Option<usize>,
    pub per_call_timeout_s: Option<f64>,
    pub total_budget_s: Option<f64>,
    pub seed: Option<u64>,
    pub model: Option<PathBuf>,
    pub domain: Option<PathBuf>,
    pub property: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub bench: Option<BenchFile>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source })
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub solver_cmd: Option<String>,
    pub r_a: Option<f64>,
    pub r_b: Option<f64>,
    pub r_c: Option<usize>,
    pub per_call_timeout_s: Option<f64>,
    pub total_budget_s: Option<f64>,
    pub seed: Option<u64>,
    pub model: Option<PathBuf>,
    pub domain: Option<PathBuf>,
    pub property: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub n_est: Option<Vec<usize>>,
    pub max_d: Option<Vec<usize>>,
    pub s: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSweep {
    pub n_est: Vec<usize>,
    pub max_d: Vec<usize>,
    pub s: Vec<usize>,
}

impl Default for BenchSweep {
    fn default() -> Self {
        BenchSweep { n_est: vec![10, 20, 40], max_d: vec![2, 3], s: vec![2, 4] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub solver_cmd: String,
    pub parameters: Parameters,
    pub model: Option<PathBuf>,
    pub domain: Option<PathBuf>,
    pub property: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub bench: BenchSweep,
}

fn seconds(value: f64, name: &'static str) -> Result<Duration, ConfigError> {
    Duration::try_from_secs_f64(value).map_err(|_| ConfigError::Seconds(name))
}

impl Config {
    /// `env` looks up environment variables; it is a parameter so tests can
    /// supply their own.
    pub fn resolve(
        file: FileConfig,
        env: impl Fn(&str) -> Option<String>,
        flags: Overrides,
    ) -> Result<Config, ConfigError> {
        let defaults = Parameters::default();
        let bench_file = file.bench.unwrap_or_default();
        let bench_defaults = BenchSweep::default();
        let per_call = flags.per_call_timeout_s.or(file.per_call_timeout_s);
        let budget = flags.total_budget_s.or(file.total_budget_s);
        Ok(Config {
            solver_cmd: flags
                .solver_cmd
                .or_else(|| env(SOLVER_ENV).filter(|v| !v.trim().is_empty()))
                .or(file.solver_cmd)
                .unwrap_or_else(|| String::from(DEFAULT_SOLVER_CMD)),
            parameters: Parameters {
                r_a: flags.r_a.or(file.r_a).unwrap_or(defaults.r_a),
                r_b: flags.r_b.or(file.r_b).unwrap_or(defaults.r_b),
                r_c: flags.r_c.or(file.r_c).unwrap_or(defaults.r_c),
                per_call_timeout: match per_call {
                    Some(v) => seconds(v, "per-call timeout")?,
                    None => defaults.per_call_timeout,
                },
                total_budget: match budget {
                    Some(v) => seconds(v, "total budget")?,
                    None => defaults.total_budget,
                },
                seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
            },
            model: flags.model.or(file.model),
            domain: flags.domain.or(file.domain),
            property: flags.property.or(file.property),
            out: flags.out.or(file.out),
            report: flags.report.or(file.report),
            bench: BenchSweep {
                n_est: flags.n_est.or(bench_file.n_est).unwrap_or(bench_defaults.n_est),
                max_d: flags.max_d.or(bench_file.max_d).unwrap_or(bench_defaults.max_d),
                s: flags.s.or(bench_file.s).unwrap_or(bench_defaults.s),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn defaults() {
        let c = Config::resolve(FileConfig::default(), no_env, Overrides::default()).unwrap();
        assert_eq!(c.solver_cmd, "z3 -in");
        assert_eq!(c.parameters, Parameters::default());
        assert_eq!(c.bench, BenchSweep::default());
    }

    #[test]
    fn precedence() {
        let file: FileConfig = toml::from_str(
            "solver_cmd = \"cvc5 --lang smt2\"\nr_a = 20.0\nr_b = 30.0\nseed = 4\n[bench]\nn_est = [1, 2]\n",
        )
        .unwrap();
        let env = |k: &str| (k == SOLVER_ENV).then(|| String::from("z3 -in -T:5"));
        let flags = Overrides { r_a: Some(50.0), n_est: Some(vec![7]), ..Overrides::default() };
        let c = Config::resolve(file.clone(), env, flags).unwrap();
        assert_eq!(c.solver_cmd, "z3 -in -T:5");
        assert_eq!(c.parameters.r_a, 50.0);
        assert_eq!(c.parameters.r_b, 30.0);
        assert_eq!(c.parameters.seed, 4);
        assert_eq!(c.bench.n_est, vec![7]);
        let c = Config::resolve(file.clone(), no_env, Overrides::default()).unwrap();
        assert_eq!(c.solver_cmd, "cvc5 --lang smt2");
        assert_eq!(c.bench.n_est, vec![1, 2]);
        let flags = Overrides { solver_cmd: Some(String::from("mine")), ..Overrides::default() };
        assert_eq!(Config::resolve(file, env, flags).unwrap().solver_cmd, "mine");
    }

    #[test]
    fn unknown_keys_and_bad_durations() {
        assert!(toml::from_str::<FileConfig>("r_d = 1").is_err());
        let flags = Overrides { total_budget_s: Some(-1.0), ..Overrides::default() };
        assert!(Config::resolve(FileConfig::default(), no_env, flags).is_err());
    }
}
