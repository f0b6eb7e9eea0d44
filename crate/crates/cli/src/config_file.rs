//! Flat `key = value` config files for the experiment command.
//!
//! One field per line, lists comma-separated, `#` starts a comment. The
//! format round-trips: parse → serialize → parse yields an identical config.
//!
//! ```text
//! master_seed = 12345
//! trials = 300
//! m_values = 5, 10, 20, 50, 100, 200
//! degree = 3
//! prior_variances = 1, 0.1, 0.1, 0.1
//! noise_a = 0.1
//! noise_b = 0.04
//! noise_c = 8
//! n_test = 1000
//! out_dir = out
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use reject_gate_core::eval::ExperimentConfig;
use reject_gate_core::synthetic::NoiseSpec;

const KEYS: [&str; 10] = [
    "master_seed",
    "trials",
    "m_values",
    "degree",
    "prior_variances",
    "noise_a",
    "noise_b",
    "noise_c",
    "n_test",
    "out_dir",
];

/// A config-file problem; the message always names the offending field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_scalar<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.trim()
        .parse()
        .map_err(|_| ConfigError(format!("field `{key}` has invalid value `{}`", raw.trim())))
}

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(|part| parse_scalar(key, part))
        .collect()
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError(format!("unknown field `{key}`")));
        }
        if fields.insert(key, value).is_some() {
            return Err(ConfigError(format!("duplicate field `{key}`")));
        }
    }
    let get = |key: &str| -> Result<&str, ConfigError> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| ConfigError(format!("missing field `{key}`")))
    };

    let config = ExperimentConfig {
        master_seed: parse_scalar("master_seed", get("master_seed")?)?,
        trials: parse_scalar("trials", get("trials")?)?,
        m_values: parse_list("m_values", get("m_values")?)?,
        degree: parse_scalar("degree", get("degree")?)?,
        prior_variances: parse_list("prior_variances", get("prior_variances")?)?,
        noise: NoiseSpec {
            a: parse_scalar("noise_a", get("noise_a")?)?,
            b: parse_scalar("noise_b", get("noise_b")?)?,
            c: parse_scalar("noise_c", get("noise_c")?)?,
        },
        n_test: parse_scalar("n_test", get("n_test")?)?,
        out_dir: fields.get("out_dir").map(|v| v.trim().to_string()).unwrap_or_else(|| "out".into()),
    };
    config
        .validate()
        .map_err(|e| ConfigError(e.to_string()))?;
    Ok(config)
}

pub fn serialize(config: &ExperimentConfig) -> String {
    let join = |values: &[String]| values.join(", ");
    let mut out = String::new();
    let _ = writeln!(out, "master_seed = {}", config.master_seed);
    let _ = writeln!(out, "trials = {}", config.trials);
    let _ = writeln!(
        out,
        "m_values = {}",
        join(&config.m_values.iter().map(|m| m.to_string()).collect::<Vec<_>>())
    );
    let _ = writeln!(out, "degree = {}", config.degree);
    let _ = writeln!(
        out,
        "prior_variances = {}",
        join(&config.prior_variances.iter().map(|v| v.to_string()).collect::<Vec<_>>())
    );
    let _ = writeln!(out, "noise_a = {}", config.noise.a);
    let _ = writeln!(out, "noise_b = {}", config.noise.b);
    let _ = writeln!(out, "noise_c = {}", config.noise.c);
    let _ = writeln!(out, "n_test = {}", config.n_test);
    let _ = writeln!(out, "out_dir = {}", config.out_dir);
    out
}
