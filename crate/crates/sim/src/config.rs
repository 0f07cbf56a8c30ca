//! `key = value` scenario files.
//!
//! ```text
//! # two pairs, eight antennas
//! K_T = 4
//! M = 8
//! p_source_db = 10, 10, 10, 10
//! p_relay_db = 10
//! rho = 0
//! seed = 1
//! trials = 2000
//! ```
//!
//! Required keys: `K_T`, `M`, `p_source_db`, `p_relay_db`, `rho`, `seed`,
//! `trials`. Optional: `sigma2`, `sinr_targets_db`, `beta`, `subgroups`,
//! `snr_db`. A single `p_source_db` value applies to every source.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use twrelay_core::ScenarioConfig;

use crate::error::{SimError, SimResult};

const REQUIRED: [&str; 7] = ["K_T", "M", "p_source_db", "p_relay_db", "rho", "seed", "trials"];
const OPTIONAL: [&str; 5] = ["sigma2", "sinr_targets_db", "beta", "subgroups", "snr_db"];

fn config_error(msg: String) -> SimError {
    SimError::Config(msg)
}

fn scalar<T: FromStr>(key: &str, raw: &str) -> SimResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| config_error(format!("key `{key}`: cannot parse '{}'", raw.trim())))
}

fn list<T: FromStr>(key: &str, raw: &str) -> SimResult<Vec<T>> {
    raw.split(',').map(|item| scalar(key, item)).collect()
}

pub fn parse_config(text: &str) -> SimResult<ScenarioConfig> {
    let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("line {}: expected `key = value`", no + 1)))?;
        let key = key.trim();
        if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
            return Err(config_error(format!("line {}: unknown key `{key}`", no + 1)));
        }
        if entries.insert(key, value.trim()).is_some() {
            return Err(config_error(format!("line {}: key `{key}` given twice", no + 1)));
        }
    }
    if let Some(missing) = REQUIRED.iter().find(|k| !entries.contains_key(*k)) {
        return Err(config_error(format!("missing required key `{missing}`")));
    }

    let num_sources: usize = scalar("K_T", entries["K_T"])?;
    let mut source_powers_db: Vec<f64> = list("p_source_db", entries["p_source_db"])?;
    if source_powers_db.len() == 1 {
        source_powers_db = vec![source_powers_db[0]; num_sources];
    }
    let cfg = ScenarioConfig {
        num_sources,
        antennas: scalar("M", entries["M"])?,
        source_powers_db,
        relay_power_db: scalar("p_relay_db", entries["p_relay_db"])?,
        noise_power: entries.get("sigma2").map(|v| scalar("sigma2", v)).transpose()?.unwrap_or(1.0),
        correlation: scalar("rho", entries["rho"])?,
        seed: scalar("seed", entries["seed"])?,
        trials: scalar("trials", entries["trials"])?,
        sinr_targets_db: entries.get("sinr_targets_db").map(|v| list("sinr_targets_db", v)).transpose()?,
        response_gains: entries.get("beta").map(|v| list("beta", v)).transpose()?,
        subgroups: entries.get("subgroups").map(|v| list("subgroups", v)).transpose()?,
        snr_db: entries.get("snr_db").map(|v| list("snr_db", v)).transpose()?,
    };
    validate(&cfg)?;
    Ok(cfg)
}

/// Checks a config, reporting problems as configuration errors.
pub fn validate(cfg: &ScenarioConfig) -> SimResult<()> {
    cfg.validate().map_err(|e| match e {
        twrelay_core::Error::InvalidArgument(msg) => config_error(msg),
        other => SimError::Core(other),
    })?;
    if let Some(grid) = &cfg.snr_db {
        if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
            return Err(config_error("key `snr_db`: needs finite values".into()));
        }
    }
    Ok(())
}

pub fn load_config(path: &Path) -> SimResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Scenario of the two-pair rate-region experiment.
pub fn rate_region_defaults() -> ScenarioConfig {
    ScenarioConfig { trials: 2000, seed: 1, ..ScenarioConfig::default() }
}

/// Scenario of the four-pair sum-rate experiment.
pub fn sumrate_defaults() -> ScenarioConfig {
    ScenarioConfig {
        num_sources: 8,
        source_powers_db: vec![10.0; 8],
        trials: 2000,
        seed: 2,
        subgroups: Some(vec![1, 2, 4]),
        ..ScenarioConfig::default()
    }
}

/// Relay SNR grid from -5 to 25 dB in 2.5 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=12).map(|i| -5.0 + 2.5 * i as f64).collect()
}
