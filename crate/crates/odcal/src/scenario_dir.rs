//! A scenario on disk: one directory with fixed file names.

use std::fs;
use std::path::Path;

use odcal_core::{CongestionLevel, OdVector, Scenario};

use crate::config::{ConfigFile, ScenarioMeta};
use crate::error::{Error, Result};
use crate::formats;

pub const NETWORK: &str = "network.json";
pub const PATHS: &str = "paths.json";
pub const GROUND_TRUTH: &str = "gt_eta.csv";
pub const X_TRUE: &str = "x_true.csv";
pub const X_UPPER: &str = "x_upper.csv";
pub const CONFIG: &str = "config.toml";

/// Writes every scenario file into `dir`, creating it if needed.
pub fn save(dir: &Path, scenario: &Scenario, meta: ScenarioMeta) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats::save_network(&dir.join(NETWORK), &scenario.network)?;
    formats::save_paths(&dir.join(PATHS), &scenario.paths)?;
    let gt = scenario
        .paths
        .ground_truth()
        .ok_or_else(|| Error::Invalid("scenario has no ground truth".into()))?;
    formats::save_ground_truth(&dir.join(GROUND_TRUTH), gt)?;
    formats::save_demand(&dir.join(X_TRUE), &scenario.x_true)?;
    formats::save_demand(&dir.join(X_UPPER), &scenario.x_upper)?;
    ConfigFile::from_parts(&scenario.sim, &scenario.fd, Some(meta)).save(&dir.join(CONFIG))
}

/// Loaded scenario plus its metadata.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub config: ConfigFile,
    pub meta: ScenarioMeta,
}

/// Loads and cross-validates a scenario directory.
pub fn load(dir: &Path) -> Result<LoadedScenario> {
    let network = formats::load_network(&dir.join(NETWORK))?;
    let paths = formats::load_paths(&dir.join(PATHS), &network)?;
    let gt = formats::load_ground_truth(&dir.join(GROUND_TRUTH))?;
    let paths = paths.with_ground_truth(gt)?;
    let config = ConfigFile::load(&dir.join(CONFIG))?;
    let meta = config
        .scenario
        .clone()
        .ok_or_else(|| Error::Invalid(format!("{}: missing [scenario] section", dir.join(CONFIG).display())))?;
    let level = CongestionLevel::parse(&meta.level)
        .ok_or_else(|| Error::Invalid(format!("unknown congestion level `{}`", meta.level)))?;
    let x_true = formats::load_demand(&dir.join(X_TRUE))?;
    let x_upper = formats::load_demand(&dir.join(X_UPPER))?;
    check_len(X_TRUE, &x_true, paths.len())?;
    check_len(X_UPPER, &x_upper, paths.len())?;
    if let Some(z) = x_upper.as_slice().iter().position(|u| !(u.is_finite() && *u > 0.0)) {
        return Err(Error::Invalid(format!("{X_UPPER}: od_index {z} must be positive")));
    }
    if !x_true.is_within(&x_upper) {
        return Err(Error::Invalid(format!("{X_TRUE} lies outside [0, x_upper]")));
    }
    let sim = config.sim_config(&network, &paths)?;
    let fd = config.fd_params(&network)?;
    let scenario = Scenario { network, paths, x_true, x_upper, level, seed: meta.seed, sim, fd };
    Ok(LoadedScenario { scenario, config, meta })
}

fn check_len(file: &str, x: &OdVector, expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Invalid(format!("{file}: {} rows for {expected} OD pairs", x.len())));
    }
    Ok(())
}
