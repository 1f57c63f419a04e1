//! TOML run configuration: simulator keys at top level, analytical-model
//! parameters under `[analytical]`, scenario metadata under `[scenario]`.
//! Missing keys fall back to network-derived defaults.

use std::fs;
use std::path::Path;

use odcal_core::{FdParams, Network, PathSet, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub horizon_s: Option<f64>,
    pub timestep_s: Option<f64>,
    pub warmup_s: Option<f64>,
    pub replications: Option<u32>,
    pub seed: Option<u64>,
    pub noise_cv: Option<f64>,
    pub dynamics_seed: Option<u64>,
    pub analytical: Option<AnalyticalSection>,
    pub scenario: Option<ScenarioMeta>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticalSection {
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub k_jam_vpkm_per_lane: Option<f64>,
    pub v_min_mps: Option<f64>,
    pub kappa1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub level: String,
    /// Seed the scenario was generated from.
    pub seed: u64,
    pub gt_seed: u64,
    pub gt_replications: u32,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|source| Error::Toml { path: path.to_path_buf(), source })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("config serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn from_parts(sim: &SimConfig, fd: &FdParams, scenario: Option<ScenarioMeta>) -> Self {
        Self {
            horizon_s: Some(sim.horizon_s),
            timestep_s: Some(sim.timestep_s),
            warmup_s: Some(sim.warmup_s),
            replications: Some(sim.replications),
            seed: Some(sim.seed),
            noise_cv: Some(sim.noise_cv),
            dynamics_seed: Some(sim.dynamics_seed),
            analytical: Some(AnalyticalSection {
                alpha1: Some(fd.alpha1),
                alpha2: Some(fd.alpha2),
                k_jam_vpkm_per_lane: Some(fd.k_jam_vpkm_per_lane),
                v_min_mps: Some(fd.v_min_mps),
                kappa1: Some(fd.kappa1),
            }),
            scenario,
        }
    }

    /// Simulator configuration with unset keys taken from the defaults for
    /// `net` and `paths`; validated.
    pub fn sim_config(&self, net: &Network, paths: &PathSet) -> Result<SimConfig> {
        let d = SimConfig::defaults_for(net, paths);
        let cfg = SimConfig {
            horizon_s: self.horizon_s.unwrap_or(d.horizon_s),
            timestep_s: self.timestep_s.unwrap_or(d.timestep_s),
            warmup_s: self.warmup_s.unwrap_or(d.warmup_s),
            replications: self.replications.unwrap_or(d.replications),
            seed: self.seed.unwrap_or(d.seed),
            noise_cv: self.noise_cv.unwrap_or(d.noise_cv),
            dynamics_seed: self.dynamics_seed.unwrap_or(d.dynamics_seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fd_params(&self, net: &Network) -> Result<FdParams> {
        let d = FdParams::defaults_for(net);
        let a = self.analytical.clone().unwrap_or_default();
        let fd = FdParams {
            alpha1: a.alpha1.unwrap_or(d.alpha1),
            alpha2: a.alpha2.unwrap_or(d.alpha2),
            k_jam_vpkm_per_lane: a.k_jam_vpkm_per_lane.unwrap_or(d.k_jam_vpkm_per_lane),
            v_min_mps: a.v_min_mps.unwrap_or(d.v_min_mps),
            kappa1: a.kappa1.unwrap_or(d.kappa1),
        };
        fd.validate(net)?;
        Ok(fd)
    }
}
