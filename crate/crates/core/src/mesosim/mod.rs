//! Stochastic mesoscopic traffic simulator.
//!
//! Vehicles of OD pair `z` depart as a Poisson process of rate `x_z` and follow
//! their fixed route. On entering a segment a vehicle draws its traversal
//! speed from the segment's fundamental diagram evaluated at the occupancy
//! seen at the start of the current timestep, times a per-segment lognormal
//! noise factor. At the downstream end it joins a vertical FIFO queue that
//! discharges at the segment's capacity.
//!
//! The simulator's diagram uses per-segment exponents drawn once per scenario,
//! so the shared-exponent analytical model only approximates it.

mod engine;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::fd;
use crate::network::Network;
use crate::paths::{OdVector, PathError, PathSet};
use crate::seeds;

pub use engine::{SimState, VehicleRecord};

/// Simulator speed floor as a fraction of the speed limit.
pub const MIN_SPEED_RATIO: f64 = 0.4;
/// Range of the per-segment diagram exponents.
pub const EXPONENT_RANGE: (f64, f64) = (1.5, 3.5);
/// Share of generated vehicles that must finish for a run to count.
pub const MIN_COMPLETION_RATIO: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub horizon_s: f64,
    pub timestep_s: f64,
    pub warmup_s: f64,
    pub replications: u32,
    /// Replication seed; replication `r` of OD `z` uses a fixed stream of it.
    pub seed: u64,
    pub noise_cv: f64,
    /// Seed of the per-segment diagram exponents (a scenario property).
    pub dynamics_seed: u64,
}

impl SimConfig {
    /// Warmup equal to the longest free-flow path time, then at least one hour
    /// (and at least three path times overall) of simulated demand.
    pub fn defaults_for(net: &Network, paths: &PathSet) -> Self {
        let longest = paths.free_flow_times_s(net).into_iter().fold(0.0, f64::max);
        Self {
            horizon_s: (3.0 * longest).max(longest + 3600.0),
            timestep_s: 1.0,
            warmup_s: longest,
            replications: 5,
            seed: 0,
            noise_cv: 0.1,
            dynamics_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.timestep_s.is_finite() && self.timestep_s > 0.0) {
            return Err(SimError::InvalidConfig("timestep_s must be positive"));
        }
        if !(self.warmup_s.is_finite() && self.warmup_s >= 0.0) {
            return Err(SimError::InvalidConfig("warmup_s must be non-negative"));
        }
        if !(self.horizon_s.is_finite() && self.horizon_s > self.warmup_s) {
            return Err(SimError::InvalidConfig("horizon_s must exceed warmup_s"));
        }
        if self.replications == 0 {
            return Err(SimError::InvalidConfig("replications must be at least 1"));
        }
        if !(self.noise_cv.is_finite() && self.noise_cv >= 0.0) {
            return Err(SimError::InvalidConfig("noise_cv must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("expected {expected} OD demands, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("OD {od}: demand must be finite and non-negative")]
    InvalidDemand { od: usize },
    #[error("gridlock: only {completed} of {generated} vehicles completed within the horizon")]
    Gridlock { completed: u64, generated: u64 },
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Simulator-side diagram of one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentDynamics {
    pub alpha1: f64,
    pub alpha2: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub k_jam_vpkm_per_lane: f64,
    /// Lane-kilometers, converts occupancy to density.
    pub lane_km: f64,
    pub length_m: f64,
    /// Minimum gap between discharges at the downstream end.
    pub headway_s: f64,
}

impl SegmentDynamics {
    #[inline]
    pub fn speed_at_occupancy(&self, vehicles: u32) -> f64 {
        let u = vehicles as f64 / self.lane_km / self.k_jam_vpkm_per_lane;
        fd::speed(u, self.v_min_mps, self.v_max_mps, self.alpha1, self.alpha2)
    }
}

/// Per-segment simulator diagrams for a network.
#[derive(Clone, Debug, PartialEq)]
pub struct SimDynamics {
    segments: Vec<SegmentDynamics>,
}

impl SimDynamics {
    /// Draws exponents uniformly from [`EXPONENT_RANGE`] and sets each jam
    /// density so that the diagram's maximum flow equals the segment capacity.
    pub fn draw(net: &Network, seed: u64) -> Self {
        let mut rng = seeds::stream_rng(seed, seeds::tag::DYNAMICS);
        let (lo, hi) = EXPONENT_RANGE;
        let segments = net
            .segments()
            .iter()
            .map(|s| {
                let alpha1 = rng.random_range(lo..=hi);
                let alpha2 = rng.random_range(lo..=hi);
                let v_max_kmh = s.v_max_mps * 3.6;
                let k_jam = s.capacity_per_lane_vph / (v_max_kmh * peak_flow_ratio(alpha1, alpha2));
                SegmentDynamics {
                    alpha1,
                    alpha2,
                    v_min_mps: MIN_SPEED_RATIO * s.v_max_mps,
                    v_max_mps: s.v_max_mps,
                    k_jam_vpkm_per_lane: k_jam,
                    lane_km: s.length_m / 1000.0 * s.lanes as f64,
                    length_m: s.length_m,
                    headway_s: 3600.0 / (s.capacity_per_lane_vph * s.lanes as f64),
                }
            })
            .collect();
        Self { segments }
    }

    #[inline]
    pub fn segments(&self) -> &[SegmentDynamics] {
        &self.segments
    }
}

/// `max_u u · v(u) / v_max` over `u ∈ [0, 1]`: the diagram's peak flow in
/// units of `k_jam · v_max`.
fn peak_flow_ratio(alpha1: f64, alpha2: f64) -> f64 {
    let flow = |u: f64| u * fd::speed(u, MIN_SPEED_RATIO, 1.0, alpha1, alpha2);
    const GRID: usize = 128;
    let best = (0..=GRID).max_by(|&a, &b| {
        flow(a as f64 / GRID as f64).total_cmp(&flow(b as f64 / GRID as f64))
    });
    let j = best.unwrap_or(GRID) as f64;
    // golden-section refinement inside the bracketing grid cells
    let (mut a, mut b) = (((j - 1.0) / GRID as f64).max(0.0), ((j + 1.0) / GRID as f64).min(1.0));
    let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    for _ in 0..40 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if flow(c) >= flow(d) {
            b = d;
        } else {
            a = c;
        }
    }
    flow(0.5 * (a + b)).max(flow(j / GRID as f64))
}

/// Across-replication summary of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Estimate of the expected travel time of each path, seconds.
    pub mean_eta_s: Vec<f64>,
    /// Sample variance of the per-replication path means, s².
    pub eta_var_s2: Vec<f64>,
    /// Completed trips per OD, summed over replications.
    pub completed: Vec<u64>,
    /// Generated trips per OD, summed over replications.
    pub generated: Vec<u64>,
    /// Vehicles still in the network at the horizon, summed over replications.
    pub in_network: u64,
    pub replications: u32,
    /// Mean squared path-ETA error against the attached ground truth.
    pub loss: Option<f64>,
}

/// A network, its routes, and a simulation configuration.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    net: &'a Network,
    paths: &'a PathSet,
    dynamics: SimDynamics,
    config: SimConfig,
    free_flow_s: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a Network, paths: &'a PathSet, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        if let Some(bad) = paths.routes().iter().flatten().find(|s| s.index() >= net.len()) {
            return Err(PathError::UnknownSegment { od: 0, segment: *bad }.into());
        }
        Ok(Self {
            net,
            paths,
            dynamics: SimDynamics::draw(net, config.dynamics_seed),
            config,
            free_flow_s: paths.free_flow_times_s(net),
        })
    }

    #[inline]
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    #[inline]
    pub fn paths(&self) -> &PathSet {
        self.paths
    }

    #[inline]
    pub fn dynamics(&self) -> &SimDynamics {
        &self.dynamics
    }

    /// Changes the replication seed, keeping the segment dynamics.
    pub fn set_seed(&mut self, seed: u64) {
        self.config.seed = seed;
    }

    fn check_demand(&self, x: &OdVector) -> Result<(), SimError> {
        if x.len() != self.paths.len() {
            return Err(SimError::DimensionMismatch { expected: self.paths.len(), got: x.len() });
        }
        if let Some(od) = x.as_slice().iter().position(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(SimError::InvalidDemand { od });
        }
        Ok(())
    }

    /// One replication with its full end state; `trace` keeps per-vehicle
    /// segment entry times.
    pub fn replication(&self, x: &OdVector, replication: u32, trace: bool) -> Result<SimState, SimError> {
        self.check_demand(x)?;
        Ok(engine::run(self, x.as_slice(), replication, trace).state)
    }

    /// Runs all replications and averages their path travel times.
    pub fn run(&self, x: &OdVector) -> Result<SimResult, SimError> {
        self.check_demand(x)?;
        let n_paths = self.paths.len();
        let reps = self.config.replications;
        // Welford running mean and sum of squared deviations
        let mut mean = vec![0.0; n_paths];
        let mut m2 = vec![0.0; n_paths];
        let mut completed = vec![0u64; n_paths];
        let mut generated = vec![0u64; n_paths];
        let mut in_network = 0;
        for r in 0..reps {
            let out = engine::run(self, x.as_slice(), r, false);
            for p in 0..n_paths {
                let eta = if out.eta_count[p] > 0 {
                    out.eta_sum[p] / out.eta_count[p] as f64
                } else {
                    self.free_flow_s[p] + self.residual_queue_delay(p, &out.state)
                };
                let d = eta - mean[p];
                mean[p] += d / (r + 1) as f64;
                m2[p] += d * (eta - mean[p]);
            }
            for (acc, v) in completed.iter_mut().zip(&out.state.completed) {
                *acc += v;
            }
            for (acc, v) in generated.iter_mut().zip(&out.state.generated) {
                *acc += v;
            }
            in_network += out.state.in_network;
        }
        let total_generated: u64 = generated.iter().sum();
        let total_completed: u64 = completed.iter().sum();
        if (total_completed as f64) < MIN_COMPLETION_RATIO * total_generated as f64 {
            return Err(SimError::Gridlock { completed: total_completed, generated: total_generated });
        }
        let mean_eta_s = mean;
        let eta_var_s2 = if reps > 1 {
            m2.iter().map(|v| v / (reps - 1) as f64).collect()
        } else {
            vec![0.0; n_paths]
        };
        let loss = self.paths.squared_error_loss(&mean_eta_s);
        Ok(SimResult {
            mean_eta_s,
            eta_var_s2,
            completed,
            generated,
            in_network,
            replications: reps,
            loss,
        })
    }

    /// Time to discharge the vehicles queued on the path's segments at the
    /// horizon.
    fn residual_queue_delay(&self, path: usize, state: &SimState) -> f64 {
        self.paths
            .route(path)
            .iter()
            .map(|s| state.queued[s.index()] as f64 * self.dynamics.segments[s.index()].headway_s)
            .sum()
    }
}

/// Simulates `x` on `net` along `paths` under `cfg`.
pub fn simulate(net: &Network, paths: &PathSet, x: &OdVector, cfg: &SimConfig) -> Result<SimResult, SimError> {
    Simulator::new(net, paths, *cfg)?.run(x)
}

/// Path set whose ground truth is the simulated mean travel time under
/// `x_true`.
pub fn make_ground_truth(
    net: &Network,
    paths: &PathSet,
    x_true: &OdVector,
    cfg: &SimConfig,
) -> Result<PathSet, SimError> {
    let result = simulate(net, paths, x_true, cfg)?;
    Ok(paths.clone().with_ground_truth(result.mean_eta_s)?)
}
