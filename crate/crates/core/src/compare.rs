//! Metamodel versus SPSA on one scenario from a common random start.

use alloc::vec::Vec;

use crate::analytical::AnalyticalModel;
use crate::assignment::AssignmentMatrix;
use crate::mesosim::{SimConfig, Simulator};
use crate::metamodel::{random_point, run_metamodel, MetamodelOptions};
use crate::metrics::nrmse;
use crate::objective::SimObjective;
use crate::paths::OdVector;
use crate::scenario::Scenario;
use crate::seeds;
use crate::so::{Algorithm, SoError, SoState};
use crate::spsa::{run_spsa, SpsaConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareOptions {
    pub budget: usize,
    /// Run seed; the initial point, replication seed and optimizer streams
    /// are derived from it.
    pub seed: u64,
    pub metamodel: MetamodelOptions,
    pub spsa: SpsaConfig,
}

impl CompareOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self { budget, seed, metamodel: MetamodelOptions::default(), spsa: SpsaConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub seed: u64,
    pub budget: usize,
    pub x0: OdVector,
    pub metamodel: SoState,
    pub spsa: SoState,
    /// nRMSE of the initial point.
    pub nrmse_initial: f64,
    /// nRMSE of each algorithm's incumbent after every simulation call.
    pub nrmse_metamodel: Vec<f64>,
    pub nrmse_spsa: Vec<f64>,
    /// `nrmse_spsa − nrmse_metamodel` per simulation call.
    pub delta: Vec<f64>,
    /// nRMSE of the incumbent at the end of every epoch (the initial point is
    /// epoch 0).
    pub nrmse_metamodel_by_epoch: Vec<f64>,
    pub nrmse_spsa_by_epoch: Vec<f64>,
    /// `Δ_final / nrmse_spsa_final`.
    pub relative_improvement: f64,
}

impl ComparisonReport {
    pub fn final_metamodel(&self) -> f64 {
        self.nrmse_metamodel.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn final_spsa(&self) -> f64 {
        self.nrmse_spsa.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// nRMSE of the incumbent after every simulation call; infinite while the
/// incumbent is a gridlocked run.
pub fn nrmse_by_call(gt: &[f64], state: &SoState) -> Vec<f64> {
    state
        .incumbent_by_call()
        .into_iter()
        .map(|j| incumbent_nrmse(gt, state, j))
        .collect()
}

/// nRMSE of the incumbent at the end of every epoch.
pub fn nrmse_by_epoch(gt: &[f64], state: &SoState) -> Vec<f64> {
    let by_call = state.incumbent_by_call();
    let mut out = Vec::new();
    for (j, rec) in state.history.iter().enumerate() {
        let last_of_epoch = state.history.get(j + 1).is_none_or(|n| n.epoch != rec.epoch);
        if last_of_epoch {
            out.push(incumbent_nrmse(gt, state, by_call[j]));
        }
    }
    out
}

fn incumbent_nrmse(gt: &[f64], state: &SoState, j: usize) -> f64 {
    let rec = &state.history[j];
    if !rec.loss.is_finite() {
        return f64::INFINITY;
    }
    nrmse(gt, &rec.path_eta_s).unwrap_or(f64::INFINITY)
}

/// `(spsa − metamodel) / spsa`, with the conventions `1` when only SPSA is
/// infinite and `0` when neither is better.
pub fn relative_improvement(metamodel: f64, spsa: f64) -> f64 {
    match (metamodel.is_finite(), spsa.is_finite()) {
        (true, false) => 1.0,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => 0.0,
        (true, true) if spsa > 0.0 => (spsa - metamodel) / spsa,
        _ => 0.0,
    }
}

/// Common random start for run seed `seed`: uniform on `[0, x_U]`.
pub fn initial_point(scenario: &Scenario, seed: u64) -> OdVector {
    let mut rng = seeds::stream_rng(seed, seeds::tag::INITIAL_POINT);
    OdVector::new(random_point(scenario.x_upper.as_slice(), &mut rng))
}

/// Calibration simulator settings for run seed `seed`. Every evaluation of a
/// run, and both algorithms of a comparison, share this replication seed.
pub fn evaluation_config(scenario: &Scenario, seed: u64) -> SimConfig {
    SimConfig { seed: seeds::derive(seed, seeds::tag::EVALUATION), ..scenario.sim }
}

/// One calibration run of `algorithm` from [`initial_point`] under
/// [`evaluation_config`], with `budget` simulation calls.
pub fn run_algorithm(
    scenario: &Scenario,
    algorithm: Algorithm,
    budget: usize,
    seed: u64,
    metamodel: &MetamodelOptions,
    spsa: &SpsaConfig,
) -> Result<SoState, SoError> {
    let net = &scenario.network;
    let paths = &scenario.paths;
    let x0 = initial_point(scenario, seed);
    let sim = Simulator::new(net, paths, evaluation_config(scenario, seed))?;
    let mut objective = SimObjective::new(sim).ok_or(SoError::InvalidInput("scenario has no ground truth"))?;
    match algorithm {
        Algorithm::Metamodel => {
            let a = AssignmentMatrix::build(net, paths);
            let model = AnalyticalModel::new(net, &a, paths, scenario.fd)?;
            let opts = MetamodelOptions { seed: seeds::derive(seed, seeds::tag::METAMODEL), ..*metamodel };
            run_metamodel(&model, &mut objective, &x0, &scenario.x_upper, budget, &opts)
        }
        Algorithm::Spsa => {
            let cfg = SpsaConfig { seed: seeds::derive(seed, seeds::tag::SPSA), ..*spsa };
            run_spsa(&mut objective, &x0, &scenario.x_upper, budget, &cfg)
        }
    }
}

/// Runs both algorithms with `opts.budget` simulation calls from one random
/// feasible start, under common random numbers.
pub fn compare(scenario: &Scenario, opts: &CompareOptions) -> Result<ComparisonReport, SoError> {
    let gt = scenario.paths.ground_truth().ok_or(SoError::InvalidInput("scenario has no ground truth"))?;
    let x0 = initial_point(scenario, opts.seed);
    let run = |algorithm| run_algorithm(scenario, algorithm, opts.budget, opts.seed, &opts.metamodel, &opts.spsa);
    let metamodel = run(Algorithm::Metamodel)?;
    let spsa = run(Algorithm::Spsa)?;
    Ok(report(gt, opts, x0, metamodel, spsa))
}

/// Assembles the comparison of two finished runs.
pub fn report(gt: &[f64], opts: &CompareOptions, x0: OdVector, metamodel: SoState, spsa: SoState) -> ComparisonReport {
    let nrmse_metamodel = nrmse_by_call(gt, &metamodel);
    let nrmse_spsa = nrmse_by_call(gt, &spsa);
    let delta = nrmse_spsa.iter().zip(&nrmse_metamodel).map(|(s, m)| s - m).collect();
    let nrmse_initial = nrmse_metamodel.first().copied().unwrap_or(f64::INFINITY);
    let relative_improvement = relative_improvement(
        nrmse_metamodel.last().copied().unwrap_or(f64::INFINITY),
        nrmse_spsa.last().copied().unwrap_or(f64::INFINITY),
    );
    ComparisonReport {
        seed: opts.seed,
        budget: opts.budget,
        x0,
        nrmse_initial,
        nrmse_metamodel_by_epoch: nrmse_by_epoch(gt, &metamodel),
        nrmse_spsa_by_epoch: nrmse_by_epoch(gt, &spsa),
        metamodel,
        spsa,
        nrmse_metamodel,
        nrmse_spsa,
        delta,
        relative_improvement,
    }
}
