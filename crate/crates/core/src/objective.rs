//! Black-box calibration objective: OD demand in, loss and path ETAs out.

use alloc::vec::Vec;

use crate::mesosim::{SimError, Simulator};
use crate::paths::OdVector;

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Weighted mean squared ETA error; `+∞` for a run that gridlocked.
    pub loss: f64,
    pub path_eta_s: Vec<f64>,
    pub replications: u32,
}

impl Evaluation {
    pub fn gridlocked(paths: usize) -> Self {
        Self { loss: f64::INFINITY, path_eta_s: alloc::vec![f64::INFINITY; paths], replications: 0 }
    }
}

/// One call is one simulation run; optimizers count calls against their
/// budget.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, x: &OdVector) -> Result<Evaluation, SimError>;
}

/// Simulation loss against the ground truth attached to the simulator's paths.
/// Gridlock is reported as an infinite loss rather than an error.
#[derive(Debug)]
pub struct SimObjective<'a> {
    sim: Simulator<'a>,
    gt: Vec<f64>,
}

impl<'a> SimObjective<'a> {
    /// `None` if the simulator's paths carry no ground truth.
    pub fn new(sim: Simulator<'a>) -> Option<Self> {
        let gt = sim.paths().ground_truth()?.to_vec();
        Some(Self { sim, gt })
    }

    pub fn simulator(&self) -> &Simulator<'a> {
        &self.sim
    }

    pub fn ground_truth(&self) -> &[f64] {
        &self.gt
    }
}

impl Objective for SimObjective<'_> {
    fn dim(&self) -> usize {
        self.gt.len()
    }

    fn evaluate(&mut self, x: &OdVector) -> Result<Evaluation, SimError> {
        match self.sim.run(x) {
            Ok(r) => Ok(Evaluation {
                loss: r.loss.expect("ground truth is attached"),
                path_eta_s: r.mean_eta_s,
                replications: r.replications,
            }),
            Err(SimError::Gridlock { .. }) => Ok(Evaluation::gridlocked(self.gt.len())),
            Err(e) => Err(e),
        }
    }
}
