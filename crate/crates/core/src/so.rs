//! Bookkeeping shared by the simulation-based optimizers.

use alloc::vec::Vec;

use crate::analytical::ModelError;
use crate::mesosim::SimError;
use crate::paths::OdVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Metamodel,
    Spsa,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Metamodel => "metamodel",
            Algorithm::Spsa => "spsa",
        }
    }
}

/// One simulated point.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub x: OdVector,
    /// Simulated loss; `+∞` when the simulation gridlocked.
    pub loss: f64,
    pub path_eta_s: Vec<f64>,
    pub replications: u32,
    /// Epoch that produced the point; the initial point is epoch 0.
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SoError {
    #[error("invalid optimizer input: {0}")]
    InvalidInput(&'static str),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Evaluation history and incumbent of one optimizer run.
#[derive(Clone, Debug, PartialEq)]
pub struct SoState {
    pub algorithm: Algorithm,
    pub history: Vec<EvalRecord>,
    /// Index of the first minimum-loss record.
    pub best: usize,
    pub epoch: usize,
    pub seed: u64,
    /// Last fitted metamodel coefficients (metamodel runs only).
    pub beta: Option<Vec<f64>>,
    /// Best loss after each epoch, starting with epoch 0.
    pub best_loss_by_epoch: Vec<f64>,
}

impl SoState {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            history: Vec::new(),
            best: 0,
            epoch: 0,
            seed,
            beta: None,
            best_loss_by_epoch: Vec::new(),
        }
    }

    /// Appends a record; returns whether it strictly improved the incumbent.
    pub fn push(&mut self, record: EvalRecord) -> bool {
        let improved = match self.history.get(self.best) {
            None => true,
            Some(b) => record.loss < b.loss,
        };
        self.history.push(record);
        if improved {
            self.best = self.history.len() - 1;
        }
        improved
    }

    pub fn best_record(&self) -> Option<&EvalRecord> {
        self.history.get(self.best)
    }

    pub fn best_loss(&self) -> f64 {
        self.best_record().map_or(f64::INFINITY, |r| r.loss)
    }

    pub fn sim_calls(&self) -> usize {
        self.history.len()
    }

    /// Closes the current epoch in the best-loss trajectory.
    pub fn end_epoch(&mut self) {
        self.best_loss_by_epoch.push(self.best_loss());
    }

    /// Index of the incumbent after each simulation call.
    pub fn incumbent_by_call(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.history.len());
        let mut best = 0;
        for (j, r) in self.history.iter().enumerate() {
            if j == 0 || r.loss < self.history[best].loss {
                best = j;
            }
            out.push(best);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(loss: f64) -> EvalRecord {
        EvalRecord { x: OdVector::zeros(1), loss, path_eta_s: vec![], replications: 1, epoch: 0 }
    }

    #[test]
    fn best_tracks_first_minimum() {
        let mut s = SoState::new(Algorithm::Spsa, 0);
        assert!(s.push(rec(5.0)));
        assert!(!s.push(rec(f64::INFINITY)));
        assert!(s.push(rec(3.0)));
        assert!(!s.push(rec(3.0)));
        assert_eq!(s.best, 2);
        assert_eq!(s.incumbent_by_call(), vec![0, 0, 2, 2]);
    }

    #[test]
    fn infinite_first_record_is_replaced() {
        let mut s = SoState::new(Algorithm::Metamodel, 0);
        s.push(rec(f64::INFINITY));
        assert!(s.push(rec(1e9)));
        assert_eq!(s.best, 1);
    }
}
