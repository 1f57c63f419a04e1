//! Optimizer run logs: one CSV row per simulation call and a JSON result.

use std::fs;
use std::path::Path;

use odcal_core::compare::nrmse_by_call;
use odcal_core::SoState;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{fmt_f64, write_csv};

pub const HEADER: [&str; 5] = ["epoch", "sim_calls", "candidate_loss", "best_loss", "nrmse_best"];

/// `epoch,sim_calls,candidate_loss,best_loss,nrmse_best`, one row per call.
pub fn save_run_log(path: &Path, state: &SoState, gt: &[f64]) -> Result<()> {
    let nrmse = nrmse_by_call(gt, state);
    let incumbents = state.incumbent_by_call();
    write_csv(
        path,
        &HEADER,
        state.history.iter().enumerate().map(|(j, rec)| {
            vec![
                rec.epoch.to_string(),
                (j + 1).to_string(),
                fmt_f64(rec.loss),
                fmt_f64(state.history[incumbents[j]].loss),
                fmt_f64(nrmse[j]),
            ]
        }),
    )
}

/// Rows of a run log as read back.
#[derive(Clone, Debug, PartialEq, serde::Deserialize)]
pub struct RunLogRow {
    pub epoch: usize,
    pub sim_calls: usize,
    pub candidate_loss: f64,
    pub best_loss: f64,
    pub nrmse_best: f64,
}

pub fn load_run_log(path: &Path) -> Result<Vec<RunLogRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::csv(path, e))).collect()
}

#[derive(Serialize)]
struct RunResult<'a> {
    algorithm: &'a str,
    seed: u64,
    sim_calls: usize,
    epochs: usize,
    best_loss: f64,
    best_nrmse: f64,
    x: &'a [f64],
    beta: Option<&'a [f64]>,
}

/// Final incumbent and, for metamodel runs, the last fitted β.
pub fn save_result_json(path: &Path, state: &SoState, gt: &[f64]) -> Result<()> {
    let best = state.best_record().ok_or_else(|| Error::Invalid("run has no evaluations".into()))?;
    let best_nrmse = nrmse_by_call(gt, state).last().copied().unwrap_or(f64::INFINITY);
    // JSON has no infinity; a gridlocked incumbent is written as null
    let result = RunResult {
        algorithm: state.algorithm.name(),
        seed: state.seed,
        sim_calls: state.sim_calls(),
        epochs: state.epoch,
        best_loss: best.loss,
        best_nrmse,
        x: best.x.as_slice(),
        beta: state.beta.as_deref(),
    };
    let text = serde_json::to_string_pretty(&result).expect("result serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
