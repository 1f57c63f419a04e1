//! Two-sided SPSA over the demand box.

use alloc::vec::Vec;

use rand::Rng;

use crate::objective::Objective;
use crate::paths::OdVector;
use crate::seeds;
use crate::so::{Algorithm, EvalRecord, SoError, SoState};

/// Gains `a_k = a / (A + k + 1)^alpha_exp`, `c_k = c / (k + 1)^gamma_exp`.
/// Unset gains are derived from the box and budget at run time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpsaConfig {
    /// Step gain; `None` tunes it so the first step moves the iterate by
    /// [`SpsaConfig::FIRST_STEP_FRACTION`] of the mean upper bound.
    pub a: Option<f64>,
    /// Perturbation size in vehicles/hour; `None` uses `max(1, 0.05 · mean(x_U))`.
    pub c: Option<f64>,
    /// Stability offset; `None` uses 10% of the iteration count.
    pub a_stability: Option<f64>,
    pub alpha_exp: f64,
    pub gamma_exp: f64,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self { a: None, c: None, a_stability: None, alpha_exp: 0.602, gamma_exp: 0.101, seed: 0 }
    }
}

impl SpsaConfig {
    pub const FIRST_STEP_FRACTION: f64 = 0.02;

    pub fn validate(&self) -> Result<(), SoError> {
        let positive = |v: Option<f64>| v.is_none_or(|v| v.is_finite() && v > 0.0);
        if !positive(self.a) {
            return Err(SoError::InvalidInput("SPSA gain a must be positive"));
        }
        if !positive(self.c) {
            return Err(SoError::InvalidInput("SPSA perturbation c must be positive"));
        }
        if self.a_stability.is_some_and(|v| !(v.is_finite() && v >= 0.0)) {
            return Err(SoError::InvalidInput("SPSA stability offset must be non-negative"));
        }
        if !(self.gamma_exp > 0.0 && self.gamma_exp < self.alpha_exp && self.alpha_exp <= 1.0) {
            return Err(SoError::InvalidInput("SPSA exponents need 0 < gamma_exp < alpha_exp <= 1"));
        }
        Ok(())
    }
}

/// Rademacher direction in `{−1, +1}^dim`.
pub fn rademacher<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// `ĝ_z = (f⁺ − f⁻) / (2 c_k Δ_z)`.
pub fn gradient_estimate(f_plus: f64, f_minus: f64, c_k: f64, delta: &[f64]) -> Vec<f64> {
    let diff = (f_plus - f_minus) / (2.0 * c_k);
    delta.iter().map(|d| diff / d).collect()
}

fn clipped(x: &[f64], step: f64, dir: &[f64], upper: &[f64]) -> OdVector {
    OdVector::new(
        x.iter().zip(dir).zip(upper).map(|((&x, &d), &u)| (x + step * d).clamp(0.0, u)).collect(),
    )
}

/// SPSA from `x0` with exactly `budget` simulation calls: the initial point,
/// two calls per iteration, and the final iterate if one call is left over.
/// An iteration with a gridlocked evaluation leaves the iterate unchanged.
pub fn run_spsa<O: Objective + ?Sized>(
    objective: &mut O,
    x0: &OdVector,
    x_upper: &OdVector,
    budget: usize,
    cfg: &SpsaConfig,
) -> Result<SoState, SoError> {
    cfg.validate()?;
    let dim = objective.dim();
    for v in [x0.len(), x_upper.len()] {
        if v != dim {
            return Err(SoError::DimensionMismatch { expected: dim, got: v });
        }
    }
    if budget == 0 {
        return Err(SoError::InvalidInput("budget must be at least 1"));
    }
    if !x0.is_within(x_upper) {
        return Err(SoError::InvalidInput("x0 must lie within [0, x_upper]"));
    }
    let upper = x_upper.as_slice();
    let mean_upper = x_upper.mean();
    let iterations = (budget - 1) / 2;
    let c = cfg.c.unwrap_or_else(|| (0.05 * mean_upper).max(1.0));
    let big_a = cfg.a_stability.unwrap_or(0.1 * iterations as f64);
    let mut a = cfg.a;
    let mut rng = seeds::stream_rng(cfg.seed, seeds::tag::SPSA);
    let mut state = SoState::new(Algorithm::Spsa, cfg.seed);

    let mut evaluate = |state: &mut SoState, x: OdVector| -> Result<f64, SoError> {
        let eval = objective.evaluate(&x)?;
        let loss = eval.loss;
        state.push(EvalRecord {
            x,
            loss,
            path_eta_s: eval.path_eta_s,
            replications: eval.replications,
            epoch: state.epoch,
        });
        Ok(loss)
    };

    evaluate(&mut state, x0.clone())?;
    state.end_epoch();
    let mut x = x0.as_slice().to_vec();
    for k in 0..iterations {
        state.epoch += 1;
        let kf = k as f64;
        let c_k = c / libm::pow(kf + 1.0, cfg.gamma_exp);
        let delta = rademacher(dim, &mut rng);
        let f_plus = evaluate(&mut state, clipped(&x, c_k, &delta, upper))?;
        let f_minus = evaluate(&mut state, clipped(&x, -c_k, &delta, upper))?;
        if f_plus.is_finite() && f_minus.is_finite() && f_plus != f_minus {
            let g = gradient_estimate(f_plus, f_minus, c_k, &delta);
            let gain = *a.get_or_insert_with(|| {
                let g_max = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                SpsaConfig::FIRST_STEP_FRACTION * mean_upper * libm::pow(big_a + kf + 1.0, cfg.alpha_exp)
                    / g_max
            });
            let a_k = gain / libm::pow(big_a + kf + 1.0, cfg.alpha_exp);
            for ((xi, gi), &u) in x.iter_mut().zip(&g).zip(upper) {
                *xi = (*xi - a_k * gi).clamp(0.0, u);
            }
        }
        state.end_epoch();
    }
    if state.sim_calls() < budget {
        state.epoch += 1;
        evaluate(&mut state, OdVector::new(x))?;
        state.end_epoch();
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_divides_by_direction() {
        assert_eq!(gradient_estimate(5.0, 1.0, 2.0, &[1.0, -1.0]), alloc::vec![1.0, -1.0]);
    }

    #[test]
    fn exponent_ordering_is_validated() {
        let cfg = SpsaConfig { alpha_exp: 0.1, gamma_exp: 0.6, ..SpsaConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(SpsaConfig::default().validate().is_ok());
    }
}
