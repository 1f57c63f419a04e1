//! Physics-informed metamodel optimizer.
//!
//! At every epoch the simulated losses seen so far are fitted by
//! `m(x; β) = β₀ f_A(x) + β₁ + Σ_z β_{z+2} x_z`, the fitted surrogate is
//! minimized over the demand box by projected gradient descent, and the
//! minimizer is simulated.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::analytical::{AnalyticalModel, ModelError};
use crate::objective::Objective;
use crate::paths::OdVector;
use crate::seeds;
use crate::so::{Algorithm, EvalRecord, SoError, SoState};

/// Coefficients of the surrogate: `[β₀ (scale on f_A), β₁ (intercept), β₂…]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetamodelParams {
    pub beta: Vec<f64>,
}

impl MetamodelParams {
    /// Pure physics surrogate `(1, 0, …, 0)` for `dim` OD pairs.
    pub fn prior(dim: usize) -> Self {
        let mut beta = vec![0.0; dim + 2];
        beta[0] = 1.0;
        Self { beta }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.beta.len() - 2
    }

    /// `m(x)` given `f_A(x)`.
    pub fn value(&self, fa: f64, x: &[f64]) -> f64 {
        let linear: f64 = self.beta[2..].iter().zip(x).map(|(b, x)| b * x).sum();
        self.beta[0] * fa + self.beta[1] + linear
    }
}

/// Ridge strength of the β fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ridge {
    /// `1e-3` times the weighted mean squared loss of the history.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetamodelOptions {
    /// Random starts of the surrogate solve besides the given start.
    pub multistarts: usize,
    pub max_inner_iters: usize,
    /// Non-improving epochs before the surrogate is solved from a random start.
    pub stall_epochs: usize,
    pub ridge: Ridge,
    pub seed: u64,
}

impl Default for MetamodelOptions {
    fn default() -> Self {
        Self { multistarts: 2, max_inner_iters: 500, stall_epochs: 3, ridge: Ridge::Auto, seed: 0 }
    }
}

/// Weighted ridge fit of β around the prior `(1, 0, …, 0)`:
/// minimizes `Σ_j w_j (loss_j − m(x_j; β))² + γ ‖β − β_prior‖²` with
/// `w_j = 1 / (1 + ‖x_j − x_current‖)`. Records with non-finite loss or `f_A`
/// are ignored.
pub fn fit_beta(
    history: &[EvalRecord],
    x_current: &OdVector,
    fa_values: &[f64],
    ridge: Ridge,
) -> MetamodelParams {
    let dim = x_current.len();
    let prior = MetamodelParams::prior(dim);
    let rows: Vec<usize> = (0..history.len().min(fa_values.len()))
        .filter(|&j| history[j].loss.is_finite() && fa_values[j].is_finite())
        .collect();
    if rows.is_empty() {
        return prior;
    }
    let p = dim + 2;
    let n = rows.len();
    let mut f = DMatrix::<f64>::zeros(n, p);
    let mut r = DVector::<f64>::zeros(n);
    let mut w = vec![0.0; n];
    for (row, &j) in rows.iter().enumerate() {
        let rec = &history[j];
        f[(row, 0)] = fa_values[j];
        f[(row, 1)] = 1.0;
        for (z, &xz) in rec.x.as_slice().iter().enumerate() {
            f[(row, z + 2)] = xz;
        }
        // residual against the prior
        r[row] = rec.loss - fa_values[j];
        w[row] = 1.0 / (1.0 + rec.x.distance(x_current));
    }
    let mut gamma = match ridge {
        Ridge::Auto => {
            let sw: f64 = w.iter().sum();
            let swl: f64 = rows.iter().zip(&w).map(|(&j, wj)| wj * history[j].loss * history[j].loss).sum();
            1e-3 * swl / sw
        }
        Ridge::Fixed(g) => g,
    };
    if !(gamma.is_finite() && gamma > 0.0) {
        gamma = 1e-12;
    }
    let delta = if n >= p { fit_primal(&f, &r, &w, gamma) } else { fit_dual(&f, &r, &w, gamma) };
    match delta {
        Some(d) if d.iter().all(|v| v.is_finite()) => {
            let beta = prior.beta.iter().zip(d.iter()).map(|(b, d)| b + d).collect();
            MetamodelParams { beta }
        }
        _ => prior,
    }
}

/// Least squares on `[√W F; √γ I] δ = [√W r; 0]`, columns equilibrated.
fn fit_primal(f: &DMatrix<f64>, r: &DVector<f64>, w: &[f64], gamma: f64) -> Option<DVector<f64>> {
    let (n, p) = f.shape();
    let scale: Vec<f64> = (0..p)
        .map(|c| {
            let s = (0..n).map(|j| w[j] * f[(j, c)] * f[(j, c)]).sum::<f64>();
            let s = libm::sqrt(s);
            if s > 0.0 && s.is_finite() { s } else { 1.0 }
        })
        .collect();
    let mut aug = DMatrix::<f64>::zeros(n + p, p);
    let mut rhs = DVector::<f64>::zeros(n + p);
    for j in 0..n {
        let sw = libm::sqrt(w[j]);
        for c in 0..p {
            aug[(j, c)] = sw * f[(j, c)] / scale[c];
        }
        rhs[j] = sw * r[j];
    }
    let sg = libm::sqrt(gamma);
    for c in 0..p {
        aug[(n + c, c)] = sg / scale[c];
    }
    let svd = aug.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).ok()?;
    Some(DVector::from_iterator(p, (0..p).map(|c| sol[c] / scale[c])))
}

/// `δ = Fᵀ a` with `(F Fᵀ + γ W⁻¹) a = r`; the same minimizer as the primal
/// problem, solved in the record space when records are fewer than
/// coefficients. The ridge is raised if the system is numerically singular.
fn fit_dual(f: &DMatrix<f64>, r: &DVector<f64>, w: &[f64], gamma: f64) -> Option<DVector<f64>> {
    let gram = f * f.transpose();
    let mut g = gamma;
    for _ in 0..12 {
        let mut k = gram.clone();
        for j in 0..w.len() {
            k[(j, j)] += g / w[j];
        }
        if let Some(chol) = k.cholesky() {
            let a = chol.solve(r);
            return Some(f.transpose() * a);
        }
        g *= 10.0;
    }
    None
}

/// The surrogate `m` evaluated through the analytical model.
struct Surrogate<'m, 'a> {
    model: &'m AnalyticalModel<'a>,
    gt: &'m [f64],
    beta: &'m MetamodelParams,
}

impl Surrogate<'_, '_> {
    fn value(&self, x: &[f64]) -> f64 {
        let fa = if self.beta.beta[0] == 0.0 {
            0.0
        } else {
            self.model.loss_and_gradient_unchecked(self.gt, x, false).0
        };
        self.beta.value(fa, x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let b0 = self.beta.beta[0];
        let (fa, mut grad) = if b0 == 0.0 {
            (0.0, vec![0.0; x.len()])
        } else {
            let (fa, g) = self.model.loss_and_gradient_unchecked(self.gt, x, true);
            (fa, g.unwrap_or_default())
        };
        for (g, b) in grad.iter_mut().zip(&self.beta.beta[2..]) {
            *g = b0 * *g + b;
        }
        (self.beta.value(fa, x), grad)
    }
}

const ARMIJO_SIGMA: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

fn project_into(x: &mut [f64], upper: &[f64]) {
    for (v, &u) in x.iter_mut().zip(upper) {
        *v = v.clamp(0.0, u);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Projected gradient descent with Armijo backtracking from Barzilai-Borwein
/// trial steps. Returns the final point and its surrogate value.
fn projected_descent(sur: &Surrogate<'_, '_>, start: &[f64], upper: &[f64], max_iters: usize) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    project_into(&mut x, upper);
    let (mut m, mut g) = sur.value_and_gradient(&x);
    let scale = {
        let mean = upper.iter().sum::<f64>() / upper.len().max(1) as f64;
        if mean > 0.0 { mean } else { 1.0 }
    };
    let mut trial: Option<f64> = None;
    let mut xt = vec![0.0; x.len()];
    for _ in 0..max_iters {
        if !m.is_finite() {
            break;
        }
        let pg_sq: f64 = x
            .iter()
            .zip(&g)
            .zip(upper)
            .map(|((&xi, &gi), &u)| {
                let d = (xi - gi).clamp(0.0, u) - xi;
                d * d
            })
            .sum();
        if libm::sqrt(pg_sq) < 1e-6 * (1.0 + m.abs()) {
            break;
        }
        let g_inf = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut t = trial.unwrap_or(0.1 * scale / g_inf);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for ((o, &xi), &gi) in xt.iter_mut().zip(&x).zip(&g) {
                *o = xi - t * gi;
            }
            project_into(&mut xt, upper);
            let decrease: f64 = xt.iter().zip(&x).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            if decrease >= 0.0 {
                // the projected step no longer moves downhill
                break;
            }
            let mt = sur.value(&xt);
            if mt.is_finite() && mt <= m + ARMIJO_SIGMA * decrease {
                accepted = Some(mt);
                break;
            }
            t *= 0.5;
        }
        if accepted.is_none() {
            break;
        }
        let (mt, gt) = sur.value_and_gradient(&xt);
        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        trial = Some(if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * t });
        x.copy_from_slice(&xt);
        m = mt;
        g = gt;
    }
    (x, m)
}

/// Minimizes the surrogate over `0 ≤ x ≤ x_upper` from `x_start` and from
/// `opts.multistarts` uniform random starts; the lowest surrogate value wins,
/// earlier starts winning ties.
pub fn solve_surrogate<R: Rng + ?Sized>(
    model: &AnalyticalModel<'_>,
    beta: &MetamodelParams,
    x_start: &OdVector,
    x_upper: &OdVector,
    opts: &MetamodelOptions,
    rng: &mut R,
) -> Result<OdVector, SoError> {
    let dim = model.dim();
    for v in [x_start.len(), x_upper.len(), beta.dim()] {
        if v != dim {
            return Err(SoError::DimensionMismatch { expected: dim, got: v });
        }
    }
    if beta.beta.iter().any(|b| !b.is_finite()) {
        return Err(SoError::InvalidInput("beta must be finite"));
    }
    let gt = model.paths().ground_truth().ok_or(ModelError::MissingGroundTruth)?;
    let sur = Surrogate { model, gt, beta };
    let upper = x_upper.as_slice();
    let mut starts = vec![x_start.as_slice().to_vec()];
    for _ in 0..opts.multistarts {
        starts.push(random_point(upper, rng));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let (x, m) = projected_descent(&sur, s, upper, opts.max_inner_iters);
        let m = if m.is_finite() { m } else { f64::INFINITY };
        if best.as_ref().is_none_or(|(_, bm)| m < *bm) {
            best = Some((x, m));
        }
    }
    Ok(OdVector::new(best.map(|(x, _)| x).unwrap_or_default()))
}

/// Uniform draw from `[0, upper]`.
pub fn random_point<R: Rng + ?Sized>(upper: &[f64], rng: &mut R) -> Vec<f64> {
    upper.iter().map(|&u| u * rng.random::<f64>()).collect()
}

/// Metamodel optimization of `objective` from `x0` with at most `budget`
/// simulation calls (one per epoch after the initial point).
///
/// `model` must carry the same ground truth as the objective. Gridlocked
/// evaluations are recorded with infinite loss.
pub fn run_metamodel<O: Objective + ?Sized>(
    model: &AnalyticalModel<'_>,
    objective: &mut O,
    x0: &OdVector,
    x_upper: &OdVector,
    budget: usize,
    opts: &MetamodelOptions,
) -> Result<SoState, SoError> {
    let dim = model.dim();
    for v in [objective.dim(), x0.len(), x_upper.len()] {
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
    let gt = model.paths().ground_truth().ok_or(ModelError::MissingGroundTruth)?;
    let mut rng = seeds::stream_rng(opts.seed, seeds::tag::METAMODEL);
    let mut state = SoState::new(Algorithm::Metamodel, opts.seed);
    let mut fa_cache = Vec::with_capacity(budget);

    let mut evaluate = |state: &mut SoState, fa_cache: &mut Vec<f64>, x: OdVector| -> Result<bool, SoError> {
        let eval = objective.evaluate(&x)?;
        fa_cache.push(model.loss_and_gradient_unchecked(gt, x.as_slice(), false).0);
        Ok(state.push(EvalRecord {
            x,
            loss: eval.loss,
            path_eta_s: eval.path_eta_s,
            replications: eval.replications,
            epoch: state.epoch,
        }))
    };

    evaluate(&mut state, &mut fa_cache, x0.clone())?;
    state.end_epoch();
    let mut stall = 0;
    while state.sim_calls() < budget {
        state.epoch += 1;
        let incumbent = state.history[state.best].x.clone();
        let beta = fit_beta(&state.history, &incumbent, &fa_cache, opts.ridge);
        let start = if stall >= opts.stall_epochs {
            stall = 0;
            OdVector::new(random_point(x_upper.as_slice(), &mut rng))
        } else {
            incumbent
        };
        let mut candidate = solve_surrogate(model, &beta, &start, x_upper, opts, &mut rng)?;
        // re-simulating a known point under common random numbers is wasted
        if state.history.iter().any(|r| r.x == candidate) {
            let restart = OdVector::new(random_point(x_upper.as_slice(), &mut rng));
            candidate = solve_surrogate(model, &beta, &restart, x_upper, opts, &mut rng)?;
            if state.history.iter().any(|r| r.x == candidate) {
                candidate = restart;
            }
        }
        let improved = evaluate(&mut state, &mut fa_cache, candidate)?;
        stall = if improved { 0 } else { stall + 1 };
        state.beta = Some(beta.beta);
        state.end_epoch();
    }
    Ok(state)
}
