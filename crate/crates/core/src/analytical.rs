//! Deterministic macroscopic network model: segment demand from the assignment
//! matrix, density from demand, speed from the fundamental diagram, and path
//! travel times as sums of segment traversal times. Provides the physics loss
//! `f_A` and its exact gradient.

use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::AssignmentMatrix;
use crate::fd;
use crate::network::Network;
use crate::paths::{OdVector, PathSet};

/// Shared fundamental-diagram parameters of the analytical model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub k_jam_vpkm_per_lane: f64,
    pub v_min_mps: f64,
    /// Demand-to-density scaling, lane-hours per vehicle.
    pub kappa1: f64,
}

impl FdParams {
    /// Conventional highway values; `kappa1` maps a per-lane demand equal to
    /// the network's mean lane capacity to 90% of jam density.
    pub fn defaults_for(net: &Network) -> Self {
        Self {
            alpha1: 2.0,
            alpha2: 2.0,
            k_jam_vpkm_per_lane: 150.0,
            v_min_mps: 1.0,
            kappa1: 0.9 / net.mean_capacity_per_lane_vph(),
        }
    }

    pub fn validate(&self, net: &Network) -> Result<(), ModelError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha1) || !positive(self.alpha2) {
            return Err(ModelError::InvalidParams("alpha1 and alpha2 must be positive"));
        }
        if !positive(self.k_jam_vpkm_per_lane) {
            return Err(ModelError::InvalidParams("k_jam must be positive"));
        }
        if !positive(self.kappa1) {
            return Err(ModelError::InvalidParams("kappa1 must be positive"));
        }
        let min_vmax = net.segments().iter().map(|s| s.v_max_mps).fold(f64::INFINITY, f64::min);
        if !(positive(self.v_min_mps) && self.v_min_mps < min_vmax) {
            return Err(ModelError::InvalidParams(
                "v_min must be positive and below every segment's v_max",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(&'static str),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ground-truth travel times are required")]
    MissingGroundTruth,
}

/// Intermediate quantities of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticalState {
    /// Segment demand, vehicles/hour.
    pub lambda: Vec<f64>,
    /// Density after clamping to `[0, k_jam]`, vehicles/km/lane.
    pub density: Vec<f64>,
    pub speed_mps: Vec<f64>,
    pub path_eta_s: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AnalyticalModel<'a> {
    net: &'a Network,
    assignment: &'a AssignmentMatrix,
    paths: &'a PathSet,
    fd: FdParams,
    /// `κ₁ k_jam / n_i`: density per unit of segment demand.
    density_per_demand: Vec<f64>,
}

impl<'a> AnalyticalModel<'a> {
    pub fn new(
        net: &'a Network,
        assignment: &'a AssignmentMatrix,
        paths: &'a PathSet,
        fd: FdParams,
    ) -> Result<Self, ModelError> {
        fd.validate(net)?;
        if assignment.rows() != net.len() {
            return Err(ModelError::DimensionMismatch { expected: net.len(), got: assignment.rows() });
        }
        if assignment.cols() != paths.len() {
            return Err(ModelError::DimensionMismatch {
                expected: paths.len(),
                got: assignment.cols(),
            });
        }
        let density_per_demand = net
            .segments()
            .iter()
            .map(|s| fd.kappa1 * fd.k_jam_vpkm_per_lane / s.lanes as f64)
            .collect();
        Ok(Self { net, assignment, paths, fd, density_per_demand })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.assignment.cols()
    }

    #[inline]
    pub fn params(&self) -> &FdParams {
        &self.fd
    }

    #[inline]
    pub fn paths(&self) -> &PathSet {
        self.paths
    }

    #[inline]
    pub fn network(&self) -> &Network {
        self.net
    }

    fn check_dim(&self, x: &OdVector) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &OdVector) -> Result<AnalyticalState, ModelError> {
        self.check_dim(x)?;
        let lambda = self.assignment.apply(x.as_slice());
        let k_jam = self.fd.k_jam_vpkm_per_lane;
        let mut density = Vec::with_capacity(lambda.len());
        let mut speed_mps = Vec::with_capacity(lambda.len());
        for (i, (&l, seg)) in lambda.iter().zip(self.net.segments()).enumerate() {
            let k = (self.density_per_demand[i] * l).clamp(0.0, k_jam);
            density.push(k);
            speed_mps.push(self.speed(k, seg.v_max_mps));
        }
        let path_eta_s = self
            .paths
            .routes()
            .iter()
            .map(|r| r.iter().map(|s| self.net.segment(*s).length_m / speed_mps[s.index()]).sum())
            .collect();
        Ok(AnalyticalState { lambda, density, speed_mps, path_eta_s })
    }

    #[inline]
    fn speed(&self, k: f64, v_max: f64) -> f64 {
        let fd = &self.fd;
        fd::speed(k / fd.k_jam_vpkm_per_lane, fd.v_min_mps, v_max, fd.alpha1, fd.alpha2)
    }

    fn ground_truth(&self) -> Result<&[f64], ModelError> {
        self.paths.ground_truth().ok_or(ModelError::MissingGroundTruth)
    }

    /// Physics loss `f_A(x) = (1/|P|) Σ w_p (y_p^GT − y_p^A)²`, in s².
    pub fn loss(&self, x: &OdVector) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        let gt = self.ground_truth()?;
        Ok(self.loss_and_gradient_unchecked(gt, x.as_slice(), false).0)
    }

    /// Exact gradient of [`loss`](Self::loss) with respect to the OD demands.
    pub fn gradient(&self, x: &OdVector) -> Result<Vec<f64>, ModelError> {
        self.loss_and_gradient(x).map(|(_, g)| g)
    }

    pub fn loss_and_gradient(&self, x: &OdVector) -> Result<(f64, Vec<f64>), ModelError> {
        self.check_dim(x)?;
        let gt = self.ground_truth()?;
        let (loss, grad) = self.loss_and_gradient_unchecked(gt, x.as_slice(), true);
        Ok((loss, grad.unwrap_or_default()))
    }

    /// Assumes `x` has the right length and `gt` covers every path.
    pub(crate) fn loss_and_gradient_unchecked(
        &self,
        gt: &[f64],
        x: &[f64],
        want_grad: bool,
    ) -> (f64, Option<Vec<f64>>) {
        let n = self.net.len();
        let fd = &self.fd;
        let k_jam = fd.k_jam_vpkm_per_lane;
        let lambda = self.assignment.apply(x);
        let mut speed = vec![0.0; n];
        let mut u = vec![0.0; n];
        for (i, seg) in self.net.segments().iter().enumerate() {
            let k_raw = self.density_per_demand[i] * lambda[i];
            u[i] = k_raw / k_jam;
            speed[i] = self.speed(k_raw.clamp(0.0, k_jam), seg.v_max_mps);
        }
        let scale = 1.0 / self.paths.len() as f64;
        let mut loss = 0.0;
        let mut seg_adjoint = if want_grad { vec![0.0; n] } else { Vec::new() };
        for (p, route) in self.paths.routes().iter().enumerate() {
            let eta: f64 = route.iter().map(|s| self.net.segment(*s).length_m / speed[s.index()]).sum();
            let w = self.paths.weight(p);
            let r = eta - gt[p];
            loss += w * r * r;
            if want_grad {
                let coef = 2.0 * scale * w * r;
                for s in route {
                    seg_adjoint[s.index()] += coef;
                }
            }
        }
        loss *= scale;
        if !want_grad {
            return (loss, None);
        }
        // chain rule: ∂y/∂v_i = −ℓ_i / v_i², ∂v_i/∂k_i = slope / k_jam, ∂k_i/∂λ_i = κ₁ k_jam / n_i
        for (i, seg) in self.net.segments().iter().enumerate() {
            if seg_adjoint[i] == 0.0 {
                continue;
            }
            let dv_dk = fd::speed_slope(u[i], fd.v_min_mps, seg.v_max_mps, fd.alpha1, fd.alpha2) / k_jam;
            let dy_dv = -seg.length_m / (speed[i] * speed[i]);
            seg_adjoint[i] *= dy_dv * dv_dk * self.density_per_demand[i];
        }
        (loss, Some(self.assignment.apply_transpose(&seg_adjoint)))
    }
}
