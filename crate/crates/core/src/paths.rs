//! OD demand vectors and the fixed route per OD pair.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::network::{Network, NetworkError, SegmentId, ZoneId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OdPair {
    pub origin: ZoneId,
    pub destination: ZoneId,
}

impl OdPair {
    pub fn new(origin: ZoneId, destination: ZoneId) -> Self {
        Self { origin, destination }
    }
}

/// Demand per OD pair in vehicles/hour, indexed like [`PathSet::od_pairs`].
#[derive(Clone, Debug, PartialEq)]
pub struct OdVector(Vec<f64>);

impl OdVector {
    pub fn new(demands: Vec<f64>) -> Self {
        Self(demands)
    }

    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![0.0; len])
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `0 <= x <= upper` componentwise, all finite.
    pub fn is_within(&self, upper: &OdVector) -> bool {
        self.len() == upper.len()
            && self
                .0
                .iter()
                .zip(&upper.0)
                .all(|(&x, &u)| x.is_finite() && (0.0..=u).contains(&x))
    }

    /// Componentwise clip onto `[0, upper]`.
    pub fn project(&mut self, upper: &OdVector) {
        for (x, &u) in self.0.iter_mut().zip(&upper.0) {
            *x = x.clamp(0.0, u);
        }
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn distance(&self, other: &OdVector) -> f64 {
        let sq: f64 = self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum();
        libm::sqrt(sq)
    }
}

impl From<Vec<f64>> for OdVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("path set is empty")]
    Empty,
    #[error("{routes} routes for {pairs} OD pairs")]
    RouteCount { pairs: usize, routes: usize },
    #[error("OD {od}: route is empty")]
    EmptyRoute { od: usize },
    #[error("OD {od}: unknown segment {segment}")]
    UnknownSegment { od: usize, segment: SegmentId },
    #[error("OD {od}: segment {to} does not follow segment {from}")]
    Disconnected { od: usize, from: SegmentId, to: SegmentId },
    #[error("OD {od}: segment {segment} is visited twice")]
    RepeatedSegment { od: usize, segment: SegmentId },
    #[error("OD {od}: route does not start at the origin's entry ramp")]
    WrongStart { od: usize },
    #[error("OD {od}: route does not end at the destination's exit ramp")]
    WrongEnd { od: usize },
    #[error("{got} ground-truth values for {expected} paths")]
    GroundTruthCount { expected: usize, got: usize },
    #[error("path {path}: ground-truth ETA must be positive and finite")]
    InvalidGroundTruth { path: usize },
    #[error("{got} path weights for {expected} paths")]
    WeightCount { expected: usize, got: usize },
    #[error("path {path}: weight must be non-negative and finite")]
    InvalidWeight { path: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// One fixed route per OD pair, doubling as the set of paths with
/// ground-truth travel times (path `p` is the route of OD pair `p`).
#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    od_pairs: Vec<OdPair>,
    routes: Vec<Vec<SegmentId>>,
    gt_eta_s: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

impl PathSet {
    pub fn new(
        net: &Network,
        od_pairs: Vec<OdPair>,
        routes: Vec<Vec<SegmentId>>,
    ) -> Result<Self, PathError> {
        if od_pairs.is_empty() {
            return Err(PathError::Empty);
        }
        if od_pairs.len() != routes.len() {
            return Err(PathError::RouteCount { pairs: od_pairs.len(), routes: routes.len() });
        }
        for (od, (pair, route)) in od_pairs.iter().zip(&routes).enumerate() {
            validate_route(net, od, *pair, route)?;
        }
        Ok(Self { od_pairs, routes, gt_eta_s: None, weights: None })
    }

    /// Routes every pair along its free-flow shortest path.
    pub fn free_flow(net: &Network, od_pairs: Vec<OdPair>) -> Result<Self, PathError> {
        let pairs: Vec<_> = od_pairs.iter().map(|p| (p.origin, p.destination)).collect();
        let routes = net.shortest_free_flow_routes(&pairs)?;
        Self::new(net, od_pairs, routes)
    }

    pub fn with_ground_truth(mut self, gt_eta_s: Vec<f64>) -> Result<Self, PathError> {
        if gt_eta_s.len() != self.len() {
            return Err(PathError::GroundTruthCount { expected: self.len(), got: gt_eta_s.len() });
        }
        if let Some(path) = gt_eta_s.iter().position(|&g| !(g.is_finite() && g > 0.0)) {
            return Err(PathError::InvalidGroundTruth { path });
        }
        self.gt_eta_s = Some(gt_eta_s);
        Ok(self)
    }

    /// Per-path weights for the least-squares losses; defaults to 1.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, PathError> {
        if weights.len() != self.len() {
            return Err(PathError::WeightCount { expected: self.len(), got: weights.len() });
        }
        if let Some(path) = weights.iter().position(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(PathError::InvalidWeight { path });
        }
        self.weights = Some(weights);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.od_pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.od_pairs.is_empty()
    }

    #[inline]
    pub fn od_pairs(&self) -> &[OdPair] {
        &self.od_pairs
    }

    #[inline]
    pub fn routes(&self) -> &[Vec<SegmentId>] {
        &self.routes
    }

    #[inline]
    pub fn route(&self, od: usize) -> &[SegmentId] {
        &self.routes[od]
    }

    #[inline]
    pub fn ground_truth(&self) -> Option<&[f64]> {
        self.gt_eta_s.as_deref()
    }

    #[inline]
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    #[inline]
    pub fn weight(&self, path: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[path])
    }

    pub fn free_flow_times_s(&self, net: &Network) -> Vec<f64> {
        self.routes.iter().map(|r| net.free_flow_time_s(r)).collect()
    }

    /// `(1/|P|) Σ w_p (gt_p − eta_p)²`. `None` without ground truth.
    pub fn squared_error_loss(&self, eta_s: &[f64]) -> Option<f64> {
        let gt = self.ground_truth()?;
        let sum: f64 = gt
            .iter()
            .zip(eta_s)
            .enumerate()
            .map(|(p, (g, e))| self.weight(p) * (g - e) * (g - e))
            .sum();
        Some(sum / self.len() as f64)
    }
}

fn validate_route(
    net: &Network,
    od: usize,
    pair: OdPair,
    route: &[SegmentId],
) -> Result<(), PathError> {
    let (first, last) = match (route.first(), route.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(PathError::EmptyRoute { od }),
    };
    let mut seen = BTreeSet::new();
    for &s in route {
        if s.index() >= net.len() {
            return Err(PathError::UnknownSegment { od, segment: s });
        }
        if !seen.insert(s) {
            return Err(PathError::RepeatedSegment { od, segment: s });
        }
    }
    for w in route.windows(2) {
        if !net.is_adjacent(w[0], w[1]) {
            return Err(PathError::Disconnected { od, from: w[0], to: w[1] });
        }
    }
    if net.zone(pair.origin)?.entry != first {
        return Err(PathError::WrongStart { od });
    }
    if net.zone(pair.destination)?.exit != last {
        return Err(PathError::WrongEnd { od });
    }
    Ok(())
}
