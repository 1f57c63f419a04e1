//! Directed segment graph with ramp-pair zones and free-flow route fixing.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Index of a segment. Segment ids are dense: the segment with id `i` is stored
/// at position `i` of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentId(pub u32);

impl SegmentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZoneId(pub u32);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub id: SegmentId,
    pub length_m: f64,
    pub lanes: u32,
    pub v_max_mps: f64,
    /// Discharge capacity used by the simulator.
    pub capacity_per_lane_vph: f64,
}

impl Segment {
    /// Travel time at the speed limit, in seconds.
    #[inline]
    pub fn free_flow_time_s(&self) -> f64 {
        self.length_m / self.v_max_mps
    }
}

/// A ramp pair: trips originating in the zone enter the network on `entry`,
/// trips destined to it leave on `exit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Zone {
    pub id: ZoneId,
    pub entry: SegmentId,
    pub exit: SegmentId,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("segment at position {position} has id {id}; ids must equal their position")]
    NonDenseId { position: usize, id: SegmentId },
    #[error("segment {id}: {reason}")]
    InvalidSegment { id: SegmentId, reason: &'static str },
    #[error("segment {segment} lists unknown successor {successor}")]
    DanglingSuccessor { segment: SegmentId, successor: SegmentId },
    #[error("successor list has {got} entries for {expected} segments")]
    SuccessorCount { expected: usize, got: usize },
    #[error("zone {zone} references unknown segment {segment}")]
    UnknownZoneSegment { zone: ZoneId, segment: SegmentId },
    #[error("zone id {0} appears more than once")]
    DuplicateZone(ZoneId),
    #[error("unknown zone {0}")]
    UnknownZone(ZoneId),
    #[error("no route from zone {origin} to zone {destination}")]
    NoPath { origin: ZoneId, destination: ZoneId },
}

/// Road network: segments, their successors, and the zones.
///
/// Immutable once built; every successor reference and zone ramp has been
/// checked to resolve.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    segments: Vec<Segment>,
    successors: Vec<Vec<SegmentId>>,
    predecessors: Vec<Vec<SegmentId>>,
    zones: Vec<Zone>,
    zone_index: BTreeMap<ZoneId, usize>,
}

impl Network {
    pub fn new(
        segments: Vec<Segment>,
        successors: Vec<Vec<SegmentId>>,
        zones: Vec<Zone>,
    ) -> Result<Self, NetworkError> {
        if successors.len() != segments.len() {
            return Err(NetworkError::SuccessorCount {
                expected: segments.len(),
                got: successors.len(),
            });
        }
        for (position, seg) in segments.iter().enumerate() {
            if seg.id.index() != position {
                return Err(NetworkError::NonDenseId { position, id: seg.id });
            }
            let invalid = |reason| NetworkError::InvalidSegment { id: seg.id, reason };
            if !(seg.length_m.is_finite() && seg.length_m > 0.0) {
                return Err(invalid("length_m must be positive"));
            }
            if seg.lanes == 0 {
                return Err(invalid("lanes must be at least 1"));
            }
            if !(seg.v_max_mps.is_finite() && seg.v_max_mps > 0.0) {
                return Err(invalid("v_max_mps must be positive"));
            }
            if !(seg.capacity_per_lane_vph.is_finite() && seg.capacity_per_lane_vph > 0.0) {
                return Err(invalid("capacity_per_lane_vph must be positive"));
            }
        }
        let n = segments.len();
        let mut successors = successors;
        let mut predecessors = vec![Vec::new(); n];
        for (i, succ) in successors.iter_mut().enumerate() {
            succ.sort_unstable();
            succ.dedup();
            for &s in succ.iter() {
                if s.index() >= n {
                    return Err(NetworkError::DanglingSuccessor {
                        segment: SegmentId(i as u32),
                        successor: s,
                    });
                }
                predecessors[s.index()].push(SegmentId(i as u32));
            }
        }
        let mut zone_index = BTreeMap::new();
        for (pos, zone) in zones.iter().enumerate() {
            for seg in [zone.entry, zone.exit] {
                if seg.index() >= n {
                    return Err(NetworkError::UnknownZoneSegment { zone: zone.id, segment: seg });
                }
            }
            if zone_index.insert(zone.id, pos).is_some() {
                return Err(NetworkError::DuplicateZone(zone.id));
            }
        }
        Ok(Self { segments, successors, predecessors, zones, zone_index })
    }

    #[inline]
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    #[inline]
    pub fn segment(&self, id: SegmentId) -> &Segment {
        &self.segments[id.index()]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Successors of `id`, sorted by id.
    #[inline]
    pub fn successors(&self, id: SegmentId) -> &[SegmentId] {
        &self.successors[id.index()]
    }

    #[inline]
    pub fn is_adjacent(&self, from: SegmentId, to: SegmentId) -> bool {
        self.successors(from).binary_search(&to).is_ok()
    }

    #[inline]
    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone(&self, id: ZoneId) -> Result<&Zone, NetworkError> {
        self.zone_index
            .get(&id)
            .map(|&pos| &self.zones[pos])
            .ok_or(NetworkError::UnknownZone(id))
    }

    /// Mean of the per-lane capacities over all segments.
    pub fn mean_capacity_per_lane_vph(&self) -> f64 {
        let sum: f64 = self.segments.iter().map(|s| s.capacity_per_lane_vph).sum();
        sum / self.segments.len().max(1) as f64
    }

    pub fn free_flow_time_s(&self, route: &[SegmentId]) -> f64 {
        route.iter().map(|&s| self.segment(s).free_flow_time_s()).sum()
    }

    /// Route from the origin's entry ramp to the destination's exit ramp that
    /// minimizes the free-flow travel time. Among equal-cost routes the
    /// lexicographically smallest id sequence wins.
    pub fn shortest_free_flow_route(
        &self,
        origin: ZoneId,
        destination: ZoneId,
    ) -> Result<Vec<SegmentId>, NetworkError> {
        let target = self.zone(destination)?.exit;
        let cost_to_go = self.cost_to_go(target);
        self.walk_route(origin, destination, &cost_to_go)
    }

    /// Free-flow routes for many OD pairs, sharing one backward search per
    /// destination zone.
    pub fn shortest_free_flow_routes(
        &self,
        pairs: &[(ZoneId, ZoneId)],
    ) -> Result<Vec<Vec<SegmentId>>, NetworkError> {
        let mut by_destination: BTreeMap<ZoneId, Vec<usize>> = BTreeMap::new();
        for (i, &(_, d)) in pairs.iter().enumerate() {
            by_destination.entry(d).or_default().push(i);
        }
        let mut routes = vec![Vec::new(); pairs.len()];
        for (destination, members) in by_destination {
            let cost_to_go = self.cost_to_go(self.zone(destination)?.exit);
            for i in members {
                routes[i] = self.walk_route(pairs[i].0, destination, &cost_to_go)?;
            }
        }
        Ok(routes)
    }

    /// Backward Dijkstra: free-flow time from the start of each segment to the
    /// end of `target`, counting both endpoints' own traversal times.
    fn cost_to_go(&self, target: SegmentId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[target.index()] = self.segment(target).free_flow_time_s();
        heap.push(HeapEntry { cost: dist[target.index()], node: target.0 });
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node as usize] {
                continue;
            }
            for &pred in &self.predecessors[node as usize] {
                let cand = cost + self.segment(pred).free_flow_time_s();
                if cand < dist[pred.index()] {
                    dist[pred.index()] = cand;
                    heap.push(HeapEntry { cost: cand, node: pred.0 });
                }
            }
        }
        dist
    }

    fn walk_route(
        &self,
        origin: ZoneId,
        destination: ZoneId,
        cost_to_go: &[f64],
    ) -> Result<Vec<SegmentId>, NetworkError> {
        let start = self.zone(origin)?.entry;
        let target = self.zone(destination)?.exit;
        let total = cost_to_go[start.index()];
        if !total.is_finite() {
            return Err(NetworkError::NoPath { origin, destination });
        }
        let tol = 1e-9 * total;
        let mut route = vec![start];
        let mut current = start;
        let mut elapsed = self.segment(start).free_flow_time_s();
        while current != target {
            // successors are sorted, so the first tight one is the smallest id
            let next = self
                .successors(current)
                .iter()
                .copied()
                .find(|s| (elapsed + cost_to_go[s.index()] - total).abs() <= tol);
            match next {
                Some(s) => {
                    elapsed += self.segment(s).free_flow_time_s();
                    route.push(s);
                    current = s;
                }
                None => return Err(NetworkError::NoPath { origin, destination }),
            }
            if route.len() > self.len() {
                return Err(NetworkError::NoPath { origin, destination });
            }
        }
        Ok(route)
    }
}

#[derive(Clone, Copy, Debug)]
struct HeapEntry {
    cost: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}
