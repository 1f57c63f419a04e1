//! Synthetic calibration scenarios.
//!
//! The network is a grid of junctions joined by two-way highway links: links
//! on the outer boundary form a three-lane ring, interior links are two-lane
//! crossings. Every link is cut into one or more segments so the network has
//! exactly the requested segment count. Each zone is an on-ramp/off-ramp pair
//! at a junction. Hidden true demand is scaled so the most loaded mainline
//! segment runs at the congestion level's share of its capacity, and ground
//! truth is simulated from it.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analytical::FdParams;
use crate::assignment::AssignmentMatrix;
use crate::mesosim::{make_ground_truth, SimConfig, SimError};
use crate::network::{Network, NetworkError, Segment, SegmentId, Zone, ZoneId};
use crate::paths::{OdPair, OdVector, PathError, PathSet};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CongestionLevel {
    Low,
    Medium,
    High,
}

impl CongestionLevel {
    pub const ALL: [CongestionLevel; 3] = [Self::Low, Self::Medium, Self::High];

    /// Peak mainline demand as a share of capacity.
    pub fn load_ratio(self) -> f64 {
        match self {
            Self::Low => 0.3,
            Self::Medium => 0.7,
            Self::High => 1.1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub segments: usize,
    pub ods: usize,
    pub level: CongestionLevel,
    pub seed: u64,
    pub gt_replications: u32,
    pub noise_cv: f64,
    /// Regeneration attempts with fresh seeds when ground truth gridlocks.
    pub max_attempts: u32,
}

impl ScenarioSpec {
    pub fn new(segments: usize, ods: usize, level: CongestionLevel, seed: u64) -> Self {
        Self { segments, ods, level, seed, gt_replications: 20, noise_cv: 0.1, max_attempts: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(&'static str),
    #[error("{segments} segments cannot hold {zones} zones and a road network")]
    TooFewSegments { segments: usize, zones: usize },
    #[error("ground truth gridlocked in all {attempts} attempts")]
    Gridlock { attempts: u32 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A generated network with routes, ground truth, and the hidden demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub network: Network,
    /// Routes with ground-truth travel times attached.
    pub paths: PathSet,
    /// Demand that produced the ground truth; for evaluation only.
    pub x_true: OdVector,
    pub x_upper: OdVector,
    pub level: CongestionLevel,
    /// Seed of the attempt that succeeded.
    pub seed: u64,
    /// Simulator settings for calibration runs (replication seed left at 0).
    pub sim: SimConfig,
    pub fd: FdParams,
}

const LINK_LENGTH_M: (f64, f64) = (600.0, 1400.0);
const RAMP_LENGTH_M: (f64, f64) = (250.0, 450.0);
const CAPACITY_VPHPL: (f64, f64) = (1800.0, 2100.0);
const RING: (u32, f64) = (3, 31.3);
const CROSSING: (u32, f64) = (2, 29.0);
const RAMP_SPEED_MPS: f64 = 20.0;
/// Ramps get enough lanes to run at most at this share of capacity under the
/// true demand, so the mainline sets the congestion level.
const RAMP_MAX_LOAD: f64 = 0.6;

/// Generates a scenario, retrying with derived seeds while the ground-truth
/// simulation gridlocks.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    if spec.segments < 10 {
        return Err(ScenarioError::InvalidSpec("at least 10 segments are required"));
    }
    if spec.ods < 2 {
        return Err(ScenarioError::InvalidSpec("at least 2 OD pairs are required"));
    }
    if spec.gt_replications == 0 {
        return Err(ScenarioError::InvalidSpec("gt_replications must be at least 1"));
    }
    let attempts = spec.max_attempts.max(1);
    for attempt in 0..attempts {
        let seed = if attempt == 0 { spec.seed } else { seeds::derive(spec.seed, 1000 + attempt as u64) };
        match generate_once(spec, seed) {
            Err(ScenarioError::Sim(SimError::Gridlock { .. })) => continue,
            other => return other,
        }
    }
    Err(ScenarioError::Gridlock { attempts })
}

fn generate_once(spec: &ScenarioSpec, seed: u64) -> Result<Scenario, ScenarioError> {
    let zones = zone_count(spec.ods);
    let mut layout = build_layout(spec.segments, zones, seed)?;
    let net = layout.network()?;

    let mut od_rng = seeds::stream_rng(seed, seeds::tag::OD_SELECTION);
    let mut pairs: Vec<OdPair> = (0..zones as u32)
        .flat_map(|o| (0..zones as u32).filter(move |&d| d != o).map(move |d| OdPair::new(ZoneId(o), ZoneId(d))))
        .collect();
    pairs.shuffle(&mut od_rng);
    pairs.truncate(spec.ods);
    pairs.sort();
    let paths = PathSet::free_flow(&net, pairs)?;

    let mut demand_rng = seeds::stream_rng(seed, seeds::tag::TRUE_DEMAND);
    let base: Vec<f64> = (0..paths.len()).map(|_| demand_rng.random_range(0.25..=1.75)).collect();
    let a = AssignmentMatrix::build(&net, &paths);
    let lambda = a.apply(&base);
    let peak = layout
        .mainline
        .iter()
        .map(|&i| lambda[i] / (net.segments()[i].capacity_per_lane_vph * net.segments()[i].lanes as f64))
        .fold(0.0, f64::max);
    let scale = spec.level.load_ratio() / peak;
    let x_true = OdVector::new(base.iter().map(|b| b * scale).collect());

    // widen ramps that would otherwise be the bottleneck
    for &i in &layout.ramps {
        let seg = &mut layout.segments[i];
        let need = libm::ceil(lambda[i] * scale / (RAMP_MAX_LOAD * seg.capacity_per_lane_vph));
        seg.lanes = (need as u32).max(1);
    }
    let net = layout.network()?;
    let paths = PathSet::new(&net, paths.od_pairs().to_vec(), paths.routes().to_vec())?;

    let mean = x_true.mean();
    let x_upper = OdVector::new(x_true.as_slice().iter().map(|&x| 3.0 * x.max(mean)).collect());

    let mut sim = SimConfig::defaults_for(&net, &paths);
    sim.noise_cv = spec.noise_cv;
    sim.dynamics_seed = seeds::derive(seed, seeds::tag::DYNAMICS);
    let gt_cfg = SimConfig {
        replications: spec.gt_replications,
        seed: seeds::derive(seed, seeds::tag::GROUND_TRUTH),
        ..sim
    };
    let paths = make_ground_truth(&net, &paths, &x_true, &gt_cfg)?;
    let fd = FdParams::defaults_for(&net);
    Ok(Scenario { network: net, paths, x_true, x_upper, level: spec.level, seed, sim, fd })
}

/// Smallest `Z` with `Z (Z − 1) ≥ ods`.
fn zone_count(ods: usize) -> usize {
    let mut z = 2;
    while z * (z - 1) < ods {
        z += 1;
    }
    z
}

struct Layout {
    segments: Vec<Segment>,
    successors: Vec<Vec<SegmentId>>,
    zones: Vec<Zone>,
    mainline: Vec<usize>,
    ramps: Vec<usize>,
}

impl Layout {
    fn network(&self) -> Result<Network, NetworkError> {
        Network::new(self.segments.clone(), self.successors.clone(), self.zones.clone())
    }
}

/// Largest grid whose directed links fit in `mainline` segments.
fn grid_size(mainline: usize) -> Option<(usize, usize)> {
    let links = |gx: usize, gy: usize| 2 * (gx * (gy - 1) + gy * (gx - 1));
    let mut best = None;
    let mut gx = 2;
    loop {
        let mut grew = false;
        for gy in [gx - 1, gx] {
            if gy >= 1 && links(gx, gy) <= mainline {
                best = Some((gx, gy));
                grew = true;
            }
        }
        if !grew {
            return best;
        }
        gx += 1;
    }
}

fn build_layout(segments: usize, zones: usize, seed: u64) -> Result<Layout, ScenarioError> {
    let too_few = ScenarioError::TooFewSegments { segments, zones };
    let mainline_count = segments.checked_sub(2 * zones).ok_or(too_few.clone())?;
    let (gx, gy) = grid_size(mainline_count).ok_or(too_few)?;
    let mut rng = seeds::stream_rng(seed, seeds::tag::TOPOLOGY);

    let node = |x: usize, y: usize| y * gx + x;
    let on_boundary = |a: (usize, usize), b: (usize, usize)| {
        (a.0 == b.0 && (a.0 == 0 || a.0 == gx - 1)) || (a.1 == b.1 && (a.1 == 0 || a.1 == gy - 1))
    };
    // undirected edges in a fixed order, each with its physical attributes
    struct Edge {
        a: usize,
        b: usize,
        length_m: f64,
        lanes: u32,
        v_max_mps: f64,
        cap: f64,
    }
    let mut edges = Vec::new();
    for y in 0..gy {
        for x in 0..gx {
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx >= gx || ny >= gy {
                    continue;
                }
                let (lanes, v) = if on_boundary((x, y), (nx, ny)) { RING } else { CROSSING };
                edges.push(Edge {
                    a: node(x, y),
                    b: node(nx, ny),
                    length_m: rng.random_range(LINK_LENGTH_M.0..=LINK_LENGTH_M.1),
                    lanes,
                    v_max_mps: v + rng.random_range(-0.5..=0.5),
                    cap: rng.random_range(CAPACITY_VPHPL.0..=CAPACITY_VPHPL.1),
                });
            }
        }
    }
    let n_links = 2 * edges.len();
    let per_link = mainline_count / n_links;
    let extra = mainline_count % n_links;

    let mut segs = Vec::with_capacity(segments);
    let mut succ: Vec<Vec<SegmentId>> = Vec::with_capacity(segments);
    // (from, to, first segment, last segment) per directed link
    let mut links = Vec::with_capacity(n_links);
    for (e, edge) in edges.iter().enumerate() {
        for (d, (from, to)) in [(edge.a, edge.b), (edge.b, edge.a)].into_iter().enumerate() {
            let pieces = per_link + usize::from(2 * e + d < extra);
            let first = segs.len();
            for p in 0..pieces {
                let id = segs.len();
                segs.push(Segment {
                    id: SegmentId(id as u32),
                    length_m: edge.length_m / pieces as f64,
                    lanes: edge.lanes,
                    v_max_mps: edge.v_max_mps,
                    capacity_per_lane_vph: edge.cap,
                });
                succ.push(if p + 1 < pieces { vec![SegmentId(id as u32 + 1)] } else { Vec::new() });
            }
            links.push((from, to, first, segs.len() - 1));
        }
    }
    let mainline: Vec<usize> = (0..segs.len()).collect();

    let mut junctions: Vec<usize> = (0..gx * gy).collect();
    junctions.shuffle(&mut rng);
    let zone_node: Vec<usize> = (0..zones).map(|z| junctions[z % junctions.len()]).collect();
    let mut ramps = Vec::with_capacity(2 * zones);
    let mut zone_list = Vec::with_capacity(zones);
    let mut off_ramps_at = vec![Vec::new(); gx * gy];
    let mut on_ramps = Vec::with_capacity(zones);
    for (z, &j) in zone_node.iter().enumerate() {
        let mut ramp = |segs: &mut Vec<Segment>, rng: &mut ChaCha8Rng| {
            let id = segs.len();
            segs.push(Segment {
                id: SegmentId(id as u32),
                length_m: rng.random_range(RAMP_LENGTH_M.0..=RAMP_LENGTH_M.1),
                lanes: 1,
                v_max_mps: RAMP_SPEED_MPS,
                capacity_per_lane_vph: rng.random_range(CAPACITY_VPHPL.0..=CAPACITY_VPHPL.1),
            });
            succ.push(Vec::new());
            ramps.push(id);
            id
        };
        let entry = ramp(&mut segs, &mut rng);
        let exit = ramp(&mut segs, &mut rng);
        off_ramps_at[j].push((z, exit));
        on_ramps.push((z, j, entry));
        zone_list.push(Zone { id: ZoneId(z as u32), entry: SegmentId(entry as u32), exit: SegmentId(exit as u32) });
    }

    let mut outgoing = vec![Vec::new(); gx * gy];
    for &(from, to, first, _) in &links {
        outgoing[from].push((to, first));
    }
    for &(from, to, _, last) in &links {
        let s = &mut succ[last];
        s.extend(outgoing[to].iter().filter(|(next, _)| *next != from).map(|&(_, f)| SegmentId(f as u32)));
        s.extend(off_ramps_at[to].iter().map(|&(_, r)| SegmentId(r as u32)));
    }
    for &(z, j, entry) in &on_ramps {
        let s = &mut succ[entry];
        s.extend(outgoing[j].iter().map(|&(_, f)| SegmentId(f as u32)));
        s.extend(off_ramps_at[j].iter().filter(|(other, _)| *other != z).map(|&(_, r)| SegmentId(r as u32)));
    }
    debug_assert_eq!(segs.len(), segments);
    Ok(Layout { segments: segs, successors: succ, zones: zone_list, mainline, ramps })
}
