//! Event loop of a single replication.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, LogNormal};

use super::Simulator;
use crate::seeds;

/// Noise stream offset inside a replication's stream block; OD arrival
/// streams use the low 32 bits as the OD index.
const NOISE_STREAM: u64 = 0xFFFF_FFFF;

/// End state of one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// Vehicles on each segment at the horizon, queued ones included.
    pub occupancy: Vec<u32>,
    /// Vehicles waiting to discharge from each segment at the horizon.
    pub queued: Vec<u32>,
    pub generated: Vec<u64>,
    pub completed: Vec<u64>,
    pub in_network: u64,
    /// Per-vehicle records, filled only when tracing.
    pub vehicles: Vec<VehicleRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleRecord {
    pub od: usize,
    pub depart_s: f64,
    /// Time the vehicle entered each segment of its route so far.
    pub entry_times_s: Vec<f64>,
    pub arrival_s: Option<f64>,
}

pub(super) struct ReplicationOutput {
    pub state: SimState,
    pub eta_sum: Vec<f64>,
    pub eta_count: Vec<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// `id` is the OD index.
    Depart,
    /// The vehicle reached the downstream end of its current segment.
    Ready,
    /// The vehicle leaves its current segment.
    Exit,
}

struct Event {
    time: f64,
    seq: u64,
    id: u32,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest event, insertion order on ties
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Vehicle {
    od: u32,
    leg: u32,
    depart: f64,
    /// Time of the vehicle's scheduled event.
    pending: f64,
}

struct Engine<'s, 'a> {
    sim: &'s Simulator<'a>,
    heap: BinaryHeap<Event>,
    seq: u64,
    vehicles: Vec<Vehicle>,
    traces: Vec<Vec<f64>>,
    arrivals: Vec<Option<f64>>,
    trace: bool,
    occupancy: Vec<u32>,
    queued: Vec<u32>,
    next_free: Vec<f64>,
    snapshot: Vec<u32>,
    snapshot_tick: Vec<u64>,
    noise: Vec<f64>,
}

impl Engine<'_, '_> {
    fn push(&mut self, time: f64, id: u32, kind: Kind) {
        self.seq += 1;
        self.heap.push(Event { time, seq: self.seq, id, kind });
    }

    /// Freezes the segment's occupancy at the start of the timestep containing
    /// `t` before it first changes within that step.
    #[inline]
    fn touch(&mut self, seg: usize, t: f64) {
        let tick = (t / self.sim.config.timestep_s) as u64;
        if self.snapshot_tick[seg] != tick {
            self.snapshot_tick[seg] = tick;
            self.snapshot[seg] = self.occupancy[seg];
        }
    }

    fn enter(&mut self, v: usize, t: f64) {
        let veh = &self.vehicles[v];
        let seg = self.sim.paths.route(veh.od as usize)[veh.leg as usize].index();
        self.touch(seg, t);
        let d = &self.sim.dynamics.segments[seg];
        let speed = (d.speed_at_occupancy(self.snapshot[seg]) * self.noise[seg]).min(d.v_max_mps);
        let ready = t + d.length_m / speed;
        self.occupancy[seg] += 1;
        self.vehicles[v].pending = ready;
        if self.trace {
            self.traces[v].push(t);
        }
        self.push(ready, v as u32, Kind::Ready);
    }
}

pub(super) fn run(sim: &Simulator<'_>, x: &[f64], replication: u32, trace: bool) -> ReplicationOutput {
    let cfg = &sim.config;
    let n_seg = sim.net.len();
    let n_od = x.len();
    let block = (replication as u64) << 32;

    let mut noise_rng = seeds::stream_rng(cfg.seed, block | NOISE_STREAM);
    let noise = if cfg.noise_cv > 0.0 {
        let ln = LogNormal::from_mean_cv(1.0, cfg.noise_cv).expect("validated noise cv");
        (0..n_seg).map(|_| ln.sample(&mut noise_rng)).collect()
    } else {
        vec![1.0; n_seg]
    };

    let mut engine = Engine {
        sim,
        heap: BinaryHeap::new(),
        seq: 0,
        vehicles: Vec::new(),
        traces: Vec::new(),
        arrivals: Vec::new(),
        trace,
        occupancy: vec![0; n_seg],
        queued: vec![0; n_seg],
        next_free: vec![f64::NEG_INFINITY; n_seg],
        snapshot: vec![0; n_seg],
        snapshot_tick: vec![u64::MAX; n_seg],
        noise,
    };

    let mut arrival_rngs: Vec<ChaCha8Rng> =
        (0..n_od).map(|z| seeds::stream_rng(cfg.seed, block | z as u64)).collect();
    let rate: Vec<f64> = x.iter().map(|&v| v / 3600.0).collect();
    let next_gap = |rng: &mut ChaCha8Rng, rate: f64| -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / rate
    };
    for z in 0..n_od {
        if rate[z] > 0.0 {
            let t = next_gap(&mut arrival_rngs[z], rate[z]);
            if t < cfg.horizon_s {
                engine.push(t, z as u32, Kind::Depart);
            }
        }
    }

    let mut generated = vec![0u64; n_od];
    let mut completed = vec![0u64; n_od];
    let mut eta_sum = vec![0.0; n_od];
    let mut eta_count = vec![0u64; n_od];

    while let Some(ev) = engine.heap.pop() {
        let t = ev.time;
        if t >= cfg.horizon_s {
            engine.heap.push(ev);
            break;
        }
        match ev.kind {
            Kind::Depart => {
                let z = ev.id as usize;
                let v = engine.vehicles.len();
                engine.vehicles.push(Vehicle { od: ev.id, leg: 0, depart: t, pending: t });
                if trace {
                    engine.traces.push(Vec::new());
                    engine.arrivals.push(None);
                }
                generated[z] += 1;
                engine.enter(v, t);
                let next = t + next_gap(&mut arrival_rngs[z], rate[z]);
                if next < cfg.horizon_s {
                    engine.push(next, ev.id, Kind::Depart);
                }
            }
            Kind::Ready => {
                let v = ev.id as usize;
                let veh = &engine.vehicles[v];
                let seg = sim.paths.route(veh.od as usize)[veh.leg as usize].index();
                let exit = t.max(engine.next_free[seg]);
                engine.next_free[seg] = exit + sim.dynamics.segments[seg].headway_s;
                engine.queued[seg] += 1;
                engine.vehicles[v].pending = exit;
                engine.push(exit, ev.id, Kind::Exit);
            }
            Kind::Exit => {
                let v = ev.id as usize;
                let veh = &engine.vehicles[v];
                let (z, leg) = (veh.od as usize, veh.leg as usize);
                let route = sim.paths.route(z);
                let seg = route[leg].index();
                engine.queued[seg] -= 1;
                engine.touch(seg, t);
                engine.occupancy[seg] -= 1;
                if leg + 1 == route.len() {
                    completed[z] += 1;
                    let depart = engine.vehicles[v].depart;
                    if depart >= cfg.warmup_s {
                        eta_sum[z] += t - depart;
                        eta_count[z] += 1;
                    }
                    if trace {
                        engine.arrivals[v] = Some(t);
                    }
                } else {
                    engine.vehicles[v].leg += 1;
                    engine.enter(v, t);
                }
            }
        }
    }

    // vehicles still travelling: elapsed time to their next event plus free
    // flow over the rest of the route
    let mut in_network = 0;
    for veh in &engine.vehicles {
        let z = veh.od as usize;
        let route = sim.paths.route(z);
        let done = veh.leg as usize + 1 == route.len() && veh.pending < cfg.horizon_s;
        if done {
            continue;
        }
        in_network += 1;
        if veh.depart >= cfg.warmup_s {
            let rest: f64 = route[veh.leg as usize + 1..]
                .iter()
                .map(|s| sim.net.segment(*s).free_flow_time_s())
                .sum();
            eta_sum[z] += veh.pending - veh.depart + rest;
            eta_count[z] += 1;
        }
    }

    let vehicles = if trace {
        engine
            .vehicles
            .iter()
            .zip(engine.traces)
            .zip(engine.arrivals)
            .map(|((veh, entry_times_s), arrival_s)| VehicleRecord {
                od: veh.od as usize,
                depart_s: veh.depart,
                entry_times_s,
                arrival_s,
            })
            .collect()
    } else {
        Vec::new()
    };

    ReplicationOutput {
        state: SimState {
            occupancy: engine.occupancy,
            queued: engine.queued,
            generated,
            completed,
            in_network,
            vehicles,
        },
        eta_sum,
        eta_count,
    }
}
