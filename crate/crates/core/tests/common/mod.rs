#![allow(dead_code)]

use odcal_core::{Network, OdPair, PathSet, Segment, SegmentId, Zone, ZoneId};

pub fn seg(id: u32, length_m: f64, v_max_mps: f64) -> Segment {
    Segment { id: SegmentId(id), length_m, lanes: 1, v_max_mps, capacity_per_lane_vph: 1800.0 }
}

pub fn zone(id: u32, entry: u32, exit: u32) -> Zone {
    Zone { id: ZoneId(id), entry: SegmentId(entry), exit: SegmentId(exit) }
}

pub fn ids(v: &[u32]) -> Vec<SegmentId> {
    v.iter().map(|&i| SegmentId(i)).collect()
}

pub fn od(o: u32, d: u32) -> OdPair {
    OdPair::new(ZoneId(o), ZoneId(d))
}

/// Chain `0 → 1 → … → n-1` with one zone entering at 0 and leaving at n-1.
pub fn chain(lengths: &[f64], v_max: f64) -> Network {
    let n = lengths.len() as u32;
    let segments = lengths.iter().enumerate().map(|(i, &l)| seg(i as u32, l, v_max)).collect();
    let successors = (0..n).map(|i| if i + 1 < n { ids(&[i + 1]) } else { vec![] }).collect();
    Network::new(segments, successors, vec![zone(0, 0, n - 1)]).unwrap()
}

/// Two zones sharing a trunk segment:
///
/// ```text
/// 0 ─┐           ┌─ 4
///    ├─ 2 ─ 3 ───┤
/// 1 ─┘           └─ 5
/// ```
/// Zone 0 enters on 0 and leaves on 4, zone 1 enters on 1 and leaves on 5.
/// OD (0,0) uses 0,2,3,4 and OD (1,1) uses 1,2,3,5.
pub fn merge_diverge() -> Network {
    let segments = vec![
        seg(0, 400.0, 25.0),
        seg(1, 500.0, 25.0),
        seg(2, 1200.0, 30.0),
        seg(3, 800.0, 30.0),
        seg(4, 300.0, 20.0),
        seg(5, 350.0, 20.0),
    ];
    let successors = vec![ids(&[2]), ids(&[2]), ids(&[3]), ids(&[4, 5]), vec![], vec![]];
    Network::new(segments, successors, vec![zone(0, 0, 4), zone(1, 1, 5)]).unwrap()
}

pub fn merge_diverge_paths(net: &Network) -> PathSet {
    PathSet::free_flow(net, vec![od(0, 0), od(1, 1)]).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
