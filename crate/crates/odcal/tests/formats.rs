use odcal::config::{AnalyticalSection, ConfigFile, ScenarioMeta};
use odcal::formats::{self, parse_network, network_to_json};
use odcal::{scenario_dir, Error};
use odcal_core::{generate_scenario, CongestionLevel, NetworkError, OdVector, ScenarioSpec, SegmentId};
use proptest::prelude::*;

const CHAIN: &str = r#"{
  "segments": [
    {"id": 2, "length_m": 300.0, "lanes": 1, "v_max_mps": 20.0, "capacity_per_lane_vph": 1900.0, "successors": []},
    {"id": 0, "length_m": 500.0, "lanes": 2, "v_max_mps": 30.0, "capacity_per_lane_vph": 2000.0, "successors": [1]},
    {"id": 1, "length_m": 800.0, "lanes": 2, "v_max_mps": 30.0, "capacity_per_lane_vph": 2000.0, "successors": [2]}
  ],
  "zones": [{"id": 0, "entry_segment": 0, "exit_segment": 2}]
}"#;

#[test]
fn chain_file_parses() {
    let net = parse_network(CHAIN).unwrap();
    assert_eq!(net.len(), 3);
    assert_eq!(net.successors(SegmentId(0)), &[SegmentId(1)]);
    assert_eq!(net.successors(SegmentId(1)), &[SegmentId(2)]);
    assert!(net.successors(SegmentId(2)).is_empty());
    assert_eq!(net.segment(SegmentId(1)).length_m, 800.0);
}

#[test]
fn zero_lanes_names_the_segment() {
    let bad = CHAIN.replace(r#""length_m": 800.0, "lanes": 2"#, r#""length_m": 800.0, "lanes": 0"#);
    let err = parse_network(&bad).unwrap_err();
    assert!(err.to_string().contains("segment 1"), "{err}");
    assert!(matches!(
        err,
        formats::NetworkJsonError::Network(NetworkError::InvalidSegment { id: SegmentId(1), .. })
    ));
    assert!(parse_network("{\"segments\": [").is_err());
}

#[test]
fn scenario_directory_round_trips() {
    let sc = generate_scenario(&ScenarioSpec::new(60, 30, CongestionLevel::Medium, 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let meta = ScenarioMeta { level: "medium".into(), seed: sc.seed, gt_seed: 99, gt_replications: 20 };
    scenario_dir::save(dir.path(), &sc, meta.clone()).unwrap();
    let loaded = scenario_dir::load(dir.path()).unwrap();
    assert_eq!(loaded.scenario, sc);
    assert_eq!(loaded.meta, meta);
}

#[test]
fn mismatched_scenario_files_are_rejected() {
    let sc = generate_scenario(&ScenarioSpec::new(40, 20, CongestionLevel::Low, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let meta = ScenarioMeta { level: "low".into(), seed: sc.seed, gt_seed: 1, gt_replications: 20 };
    scenario_dir::save(dir.path(), &sc, meta).unwrap();
    formats::save_demand(&dir.path().join(scenario_dir::X_TRUE), &OdVector::new(vec![1.0; 3])).unwrap();
    assert!(matches!(scenario_dir::load(dir.path()), Err(Error::Invalid(_))));
}

#[test]
fn od_tables_check_header_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    std::fs::write(&p, "od_index,demand_vph\n0,1.5\n1,2\n").unwrap();
    assert_eq!(formats::load_demand(&p).unwrap().as_slice(), &[1.5, 2.0]);
    std::fs::write(&p, "od_index,demand_vph\n1,1.5\n0,2\n").unwrap();
    assert!(formats::load_demand(&p).is_err());
    std::fs::write(&p, "od,demand_vph\n0,1.5\n").unwrap();
    assert!(formats::load_demand(&p).is_err());
    assert!(formats::load_ground_truth(&dir.path().join("missing.csv")).is_err());
}

#[test]
fn config_keys_default_and_validate() {
    let cfg = ConfigFile::parse("replications = 7\n[analytical]\nalpha1 = 3.0\n").unwrap();
    assert_eq!(cfg.replications, Some(7));
    assert_eq!(cfg.analytical, Some(AnalyticalSection { alpha1: Some(3.0), ..Default::default() }));
    assert!(ConfigFile::parse("replicashuns = 7\n").is_err());

    let net = parse_network(CHAIN).unwrap();
    let paths = odcal_core::PathSet::free_flow(&net, vec![odcal_core::OdPair::new(odcal_core::ZoneId(0), odcal_core::ZoneId(0))]).unwrap();
    let sim = cfg.sim_config(&net, &paths).unwrap();
    assert_eq!(sim.replications, 7);
    assert_eq!(sim.timestep_s, 1.0);
    assert_eq!(cfg.fd_params(&net).unwrap().alpha1, 3.0);
    let bad = ConfigFile::parse("[analytical]\nv_min_mps = 50.0\n").unwrap();
    assert!(bad.fd_params(&net).is_err());
    let bad = ConfigFile::parse("warmup_s = 10.0\nhorizon_s = 5.0\n").unwrap();
    assert!(bad.sim_config(&net, &paths).is_err());
}

fn arb_network_json() -> impl Strategy<Value = String> {
    (1usize..12).prop_flat_map(|n| {
        (
            proptest::collection::vec((1.0f64..3000.0, 1u32..5, 5.0f64..40.0, 1000.0f64..2500.0), n),
            proptest::collection::vec(proptest::bool::weighted(0.3), n * n),
            proptest::collection::vec((0..n as u32, 0..n as u32), 0..4),
        )
            .prop_map(move |(segs, edges, zones)| {
                let segments: Vec<String> = segs
                    .iter()
                    .enumerate()
                    .map(|(i, (l, lanes, v, c))| {
                        let succ: Vec<String> =
                            (0..n).filter(|&j| j != i && edges[i * n + j]).map(|j| j.to_string()).collect();
                        format!(
                            r#"{{"id":{i},"length_m":{l},"lanes":{lanes},"v_max_mps":{v},"capacity_per_lane_vph":{c},"successors":[{}]}}"#,
                            succ.join(",")
                        )
                    })
                    .collect();
                let zones: Vec<String> = zones
                    .iter()
                    .enumerate()
                    .map(|(k, (e, x))| format!(r#"{{"id":{k},"entry_segment":{e},"exit_segment":{x}}}"#))
                    .collect();
                format!(r#"{{"segments":[{}],"zones":[{}]}}"#, segments.join(","), zones.join(","))
            })
    })
}

proptest! {
    #[test]
    fn network_json_round_trips(json in arb_network_json()) {
        let net = parse_network(&json).unwrap();
        let again = parse_network(&network_to_json(&net)).unwrap();
        prop_assert_eq!(&net, &again);
        prop_assert_eq!(network_to_json(&net), network_to_json(&again));
    }
}
