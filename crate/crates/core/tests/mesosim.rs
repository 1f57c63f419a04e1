mod common;

use common::*;
use odcal_core::{make_ground_truth, simulate, OdVector, PathSet, SimConfig, SimError, Simulator};

fn config(horizon_s: f64, warmup_s: f64, noise_cv: f64) -> SimConfig {
    SimConfig { horizon_s, timestep_s: 1.0, warmup_s, replications: 3, seed: 11, noise_cv, dynamics_seed: 5 }
}

#[test]
fn zero_demand_reports_free_flow_times() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net).with_ground_truth(vec![100.0, 120.0]).unwrap();
    let r = simulate(&net, &paths, &OdVector::zeros(2), &config(3600.0, 300.0, 0.1)).unwrap();
    let ff = paths.free_flow_times_s(&net);
    assert_eq!(r.mean_eta_s, ff);
    assert_eq!(r.generated, vec![0, 0]);
    let expected = ((ff[0] - 100.0).powi(2) + (ff[1] - 120.0).powi(2)) / 2.0;
    assert!(rel_err(r.loss.unwrap(), expected) < 1e-12);
}

#[test]
fn light_noiseless_demand_travels_at_free_flow() {
    let net = chain(&[800.0, 1200.0, 500.0], 25.0);
    let paths = PathSet::free_flow(&net, vec![od(0, 0)]).unwrap();
    let r = simulate(&net, &paths, &OdVector::new(vec![30.0]), &config(7200.0, 600.0, 0.0)).unwrap();
    let ff = paths.free_flow_times_s(&net)[0];
    assert!(r.completed[0] > 0);
    assert!(r.mean_eta_s[0] >= ff);
    assert!(r.mean_eta_s[0] - ff <= 1.0, "{} vs free flow {ff}", r.mean_eta_s[0]);
}

#[test]
fn identical_seeds_give_identical_results() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net);
    let x = OdVector::new(vec![900.0, 600.0]);
    let cfg = config(3600.0, 300.0, 0.2);
    assert_eq!(simulate(&net, &paths, &x, &cfg).unwrap(), simulate(&net, &paths, &x, &cfg).unwrap());
    let other = SimConfig { seed: 12, ..cfg };
    assert_ne!(simulate(&net, &paths, &x, &cfg).unwrap(), simulate(&net, &paths, &x, &other).unwrap());
}

/// One 1000 m lane discharging 1800 veh/h, fed 3600 veh/h from t = 0.
///
/// Deterministic fluid queue: arrivals at rate 1/s, service every 2 s, so the
/// queue grows by 1800 veh/h, the trip departing at `t` waits `t`, and the
/// trips finished by horizon `H` are those departing before `H/2`, with mean
/// wait `H/4`.
#[test]
fn overloaded_bottleneck_queues_at_the_excess_rate() {
    let mut s = seg(0, 1000.0, 25.0);
    s.capacity_per_lane_vph = 1800.0;
    let net = odcal_core::Network::new(vec![s], vec![vec![]], vec![zone(0, 0, 0)]).unwrap();
    let paths = PathSet::free_flow(&net, vec![od(0, 0)]).unwrap();
    let x = OdVector::new(vec![3600.0]);
    let mut previous_wait = 0.0;
    for horizon in [1800.0, 3600.0, 7200.0] {
        let sim = Simulator::new(&net, &paths, config(horizon, 0.0, 0.0)).unwrap();
        let st = sim.replication(&x, 0, true).unwrap();
        let expected_backlog = 1800.0 * horizon / 3600.0;
        let backlog = st.in_network as f64;
        assert!(
            (backlog - expected_backlog).abs() <= 0.1 * expected_backlog,
            "horizon {horizon}: backlog {backlog}, expected {expected_backlog}"
        );
        let done: Vec<f64> = st.vehicles.iter().filter_map(|v| v.arrival_s.map(|a| a - v.depart_s)).collect();
        let mean_trip = done.iter().sum::<f64>() / done.len() as f64;
        let ff = net.segments()[0].free_flow_time_s();
        let wait = mean_trip - ff;
        assert!(mean_trip > ff);
        assert!(
            (wait - horizon / 4.0).abs() <= 0.15 * horizon / 4.0 + 2.0 * ff,
            "horizon {horizon}: mean wait {wait}"
        );
        assert!(wait > previous_wait);
        previous_wait = wait;
    }
}

#[test]
fn vehicles_are_conserved_and_move_forward() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net);
    let sim = Simulator::new(&net, &paths, config(2400.0, 0.0, 0.3)).unwrap();
    for r in 0..3 {
        let st = sim.replication(&OdVector::new(vec![1500.0, 1400.0]), r, true).unwrap();
        let generated: u64 = st.generated.iter().sum();
        let completed: u64 = st.completed.iter().sum();
        assert_eq!(generated, completed + st.in_network);
        assert_eq!(st.vehicles.len() as u64, generated);
        for v in &st.vehicles {
            assert!(v.entry_times_s.windows(2).all(|w| w[1] > w[0]));
            assert!(v.entry_times_s.len() <= paths.route(v.od).len());
            if let Some(a) = v.arrival_s {
                assert_eq!(v.entry_times_s.len(), paths.route(v.od).len());
                assert!(a > *v.entry_times_s.last().unwrap());
            }
        }
    }
}

#[test]
fn mean_path_time_never_beats_free_flow() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net);
    let ff = paths.free_flow_times_s(&net);
    for (x, cv) in [([200.0, 100.0], 0.5), ([1200.0, 900.0], 0.1), ([1700.0, 1600.0], 0.3)] {
        let r = simulate(&net, &paths, &OdVector::new(x.to_vec()), &config(3600.0, 300.0, cv)).unwrap();
        for p in 0..2 {
            assert!(r.mean_eta_s[p] >= ff[p]);
        }
    }
}

#[test]
fn doubling_demand_does_not_speed_up_trips() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net);
    let cfg = config(3600.0, 300.0, 0.0);
    for base in [[100.0, 200.0], [400.0, 300.0], [700.0, 800.0]] {
        let weighted = |scale: f64| {
            let x: Vec<f64> = base.iter().map(|v| v * scale).collect();
            let r = simulate(&net, &paths, &OdVector::new(x.clone()), &cfg).unwrap();
            r.mean_eta_s.iter().zip(&x).map(|(e, w)| e * w).sum::<f64>() / x.iter().sum::<f64>()
        };
        assert!(weighted(2.0) >= weighted(1.0));
    }
}

#[test]
fn ground_truth_reproduces_itself_with_the_same_seeds() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net);
    let x_true = OdVector::new(vec![800.0, 500.0]);
    let cfg = config(3600.0, 300.0, 0.1);
    let with_gt = make_ground_truth(&net, &paths, &x_true, &cfg).unwrap();
    let r = simulate(&net, &with_gt, &x_true, &cfg).unwrap();
    assert_eq!(r.loss, Some(0.0));

    let zero_gt = make_ground_truth(&net, &paths, &OdVector::zeros(2), &cfg).unwrap();
    assert_eq!(zero_gt.ground_truth().unwrap(), paths.free_flow_times_s(&net).as_slice());
}

#[test]
fn hopeless_overload_is_gridlock() {
    let net = chain(&[2000.0, 2000.0], 25.0);
    let paths = PathSet::free_flow(&net, vec![od(0, 0)]).unwrap();
    let err = simulate(&net, &paths, &OdVector::new(vec![20000.0]), &config(1800.0, 0.0, 0.0)).unwrap_err();
    assert!(matches!(err, SimError::Gridlock { .. }), "{err:?}");
}

#[test]
fn bad_inputs_are_rejected() {
    let net = merge_diverge();
    let paths = merge_diverge_paths(&net);
    let cfg = config(3600.0, 300.0, 0.1);
    assert!(matches!(
        simulate(&net, &paths, &OdVector::new(vec![1.0]), &cfg),
        Err(SimError::DimensionMismatch { .. })
    ));
    assert!(matches!(
        simulate(&net, &paths, &OdVector::new(vec![1.0, -2.0]), &cfg),
        Err(SimError::InvalidDemand { od: 1 })
    ));
    let bad = SimConfig { warmup_s: 4000.0, ..cfg };
    assert!(matches!(simulate(&net, &paths, &OdVector::zeros(2), &bad), Err(SimError::InvalidConfig(_))));
}
