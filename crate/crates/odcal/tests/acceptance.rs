//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use odcal_core::compare::{initial_point, run_algorithm};
use odcal_core::fd::speed;
use odcal_core::seeds::stream_rng;
use odcal_core::spsa::{gradient_estimate, rademacher};
use odcal_core::{
    compare, generate_scenario, nrmse, run_spsa, Algorithm, AnalyticalModel, AssignmentMatrix, CompareOptions,
    CongestionLevel, Evaluation, FdParams, MetamodelOptions, Objective, OdVector, Scenario, ScenarioSpec, SimError,
    SpsaConfig,
};
use rand::Rng;

const BUDGET: usize = 30;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn scenario(segments: usize, ods: usize, level: CongestionLevel, seed: u64) -> Scenario {
    generate_scenario(&ScenarioSpec::new(segments, ods, level, seed)).expect("scenario generates")
}

fn final_nrmse(sc: &Scenario, algorithm: Algorithm, seed: u64) -> (f64, f64) {
    let gt = sc.paths.ground_truth().unwrap();
    let st = run_algorithm(sc, algorithm, BUDGET, seed, &MetamodelOptions::default(), &SpsaConfig::default())
        .expect("run completes");
    assert_eq!(st.sim_calls(), BUDGET);
    let by_call = odcal_core::compare::nrmse_by_call(gt, &st);
    (by_call[0], *by_call.last().unwrap())
}

/// Ten scenarios spanning 40–200 segments and 20–100 OD pairs, congestion
/// levels cycled; equal budgets from a common start.
fn a1() -> Outcome {
    let mut wins = 0;
    let mut rel = Vec::new();
    for i in 0..10u64 {
        let segments = 40 + (160 * i as usize) / 9;
        let ods = 20 + (80 * i as usize) / 9;
        let level = CongestionLevel::ALL[i as usize % 3];
        let sc = scenario(segments, ods, level, 100 + i);
        let r = compare(&sc, &CompareOptions::new(BUDGET, 1 + i)).expect("comparison completes");
        let (m, s) = (r.final_metamodel(), r.final_spsa());
        if m <= s {
            wins += 1;
        }
        rel.push(r.relative_improvement);
        println!(
            "    A1 scenario {i}: {segments} segments, {ods} ODs, {}: nRMSE initial {:.4}, metamodel {m:.4}, SPSA {s:.4}, relative improvement {:.3}",
            level.name(),
            r.nrmse_initial,
            r.relative_improvement
        );
    }
    let mean = rel.iter().sum::<f64>() / rel.len() as f64;
    outcome(
        wins >= 8 && mean >= 0.2,
        format!("metamodel at least as good in {wins}/10 scenarios (need 8), mean relative improvement {:.1}% (need 20%)", 100.0 * mean),
    )
}

fn medium_30_od() -> Scenario {
    scenario(60, 30, CongestionLevel::Medium, 7)
}

fn a2(sc: &Scenario) -> Outcome {
    let mut ok = 0;
    let mut parts = Vec::new();
    for seed in 1..=3 {
        let (init, fin) = final_nrmse(sc, Algorithm::Metamodel, seed);
        if fin < 0.5 * init {
            ok += 1;
        }
        parts.push(format!("{init:.3}→{fin:.3}"));
    }
    outcome(ok == 3, format!("{ok}/3 seeds below half the initial nRMSE ({})", parts.join(", ")))
}

fn a3(sc: &Scenario) -> Outcome {
    let mut finals = Vec::new();
    let mut halved = 0;
    let mut starts = Vec::new();
    for seed in 11..=15 {
        starts.push(initial_point(sc, seed));
        let (init, fin) = final_nrmse(sc, Algorithm::Metamodel, seed);
        if fin < 0.5 * init {
            halved += 1;
        }
        finals.push(fin);
    }
    let distinct = starts.iter().enumerate().all(|(i, a)| starts[..i].iter().all(|b| a != b));
    let max = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = finals.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        distinct && halved == 5 && max - min < 0.15,
        format!("{halved}/5 starts halved nRMSE, final spread {:.4} (need < 0.15)", max - min),
    )
}

/// Central differences of the model's own loss at interior points of ten
/// generated networks, ten random (parameters, demand, ground truth) each.
fn a4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    let mut rng = stream_rng(4, 0);
    let mut net_seed = 400;
    while instances < 100 {
        net_seed += 1;
        let sc = generate_scenario(&ScenarioSpec {
            gt_replications: 1,
            ..ScenarioSpec::new(rng.random_range(40..120), rng.random_range(10..30), CongestionLevel::Medium, net_seed)
        })
        .unwrap();
        let a = AssignmentMatrix::build(&sc.network, &sc.paths);
        let ff = sc.paths.free_flow_times_s(&sc.network);
        for _ in 0..10 {
            let fd = FdParams {
                alpha1: rng.random_range(1.2..4.0),
                alpha2: rng.random_range(0.8..4.0),
                ..FdParams::defaults_for(&sc.network)
            };
            let gt: Vec<f64> = ff.iter().map(|f| f * rng.random_range(0.9..2.5)).collect();
            let paths = sc.paths.clone().with_ground_truth(gt).unwrap();
            let model = AnalyticalModel::new(&sc.network, &a, &paths, fd).unwrap();
            let x: Vec<f64> = sc.x_true.as_slice().iter().map(|v| v * rng.random_range(0.2..1.5)).collect();
            let x = OdVector::new(x);
            let st = model.forward(&x).unwrap();
            // interior: no segment within 2% of the jam clamp
            if st.density.iter().any(|k| *k >= 0.98 * fd.k_jam_vpkm_per_lane) {
                continue;
            }
            let g = model.gradient(&x).unwrap();
            let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let h = 1e-3;
            for z in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp.as_mut_slice()[z] += h;
                xm.as_mut_slice()[z] -= h;
                let fdiff = (model.loss(&xp).unwrap() - model.loss(&xm).unwrap()) / (2.0 * h);
                let err = (g[z] - fdiff).abs() / g[z].abs().max(fdiff.abs()).max(1e-6 * scale).max(1e-12);
                worst = worst.max(err);
            }
            instances += 1;
            if instances == 100 {
                break;
            }
        }
    }
    outcome(worst < 1e-4, format!("max relative error {worst:.2e} over {instances} instances (need < 1e-4)"))
}

fn a5() -> Outcome {
    let mut rng = stream_rng(5, 0);
    let mut violations = 0;
    for _ in 0..10_000 {
        let v_min = rng.random_range(0.1..10.0);
        let v_max = v_min + rng.random_range(0.01..40.0);
        let (a1, a2) = (rng.random_range(0.1..6.0), rng.random_range(0.1..6.0));
        let k_jam = rng.random_range(50.0..250.0);
        let mut ks: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..1.2 * k_jam)).collect();
        ks.push(0.0);
        ks.push(k_jam);
        ks.sort_by(f64::total_cmp);
        let vs: Vec<f64> = ks.iter().map(|k| speed(k / k_jam, v_min, v_max, a1, a2)).collect();
        let bounded = vs.iter().all(|v| (v_min..=v_max).contains(v));
        let monotone = vs.windows(2).all(|w| w[1] <= w[0]);
        if !(bounded && monotone) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations in 10000 random draws"))
}

/// Direct evaluation: (|P| / Σ gt) · sqrt(Σ (eta − gt)² / |P|).
fn nrmse_direct(gt: &[f64], eta: &[f64]) -> f64 {
    let n = gt.len() as f64;
    let mut sq = 0.0;
    let mut total = 0.0;
    for i in 0..gt.len() {
        sq += (eta[i] - gt[i]) * (eta[i] - gt[i]);
        total += gt[i];
    }
    n / total * (sq / n).sqrt()
}

fn a6() -> Outcome {
    let mut rng = stream_rng(6, 0);
    let mut worst: f64 = 0.0;
    let hand = [(vec![100.0], vec![150.0], 0.5), (vec![100.0, 300.0], vec![140.0, 340.0], 0.2)];
    let hand_ok = hand.iter().all(|(g, e, want)| (nrmse(g, e).unwrap() - want).abs() <= 1e-12);
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let gt: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5000.0)).collect();
        let eta: Vec<f64> = gt.iter().map(|g| g * rng.random_range(0.3..3.0)).collect();
        let a = nrmse(&gt, &eta).unwrap();
        let b = nrmse_direct(&gt, &eta);
        worst = worst.max((a - b).abs() / b.max(1e-300));
    }
    outcome(hand_ok && worst <= 1e-12, format!("hand cases {}, max relative difference {worst:.1e} over 1000 cases", if hand_ok { "exact" } else { "WRONG" }))
}

struct Quadratic {
    target: Vec<f64>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn evaluate(&mut self, x: &OdVector) -> Result<Evaluation, SimError> {
        let loss = x.as_slice().iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(Evaluation { loss, path_eta_s: vec![], replications: 1 })
    }
}

fn a7() -> Outcome {
    let dim = 20;
    let mut rng = stream_rng(7, 0);
    let upper = OdVector::new(vec![100.0; dim]);
    let target: Vec<f64> = (0..dim).map(|_| rng.random_range(20.0..80.0)).collect();
    let x0 = OdVector::new((0..dim).map(|_| rng.random_range(0.0..100.0)).collect());
    let dist = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let big_a = 100.0;
    let cfg = SpsaConfig {
        a: Some(0.03 * (big_a + 1.0f64).powf(0.602)),
        a_stability: Some(big_a),
        c: Some(1.0),
        seed: 7,
        ..SpsaConfig::default()
    };
    // start, 200 iterations of two calls, final iterate
    let st = run_spsa(&mut Quadratic { target: target.clone() }, &x0, &upper, 402, &cfg).unwrap();
    let reduction = 1.0 - dist(st.history.last().unwrap().x.as_slice()) / dist(x0.as_slice());

    let w = [1.0, 1.0];
    let mut mean = [0.0; 2];
    for _ in 0..10_000 {
        let delta = rademacher(2, &mut rng);
        let f = |s: f64| w.iter().zip(&delta).map(|(wz, d)| wz * (50.0 + s * d)).sum::<f64>();
        for (m, g) in mean.iter_mut().zip(gradient_estimate(f(1.0), f(-1.0), 1.0, &delta)) {
            *m += g / 10_000.0;
        }
    }
    let bias = mean.iter().zip(&w).map(|(m, w)| (m - w).abs() / w).fold(0.0, f64::max);
    outcome(
        reduction >= 0.9 && bias <= 0.02,
        format!("distance to optimum reduced {:.1}% (need 90%), linear estimator mean off by {:.2}% (need 2%)", 100.0 * reduction, 100.0 * bias),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_odcal")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn a8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("sc");
    let sc = sc.to_str().unwrap();
    let mut ok = run_cli(&["generate", "--segments", "40", "--ods", "20", "--level", "high", "--seed", "8", "--out", sc]);
    let budget = 9;
    let mut identical = true;
    let mut calls_match = true;
    let mut files = 0;
    let runs: [&[&str]; 3] = [
        &["calibrate", "--scenario", sc, "--algo", "metamodel", "--budget", "9", "--seed", "5"],
        &["calibrate", "--scenario", sc, "--algo", "spsa", "--budget", "9", "--seed", "5"],
        &["compare", "--scenario", sc, "--budget", "9", "--seeds", "5,6"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("run{i}_{rep}"));
            let mut full = args.to_vec();
            full.extend(["--out", out.to_str().unwrap()]);
            ok &= run_cli(&full);
            outputs.push(csv_files(&out));
        }
        identical &= outputs[0] == outputs[1] && !outputs[0].is_empty();
        files += outputs[0].len();
        for (name, bytes) in &outputs[0] {
            if name.starts_with("metamodel_seed") || name.starts_with("spsa_seed") || name.starts_with("delta_seed") {
                let rows = String::from_utf8_lossy(bytes).lines().count() - 1;
                calls_match &= rows == budget;
            }
        }
    }
    outcome(
        ok && identical && calls_match,
        format!(
            "commands succeeded: {ok}, {files} CSV files byte-identical across repeats: {identical}, logged calls equal budget: {calls_match}"
        ),
    )
}

fn a9() -> Outcome {
    let start = Instant::now();
    let sc = scenario(18_650, 1_676, CongestionLevel::Medium, 9);
    let generated = start.elapsed();
    let st = run_algorithm(&sc, Algorithm::Metamodel, 2, 1, &MetamodelOptions::default(), &SpsaConfig::default())
        .expect("metamodel epoch completes");
    let total = start.elapsed();
    outcome(
        st.sim_calls() == 2 && st.epoch == 1 && total < Duration::from_secs(600),
        format!(
            "{} segments, {} ODs: generation {:.1} s, generation plus one epoch {:.1} s (limit 600 s)",
            sc.network.len(),
            sc.paths.len(),
            generated.as_secs_f64(),
            total.as_secs_f64()
        ),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let wanted = |name: &str| filter.is_empty() || filter.iter().any(|f| f == name);
    let mut results: Vec<(&str, Outcome, Duration)> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Outcome| {
        if wanted(name) {
            let t = Instant::now();
            let o = f();
            println!("{name} {}: {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
            results.push((name, o, t.elapsed()));
        }
    };
    let medium = std::cell::OnceCell::new();
    run("A1", &a1);
    run("A2", &|| a2(medium.get_or_init(medium_30_od)));
    run("A3", &|| a3(medium.get_or_init(medium_30_od)));
    run("A4", &a4);
    run("A5", &a5);
    run("A6", &a6);
    run("A7", &a7);
    run("A8", &a8);
    run("A9", &a9);
    let failed: Vec<&str> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
