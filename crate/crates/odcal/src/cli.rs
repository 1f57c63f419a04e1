//! Command-line surface.
//!
//! Every random choice of a run derives from its `--seed`: the initial point,
//! the replication seed shared by all evaluations, and each optimizer's own
//! stream use distinct sub-streams of it (see `odcal_core::seeds`).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use odcal_core::compare::{self, run_algorithm, ComparisonReport};
use odcal_core::{
    generate_scenario, make_ground_truth, simulate, Algorithm, CompareOptions, CongestionLevel, MetamodelOptions,
    ScenarioSpec, SpsaConfig,
};
use serde::Deserialize;

use crate::config::ScenarioMeta;
use crate::error::{exit, Error, Result};
use crate::formats::{self, fmt_f64, write_csv};
use crate::runlog;
use crate::scenario_dir;
use crate::svg::{line_chart, Series};

#[derive(Debug, Parser)]
#[command(name = "odcal", version, about = "Calibrate OD demand against path travel times")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario directory.
    Generate(GenerateArgs),
    /// Re-simulate the ground truth of a scenario from its true demand.
    GroundTruth(GroundTruthArgs),
    /// Simulate one demand vector and write per-path statistics.
    Simulate(SimulateArgs),
    /// Run one calibration algorithm.
    Calibrate(CalibrateArgs),
    /// Run both algorithms from common random starts, one run per seed.
    Compare(CompareArgs),
    /// Aggregate compare outputs into a summary table and plots.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Low,
    Medium,
    High,
}

impl From<Level> for CongestionLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::Low => CongestionLevel::Low,
            Level::Medium => CongestionLevel::Medium,
            Level::High => CongestionLevel::High,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Metamodel,
    Spsa,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Metamodel => Algorithm::Metamodel,
            Algo::Spsa => Algorithm::Spsa,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub segments: usize,
    #[arg(long)]
    pub ods: usize,
    #[arg(long, value_enum, default_value = "medium")]
    pub level: Level,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub gt_replications: u32,
    #[arg(long, default_value_t = 0.1)]
    pub noise_cv: f64,
    /// Output scenario directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GroundTruthArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Replications; defaults to the scenario's ground-truth count.
    #[arg(long)]
    pub replications: Option<u32>,
    /// Replication seed; defaults to the scenario's ground-truth seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Demand CSV (`od_index,demand_vph`); defaults to the true demand.
    #[arg(long)]
    pub demand: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Simulation calls, the initial point included.
    #[arg(long, default_value_t = 30)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub budget: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directories written by `compare`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::GroundTruth(a) => ground_truth(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Report(a) => report(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn generate(a: GenerateArgs) -> Result<i32> {
    let spec = ScenarioSpec {
        gt_replications: a.gt_replications,
        noise_cv: a.noise_cv,
        ..ScenarioSpec::new(a.segments, a.ods, a.level.into(), a.seed)
    };
    let scenario = generate_scenario(&spec)?;
    let meta = ScenarioMeta {
        level: scenario.level.name().into(),
        seed: scenario.seed,
        gt_seed: odcal_core::seeds::derive(scenario.seed, odcal_core::seeds::tag::GROUND_TRUTH),
        gt_replications: spec.gt_replications,
    };
    scenario_dir::save(&a.out, &scenario, meta)?;
    eprintln!(
        "wrote {} ({} segments, {} OD pairs, {} level, seed {})",
        a.out.display(),
        scenario.network.len(),
        scenario.paths.len(),
        scenario.level.name(),
        scenario.seed
    );
    Ok(exit::SUCCESS)
}

fn ground_truth(a: GroundTruthArgs) -> Result<i32> {
    let loaded = scenario_dir::load(&a.scenario)?;
    let sc = &loaded.scenario;
    let mut meta = loaded.meta.clone();
    if let Some(r) = a.replications {
        meta.gt_replications = r;
    }
    if let Some(s) = a.seed {
        meta.gt_seed = s;
    }
    let cfg = odcal_core::SimConfig { replications: meta.gt_replications, seed: meta.gt_seed, ..sc.sim };
    let paths = make_ground_truth(&sc.network, &sc.paths, &sc.x_true, &cfg)?;
    let gt = paths.ground_truth().expect("ground truth attached");
    formats::save_ground_truth(&a.scenario.join(scenario_dir::GROUND_TRUTH), gt)?;
    let mut config = loaded.config.clone();
    config.scenario = Some(meta);
    config.save(&a.scenario.join(scenario_dir::CONFIG))?;
    Ok(exit::SUCCESS)
}

fn simulate_cmd(a: SimulateArgs) -> Result<i32> {
    let loaded = scenario_dir::load(&a.scenario)?;
    let sc = &loaded.scenario;
    let x = match &a.demand {
        Some(p) => formats::load_demand(p)?,
        None => sc.x_true.clone(),
    };
    let cfg = odcal_core::SimConfig { seed: a.seed, ..sc.sim };
    let result = simulate(&sc.network, &sc.paths, &x, &cfg)?;
    formats::save_sim_result(&a.out, &result)?;
    if let Some(loss) = result.loss {
        eprintln!("loss {loss}");
    }
    Ok(exit::SUCCESS)
}

fn run_file(out: &Path, algorithm: Algorithm, seed: u64, ext: &str) -> PathBuf {
    out.join(format!("{}_seed{seed}.{ext}", algorithm.name()))
}

fn calibrate(a: CalibrateArgs) -> Result<i32> {
    let loaded = scenario_dir::load(&a.scenario)?;
    let sc = &loaded.scenario;
    let gt = sc.paths.ground_truth().expect("loaded scenarios carry ground truth");
    let algorithm = a.algo.into();
    let state = run_algorithm(sc, algorithm, a.budget, a.seed, &MetamodelOptions::default(), &SpsaConfig::default())?;
    create_dir(&a.out)?;
    runlog::save_run_log(&run_file(&a.out, algorithm, a.seed, "csv"), &state, gt)?;
    runlog::save_result_json(&run_file(&a.out, algorithm, a.seed, "json"), &state, gt)?;
    eprintln!(
        "{}: {} simulation calls, best loss {}, nRMSE {}",
        algorithm.name(),
        state.sim_calls(),
        state.best_loss(),
        compare::nrmse_by_call(gt, &state).last().copied().unwrap_or(f64::INFINITY)
    );
    Ok(exit::SUCCESS)
}

const SUMMARY: &str = "summary.csv";
const SUMMARY_HEADER: [&str; 11] = [
    "scenario",
    "level",
    "seed",
    "status",
    "nrmse_initial",
    "nrmse_metamodel",
    "nrmse_spsa",
    "delta_final",
    "relative_improvement",
    "sim_calls_metamodel",
    "sim_calls_spsa",
];

fn delta_file(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("delta_seed{seed}.csv"))
}

fn write_comparison(out: &Path, gt: &[f64], r: &ComparisonReport) -> Result<()> {
    for state in [&r.metamodel, &r.spsa] {
        runlog::save_run_log(&run_file(out, state.algorithm, r.seed, "csv"), state, gt)?;
        runlog::save_result_json(&run_file(out, state.algorithm, r.seed, "json"), state, gt)?;
    }
    write_csv(
        &delta_file(out, r.seed),
        &["sim_calls", "nrmse_metamodel", "nrmse_spsa", "delta"],
        (0..r.delta.len()).map(|j| {
            vec![
                (j + 1).to_string(),
                fmt_f64(r.nrmse_metamodel[j]),
                fmt_f64(r.nrmse_spsa[j]),
                fmt_f64(r.delta[j]),
            ]
        }),
    )?;
    let epochs = r
        .nrmse_metamodel_by_epoch
        .iter()
        .enumerate()
        .map(|(e, v)| vec!["metamodel".to_string(), e.to_string(), fmt_f64(*v)])
        .chain(r.nrmse_spsa_by_epoch.iter().enumerate().map(|(e, v)| vec!["spsa".to_string(), e.to_string(), fmt_f64(*v)]));
    write_csv(&out.join(format!("epochs_seed{}.csv", r.seed)), &["algorithm", "epoch", "nrmse_best"], epochs)
}

fn compare_cmd(a: CompareArgs) -> Result<i32> {
    let loaded = scenario_dir::load(&a.scenario)?;
    let sc = &loaded.scenario;
    let gt = sc.paths.ground_truth().expect("loaded scenarios carry ground truth");
    create_dir(&a.out)?;
    let name = scenario_name(&a.scenario);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut failures = 0;
    let mut last_error = None;
    for &seed in &a.seeds {
        let opts = CompareOptions::new(a.budget, seed);
        let result = compare::compare(sc, &opts);
        match result {
            Ok(r) => {
                write_comparison(&a.out, gt, &r)?;
                eprintln!(
                    "seed {seed}: nRMSE initial {:.4}, metamodel {:.4}, SPSA {:.4}, relative improvement {:.3}",
                    r.nrmse_initial,
                    r.final_metamodel(),
                    r.final_spsa(),
                    r.relative_improvement
                );
                rows.push(vec![
                    name.clone(),
                    sc.level.name().into(),
                    seed.to_string(),
                    "ok".into(),
                    fmt_f64(r.nrmse_initial),
                    fmt_f64(r.final_metamodel()),
                    fmt_f64(r.final_spsa()),
                    fmt_f64(r.delta.last().copied().unwrap_or(f64::NAN)),
                    fmt_f64(r.relative_improvement),
                    r.metamodel.sim_calls().to_string(),
                    r.spsa.sim_calls().to_string(),
                ]);
                series.push(Series { label: format!("seed {seed}"), values: r.delta.clone() });
            }
            Err(e) => {
                eprintln!("seed {seed}: failed: {e}");
                failures += 1;
                rows.push(vec![
                    name.clone(),
                    sc.level.name().into(),
                    seed.to_string(),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                last_error = Some(e);
            }
        }
    }
    write_csv(&a.out.join(SUMMARY), &SUMMARY_HEADER, rows)?;
    let svg = line_chart(
        &format!("{name}: nRMSE(SPSA) − nRMSE(metamodel)"),
        "simulation calls",
        "Δ nRMSE",
        &series,
    );
    fs::write(a.out.join("delta.svg"), svg).map_err(|e| Error::io(a.out.join("delta.svg"), e))?;
    match (failures, last_error) {
        (0, _) => Ok(exit::SUCCESS),
        (f, Some(e)) if f == a.seeds.len() => Err(e.into()),
        _ => Ok(exit::PARTIAL),
    }
}

fn scenario_name(dir: &Path) -> String {
    dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string())
}

#[derive(Debug, Deserialize)]
struct SummaryRow {
    scenario: String,
    level: String,
    seed: u64,
    status: String,
    nrmse_initial: Option<f64>,
    nrmse_metamodel: Option<f64>,
    nrmse_spsa: Option<f64>,
    delta_final: Option<f64>,
    relative_improvement: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DeltaRow {
    #[allow(dead_code)]
    sim_calls: usize,
    delta: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| Error::csv(path, e))).collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn report(a: ReportArgs) -> Result<i32> {
    create_dir(&a.out)?;
    let mut all = Vec::new();
    let mut series = Vec::new();
    for dir in &a.inputs {
        let rows: Vec<SummaryRow> = read_rows(&dir.join(SUMMARY))?;
        let mut curves = Vec::new();
        for row in &rows {
            if row.status == "ok" {
                let d: Vec<DeltaRow> = read_rows(&delta_file(dir, row.seed))?;
                curves.push(d.into_iter().map(|r| r.delta).collect::<Vec<_>>());
            }
        }
        if let Some(len) = curves.iter().map(Vec::len).max() {
            let mean_curve = (0..len)
                .map(|j| mean(&curves.iter().filter_map(|c| c.get(j).copied()).collect::<Vec<_>>()))
                .collect();
            let label = rows.first().map(|r| format!("{} ({})", r.scenario, r.level)).unwrap_or_default();
            series.push(Series { label, values: mean_curve });
        }
        all.extend(rows);
    }

    let f = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    write_csv(
        &a.out.join("report.csv"),
        &SUMMARY_HEADER[..9],
        all.iter().map(|r| {
            vec![
                r.scenario.clone(),
                r.level.clone(),
                r.seed.to_string(),
                r.status.clone(),
                f(r.nrmse_initial),
                f(r.nrmse_metamodel),
                f(r.nrmse_spsa),
                f(r.delta_final),
                f(r.relative_improvement),
            ]
        }),
    )?;

    let mut groups: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for level in CongestionLevel::ALL.iter().map(|l| l.name().to_string()).chain(["all".to_string()]) {
        let rows: Vec<&SummaryRow> =
            all.iter().filter(|r| r.status == "ok" && (level == "all" || r.level == level)).collect();
        if !rows.is_empty() {
            groups.push((level, rows));
        }
    }
    let mut table = Vec::new();
    println!("{:<8} {:>5} {:>5} {:>12} {:>12} {:>12}", "level", "runs", "wins", "mean_delta", "mean_rel_imp", "max_delta");
    for (level, rows) in &groups {
        let wins = rows
            .iter()
            .filter(|r| r.nrmse_metamodel.unwrap_or(f64::INFINITY) <= r.nrmse_spsa.unwrap_or(f64::INFINITY))
            .count();
        let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta_final).filter(|d| d.is_finite()).collect();
        let rel: Vec<f64> = rows.iter().filter_map(|r| r.relative_improvement).filter(|d| d.is_finite()).collect();
        let max_delta = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:<8} {:>5} {:>5} {:>12.4} {:>12.4} {:>12.4}",
            level,
            rows.len(),
            wins,
            mean(&deltas),
            mean(&rel),
            max_delta
        );
        table.push(vec![
            level.clone(),
            rows.len().to_string(),
            wins.to_string(),
            fmt_f64(mean(&deltas)),
            fmt_f64(mean(&rel)),
            fmt_f64(max_delta),
        ]);
    }
    write_csv(
        &a.out.join("report_summary.csv"),
        &["level", "runs", "wins", "mean_delta_final", "mean_relative_improvement", "max_delta_final"],
        table,
    )?;
    let svg = line_chart("Mean nRMSE(SPSA) − nRMSE(metamodel)", "simulation calls", "Δ nRMSE", &series);
    fs::write(a.out.join("report.svg"), svg).map_err(|e| Error::io(a.out.join("report.svg"), e))?;
    let failed = all.iter().any(|r| r.status != "ok");
    Ok(if failed { exit::PARTIAL } else { exit::SUCCESS })
}
