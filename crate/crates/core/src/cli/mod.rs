//! Command-line front end: map generation, path and tour planning,
//! benchmarks and plots. The binary only parses arguments and calls
//! [`run`].

pub mod mapfile;
pub mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::{solve_discrete, DiscreteConfig, DiscretePath};
use crate::geometry::Point2D;
use crate::graph::{build_scaled, EnergyParams, QuietZoneMap};
use crate::model::{build_rmicp, PathSolution};
use crate::solver::{solve_path, solve_relaxation, BnbConfig, BnbStatus, SolverConfig, Status};
use crate::tsp::{minsoc_cost_matrix, noon_bean, gtsp_cost_matrix, plan_tour_gtsp, plan_tour_minsoc, AtspOptions, TourOptions, TourPlan};
use crate::validate::{certify, check_trajectory_compliance, simulate_soc, simulate_trajectory};
use crate::{Error, Result};

pub use mapfile::{generate_map, GenerateOptions, MapFile, ParamsFile};

#[derive(Debug, Parser)]
#[command(name = "quietpath", version, about = "Minimum-fuel planning for hybrid vehicles around quiet zones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random map file.
    Generate(GenerateArgs),
    /// Plan a path from the map's source to its goal.
    Path(PathArgs),
    /// Plan a closed tour from the source through every target.
    Tour(TourArgs),
    /// Run random scenarios and write one CSV row per method.
    Benchmark(BenchArgs),
    /// Write the conic model of the map's source-goal problem.
    Model(ModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConicMethod {
    Ipm,
    Splitting,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Relative optimality gap for branch-and-bound.
    #[arg(long, default_value_t = 0.01)]
    pub gap: f64,
    /// Branch-and-bound time limit in seconds (default scales with the graph).
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Largest map extent after internal rescaling.
    #[arg(long, default_value_t = 100.0)]
    pub target_extent: f64,
    #[arg(long, value_enum, default_value_t = ConicMethod::Ipm)]
    pub solver: ConicMethod,
}

impl SolveArgs {
    fn solver(&self) -> SolverConfig {
        match self.solver {
            ConicMethod::Ipm => SolverConfig::default(),
            ConicMethod::Splitting => SolverConfig::splitting(),
        }
    }

    fn bnb(&self, workers: usize) -> Result<BnbConfig> {
        if !(self.gap >= 0.0) {
            return Err(Error::Validation("gap must be nonnegative".into()));
        }
        let time_limit = match self.time_limit {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(Error::Validation("time limit must be positive".into()))
            }
            t => t.map(Duration::from_secs_f64),
        };
        Ok(BnbConfig {
            gap: self.gap,
            time_limit,
            max_nodes: None,
            workers: workers.max(1),
            solver: self.solver(),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 15)]
    pub zones: usize,
    #[arg(long, default_value_t = 12000.0)]
    pub width: f64,
    #[arg(long, default_value_t = 8000.0)]
    pub height: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of tour targets to place.
    #[arg(long, default_value_t = 0)]
    pub targets: usize,
    /// Least source-goal distance.
    #[arg(long, default_value_t = 1000.0)]
    pub min_distance: f64,
    /// Use the tour rates (alpha 0.1, beta 0.05) instead of the path rates.
    #[arg(long)]
    pub tour_rates: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Solve the continuous relaxation.
    #[arg(long)]
    pub relaxed: bool,
    /// Solve exactly with branch-and-bound (default when no method is given).
    #[arg(long)]
    pub exact: bool,
    /// Run the discretized baseline.
    #[arg(long)]
    pub discrete: bool,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Branch-and-bound worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 10)]
    pub soc_levels: usize,
    /// Boundary sample spacing of the baseline, in map units.
    #[arg(long, default_value_t = 100.0)]
    pub spacing: f64,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Write the branch-and-bound bound trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave wall-clock times out of the record.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TourChoice {
    Minsoc,
    Gtsp,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct TourArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, value_enum, default_value_t = TourChoice::Minsoc)]
    pub method: TourChoice,
    /// SOC levels per target for the clustered method.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Seed of the tour heuristic's restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the tour cost matrix (after Noon-Bean for gtsp) as text.
    #[arg(long)]
    pub atsp_out: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Map to use; a random one is generated when omitted.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub zones: usize,
    #[arg(long, default_value_t = 12000.0)]
    pub width: f64,
    #[arg(long, default_value_t = 8000.0)]
    pub height: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub scenarios: usize,
    /// Least source-goal distance of a scenario.
    #[arg(long, default_value_t = 1000.0)]
    pub min_distance: f64,
    /// Scenarios solved concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(long, default_value_t = 10)]
    pub soc_levels: usize,
    #[arg(long, default_value_t = 100.0)]
    pub spacing: f64,
    /// Tour instances to run with both tour methods.
    #[arg(long, default_value_t = 0)]
    pub tours: usize,
    #[arg(long, default_value_t = 5)]
    pub tour_targets: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// CSV output (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary output (stderr when omitted).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Write the continuous relaxation instead of the mixed-integer model.
    #[arg(long)]
    pub relaxed: bool,
    #[arg(long, default_value_t = 100.0)]
    pub target_extent: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("records serialize") + "\n"
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => run_generate(&a),
        Command::Path(a) => run_path(&a),
        Command::Tour(a) => run_tour(&a),
        Command::Benchmark(a) => run_benchmark(&a),
        Command::Model(a) => run_model(&a),
    }
}

pub fn run_generate(a: &GenerateArgs) -> Result<()> {
    let params = if a.tour_rates {
        ParamsFile {
            alpha: 0.1,
            beta: 0.05,
            ..ParamsFile::default()
        }
    } else {
        ParamsFile::default()
    };
    let f = generate_map(&GenerateOptions {
        zones: a.zones,
        width: a.width,
        height: a.height,
        seed: a.seed,
        targets: a.targets,
        min_distance: a.min_distance,
        params,
        ..GenerateOptions::default()
    })?;
    emit(a.out.as_deref(), &(f.to_json() + "\n"))
}

/// Which methods a scenario runs, and how.
#[derive(Debug, Clone)]
pub struct ScenarioOptions {
    pub relaxed: bool,
    pub exact: bool,
    pub discrete: bool,
    pub target_extent: f64,
    pub solver: SolverConfig,
    pub bnb: BnbConfig,
    pub discrete_cfg: DiscreteConfig,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            relaxed: true,
            exact: true,
            discrete: true,
            target_extent: 100.0,
            solver: SolverConfig::default(),
            bnb: BnbConfig::default(),
            discrete_cfg: DiscreteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub graph: f64,
    pub relaxed: f64,
    pub exact: f64,
    pub discrete: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub arcs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub status: BnbStatus,
    pub cost: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
    pub final_soc: f64,
    pub length: f64,
    pub switch_points: Vec<Point2D>,
    pub plan: PathSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteResult {
    /// Cost charged by the discretized search.
    pub cost: f64,
    /// Fuel of the same polyline with exact SOC transitions.
    pub trace_fuel: f64,
    pub hops: usize,
    pub points: Vec<Point2D>,
    pub levels: Vec<usize>,
}

/// Everything a path run produces; costs are unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub gamma: f64,
    pub source: Point2D,
    pub goal: Point2D,
    pub graph: GraphStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Runs the selected methods for one source-goal pair and certifies every
/// returned plan.
pub fn solve_scenario(map: &QuietZoneMap, s: Point2D, g: Point2D, o: &ScenarioOptions) -> Result<(PathRecord, Option<DiscretePath>)> {
    solve_scenario_traced(map, s, g, o).map(|(r, d, _)| (r, d))
}

/// As [`solve_scenario`], also returning the bound trace of the exact run.
pub fn solve_scenario_traced(
    map: &QuietZoneMap,
    s: Point2D,
    g: Point2D,
    o: &ScenarioOptions,
) -> Result<(PathRecord, Option<DiscretePath>, Option<String>)> {
    let mut timing = Timing::default();
    let t0 = Instant::now();
    let (scaled, graph) = build_scaled(map, s, g, o.target_extent)?;
    timing.graph = t0.elapsed().as_secs_f64();
    let mut rec = PathRecord {
        gamma: scaled.scale,
        source: s,
        goal: g,
        graph: GraphStats {
            nodes: graph.nodes.len(),
            edges: graph.edges.len(),
            arcs: graph.arcs.len(),
        },
        relaxed: None,
        exact: None,
        discrete: None,
        timing: None,
    };
    if o.relaxed {
        let t = Instant::now();
        let r = solve_relaxation(&graph, &scaled.params, &o.solver)?;
        timing.relaxed = t.elapsed().as_secs_f64();
        if r.status == Status::Infeasible {
            return Err(Error::Infeasible("the relaxation is infeasible".into()));
        }
        rec.relaxed = Some(r.bound);
    }
    let mut trace = None;
    if o.exact {
        let t = Instant::now();
        let r = solve_path(&graph, &scaled.params, &o.bnb)?;
        timing.exact = t.elapsed().as_secs_f64();
        trace = Some(r.trace_csv());
        let plan = r
            .incumbent
            .clone()
            .ok_or_else(|| Error::Infeasible("no feasible path found".into()))?;
        certify(&plan, &map.params, &map.zones)?;
        rec.exact = Some(ExactResult {
            status: r.status,
            cost: plan.objective,
            lower_bound: r.lower_bound,
            gap: r.gap,
            nodes_explored: r.nodes_explored,
            final_soc: plan.final_soc(),
            length: plan.length(),
            switch_points: plan.switch_points(),
            plan,
        });
    }
    let mut dpath = None;
    if o.discrete {
        let t = Instant::now();
        let d = solve_discrete(&scaled, s * scaled.scale, g * scaled.scale, &o.discrete_cfg)?;
        timing.discrete = t.elapsed().as_secs_f64();
        simulate_trajectory(&d.trajectory, &map.params)?;
        if let Some(v) = check_trajectory_compliance(&d.trajectory, &map.zones).violations.first() {
            return Err(Error::Certification(format!("baseline segment {} uses fuel inside zone {}", v.segment, v.zone)));
        }
        rec.discrete = Some(DiscreteResult {
            cost: d.cost,
            trace_fuel: d.trajectory.fuel(),
            hops: d.hops(),
            points: d.points.clone(),
            levels: d.nodes.iter().map(|n| n.soc_level).collect(),
        });
        dpath = Some(d);
    }
    rec.timing = Some(timing);
    Ok((rec, dpath, trace))
}

fn load_map(path: &Path) -> Result<(MapFile, QuietZoneMap)> {
    let f = MapFile::load(path)?;
    let m = f.to_map()?;
    Ok((f, m))
}

pub fn run_path(a: &PathArgs) -> Result<()> {
    let (file, map) = load_map(&a.map)?;
    let g = file.goal_point()?;
    let any = a.relaxed || a.exact || a.discrete;
    let o = ScenarioOptions {
        relaxed: a.relaxed,
        exact: a.exact || !any,
        discrete: a.discrete,
        target_extent: a.solve.target_extent,
        solver: a.solve.solver(),
        bnb: a.solve.bnb(a.jobs)?,
        discrete_cfg: DiscreteConfig {
            soc_levels: a.soc_levels,
            spacing: a.spacing,
        },
    };
    let (mut rec, dpath, trace) = solve_scenario_traced(&map, map.source, g, &o)?;
    if let (Some(path), Some(t)) = (&a.trace, &trace) {
        std::fs::write(path, t)?;
    }
    if let Some(path) = &a.svg {
        let mut layers = Vec::new();
        let exact_t = rec.exact.as_ref().map(|e| e.plan.trajectory());
        if let Some(t) = &exact_t {
            layers.push(svg::Layer {
                name: "exact",
                trajectory: t,
            });
        }
        if let Some(d) = &dpath {
            layers.push(svg::Layer {
                name: "discrete",
                trajectory: &d.trajectory,
            });
        }
        let profile = match (&rec.exact, &dpath) {
            (Some(e), _) => Some(simulate_soc(&e.plan, &map.params)?),
            (None, Some(d)) => Some(simulate_trajectory(&d.trajectory, &map.params)?),
            _ => None,
        };
        let text = svg::path_svg(&map.zones, &layers, profile.as_ref(), (map.params.q_min, map.params.q_max));
        std::fs::write(path, text)?;
    }
    if a.no_timing {
        rec.timing = None;
    }
    emit(a.out.as_deref(), &to_json(&rec))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourRecord {
    pub method: crate::tsp::TourMethod,
    pub order: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// Tour cost under the relaxed cost matrix.
    pub matrix_cost: f64,
    /// Sum of the exact leg costs.
    pub cost: f64,
    pub legs: Vec<PathSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourOutput {
    pub gamma: f64,
    pub tours: Vec<TourRecord>,
    /// `(C_minsoc - C_gtsp) / C_gtsp` in percent, when both ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percentage_difference: Option<f64>,
}

fn tour_record(plan: &TourPlan, seconds: f64) -> TourRecord {
    TourRecord {
        method: plan.method,
        order: plan.tour.order.clone(),
        levels: plan.tour.levels.clone(),
        matrix_cost: plan.tour.cost,
        cost: plan.cost,
        legs: plan.legs.clone(),
        seconds: Some(seconds),
    }
}

/// Percentage difference `(a - b) / b`, zero when both vanish.
pub fn percentage_difference(a: f64, b: f64) -> f64 {
    if b.abs() <= 1e-9 {
        if a.abs() <= 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (a - b) / b
    }
}

fn tour_options(solve: &SolveArgs, seed: u64) -> Result<TourOptions> {
    Ok(TourOptions {
        target_extent: solve.target_extent,
        solver: solve.solver(),
        bnb: solve.bnb(1)?,
        atsp: AtspOptions { starts: 8, seed },
    })
}

pub fn run_tour(a: &TourArgs) -> Result<()> {
    let (file, map) = load_map(&a.map)?;
    if file.targets.is_empty() {
        return Err(Error::Validation("map has no targets".into()));
    }
    if a.d < 1 {
        return Err(Error::Validation("--d must be at least 1".into()));
    }
    let targets = map.targets.clone();
    let opts = tour_options(&a.solve, a.seed)?;
    let mut plans = Vec::new();
    if matches!(a.method, TourChoice::Minsoc | TourChoice::Both) {
        let t = Instant::now();
        let p = plan_tour_minsoc(&map, &targets, &opts)?;
        plans.push((p, t.elapsed().as_secs_f64()));
    }
    if matches!(a.method, TourChoice::Gtsp | TourChoice::Both) {
        let t = Instant::now();
        let p = plan_tour_gtsp(&map, &targets, a.d, &opts)?;
        plans.push((p, t.elapsed().as_secs_f64()));
    }
    for (p, _) in &plans {
        p.certify(&map)?;
    }
    if let Some(path) = &a.atsp_out {
        let text = if a.method == TourChoice::Gtsp {
            noon_bean(&gtsp_cost_matrix(&map, &targets, a.d, &opts)?)?.matrix.to_text()
        } else {
            minsoc_cost_matrix(&map, &targets, &opts)?.to_text()
        };
        std::fs::write(path, text)?;
    }
    if let Some(path) = &a.svg {
        let (p, _) = plans.last().expect("at least one method ran");
        let mut stops = vec![map.source];
        stops.extend(targets.iter().copied());
        let legs: Vec<_> = p.legs.iter().map(|l| l.trajectory()).collect();
        let profiles = tour_profiles(p, &map.params)?;
        let text = svg::tour_svg(&map.zones, &stops, &p.tour.order, &legs, &profiles, (map.params.q_min, map.params.q_max));
        std::fs::write(path, text)?;
    }
    let pct = if plans.len() == 2 {
        Some(percentage_difference(plans[0].0.cost, plans[1].0.cost))
    } else {
        None
    };
    let (w, h) = map.extent();
    let out = TourOutput {
        gamma: (a.solve.target_extent / w.max(h)).min(1.0),
        tours: plans
            .iter()
            .map(|(p, s)| {
                let mut r = tour_record(p, *s);
                if a.no_timing {
                    r.seconds = None;
                }
                r
            })
            .collect(),
        percentage_difference: pct,
    };
    emit(a.out.as_deref(), &to_json(&out))
}

pub fn run_model(a: &ModelArgs) -> Result<()> {
    let (file, map) = load_map(&a.map)?;
    let g = file.goal_point()?;
    let (scaled, graph) = build_scaled(&map, map.source, g, a.target_extent)?;
    let (model, _) = build_rmicp(&graph, &scaled.params, a.relaxed);
    emit(a.out.as_deref(), &model.export())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    Relaxed,
    Exact,
    Discrete,
    TspMinsoc,
    TspGtsp,
}

/// One CSV row of a benchmark; times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance: usize,
    pub method: BenchMethod,
    pub status: String,
    pub cost: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub graph_time: f64,
    pub opt_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub scenarios: usize,
    pub solved: usize,
    /// Mean of (exact - relaxed) / exact.
    pub mean_relaxation_gap: Option<f64>,
    /// Mean of (discrete - exact) / discrete.
    pub mean_discrete_gap: Option<f64>,
    /// Mean discrete time over exact time.
    pub mean_time_ratio: Option<f64>,
    /// Mean of (minsoc - gtsp) / gtsp over tour instances.
    pub mean_tour_difference: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() <= 1e-9 {
        0.0
    } else {
        num / den
    }
}

/// Recomputes the summary from benchmark rows.
pub fn summarize(rows: &[BenchmarkRow]) -> BenchmarkSummary {
    let mut by: std::collections::BTreeMap<usize, Vec<&BenchmarkRow>> = Default::default();
    for r in rows {
        by.entry(r.instance).or_default().push(r);
    }
    let mut s = BenchmarkSummary::default();
    let (mut rg, mut dg, mut tr, mut td) = (vec![], vec![], vec![], vec![]);
    for rs in by.values() {
        let get = |m: BenchMethod| rs.iter().find(|r| r.method == m && r.cost.is_some());
        let path = rs.iter().any(|r| matches!(r.method, BenchMethod::Relaxed | BenchMethod::Exact | BenchMethod::Discrete));
        if path {
            s.scenarios += 1;
        }
        if let Some(e) = get(BenchMethod::Exact) {
            s.solved += 1;
            let ec = e.cost.unwrap();
            if let Some(r) = get(BenchMethod::Relaxed) {
                rg.push(ratio(ec - r.cost.unwrap(), ec));
            }
            if let Some(d) = get(BenchMethod::Discrete) {
                let dc = d.cost.unwrap();
                dg.push(ratio(dc - ec, dc));
                if e.opt_time > 0.0 {
                    tr.push((d.opt_time + d.graph_time) / (e.opt_time + e.graph_time));
                }
            }
        }
        if let (Some(a), Some(b)) = (get(BenchMethod::TspMinsoc), get(BenchMethod::TspGtsp)) {
            td.push(ratio(a.cost.unwrap() - b.cost.unwrap(), b.cost.unwrap()));
        }
    }
    s.mean_relaxation_gap = mean(&rg);
    s.mean_discrete_gap = mean(&dg);
    s.mean_time_ratio = mean(&tr);
    s.mean_tour_difference = mean(&td);
    s
}

fn status_of(e: &Error) -> String {
    match e {
        Error::Infeasible(_) => "infeasible".into(),
        _ => format!("error: {e}"),
    }
}

fn scenario_rows(id: usize, map: &QuietZoneMap, s: Point2D, g: Point2D, o: &ScenarioOptions) -> Vec<BenchmarkRow> {
    let row = |method, status: String, cost, bound, gap, graph_time, opt_time| BenchmarkRow {
        instance: id,
        method,
        status,
        cost,
        bound,
        gap,
        graph_time,
        opt_time,
    };
    let mut rows = Vec::new();
    for (method, flag) in [
        (BenchMethod::Relaxed, o.relaxed),
        (BenchMethod::Exact, o.exact),
        (BenchMethod::Discrete, o.discrete),
    ] {
        if !flag {
            continue;
        }
        let single = ScenarioOptions {
            relaxed: method == BenchMethod::Relaxed,
            exact: method == BenchMethod::Exact,
            discrete: method == BenchMethod::Discrete,
            ..o.clone()
        };
        rows.push(match solve_scenario(map, s, g, &single) {
            Ok((rec, _)) => {
                let t = rec.timing.unwrap_or_default();
                match method {
                    BenchMethod::Relaxed => row(method, "ok".into(), rec.relaxed, rec.relaxed, None, t.graph, t.relaxed),
                    BenchMethod::Exact => {
                        let e = rec.exact.expect("exact ran");
                        row(method, "ok".into(), Some(e.cost), Some(e.lower_bound), Some(e.gap), t.graph, t.exact)
                    }
                    _ => {
                        let d = rec.discrete.expect("discrete ran");
                        // the baseline builds its own graph inside the timed call
                        row(method, "ok".into(), Some(d.cost), None, None, 0.0, t.discrete)
                    }
                }
            }
            Err(e) => row(method, status_of(&e), None, None, None, 0.0, 0.0),
        });
    }
    rows
}

fn tour_rows(id: usize, map: &QuietZoneMap, targets: &[Point2D], d: usize, opts: &TourOptions) -> Vec<BenchmarkRow> {
    let mut rows = Vec::new();
    for method in [BenchMethod::TspMinsoc, BenchMethod::TspGtsp] {
        let t = Instant::now();
        let r = match method {
            BenchMethod::TspMinsoc => plan_tour_minsoc(map, targets, opts),
            _ => plan_tour_gtsp(map, targets, d, opts),
        }
        .and_then(|p| p.certify(map).map(|_| p));
        let opt_time = t.elapsed().as_secs_f64();
        rows.push(match r {
            Ok(p) => BenchmarkRow {
                instance: id,
                method,
                status: "ok".into(),
                cost: Some(p.cost),
                bound: None,
                gap: None,
                graph_time: 0.0,
                opt_time,
            },
            Err(e) => BenchmarkRow {
                instance: id,
                method,
                status: status_of(&e),
                cost: None,
                bound: None,
                gap: None,
                graph_time: 0.0,
                opt_time,
            },
        });
    }
    rows
}

/// Writes benchmark rows as CSV.
pub fn rows_to_csv(rows: &[BenchmarkRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Parses rows written by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<BenchmarkRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn run_benchmark(a: &BenchArgs) -> Result<()> {
    let mut map = match &a.map {
        Some(p) => load_map(p)?.1,
        None => generate_map(&GenerateOptions {
            zones: a.zones,
            width: a.width,
            height: a.height,
            seed: a.seed,
            ..GenerateOptions::default()
        })?
        .to_map()?,
    };
    let (w, h) = if a.map.is_some() { map.extent() } else { (a.width, a.height) };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x5eed);
    let mut pairs = Vec::with_capacity(a.scenarios);
    for _ in 0..a.scenarios {
        pairs.push(mapfile::random_terminals(&mut rng, &map.zones, w, h, a.min_distance)?);
    }
    let mut tours = Vec::with_capacity(a.tours);
    for _ in 0..a.tours {
        let src = mapfile::random_free_point(&mut rng, &map.zones, w, h)?;
        let ts = (0..a.tour_targets)
            .map(|_| mapfile::random_free_point(&mut rng, &map.zones, w, h))
            .collect::<Result<Vec<_>>>()?;
        tours.push((src, ts));
    }
    let o = ScenarioOptions {
        relaxed: true,
        exact: true,
        discrete: true,
        target_extent: a.solve.target_extent,
        solver: a.solve.solver(),
        bnb: a.solve.bnb(1)?,
        discrete_cfg: DiscreteConfig {
            soc_levels: a.soc_levels,
            spacing: a.spacing,
        },
    };
    let topts = tour_options(&a.solve, a.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Error::Validation(e.to_string()))?;
    let mut rows: Vec<BenchmarkRow> = pool.install(|| {
        pairs
            .par_iter()
            .enumerate()
            .map(|(id, &(s, g))| scenario_rows(id, &map, s, g, &o))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    for (k, (src, ts)) in tours.into_iter().enumerate() {
        map.source = src;
        rows.extend(pool.install(|| tour_rows(a.scenarios + k, &map, &ts, a.d, &topts)));
    }
    emit(a.out.as_deref(), &rows_to_csv(&rows)?)?;
    let summary = to_json(&summarize(&rows));
    match &a.summary {
        Some(p) => std::fs::write(p, summary)?,
        None => eprint!("{summary}"),
    }
    Ok(())
}

/// SOC profile of every leg, each starting where the previous one ended.
pub fn tour_profiles(plan: &TourPlan, params: &EnergyParams) -> Result<Vec<crate::validate::SocProfile>> {
    let mut q = params.q_init;
    let mut out = Vec::new();
    for l in &plan.legs {
        out.push(simulate_soc(l, &params.with_departure(q))?);
        q = l.final_soc();
    }
    Ok(out)
}
