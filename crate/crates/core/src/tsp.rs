//! Tour planning over several targets: pairwise costs from relaxed solves,
//! a clustered (SOC-level) formulation reduced to an asymmetric TSP, a
//! local-search tour heuristic, and exact per-leg stitching.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Point2D;
use crate::graph::{scale_map, EnergyParams, PlanningGraph, QuietZoneMap, SideGraph};
use crate::model::PathSolution;
use crate::solver::{solve_path, solve_relaxation, BnbConfig, SolverConfig, Status};
use crate::validate::certify;
use crate::{Error, Result};

/// Dense square matrix of optional costs; `None` means unreachable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub n: usize,
    pub data: Vec<Option<f64>>,
}

impl CostMatrix {
    pub fn new(n: usize) -> Self {
        CostMatrix {
            n,
            data: vec![None; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Self {
        let n = rows.len();
        let mut m = CostMatrix::new(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            for (j, &c) in r.iter().enumerate() {
                if i != j {
                    m.set(i, j, c);
                }
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, c: Option<f64>) {
        self.data[i * self.n + j] = c;
    }

    /// Cost of the closed tour through `order`: (unreachable hops, finite sum).
    pub fn tour_cost(&self, order: &[usize]) -> (usize, f64) {
        let k = order.len();
        let mut inf = 0;
        let mut sum = 0.0;
        if k < 2 {
            return (0, 0.0);
        }
        for i in 0..k {
            match self.get(order[i], order[(i + 1) % k]) {
                Some(c) => sum += c,
                None => inf += 1,
            }
        }
        (inf, sum)
    }

    /// Plain full-matrix text: the size, then one row per line with `inf`
    /// for missing entries and `0` on the diagonal.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| match self.get(i, j) {
                    _ if i == j => "0".to_string(),
                    Some(c) => format!("{c}"),
                    None => "inf".to_string(),
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// TSPLIB `ATSP` file with costs rounded to integers after multiplying
    /// by `10^digits`; missing entries get a penalty above any tour.
    pub fn to_tsplib(&self, name: &str, digits: i32) -> String {
        let f = 10f64.powi(digits);
        let finite: f64 = self.data.iter().flatten().map(|c| (c * f).round()).sum();
        let big = (finite + 1.0).max(1.0);
        let mut s = String::new();
        let _ = writeln!(s, "NAME: {name}\nTYPE: ATSP\nDIMENSION: {}", self.n);
        let _ = writeln!(s, "EDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION");
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| match self.get(i, j) {
                    _ if i == j => "0".to_string(),
                    Some(c) => format!("{}", (c * f).round()),
                    None => format!("{big}"),
                })
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s.push_str("EOF\n");
        s
    }
}

/// Clusters of nodes over one cost matrix; a tour visits exactly one node
/// per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInstance {
    pub clusters: Vec<Vec<usize>>,
    pub cost: CostMatrix,
    /// SOC value of each node (unused for generic instances).
    pub levels: Vec<f64>,
    pub d: usize,
}

impl ClusterInstance {
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut c = vec![usize::MAX; self.cost.n];
        for (k, cl) in self.clusters.iter().enumerate() {
            for &v in cl {
                c[v] = k;
            }
        }
        c
    }

    /// Cost of the closed tour visiting `nodes` in order.
    pub fn tour_cost(&self, nodes: &[usize]) -> (usize, f64) {
        self.cost.tour_cost(nodes)
    }
}

/// Result of the Noon-Bean reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct NoonBean {
    pub matrix: CostMatrix,
    pub cluster_of: Vec<usize>,
    /// Shift added to every inter-cluster arc.
    pub big_m: f64,
}

/// Reduces a clustered instance to an asymmetric TSP. Each cluster is
/// threaded by a zero-cost cycle; the arc `u -> w` between clusters costs
/// `c(succ(u), w) + M`, so a tour that enters a cluster at `v`, walks its
/// cycle and leaves from `pred(v)` pays exactly `c(v, w)`.
pub fn noon_bean(inst: &ClusterInstance) -> Result<NoonBean> {
    if inst.clusters.iter().any(Vec::is_empty) {
        return Err(Error::Validation("empty cluster".into()));
    }
    let cluster_of = inst.cluster_of();
    if cluster_of.iter().any(|&c| c == usize::MAX) {
        return Err(Error::Validation("node outside every cluster".into()));
    }
    let n = inst.cost.n;
    let mut succ = vec![0; n];
    for cl in &inst.clusters {
        for (i, &v) in cl.iter().enumerate() {
            succ[v] = cl[(i + 1) % cl.len()];
        }
    }
    let mut total = 0.0;
    for u in 0..n {
        for w in 0..n {
            if cluster_of[u] != cluster_of[w] {
                if let Some(c) = inst.cost.get(u, w) {
                    if c < 0.0 {
                        return Err(Error::Validation("costs must be nonnegative".into()));
                    }
                    total += c;
                }
            }
        }
    }
    let big_m = 1.0 + total;
    let mut m = CostMatrix::new(n);
    for u in 0..n {
        for w in 0..n {
            if u == w {
                continue;
            }
            let c = if cluster_of[u] == cluster_of[w] {
                (succ[u] == w).then_some(0.0)
            } else {
                inst.cost.get(succ[u], w).map(|c| c + big_m)
            };
            m.set(u, w, c);
        }
    }
    Ok(NoonBean {
        matrix: m,
        cluster_of,
        big_m,
    })
}

impl NoonBean {
    /// Maps an ATSP tour to one node per cluster: the node through which the
    /// tour first enters each cluster. The result starts with the cluster
    /// of `order[0]`.
    pub fn detransform(&self, order: &[usize]) -> Vec<usize> {
        let k = order.len();
        if k == 0 {
            return vec![];
        }
        let first = self.cluster_of[order[0]];
        // rotate to the start of the run containing order[0]
        let mut start = 0;
        for _ in 1..k {
            let prev = (start + k - 1) % k;
            if self.cluster_of[order[prev]] != first {
                break;
            }
            start = prev;
        }
        let rot: Vec<usize> = (0..k).map(|i| order[(start + i) % k]).collect();
        let mut seen = vec![false; self.cluster_of.iter().max().map_or(0, |m| m + 1)];
        let mut out = Vec::new();
        for &v in &rot {
            let c = self.cluster_of[v];
            if !seen[c] {
                seen[c] = true;
                out.push(v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtspOptions {
    pub starts: usize,
    pub seed: u64,
}

impl Default for AtspOptions {
    fn default() -> Self {
        AtspOptions { starts: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtspTour {
    /// Node order starting at node 0; the return to node 0 is implicit.
    pub order: Vec<usize>,
    pub cost: f64,
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1 - 1e-12 * (1.0 + b.1.abs()))
}

fn construct(m: &CostMatrix, rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
    let n = m.n;
    let mut used = vec![false; n];
    let mut order = vec![0];
    used[0] = true;
    let mut rng = rng;
    for _ in 1..n {
        let cur = *order.last().unwrap();
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| !used[j])
            .filter_map(|j| m.get(cur, j).map(|c| (c, j)))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let next = match (cand.is_empty(), rng.as_deref_mut()) {
            (true, _) => (0..n).find(|&j| !used[j]).unwrap(),
            (false, None) => cand[0].1,
            (false, Some(r)) => cand[..cand.len().min(3)].choose(r).unwrap().1,
        };
        used[next] = true;
        order.push(next);
    }
    order
}

fn improve(m: &CostMatrix, order: &mut Vec<usize>) {
    let n = order.len();
    let mut best = m.tour_cost(order);
    loop {
        let mut moved = false;
        // 2-opt: reverse order[i..=j]
        'two: for i in 1..n.saturating_sub(1) {
            for j in i + 1..n {
                order[i..=j].reverse();
                let c = m.tour_cost(order);
                if better(c, best) {
                    best = c;
                    moved = true;
                    break 'two;
                }
                order[i..=j].reverse();
            }
        }
        if moved {
            continue;
        }
        // Or-opt: move a segment of 1-3 nodes elsewhere
        'or: for len in 1..=3usize {
            if len + 1 >= n {
                break;
            }
            for i in 1..=n - len {
                let seg: Vec<usize> = order[i..i + len].to_vec();
                let mut rest: Vec<usize> = order[..i].to_vec();
                rest.extend_from_slice(&order[i + len..]);
                for p in 1..=rest.len() {
                    if p == i {
                        continue;
                    }
                    let mut cand = rest[..p].to_vec();
                    cand.extend_from_slice(&seg);
                    cand.extend_from_slice(&rest[p..]);
                    let c = m.tour_cost(&cand);
                    if better(c, best) {
                        best = c;
                        *order = cand;
                        moved = true;
                        break 'or;
                    }
                }
            }
        }
        if !moved {
            return;
        }
    }
}

/// Nearest-neighbour construction plus 2-opt and Or-opt, repeated from
/// `starts` randomized constructions; deterministic for a given seed.
pub fn solve_atsp(m: &CostMatrix, opts: &AtspOptions) -> Result<AtspTour> {
    let n = m.n;
    if n == 0 {
        return Err(Error::Validation("empty matrix".into()));
    }
    for i in 0..n {
        if n > 1 && (0..n).all(|j| j == i || m.get(i, j).is_none()) {
            return Err(Error::Infeasible(format!("node {i} has no outgoing arc")));
        }
        if n > 1 && (0..n).all(|j| j == i || m.get(j, i).is_none()) {
            return Err(Error::Infeasible(format!("node {i} has no incoming arc")));
        }
    }
    let mut best: Option<(Vec<usize>, (usize, f64))> = None;
    for s in 0..opts.starts.max(1) {
        let mut order = if s == 0 {
            construct(m, None)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(s as u64));
            construct(m, Some(&mut rng))
        };
        improve(m, &mut order);
        let c = m.tour_cost(&order);
        if best.as_ref().map_or(true, |b| better(c, b.1)) {
            best = Some((order, c));
        }
    }
    let (order, (inf, cost)) = best.unwrap();
    if inf > 0 {
        return Err(Error::Infeasible("no tour avoids unreachable hops".into()));
    }
    Ok(AtspTour { order, cost })
}

#[derive(Debug, Clone)]
pub struct TourOptions {
    pub target_extent: f64,
    pub solver: SolverConfig,
    pub bnb: BnbConfig,
    pub atsp: AtspOptions,
}

impl Default for TourOptions {
    fn default() -> Self {
        TourOptions {
            target_extent: 100.0,
            solver: SolverConfig::default(),
            bnb: BnbConfig::default(),
            atsp: AtspOptions::default(),
        }
    }
}

/// Scaled map, side graph and stop points (index 0 is the source).
struct Stops {
    map: QuietZoneMap,
    sides: SideGraph,
    points: Vec<Point2D>,
}

impl Stops {
    fn new(map: &QuietZoneMap, targets: &[Point2D], extent: f64) -> Result<Stops> {
        for (k, t) in targets.iter().enumerate() {
            map.check_point(*t).map_err(|e| Error::Validation(format!("target {k}: {e}")))?;
        }
        let scaled = scale_map(map, extent)?;
        let f = scaled.scale / map.scale;
        let mut points = vec![map.source * f];
        points.extend(targets.iter().map(|&t| t * f));
        Ok(Stops {
            sides: SideGraph::build(&scaled),
            map: scaled,
            points,
        })
    }

    fn graph(&self, i: usize, j: usize) -> Result<PlanningGraph> {
        PlanningGraph::attach(&self.sides, self.points[i], self.points[j])
    }

    fn relaxed(&self, i: usize, j: usize, params: &EnergyParams, cfg: &SolverConfig) -> Result<Option<f64>> {
        let g = self.graph(i, j)?;
        let r = solve_relaxation(&g, params, cfg)?;
        Ok((r.status != Status::Infeasible).then_some(r.bound.max(0.0)))
    }
}

fn levels(p: &EnergyParams, d: usize) -> Vec<f64> {
    if d <= 1 {
        return vec![p.q_min];
    }
    (0..d).map(|k| p.q_min + (p.q_max - p.q_min) * k as f64 / (d - 1) as f64).collect()
}

fn leg_params(p: &EnergyParams, depart: f64, arrive_min: f64) -> EnergyParams {
    p.with_departure(depart).with_arrival(arrive_min, p.q_max)
}

fn minsoc_matrix(stops: &Stops, opts: &TourOptions) -> Result<CostMatrix> {
    let n = stops.points.len();
    let p = stops.map.params;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let costs: Vec<Result<Option<f64>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let dep = if i == 0 { p.q_init } else { p.q_min };
            stops.relaxed(i, j, &leg_params(&p, dep, p.q_min), &opts.solver)
        })
        .collect();
    let mut m = CostMatrix::new(n);
    for (&(i, j), c) in pairs.iter().zip(costs) {
        m.set(i, j, c?);
    }
    Ok(m)
}

/// Relaxed leg costs between the source (index 0) and `targets`, departing
/// every target at `q_min` and the source at `q_init`, arrival free.
pub fn minsoc_cost_matrix(map: &QuietZoneMap, targets: &[Point2D], opts: &TourOptions) -> Result<CostMatrix> {
    minsoc_matrix(&Stops::new(map, targets, opts.target_extent)?, opts)
}

fn gtsp_instance(stops: &Stops, d: usize, opts: &TourOptions) -> Result<ClusterInstance> {
    let p = stops.map.params;
    let lv = levels(&p, d);
    let d = lv.len();
    let nt = stops.points.len() - 1;
    let n = 1 + nt * d;
    let point = |v: usize| if v == 0 { 0 } else { 1 + (v - 1) / d };
    let level = |v: usize| if v == 0 { p.q_init } else { lv[(v - 1) % d] };
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| point(u) != point(v))
        .collect();
    let costs: Vec<Result<Option<f64>>> = pairs
        .par_iter()
        .map(|&(u, v)| {
            let arrive = if v == 0 { p.q_min } else { level(v) };
            stops.relaxed(point(u), point(v), &leg_params(&p, level(u), arrive), &opts.solver)
        })
        .collect();
    let mut m = CostMatrix::new(n);
    for (&(u, v), c) in pairs.iter().zip(costs) {
        m.set(u, v, c?);
    }
    let mut clusters = vec![vec![0]];
    clusters.extend((0..nt).map(|t| (0..d).map(|k| 1 + t * d + k).collect()));
    let mut node_levels = vec![p.q_init];
    node_levels.extend((0..nt).flat_map(|_| lv.iter().copied()));
    Ok(ClusterInstance {
        clusters,
        cost: m,
        levels: node_levels,
        d,
    })
}

/// Clustered instance: the source is node 0; target `t` at level `k` is
/// node `1 + t·d + k`. Leaving a node departs at its level; arriving at a
/// node requires at least its level.
pub fn gtsp_cost_matrix(map: &QuietZoneMap, targets: &[Point2D], d: usize, opts: &TourOptions) -> Result<ClusterInstance> {
    if d < 1 {
        return Err(Error::Validation("need at least one SOC level".into()));
    }
    gtsp_instance(&Stops::new(map, targets, opts.target_extent)?, d, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TourMethod {
    Minsoc,
    Gtsp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    /// Stop indices starting at the source (0); targets are `1..=n`.
    pub order: Vec<usize>,
    /// Required arrival SOC at each stop in `order` (GTSP only).
    pub levels: Option<Vec<f64>>,
    /// Tour cost under the relaxed cost matrix.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourPlan {
    pub method: TourMethod,
    pub tour: Tour,
    /// Exact leg solutions in visiting order, ending back at the source.
    pub legs: Vec<PathSolution>,
    /// Sum of exact leg objectives.
    pub cost: f64,
}

impl TourPlan {
    /// SOC continuity between legs plus per-leg certification.
    pub fn certify(&self, map: &QuietZoneMap) -> Result<()> {
        let p = map.params;
        let mut q = p.q_init;
        for (k, leg) in self.legs.iter().enumerate() {
            if (leg.q_init - q).abs() > 1e-6 {
                return Err(Error::Certification(format!("leg {k} departs at {} instead of {q}", leg.q_init)));
            }
            certify(leg, &leg_params(&p, q, p.q_min), &map.zones)
                .map_err(|e| Error::Certification(format!("leg {k}: {e}")))?;
            q = leg.final_soc();
        }
        Ok(())
    }
}

fn stitch(stops: &Stops, tour: Tour, method: TourMethod, opts: &TourOptions) -> Result<TourPlan> {
    let p = stops.map.params;
    let k = tour.order.len();
    let mut q = p.q_init;
    let mut legs = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (tour.order[i], tour.order[(i + 1) % k]);
        let arrive = match (&tour.levels, b) {
            (Some(l), b) if b != 0 => l[(i + 1) % k],
            _ => p.q_min,
        };
        let graph = stops.graph(a, b)?;
        let mut r = solve_path(&graph, &leg_params(&p, q, arrive), &opts.bnb)?;
        if r.incumbent.is_none() && arrive > p.q_min {
            // the relaxed matrix can promise an arrival level no real path reaches
            r = solve_path(&graph, &leg_params(&p, q, p.q_min), &opts.bnb)?;
        }
        let leg = r
            .incumbent
            .ok_or_else(|| Error::Infeasible(format!("leg {i} from stop {a} to stop {b} is infeasible")))?;
        q = leg.final_soc();
        legs.push(leg);
    }
    let cost = legs.iter().map(|l| l.objective).sum();
    Ok(TourPlan {
        method,
        tour,
        legs,
        cost,
    })
}

/// Minimum-SOC tour: every target is left as if at `q_min`, which turns
/// the problem into a plain ATSP; legs are then re-solved exactly from the
/// SOC actually reached.
pub fn plan_tour_minsoc(map: &QuietZoneMap, targets: &[Point2D], opts: &TourOptions) -> Result<TourPlan> {
    if targets.is_empty() {
        return Err(Error::Validation("need at least one target".into()));
    }
    let stops = Stops::new(map, targets, opts.target_extent)?;
    let m = minsoc_matrix(&stops, opts)?;
    let at = solve_atsp(&m, &opts.atsp)?;
    let tour = Tour {
        order: at.order,
        levels: None,
        cost: at.cost,
    };
    stitch(&stops, tour, TourMethod::Minsoc, opts)
}

/// Clustered tour over `d` SOC levels per target, solved through the
/// Noon-Bean reduction; the chosen levels become arrival requirements.
pub fn plan_tour_gtsp(map: &QuietZoneMap, targets: &[Point2D], d: usize, opts: &TourOptions) -> Result<TourPlan> {
    if targets.is_empty() {
        return Err(Error::Validation("need at least one target".into()));
    }
    let stops = Stops::new(map, targets, opts.target_extent)?;
    let inst = gtsp_instance(&stops, d, opts)?;
    plan_from_instance(&stops, &inst, opts)
}

fn plan_from_instance(stops: &Stops, inst: &ClusterInstance, opts: &TourOptions) -> Result<TourPlan> {
    let nb = noon_bean(inst)?;
    let at = solve_atsp(&nb.matrix, &opts.atsp)?;
    let nodes = nb.detransform(&at.order);
    let (inf, cost) = inst.tour_cost(&nodes);
    if inf > 0 {
        return Err(Error::Infeasible("clustered tour uses an unreachable hop".into()));
    }
    let d = inst.d;
    let tour = Tour {
        order: nodes.iter().map(|&v| if v == 0 { 0 } else { 1 + (v - 1) / d }).collect(),
        levels: Some(nodes.iter().map(|&v| inst.levels[v]).collect()),
        cost,
    };
    stitch(stops, tour, TourMethod::Gtsp, opts)
}
