//! Continuous conic solves (with a light presolve) and branch-and-bound
//! for the mixed-integer program.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use quietpath_conic::{Cone, CscMatrix, Problem, Settings};
use serde::{Deserialize, Serialize};

pub use quietpath_conic::{Method, Status};

use crate::graph::{EnergyParams, PlanningGraph, GOAL, SOURCE};
use crate::model::{build_rmicp, decode_solution, path_bounds, ConicModel, LinRow, PathSolution, VarIndex, INT_TOL};
use crate::{Error, Result};

/// Feasibility tolerance used when presolve checks removed rows.
const PRESOLVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub settings: Settings,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            settings: Settings::default(),
        }
    }
}

impl SolverConfig {
    pub fn splitting() -> Self {
        SolverConfig {
            settings: Settings::splitting(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: Status,
    /// Values for every model column.
    pub x: Vec<f64>,
    /// Multipliers laid out as `[eqs, les, cone components]`; rows removed
    /// by presolve get zero.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status.is_optimal()
    }
}

#[derive(Debug, Clone, Copy)]
enum RowRef {
    Eq(usize),
    Le(usize),
    Soc(usize),
    Derived,
}

struct Reduced {
    problem: Option<Problem>,
    cols: Vec<usize>,
    x: Vec<f64>,
    rows: Vec<RowRef>,
}

enum Presolved {
    Reduced(Reduced),
    Infeasible,
    Unbounded,
}

fn presolve(model: &ConicModel, lb: &[f64], ub: &[f64]) -> Presolved {
    let n = model.num_vars();
    let mut lb = lb.to_vec();
    let mut ub = ub.to_vec();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let tol = |v: f64| PRESOLVE_TOL * (1.0 + v.abs());
    let fix_tight = |lb: &mut [f64], ub: &mut [f64], fixed: &mut [Option<f64>]| -> bool {
        for j in 0..n {
            if fixed[j].is_none() {
                if lb[j] > ub[j] + tol(if ub[j].is_finite() { ub[j] } else { 0.0 }) {
                    return false;
                }
                if lb[j].is_finite() && ub[j].is_finite() && ub[j] - lb[j] <= tol(lb[j]) {
                    let v = 0.5 * (lb[j] + ub[j]);
                    fixed[j] = Some(v);
                    lb[j] = v;
                    ub[j] = v;
                }
            }
        }
        true
    };
    if !fix_tight(&mut lb, &mut ub, &mut fixed) {
        return Presolved::Infeasible;
    }
    let mut eq_alive = vec![true; model.eqs.len()];
    let mut le_alive = vec![true; model.les.len()];
    let mut soc_alive = vec![true; model.socs.len()];
    let mut derived: Vec<LinRow> = Vec::new();

    // (active terms, residual right-hand side)
    let split = |terms: &[(usize, f64)], rhs: f64, fixed: &[Option<f64>]| -> (Vec<(usize, f64)>, f64) {
        let mut act = Vec::new();
        let mut r = rhs;
        for &(j, a) in terms {
            if a == 0.0 {
                continue;
            }
            match fixed[j] {
                Some(v) => r -= a * v,
                None => act.push((j, a)),
            }
        }
        (act, r)
    };

    let mut changed = true;
    while changed {
        changed = false;
        for (i, row) in model.eqs.iter().enumerate() {
            if !eq_alive[i] {
                continue;
            }
            let (act, r) = split(&row.terms, row.rhs, &fixed);
            match act.len() {
                0 => {
                    if r.abs() > tol(row.rhs) {
                        return Presolved::Infeasible;
                    }
                    eq_alive[i] = false;
                }
                1 => {
                    let (j, a) = act[0];
                    let v = r / a;
                    if v < lb[j] - tol(lb[j]) || v > ub[j] + tol(ub[j]) {
                        return Presolved::Infeasible;
                    }
                    let v = v.clamp(lb[j], ub[j]);
                    fixed[j] = Some(v);
                    lb[j] = v;
                    ub[j] = v;
                    eq_alive[i] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        let mut le_rows: Vec<(&LinRow, Option<usize>)> = model.les.iter().enumerate().map(|(i, r)| (r, Some(i))).collect();
        let derived_now = derived.clone();
        le_rows.extend(derived_now.iter().map(|r| (r, None)));
        for (row, idx) in le_rows {
            if let Some(i) = idx {
                if !le_alive[i] {
                    continue;
                }
            }
            let (act, r) = split(&row.terms, row.rhs, &fixed);
            match act.len() {
                0 => {
                    if r < -tol(row.rhs) {
                        return Presolved::Infeasible;
                    }
                    if let Some(i) = idx {
                        le_alive[i] = false;
                    }
                }
                1 => {
                    let (j, a) = act[0];
                    let v = r / a;
                    if a > 0.0 {
                        if v < ub[j] {
                            ub[j] = v;
                            changed = true;
                        }
                    } else if v > lb[j] {
                        lb[j] = v;
                        changed = true;
                    }
                    if let Some(i) = idx {
                        le_alive[i] = false;
                    }
                }
                _ => {}
            }
        }
        derived.retain(|row| split(&row.terms, row.rhs, &fixed).0.len() > 1);
        for (i, blk) in model.socs.iter().enumerate() {
            if !soc_alive[i] {
                continue;
            }
            let mut tail = 0.0;
            let mut constant_tail = true;
            for e in &blk.exprs[1..] {
                let (act, r) = split(&e.terms, -e.constant, &fixed);
                if !act.is_empty() {
                    constant_tail = false;
                    break;
                }
                tail += r * r;
            }
            if !constant_tail {
                continue;
            }
            let tail = tail.sqrt();
            let head = &blk.exprs[0];
            let (act, r) = split(&head.terms, -head.constant, &fixed);
            // head value = act·x - r must be at least `tail`
            if act.is_empty() {
                if -r < tail - tol(tail) {
                    return Presolved::Infeasible;
                }
            } else {
                derived.push(LinRow {
                    terms: act.iter().map(|&(j, a)| (j, -a)).collect(),
                    rhs: -r - tail,
                });
            }
            soc_alive[i] = false;
            changed = true;
        }
        if !fix_tight(&mut lb, &mut ub, &mut fixed) {
            return Presolved::Infeasible;
        }
    }

    // columns still referenced by a live row
    let mut used = vec![false; n];
    let mark = |terms: &[(usize, f64)], used: &mut [bool]| {
        for &(j, a) in terms {
            if a != 0.0 && fixed[j].is_none() {
                used[j] = true;
            }
        }
    };
    for (i, r) in model.eqs.iter().enumerate() {
        if eq_alive[i] {
            mark(&r.terms, &mut used);
        }
    }
    for (i, r) in model.les.iter().enumerate() {
        if le_alive[i] {
            mark(&r.terms, &mut used);
        }
    }
    for r in &derived {
        mark(&r.terms, &mut used);
    }
    for (i, b) in model.socs.iter().enumerate() {
        if soc_alive[i] {
            for e in &b.exprs {
                mark(&e.terms, &mut used);
            }
        }
    }
    let mut x = vec![0.0; n];
    let mut cols = Vec::new();
    let mut col_of = vec![usize::MAX; n];
    for j in 0..n {
        if let Some(v) = fixed[j] {
            x[j] = v;
        } else if used[j] {
            col_of[j] = cols.len();
            cols.push(j);
        } else {
            let c = model.objective[j];
            let v = if c > 0.0 {
                lb[j]
            } else if c < 0.0 {
                ub[j]
            } else {
                0.0f64.clamp(lb[j], ub[j])
            };
            if !v.is_finite() {
                return Presolved::Unbounded;
            }
            x[j] = v;
        }
    }
    if cols.is_empty() {
        return Presolved::Reduced(Reduced {
            problem: None,
            cols,
            x,
            rows: vec![],
        });
    }

    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut rows: Vec<RowRef> = Vec::new();
    let push_lin = |terms: &[(usize, f64)], rhs: f64, sign: f64, rr: RowRef, trip: &mut Vec<_>, b: &mut Vec<f64>, rows: &mut Vec<RowRef>| {
        let (act, r) = split(terms, rhs, &fixed);
        let i = b.len();
        for (j, a) in act {
            trip.push((i, col_of[j], sign * a));
        }
        b.push(sign * r);
        rows.push(rr);
    };
    for (i, r) in model.eqs.iter().enumerate() {
        if eq_alive[i] {
            push_lin(&r.terms, r.rhs, 1.0, RowRef::Eq(i), &mut trip, &mut b, &mut rows);
        }
    }
    let n_eq = b.len();
    for (i, r) in model.les.iter().enumerate() {
        if le_alive[i] {
            push_lin(&r.terms, r.rhs, 1.0, RowRef::Le(i), &mut trip, &mut b, &mut rows);
        }
    }
    for r in &derived {
        push_lin(&r.terms, r.rhs, 1.0, RowRef::Derived, &mut trip, &mut b, &mut rows);
    }
    for &j in &cols {
        if lb[j].is_finite() {
            push_lin(&[(j, -1.0)], -lb[j], 1.0, RowRef::Derived, &mut trip, &mut b, &mut rows);
        }
        if ub[j].is_finite() {
            push_lin(&[(j, 1.0)], ub[j], 1.0, RowRef::Derived, &mut trip, &mut b, &mut rows);
        }
    }
    let n_le = b.len() - n_eq;
    let mut cones = Vec::new();
    if n_eq > 0 {
        cones.push(Cone::Zero(n_eq));
    }
    if n_le > 0 {
        cones.push(Cone::Nonnegative(n_le));
    }
    for (i, blk) in model.socs.iter().enumerate() {
        if soc_alive[i] {
            for e in &blk.exprs {
                // s = expr  <=>  -terms·x + s = constant
                push_lin(&e.terms, -e.constant, -1.0, RowRef::Soc(i), &mut trip, &mut b, &mut rows);
            }
            cones.push(Cone::SecondOrder(blk.exprs.len()));
        }
    }
    let c: Vec<f64> = cols.iter().map(|&j| model.objective[j]).collect();
    let a = CscMatrix::from_triplets(b.len(), cols.len(), &trip);
    match Problem::new(c, a, b, cones) {
        Ok(p) => Presolved::Reduced(Reduced {
            problem: Some(p),
            cols,
            x,
            rows,
        }),
        Err(_) => Presolved::Infeasible,
    }
}

/// Solves the continuous relaxation of `model` (binaries ignored).
pub fn solve_conic(model: &ConicModel, cfg: &SolverConfig) -> Result<ConicSolution> {
    solve_with_bounds(model, &model.lb, &model.ub, cfg)
}

/// As [`solve_conic`] with the column bounds replaced.
pub fn solve_with_bounds(model: &ConicModel, lb: &[f64], ub: &[f64], cfg: &SolverConfig) -> Result<ConicSolution> {
    let n_dual = model.eqs.len() + model.les.len() + model.socs.iter().map(|s| s.exprs.len()).sum::<usize>();
    let trivial = |status: Status, x: Vec<f64>| {
        let objective = match status {
            Status::Infeasible => f64::INFINITY,
            Status::Unbounded => f64::NEG_INFINITY,
            _ => model.objective_value(&x),
        };
        ConicSolution {
            status,
            x,
            dual: vec![0.0; n_dual],
            objective,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
        }
    };
    let red = match presolve(model, lb, ub) {
        Presolved::Infeasible => return Ok(trivial(Status::Infeasible, vec![f64::NAN; model.num_vars()])),
        Presolved::Unbounded => return Ok(trivial(Status::Unbounded, vec![f64::NAN; model.num_vars()])),
        Presolved::Reduced(r) => r,
    };
    let Some(problem) = &red.problem else {
        return Ok(trivial(Status::Optimal, red.x));
    };
    let sol = quietpath_conic::solve(problem, &cfg.settings).map_err(|e| Error::Solver(e.to_string()))?;
    let mut x = red.x;
    for (k, &j) in red.cols.iter().enumerate() {
        x[j] = sol.x[k];
    }
    let mut dual = vec![0.0; n_dual];
    let le_off = model.eqs.len();
    let mut soc_off = vec![0; model.socs.len()];
    let mut acc = le_off + model.les.len();
    for (i, s) in model.socs.iter().enumerate() {
        soc_off[i] = acc;
        acc += s.exprs.len();
    }
    let mut soc_seen = vec![0; model.socs.len()];
    for (r, rr) in red.rows.iter().enumerate() {
        match *rr {
            RowRef::Eq(i) => dual[i] = sol.z[r],
            RowRef::Le(i) => dual[le_off + i] = sol.z[r],
            RowRef::Soc(i) => {
                dual[soc_off[i] + soc_seen[i]] = sol.z[r];
                soc_seen[i] += 1;
            }
            RowRef::Derived => {}
        }
    }
    let objective = match sol.status {
        Status::Infeasible => f64::INFINITY,
        Status::Unbounded => f64::NEG_INFINITY,
        _ => model.objective_value(&x),
    };
    Ok(ConicSolution {
        status: sol.status,
        x,
        dual,
        objective,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub status: Status,
    /// Lower bound on the fuel distance, unscaled.
    pub bound: f64,
    pub x: Vec<f64>,
}

/// Solves the relaxed program on `graph`; `params` are in graph units.
pub fn solve_relaxation(graph: &PlanningGraph, params: &EnergyParams, cfg: &SolverConfig) -> Result<Relaxation> {
    let (model, _) = build_rmicp(graph, params, true);
    let sol = solve_conic(&model, cfg)?;
    if !matches!(sol.status, Status::Optimal | Status::OptimalInaccurate | Status::Infeasible) {
        return Err(Error::Solver(format!("relaxation ended with {:?}", sol.status)));
    }
    Ok(Relaxation {
        status: sol.status,
        bound: sol.objective / graph.scale,
        x: sol.x,
    })
}

/// Solves the fixed-path restriction for `seq` and decodes it.
pub fn solve_fixed_path(
    model: &ConicModel,
    index: &VarIndex,
    graph: &PlanningGraph,
    params: &EnergyParams,
    seq: &[usize],
    cfg: &SolverConfig,
) -> Result<Option<PathSolution>> {
    Ok(fixed_path_value(model, index, graph, params, seq, cfg)?.map(|(p, _)| p))
}

/// Decoded path plus the model objective, in scaled units.
fn fixed_path_value(
    model: &ConicModel,
    index: &VarIndex,
    graph: &PlanningGraph,
    params: &EnergyParams,
    seq: &[usize],
    cfg: &SolverConfig,
) -> Result<Option<(PathSolution, f64)>> {
    let (lb, ub) = path_bounds(model, index, graph, seq)?;
    let sol = solve_with_bounds(model, &lb, &ub, cfg)?;
    match sol.status {
        Status::Infeasible => Ok(None),
        s if s.is_optimal() => match decode_solution(index, &sol.x, graph, params) {
            Ok(p) => Ok(Some((p, sol.objective))),
            Err(Error::Infeasible(_)) => Ok(None),
            Err(e) => Err(e),
        },
        s => Err(Error::Solver(format!("fixed-path restriction ended with {s:?}"))),
    }
}

#[derive(Debug, Clone)]
pub struct BnbConfig {
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
    /// `None` uses 5 s × max(1, |E| / 100).
    pub time_limit: Option<Duration>,
    pub max_nodes: Option<usize>,
    /// Worker threads; results are deterministic only with one.
    pub workers: usize,
    pub solver: SolverConfig,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            gap: 0.01,
            time_limit: None,
            max_nodes: None,
            workers: 1,
            solver: SolverConfig::default(),
        }
    }
}

impl BnbConfig {
    pub fn limit_for(&self, graph: &PlanningGraph) -> Duration {
        self.time_limit
            .unwrap_or_else(|| Duration::from_secs_f64(5.0 * (graph.edges.len() as f64 / 100.0).max(1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnbStatus {
    /// Gap target reached (or search tree exhausted).
    Solved,
    TimeLimit,
    NodeLimit,
    /// Every node was infeasible.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub seconds: f64,
    pub nodes: usize,
    pub lower_bound: f64,
    pub incumbent: f64,
}

#[derive(Debug, Clone)]
pub struct BnBResult {
    pub status: BnbStatus,
    pub incumbent: Option<PathSolution>,
    /// Model objective at the incumbent, unscaled (infinite without one).
    pub incumbent_value: f64,
    /// Global lower bound, unscaled.
    pub lower_bound: f64,
    pub root_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
    pub wall_time: f64,
    pub trace: Vec<TracePoint>,
}

impl BnBResult {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|_| self.incumbent_value)
    }

    /// Bound trace as CSV with header `seconds,nodes,lower_bound,incumbent`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("seconds,nodes,lower_bound,incumbent\n");
        for t in &self.trace {
            s.push_str(&format!("{:.6},{},{},{}\n", t.seconds, t.nodes, t.lower_bound, t.incumbent));
        }
        s
    }
}

/// Relative gap with an absolute floor; an incumbent of zero has no gap.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    let diff = (incumbent - bound).max(0.0);
    if diff <= 1e-6 || incumbent <= 1e-12 {
        0.0
    } else {
        diff / incumbent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Fix {
    Arc(usize, bool),
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    bound: f64,
    fixes: Vec<Fix>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // max-heap order: smallest bound first, then oldest
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.id.cmp(&self.id))
    }
}

struct Shared {
    heap: BinaryHeap<Node>,
    in_flight: Vec<(usize, f64)>,
    next_id: usize,
    incumbent: Option<PathSolution>,
    inc_value: f64,
    lower: f64,
    nodes: usize,
    tried: HashSet<Vec<usize>>,
    trace: Vec<TracePoint>,
    stop: Option<BnbStatus>,
    error: Option<Error>,
}

impl Shared {
    fn global_bound(&self) -> f64 {
        let open = self.heap.peek().map(|n| n.bound).unwrap_or(f64::INFINITY);
        let busy = self.in_flight.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        open.min(busy).min(self.inc_value)
    }
}

struct Search<'a> {
    model: &'a ConicModel,
    index: &'a VarIndex,
    graph: &'a PlanningGraph,
    params: &'a EnergyParams,
    cfg: &'a BnbConfig,
    start: Instant,
    limit: Duration,
    state: Mutex<Shared>,
    wake: Condvar,
}

enum Outcome {
    Pruned,
    Branch(usize, f64),
}

impl<'a> Search<'a> {
    fn bounds_for(&self, fixes: &[Fix]) -> (Vec<f64>, Vec<f64>) {
        let mut lb = self.model.lb.clone();
        let mut ub = self.model.ub.clone();
        for f in fixes {
            match *f {
                Fix::Arc(k, false) => self.index.disable_arc(&mut lb, &mut ub, k),
                Fix::Arc(k, true) => {
                    let y = self.index.arcs[k].y;
                    lb[y] = 1.0;
                    ub[y] = 1.0;
                }
            }
        }
        (lb, ub)
    }

    /// Offers a path; polishes it with its fixed-path restriction first.
    fn offer(&self, seq: Vec<usize>) -> Result<()> {
        {
            let mut st = self.state.lock().unwrap();
            if !st.tried.insert(seq.clone()) {
                return Ok(());
            }
        }
        let cand = fixed_path_value(self.model, self.index, self.graph, self.params, &seq, &self.cfg.solver)?;
        if let Some((p, value)) = cand {
            let mut st = self.state.lock().unwrap();
            if value < st.inc_value - 1e-12 {
                st.inc_value = value;
                st.incumbent = Some(p);
            }
        }
        Ok(())
    }

    fn dive(&self, x: &[f64], ub: &[f64]) -> Option<Vec<usize>> {
        let g = self.graph;
        let mut seen = vec![false; g.nodes.len()];
        let mut seq = vec![SOURCE];
        seen[SOURCE] = true;
        let mut cur = SOURCE;
        while cur != GOAL {
            let best = g.out_arcs[cur]
                .iter()
                .copied()
                .filter(|&k| !seen[g.arcs[k].to] && ub[self.index.arcs[k].y] > 0.5)
                .max_by(|&p, &q| x[self.index.arcs[p].y].total_cmp(&x[self.index.arcs[q].y]).then(q.cmp(&p)))?;
            if x[self.index.arcs[best].y] <= 1e-6 {
                return None;
            }
            cur = g.arcs[best].to;
            seen[cur] = true;
            seq.push(cur);
        }
        Some(seq)
    }

    fn process(&self, node: &Node) -> Result<Outcome> {
        let (lb, ub) = self.bounds_for(&node.fixes);
        let sol = solve_with_bounds(self.model, &lb, &ub, &self.cfg.solver)?;
        let bound = match sol.status {
            Status::Infeasible => return Ok(Outcome::Pruned),
            s if s.is_optimal() => sol.objective.max(node.bound),
            // no certified value: keep the parent's bound and branch on the iterate
            _ => node.bound,
        };
        if sol.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("node relaxation ended with {:?}", sol.status)));
        }
        {
            let st = self.state.lock().unwrap();
            if bound >= st.inc_value - 1e-9 {
                return Ok(Outcome::Pruned);
            }
        }
        let mut pick: Option<(f64, usize)> = None;
        for (k, av) in self.index.arcs.iter().enumerate() {
            let y = sol.x[av.y];
            let frac = (y - y.round()).abs();
            if frac > INT_TOL && pick.map_or(true, |(f, _)| frac > f + 1e-12) {
                pick = Some((frac, k));
            }
        }
        match pick {
            None => {
                if let Ok(seq) = crate::model::active_sequence(self.index, &sol.x, self.graph) {
                    self.offer(seq)?;
                }
                Ok(Outcome::Pruned)
            }
            Some((_, k)) => {
                if let Some(seq) = self.dive(&sol.x, &ub) {
                    self.offer(seq)?;
                }
                Ok(Outcome::Branch(k, bound))
            }
        }
    }

    fn record(&self, st: &mut Shared) {
        let lb = st.global_bound().max(st.lower);
        st.lower = lb;
        let gamma = self.graph.scale;
        st.trace.push(TracePoint {
            seconds: self.start.elapsed().as_secs_f64(),
            nodes: st.nodes,
            lower_bound: lb / gamma,
            incumbent: st.inc_value / gamma,
        });
    }

    fn worker(&self) {
        loop {
            let node = {
                let mut st = self.state.lock().unwrap();
                loop {
                    if st.stop.is_some() {
                        return;
                    }
                    let lb = st.global_bound().max(st.lower);
                    if st.incumbent.is_some() && relative_gap(st.inc_value, lb) <= self.cfg.gap {
                        st.stop = Some(BnbStatus::Solved);
                    } else if st.heap.is_empty() && st.in_flight.is_empty() {
                        st.stop = Some(if st.incumbent.is_some() {
                            BnbStatus::Solved
                        } else {
                            BnbStatus::Infeasible
                        });
                    } else if self.start.elapsed() >= self.limit {
                        st.stop = Some(BnbStatus::TimeLimit);
                    } else if self.cfg.max_nodes.is_some_and(|m| st.nodes >= m) {
                        st.stop = Some(BnbStatus::NodeLimit);
                    }
                    if st.stop.is_some() {
                        self.wake.notify_all();
                        return;
                    }
                    if let Some(n) = st.heap.pop() {
                        if n.bound >= st.inc_value - 1e-9 {
                            continue;
                        }
                        st.in_flight.push((n.id, n.bound));
                        break n;
                    }
                    st = self.wake.wait(st).unwrap();
                }
            };
            let outcome = self.process(&node);
            let mut st = self.state.lock().unwrap();
            st.in_flight.retain(|x| x.0 != node.id);
            st.nodes += 1;
            match outcome {
                Ok(Outcome::Pruned) => {}
                Ok(Outcome::Branch(k, bound)) => {
                    for val in [false, true] {
                        let mut fixes = node.fixes.clone();
                        fixes.push(Fix::Arc(k, val));
                        let id = st.next_id;
                        st.next_id += 1;
                        st.heap.push(Node { id, bound, fixes });
                    }
                }
                Err(e) => {
                    st.error = Some(e);
                    st.stop = Some(BnbStatus::Infeasible);
                }
            }
            self.record(&mut st);
            self.wake.notify_all();
        }
    }
}

/// Best-first branch-and-bound over the arc binaries.
///
/// Each node solves the continuous relaxation under its fixings. Candidate
/// paths come from integral relaxations and from a dive that follows the
/// largest `y` out of the source; every candidate is polished by solving its
/// fixed-path restriction. Integral `y` determine `w` (a side is used iff it
/// has in-flow), so only `y` is branched on.
pub fn branch_and_bound(
    model: &ConicModel,
    index: &VarIndex,
    graph: &PlanningGraph,
    params: &EnergyParams,
    cfg: &BnbConfig,
) -> Result<BnBResult> {
    let search = Search {
        model,
        index,
        graph,
        params,
        cfg,
        start: Instant::now(),
        limit: cfg.limit_for(graph),
        state: Mutex::new(Shared {
            heap: BinaryHeap::from(vec![Node {
                id: 0,
                bound: 0.0,
                fixes: vec![],
            }]),
            in_flight: vec![],
            next_id: 1,
            incumbent: None,
            inc_value: f64::INFINITY,
            lower: 0.0,
            nodes: 0,
            tried: HashSet::new(),
            trace: vec![],
            stop: None,
            error: None,
        }),
        wake: Condvar::new(),
    };
    if cfg.workers <= 1 {
        search.worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..cfg.workers {
                s.spawn(|| search.worker());
            }
        });
    }
    let st = search.state.into_inner().unwrap();
    if let Some(e) = st.error {
        return Err(e);
    }
    let gamma = graph.scale;
    let root_bound = st.trace.first().map_or(0.0, |t| t.lower_bound);
    let mut lower = st.global_bound().max(st.lower);
    if st.heap.is_empty() && st.in_flight.is_empty() {
        lower = lower.max(st.inc_value);
    }
    let status = st.stop.unwrap_or(BnbStatus::Solved);
    let lower_unscaled = if st.incumbent.is_some() { lower / gamma } else { lower.min(f64::MAX) / gamma };
    Ok(BnBResult {
        status,
        gap: relative_gap(st.inc_value, lower),
        incumbent: st.incumbent,
        incumbent_value: st.inc_value / gamma,
        lower_bound: lower_unscaled,
        root_bound,
        nodes_explored: st.nodes,
        wall_time: search.start.elapsed().as_secs_f64(),
        trace: st.trace,
    })
}

/// Builds the model on `graph` and runs branch-and-bound.
pub fn solve_path(graph: &PlanningGraph, params: &EnergyParams, cfg: &BnbConfig) -> Result<BnBResult> {
    let (model, index) = build_rmicp(graph, params, false);
    branch_and_bound(&model, &index, graph, params, cfg)
}
