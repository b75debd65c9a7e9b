//! The reformulated mixed-integer conic program over a planning graph, its
//! fixed-path restriction, and decoding of solver vectors into paths.
//!
//! Per directed arc `u -> v` the model carries `y` (arc used), `a`/`a'`
//! (SOC times `y` at departure/arrival), `b`/`l` (fuel/total distance times
//! `y`) and `c`/`c'` (λ times `y` at the side ends). Per side it carries `w`
//! (side used), `e`/`f` (fuel/total distance along the side) and the
//! position-flow auxiliaries `S`, `S_abs`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::{lerp_side, Point2D};
use crate::graph::{EdgeKind, EnergyParams, PlanningGraph, GOAL, SOURCE};
use crate::validate::{Schedule, Segment, Trajectory};
use crate::{Error, Result};

/// Integrality tolerance on binaries.
pub const INT_TOL: f64 = 1e-5;

pub type Terms = Vec<(usize, f64)>;

/// `terms · x = rhs` (equality) or `terms · x <= rhs` (inequality).
#[derive(Debug, Clone, PartialEq)]
pub struct LinRow {
    pub terms: Terms,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffExpr {
    pub terms: Terms,
    pub constant: f64,
}

impl AffExpr {
    pub fn var(j: usize) -> Self {
        AffExpr {
            terms: vec![(j, 1.0)],
            constant: 0.0,
        }
    }
}

/// `exprs[0] >= ‖exprs[1..]‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub exprs: Vec<AffExpr>,
}

/// A sparse conic program: linear objective, equalities, inequalities,
/// second-order cones, variable bounds and a set of binary columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicModel {
    pub objective: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub binary: Vec<bool>,
    pub names: Vec<String>,
    pub eqs: Vec<LinRow>,
    pub les: Vec<LinRow>,
    pub socs: Vec<SocBlock>,
}

impl ConicModel {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, cost: f64, binary: bool) -> usize {
        self.objective.push(cost);
        self.lb.push(lb);
        self.ub.push(ub);
        self.binary.push(binary);
        self.names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_eq(&mut self, terms: Terms, rhs: f64) {
        self.eqs.push(LinRow { terms, rhs });
    }

    pub fn add_le(&mut self, terms: Terms, rhs: f64) {
        self.les.push(LinRow { terms, rhs });
    }

    pub fn add_soc(&mut self, exprs: Vec<AffExpr>) {
        self.socs.push(SocBlock { exprs });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |t: &Terms| t.iter().map(|(j, a)| a * x[*j]).sum::<f64>();
        let mut worst: f64 = 0.0;
        for r in &self.eqs {
            worst = worst.max((dot(&r.terms) - r.rhs).abs());
        }
        for r in &self.les {
            worst = worst.max(dot(&r.terms) - r.rhs);
        }
        for c in &self.socs {
            let v: Vec<f64> = c.exprs.iter().map(|e| dot(&e.terms) + e.constant).collect();
            let tail = v[1..].iter().map(|t| t * t).sum::<f64>().sqrt();
            worst = worst.max(tail - v[0]);
        }
        for j in 0..self.num_vars() {
            worst = worst.max(self.lb[j] - x[j]).max(x[j] - self.ub[j]);
        }
        worst
    }

    /// Writes the line-oriented text format:
    ///
    /// ```text
    /// CONIC 1
    /// VARS <n> EQ <rows> LE <rows> SOC <d1> <d2> ...
    /// V <j> <cost> <lb> <ub> <binary 0|1> <name>
    /// E <row> <rhs>
    /// L <row> <rhs>
    /// Q <block> <component> <constant>
    /// A E|L <row> <col> <value>
    /// A Q <block> <component> <col> <value>
    /// END
    /// ```
    ///
    /// Rows are `A x = b` (E), `A x <= b` (L) and `expr_0 >= ‖expr_1..‖`
    /// (Q); infinite bounds print as `inf`/`-inf`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let dims: Vec<String> = self.socs.iter().map(|c| c.exprs.len().to_string()).collect();
        let _ = writeln!(out, "CONIC 1");
        let _ = writeln!(
            out,
            "VARS {} EQ {} LE {} SOC {}",
            self.num_vars(),
            self.eqs.len(),
            self.les.len(),
            dims.join(" ")
        );
        for j in 0..self.num_vars() {
            let _ = writeln!(
                out,
                "V {j} {:e} {:e} {:e} {} {}",
                self.objective[j],
                self.lb[j],
                self.ub[j],
                self.binary[j] as u8,
                self.names[j]
            );
        }
        for (tag, rows) in [("E", &self.eqs), ("L", &self.les)] {
            for (i, r) in rows.iter().enumerate() {
                let _ = writeln!(out, "{tag} {i} {:e}", r.rhs);
                for (j, v) in &r.terms {
                    let _ = writeln!(out, "A {tag} {i} {j} {v:e}");
                }
            }
        }
        for (i, c) in self.socs.iter().enumerate() {
            for (k, e) in c.exprs.iter().enumerate() {
                let _ = writeln!(out, "Q {i} {k} {:e}", e.constant);
                for (j, v) in &e.terms {
                    let _ = writeln!(out, "A Q {i} {k} {j} {v:e}");
                }
            }
        }
        out.push_str("END\n");
        out
    }

    /// Parses the format written by [`ConicModel::export`].
    pub fn import(text: &str) -> Result<ConicModel> {
        let bad = |line: usize, msg: &str| Error::Parse(format!("line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "CONIC 1" => {}
            _ => return Err(bad(0, "missing CONIC 1 header")),
        }
        let (hl, header) = lines.next().ok_or_else(|| bad(1, "missing layout line"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() < 7 || h[0] != "VARS" || h[2] != "EQ" || h[4] != "LE" || h[6] != "SOC" {
            return Err(bad(hl, "malformed layout line"));
        }
        let num = |s: &str, l: usize| -> Result<usize> { s.parse().map_err(|_| bad(l, "bad integer")) };
        let float = |s: &str, l: usize| -> Result<f64> { s.parse().map_err(|_| bad(l, "bad number")) };
        let n = num(h[1], hl)?;
        let mut m = ConicModel {
            objective: vec![0.0; n],
            lb: vec![f64::NEG_INFINITY; n],
            ub: vec![f64::INFINITY; n],
            binary: vec![false; n],
            names: vec![String::new(); n],
            eqs: vec![LinRow { terms: vec![], rhs: 0.0 }; num(h[3], hl)?],
            les: vec![LinRow { terms: vec![], rhs: 0.0 }; num(h[5], hl)?],
            socs: Vec::new(),
        };
        for d in &h[7..] {
            let d = num(d, hl)?;
            m.socs.push(SocBlock {
                exprs: vec![AffExpr { terms: vec![], constant: 0.0 }; d],
            });
        }
        let mut ended = false;
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let idx = |k: usize, len: usize| -> Result<usize> {
                let v = num(t.get(k).ok_or_else(|| bad(ln, "missing field"))?, ln)?;
                if v >= len {
                    return Err(bad(ln, "index out of range"));
                }
                Ok(v)
            };
            let val = |k: usize| -> Result<f64> { float(t.get(k).ok_or_else(|| bad(ln, "missing field"))?, ln) };
            match t[0] {
                "V" => {
                    let j = idx(1, n)?;
                    m.objective[j] = val(2)?;
                    m.lb[j] = val(3)?;
                    m.ub[j] = val(4)?;
                    m.binary[j] = val(5)? != 0.0;
                    m.names[j] = t[6..].join(" ");
                }
                "E" => {
                    let i = idx(1, m.eqs.len())?;
                    m.eqs[i].rhs = val(2)?;
                }
                "L" => {
                    let i = idx(1, m.les.len())?;
                    m.les[i].rhs = val(2)?;
                }
                "Q" => {
                    let i = idx(1, m.socs.len())?;
                    let k = idx(2, m.socs[i].exprs.len())?;
                    m.socs[i].exprs[k].constant = val(3)?;
                }
                "A" => match t.get(1).copied() {
                    Some("E") => {
                        let i = idx(2, m.eqs.len())?;
                        let entry = (idx(3, n)?, val(4)?);
                        m.eqs[i].terms.push(entry);
                    }
                    Some("L") => {
                        let i = idx(2, m.les.len())?;
                        let entry = (idx(3, n)?, val(4)?);
                        m.les[i].terms.push(entry);
                    }
                    Some("Q") => {
                        let i = idx(2, m.socs.len())?;
                        let k = idx(3, m.socs[i].exprs.len())?;
                        let entry = (idx(4, n)?, val(5)?);
                        m.socs[i].exprs[k].terms.push(entry);
                    }
                    _ => return Err(bad(ln, "unknown coefficient section")),
                },
                "END" => {
                    ended = true;
                    break;
                }
                _ => return Err(bad(ln, "unknown record")),
            }
        }
        if !ended {
            return Err(Error::Parse("missing END".into()));
        }
        Ok(m)
    }
}

/// Columns of one directed arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcVars {
    pub arc: usize,
    pub y: usize,
    pub a: usize,
    pub a_in: usize,
    pub b: usize,
    pub l: usize,
    /// λ flow at the departure side (absent for the source).
    pub c: Option<usize>,
    /// λ flow at the arrival side (absent for the goal).
    pub c_in: Option<usize>,
}

impl ArcVars {
    pub fn columns(&self) -> Vec<usize> {
        let mut v = vec![self.y, self.a, self.a_in, self.b, self.l];
        v.extend(self.c);
        v.extend(self.c_in);
        v
    }
}

/// Columns of one side node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideVars {
    pub node: usize,
    pub w: usize,
    pub e: usize,
    pub f: usize,
    pub s: usize,
    pub s_abs: usize,
}

impl SideVars {
    pub fn columns(&self) -> Vec<usize> {
        vec![self.w, self.e, self.f, self.s, self.s_abs]
    }
}

/// Maps model columns back to arcs and sides of the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct VarIndex {
    /// Indexed like `PlanningGraph::arcs`.
    pub arcs: Vec<ArcVars>,
    /// Indexed by graph node; `None` for the terminals.
    pub sides: Vec<Option<SideVars>>,
}

impl VarIndex {
    /// Pins every column of an arc to zero (the arc is unused).
    pub fn disable_arc(&self, lb: &mut [f64], ub: &mut [f64], arc: usize) {
        for j in self.arcs[arc].columns() {
            lb[j] = 0.0;
            ub[j] = 0.0;
        }
    }

    /// Pins a side and every arc touching it to zero.
    pub fn disable_side(&self, graph: &PlanningGraph, lb: &mut [f64], ub: &mut [f64], node: usize) {
        if let Some(sv) = self.sides[node] {
            for j in sv.columns() {
                lb[j] = 0.0;
                ub[j] = 0.0;
            }
        }
        for &k in graph.out_arcs[node].iter().chain(&graph.in_arcs[node]) {
            self.disable_arc(lb, ub, k);
        }
    }

    pub fn binaries(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.arcs.iter().map(|a| a.y).collect();
        v.extend(self.sides.iter().flatten().map(|s| s.w));
        v
    }
}

/// Builds the mixed-integer conic program of the minimum-fuel path problem.
/// `params` must be in the graph's (scaled) units. With `relaxed`, `y` and
/// `w` are continuous in `[0, 1]`.
pub fn build_rmicp(graph: &PlanningGraph, params: &EnergyParams, relaxed: bool) -> (ConicModel, VarIndex) {
    let (alpha, beta) = (params.alpha, params.beta);
    let mut m = ConicModel::default();
    let inf = f64::INFINITY;
    let nodes = &graph.nodes;
    let mut arcs = Vec::with_capacity(graph.arcs.len());
    for (k, arc) in graph.arcs.iter().enumerate() {
        let tag = format!("{},{}", arc.from, arc.to);
        let y = m.add_var(format!("y[{tag}]"), 0.0, 1.0, 0.0, !relaxed);
        let a = m.add_var(format!("a[{tag}]"), -inf, inf, 0.0, false);
        let a_in = m.add_var(format!("a'[{tag}]"), -inf, inf, 0.0, false);
        let b_ub = if arc.kind == EdgeKind::Intra { 0.0 } else { inf };
        let b = m.add_var(format!("b[{tag}]"), 0.0, b_ub, 1.0, false);
        let l = m.add_var(format!("l[{tag}]"), -inf, inf, 0.0, false);
        let c = graph
            .is_side(arc.from)
            .then(|| m.add_var(format!("c[{tag}]"), -inf, inf, 0.0, false));
        let c_in = graph
            .is_side(arc.to)
            .then(|| m.add_var(format!("c'[{tag}]"), -inf, inf, 0.0, false));

        // SOC balance along the arc
        match arc.kind {
            EdgeKind::Inter => m.add_eq(vec![(a_in, 1.0), (a, -1.0), (b, -(alpha + beta)), (l, alpha)], 0.0),
            EdgeKind::Intra => m.add_eq(vec![(a_in, 1.0), (a, -1.0), (l, alpha)], 0.0),
        }
        for q in [a, a_in] {
            m.add_le(vec![(y, params.q_min), (q, -1.0)], 0.0);
            m.add_le(vec![(q, 1.0), (y, -params.q_max)], 0.0);
        }
        let bp = arc.params;
        if let Some(c) = c {
            m.add_le(vec![(y, bp.lo_u), (c, -1.0)], 0.0);
            m.add_le(vec![(c, 1.0), (y, -bp.hi_u)], 0.0);
        }
        if let Some(c_in) = c_in {
            m.add_le(vec![(y, bp.lo_v), (c_in, -1.0)], 0.0);
            m.add_le(vec![(c_in, 1.0), (y, -bp.hi_v)], 0.0);
        }
        m.add_le(vec![(b, 1.0), (l, -1.0)], 0.0);

        // l >= ‖n_u y + c (m_u - n_u) - n_v y - c' (m_v - n_v)‖
        let (su, sv) = (&nodes[arc.from], &nodes[arc.to]);
        let d0 = su.n - sv.n;
        let du = su.m - su.n;
        let dv = sv.m - sv.n;
        let mut exprs = vec![AffExpr::var(l)];
        for comp in [|p: Point2D| p.x, |p: Point2D| p.y] {
            let mut terms = vec![(y, comp(d0))];
            if let Some(c) = c {
                terms.push((c, comp(du)));
            }
            if let Some(c_in) = c_in {
                terms.push((c_in, -comp(dv)));
            }
            terms.retain(|t| t.1 != 0.0);
            exprs.push(AffExpr { terms, constant: 0.0 });
        }
        m.add_soc(exprs);
        arcs.push(ArcVars {
            arc: k,
            y,
            a,
            a_in,
            b,
            l,
            c,
            c_in,
        });
    }

    let mut sides = vec![None; nodes.len()];
    for v in 2..nodes.len() {
        let len = nodes[v].length();
        let w = m.add_var(format!("w[{v}]"), 0.0, 1.0, 0.0, !relaxed);
        let e = m.add_var(format!("e[{v}]"), 0.0, inf, 1.0, false);
        let f = m.add_var(format!("f[{v}]"), 0.0, inf, 0.0, false);
        let s = m.add_var(format!("S[{v}]"), -inf, inf, 0.0, false);
        let s_abs = m.add_var(format!("Sabs[{v}]"), 0.0, inf, 0.0, false);
        m.add_le(vec![(e, 1.0), (f, -1.0)], 0.0);
        m.add_le(vec![(f, 1.0), (w, -len)], 0.0);

        let outs = &graph.out_arcs[v];
        let ins = &graph.in_arcs[v];
        // exit SOC flow - entry SOC flow = beta e - alpha (f - e)
        let mut soc: Terms = outs.iter().map(|&k| (arcs[k].a, 1.0)).collect();
        soc.extend(ins.iter().map(|&k| (arcs[k].a_in, -1.0)));
        soc.push((e, -(alpha + beta)));
        soc.push((f, alpha));
        m.add_eq(soc, 0.0);
        // S = exit λ flow - entry λ flow, |S| <= S_abs = f / len
        let mut pos: Terms = vec![(s, 1.0)];
        pos.extend(outs.iter().filter_map(|&k| arcs[k].c.map(|c| (c, -1.0))));
        pos.extend(ins.iter().filter_map(|&k| arcs[k].c_in.map(|c| (c, 1.0))));
        m.add_eq(pos, 0.0);
        m.add_le(vec![(s, 1.0), (s_abs, -1.0)], 0.0);
        m.add_le(vec![(s, -1.0), (s_abs, -1.0)], 0.0);
        m.add_eq(vec![(s_abs, len), (f, -1.0)], 0.0);
        // flow conservation and degree
        let mut flow: Terms = ins.iter().map(|&k| (arcs[k].y, 1.0)).collect();
        flow.extend(outs.iter().map(|&k| (arcs[k].y, -1.0)));
        m.add_eq(flow, 0.0);
        let mut deg: Terms = ins.iter().map(|&k| (arcs[k].y, 1.0)).collect();
        deg.push((w, -1.0));
        m.add_le(deg, 0.0);
        sides[v] = Some(SideVars { node: v, w, e, f, s, s_abs });
    }

    let out_s = &graph.out_arcs[SOURCE];
    let in_g = &graph.in_arcs[GOAL];
    m.add_eq(out_s.iter().map(|&k| (arcs[k].y, 1.0)).collect(), 1.0);
    m.add_eq(in_g.iter().map(|&k| (arcs[k].y, 1.0)).collect(), 1.0);
    m.add_eq(out_s.iter().map(|&k| (arcs[k].a, 1.0)).collect(), params.q_init);
    m.add_le(in_g.iter().map(|&k| (arcs[k].a_in, -1.0)).collect(), -params.q_goal_min);
    m.add_le(in_g.iter().map(|&k| (arcs[k].a_in, 1.0)).collect(), params.q_goal_max);

    (m, VarIndex { arcs, sides })
}

/// Arc indices of a node sequence, or an error naming the missing edge.
pub fn sequence_arcs(graph: &PlanningGraph, seq: &[usize]) -> Result<Vec<usize>> {
    if seq.first() != Some(&SOURCE) || seq.last() != Some(&GOAL) {
        return Err(Error::Validation("sequence must run from source to goal".into()));
    }
    let mut seen = vec![false; graph.nodes.len()];
    let mut out = Vec::with_capacity(seq.len());
    for w in seq.windows(2) {
        if seen[w[0]] {
            return Err(Error::Validation(format!("node {} repeats", w[0])));
        }
        seen[w[0]] = true;
        let k = graph
            .find_arc(w[0], w[1])
            .ok_or_else(|| Error::Validation(format!("no edge {} -> {}", w[0], w[1])))?;
        out.push(k);
    }
    Ok(out)
}

/// Bounds that pin the binaries to a given simple `s -> g` path. Unused arcs
/// and sides have all of their columns pinned to zero.
pub fn path_bounds(model: &ConicModel, index: &VarIndex, graph: &PlanningGraph, seq: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let used = sequence_arcs(graph, seq)?;
    let mut lb = model.lb.clone();
    let mut ub = model.ub.clone();
    let mut on_path = vec![false; graph.nodes.len()];
    for &v in seq {
        on_path[v] = true;
    }
    let mut arc_used = vec![false; graph.arcs.len()];
    for &k in &used {
        arc_used[k] = true;
    }
    for (k, av) in index.arcs.iter().enumerate() {
        if arc_used[k] {
            lb[av.y] = 1.0;
            ub[av.y] = 1.0;
        } else {
            index.disable_arc(&mut lb, &mut ub, k);
        }
    }
    for sv in index.sides.iter().flatten() {
        if on_path[sv.node] {
            lb[sv.w] = 1.0;
            ub[sv.w] = 1.0;
        } else {
            for j in sv.columns() {
                lb[j] = 0.0;
                ub[j] = 0.0;
            }
        }
    }
    Ok((lb, ub))
}

/// The convex program obtained by fixing the binaries to a node sequence.
pub fn build_fixed_path_restriction(
    graph: &PlanningGraph,
    params: &EnergyParams,
    seq: &[usize],
) -> Result<(ConicModel, VarIndex)> {
    let (mut m, index) = build_rmicp(graph, params, true);
    let (lb, ub) = path_bounds(&m, &index, graph, seq)?;
    m.lb = lb;
    m.ub = ub;
    Ok((m, index))
}

/// Per-node record of a decoded path. λ and SOC are at entry and exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathNode {
    pub node: usize,
    pub lambda_entry: f64,
    pub lambda_exit: f64,
    pub entry: Point2D,
    pub exit: Point2D,
    pub q_entry: f64,
    pub q_exit: f64,
    /// Distance travelled along the side (d_v).
    pub side_distance: f64,
    /// Fuel distance along the side (p_v).
    pub side_fuel: f64,
    pub side_schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub length: f64,
    pub fuel: f64,
    pub schedule: Schedule,
    /// Zone crossed by an intra-zone edge.
    pub zone: Option<usize>,
}

/// A decoded path in unscaled map units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub nodes: Vec<PathNode>,
    pub edges: Vec<PathEdge>,
    /// Total fuel distance.
    pub objective: f64,
    /// Scale factor γ the path was solved at.
    pub scale: f64,
    pub q_init: f64,
}

impl PathSolution {
    pub fn node_sequence(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.node).collect()
    }

    pub fn final_soc(&self) -> f64 {
        self.nodes.last().map_or(f64::NAN, |n| n.q_entry)
    }

    pub fn length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum::<f64>() + self.nodes.iter().map(|n| n.side_distance).sum::<f64>()
    }

    /// The path as a chain of segments: each side traversal between its
    /// entry and exit point, then the edge to the next node.
    pub fn trajectory(&self) -> Trajectory {
        let mut segments = Vec::new();
        for (k, n) in self.nodes.iter().enumerate() {
            if n.side_distance > 0.0 {
                segments.push(Segment {
                    start: n.entry,
                    end: n.exit,
                    fuel: n.side_fuel,
                    schedule: n.side_schedule,
                    zone: None,
                });
            }
            if let Some(e) = self.edges.get(k) {
                segments.push(Segment {
                    start: n.exit,
                    end: self.nodes[k + 1].entry,
                    fuel: e.fuel,
                    schedule: e.schedule,
                    zone: e.zone,
                });
            }
        }
        Trajectory {
            segments,
            q_init: self.q_init,
            scale: self.scale,
        }
    }

    pub fn switch_points(&self) -> Vec<Point2D> {
        self.trajectory().segments.iter().flat_map(|s| s.switch_points()).collect()
    }
}

/// Straight piece of a fixed geometry, with its mode restriction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    pub length: f64,
    pub electric_only: bool,
}

/// Minimum-fuel SOC schedule over a fixed chain of legs.
///
/// A backward pass computes the least SOC needed at every breakpoint to
/// finish; the forward pass then keeps SOC as low as that allows, which
/// minimizes the final SOC and therefore total fuel. Returns the SOC at each
/// breakpoint and the fuel distance of each leg.
pub(crate) fn min_fuel_schedule(legs: &[Leg], p: &EnergyParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = legs.len();
    let mut req = vec![0.0; k + 1];
    req[k] = p.q_goal_min;
    for i in (0..k).rev() {
        let l = legs[i].length;
        req[i] = if legs[i].electric_only {
            req[i + 1] + p.alpha * l
        } else {
            req[i + 1] - p.beta * l
        }
        .max(p.q_min);
        if req[i] > p.q_max + 1e-9 {
            return Err(Error::Infeasible(format!("leg {i} needs SOC {} above q_max", req[i])));
        }
    }
    let slack = 1e-7 * p.q_max.max(1.0);
    if req[0] > p.q_init + slack {
        return Err(Error::Infeasible(format!(
            "geometry needs initial SOC {} but only {} is available",
            req[0], p.q_init
        )));
    }
    let mut q = vec![p.q_init; k + 1];
    let mut z = vec![0.0; k];
    for i in 0..k {
        let l = legs[i].length;
        let drop = q[i] - p.alpha * l;
        if legs[i].electric_only {
            // absorb round-off just below q_min
            q[i + 1] = if drop < p.q_min && drop >= p.q_min - slack { p.q_min } else { drop };
        } else {
            q[i + 1] = drop.max(req[i + 1]).min(q[i] + p.beta * l);
            z[i] = ((q[i + 1] - q[i] + p.alpha * l) / (p.alpha + p.beta)).clamp(0.0, l);
        }
    }
    if q[k] > p.q_goal_max + slack {
        return Err(Error::Infeasible(format!(
            "arrives with SOC {} above the goal maximum {}",
            q[k], p.q_goal_max
        )));
    }
    Ok((q, z))
}

/// Single-switch schedule when it keeps SOC in bounds, else interleaving.
pub(crate) fn pick_schedule(len: f64, z: f64, q0: f64, p: &EnergyParams) -> Schedule {
    let eps = 1e-12 * len.max(1.0);
    if z <= eps {
        Schedule::Electric
    } else if z >= len - eps {
        Schedule::Fuel
    } else if q0 - p.alpha * (len - z) >= p.q_min - 1e-9 {
        Schedule::ElectricThenFuel
    } else if q0 + p.beta * z <= p.q_max + 1e-9 {
        Schedule::FuelThenElectric
    } else {
        Schedule::Interleaved
    }
}

/// Node sequence of the `y = 1` arcs from source to goal.
pub fn active_sequence(index: &VarIndex, x: &[f64], graph: &PlanningGraph) -> Result<Vec<usize>> {
    let mut seq = vec![SOURCE];
    let mut seen = vec![false; graph.nodes.len()];
    seen[SOURCE] = true;
    let mut cur = SOURCE;
    while cur != GOAL {
        let next: Vec<usize> = graph.out_arcs[cur]
            .iter()
            .copied()
            .filter(|&k| x[index.arcs[k].y] > 0.5)
            .collect();
        let k = match next.as_slice() {
            [k] => *k,
            [] => return Err(Error::Decode(format!("path stops at node {cur}"))),
            _ => return Err(Error::Decode(format!("path branches at node {cur}"))),
        };
        cur = graph.arcs[k].to;
        if seen[cur] {
            return Err(Error::Decode(format!("path revisits node {cur}")));
        }
        seen[cur] = true;
        seq.push(cur);
    }
    Ok(seq)
}

/// Turns a solution vector into a path. λ values are read from the
/// position flows; SOC and fuel are then recomputed exactly on the decoded
/// geometry, so the objective never exceeds the model's value for the same
/// binaries. `params` are in the graph's units; output is unscaled.
pub fn decode_solution(index: &VarIndex, x: &[f64], graph: &PlanningGraph, params: &EnergyParams) -> Result<PathSolution> {
    let seq = active_sequence(index, x, graph)?;
    let arcs = sequence_arcs(graph, &seq)?;
    for &k in &arcs {
        let y = x[index.arcs[k].y];
        if (y - 1.0).abs() > 1e-3 {
            return Err(Error::Decode(format!("arc {k} is fractional (y = {y})")));
        }
    }
    let n = seq.len();
    let mut lam_in = vec![0.0; n];
    let mut lam_out = vec![0.0; n];
    for (i, &k) in arcs.iter().enumerate() {
        let av = &index.arcs[k];
        let bp = graph.arcs[k].params;
        let y = x[av.y];
        if let Some(c) = av.c {
            lam_out[i] = (x[c] / y).clamp(bp.lo_u, bp.hi_u);
        }
        if let Some(c) = av.c_in {
            lam_in[i + 1] = (x[c] / y).clamp(bp.lo_v, bp.hi_v);
        }
    }
    path_from_lambdas(graph, params, &seq, &lam_in, &lam_out)
}

/// Builds a path from node sequence and side λ values (scaled inputs).
pub(crate) fn path_from_lambdas(
    graph: &PlanningGraph,
    params: &EnergyParams,
    seq: &[usize],
    lam_in: &[f64],
    lam_out: &[f64],
) -> Result<PathSolution> {
    let n = seq.len();
    let gamma = graph.scale;
    let entry: Vec<Point2D> = (0..n).map(|i| lerp_side(&graph.nodes[seq[i]], lam_in[i])).collect();
    let exit: Vec<Point2D> = (0..n).map(|i| lerp_side(&graph.nodes[seq[i]], lam_out[i])).collect();
    // legs alternate: side traversal of node i, then edge i -> i+1
    let mut legs = Vec::with_capacity(2 * n);
    let mut kinds = Vec::with_capacity(n);
    for i in 0..n {
        legs.push(Leg {
            length: entry[i].dist(exit[i]),
            electric_only: false,
        });
        if i + 1 < n {
            let k = graph.find_arc(seq[i], seq[i + 1]).expect("sequence arcs checked");
            let kind = graph.arcs[k].kind;
            kinds.push(kind);
            legs.push(Leg {
                length: exit[i].dist(entry[i + 1]),
                electric_only: kind == EdgeKind::Intra,
            });
        }
    }
    let (q, z) = min_fuel_schedule(&legs, params)?;
    let unscale = |p: Point2D| p * (1.0 / gamma);
    let mut nodes = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n - 1);
    for i in 0..n {
        let li = 2 * i;
        let side_len = legs[li].length;
        nodes.push(PathNode {
            node: seq[i],
            lambda_entry: lam_in[i],
            lambda_exit: lam_out[i],
            entry: unscale(entry[i]),
            exit: unscale(exit[i]),
            q_entry: q[li],
            q_exit: q[li + 1],
            side_distance: side_len / gamma,
            side_fuel: z[li] / gamma,
            side_schedule: pick_schedule(side_len, z[li], q[li], params),
        });
        if i + 1 < n {
            let len = legs[li + 1].length;
            let zone = (kinds[i] == EdgeKind::Intra).then(|| graph.nodes[seq[i]].zone).flatten();
            edges.push(PathEdge {
                from: seq[i],
                to: seq[i + 1],
                kind: kinds[i],
                length: len / gamma,
                fuel: z[li + 1] / gamma,
                schedule: pick_schedule(len, z[li + 1], q[li + 1], params),
                zone,
            });
        }
    }
    let objective = z.iter().sum::<f64>() / gamma;
    Ok(PathSolution {
        nodes,
        edges,
        objective,
        scale: gamma,
        q_init: params.q_init,
    })
}
