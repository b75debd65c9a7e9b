//! The problem instance and the planning graph built on top of it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    boundary_params, classify_visibility, polygons_touch, segment_blocked, BoundaryParams, ConvexPolygon, Point2D,
    Side, GEOM_TOL,
};
use crate::{Error, Result};

/// Node index of the source in every [`PlanningGraph`].
pub const SOURCE: usize = 0;
/// Node index of the goal in every [`PlanningGraph`].
pub const GOAL: usize = 1;

/// Sides shorter than this (scaled units) are dropped.
pub const MIN_SIDE_LENGTH: f64 = 1e-6;

/// Battery model: SOC falls at `alpha` per unit of electric travel and
/// rises at `beta` per unit of fuel travel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub alpha: f64,
    pub beta: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub q_init: f64,
    pub q_goal_min: f64,
    pub q_goal_max: f64,
}

impl EnergyParams {
    /// Goal SOC left free within `[q_min, q_max]`.
    pub fn new(alpha: f64, beta: f64, q_min: f64, q_max: f64, q_init: f64) -> Self {
        EnergyParams {
            alpha,
            beta,
            q_min,
            q_max,
            q_init,
            q_goal_min: q_min,
            q_goal_max: q_max,
        }
    }

    pub fn with_departure(mut self, q: f64) -> Self {
        self.q_init = q;
        self
    }

    pub fn with_arrival(mut self, lo: f64, hi: f64) -> Self {
        self.q_goal_min = lo;
        self.q_goal_max = hi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.q_min, self.q_max, self.q_init, self.q_goal_min, self.q_goal_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("energy parameters must be finite".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Validation("alpha and beta must be positive".into()));
        }
        if !(0.0 <= self.q_min && self.q_min < self.q_max) {
            return Err(Error::Validation("need 0 <= q_min < q_max".into()));
        }
        if !(self.q_min <= self.q_init && self.q_init <= self.q_max) {
            return Err(Error::Validation("q_init outside [q_min, q_max]".into()));
        }
        if !(self.q_min <= self.q_goal_min && self.q_goal_min <= self.q_goal_max && self.q_goal_max <= self.q_max) {
            return Err(Error::Validation("goal SOC bounds outside [q_min, q_max]".into()));
        }
        Ok(())
    }

    fn scaled(&self, gamma: f64) -> Self {
        EnergyParams {
            alpha: self.alpha / gamma,
            beta: self.beta / gamma,
            ..*self
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuietZoneMap {
    pub zones: Vec<ConvexPolygon>,
    pub source: Point2D,
    pub goal: Option<Point2D>,
    pub targets: Vec<Point2D>,
    pub params: EnergyParams,
    /// Coordinate scale factor γ applied so far (1 for raw maps).
    pub scale: f64,
}

impl QuietZoneMap {
    pub fn new(
        zones: Vec<ConvexPolygon>,
        source: Point2D,
        goal: Option<Point2D>,
        targets: Vec<Point2D>,
        params: EnergyParams,
    ) -> Result<Self> {
        let map = QuietZoneMap {
            zones,
            source,
            goal,
            targets,
            params,
            scale: 1.0,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let tol = GEOM_TOL / self.scale;
        for i in 0..self.zones.len() {
            for j in i + 1..self.zones.len() {
                if polygons_touch(&self.zones[i], &self.zones[j], tol) {
                    return Err(Error::Validation(format!("zones {i} and {j} overlap or touch")));
                }
            }
        }
        let mut points = vec![("source".to_string(), self.source)];
        if let Some(g) = self.goal {
            points.push(("goal".into(), g));
        }
        for (k, t) in self.targets.iter().enumerate() {
            points.push((format!("target {k}"), *t));
        }
        for (name, p) in points {
            self.check_point(p).map_err(|e| Error::Validation(format!("{name}: {e}")))?;
        }
        Ok(())
    }

    /// A terminal must be finite and not strictly inside any zone.
    pub fn check_point(&self, p: Point2D) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::Validation("non-finite coordinates".into()));
        }
        let tol = GEOM_TOL / self.scale;
        if let Some(i) = self.zones.iter().position(|z| z.contains_strict(p, tol)) {
            return Err(Error::Validation(format!("point lies inside zone {i}")));
        }
        Ok(())
    }

    fn all_points(&self) -> Vec<Point2D> {
        let mut pts: Vec<Point2D> = self.zones.iter().flat_map(|z| z.vertices().iter().copied()).collect();
        pts.push(self.source);
        pts.extend(self.goal);
        pts.extend(self.targets.iter().copied());
        pts
    }

    /// Width and height of the bounding box of all map content.
    pub fn extent(&self) -> (f64, f64) {
        let (lo, hi) = crate::geometry::bbox(&self.all_points());
        (hi.x - lo.x, hi.y - lo.y)
    }
}

/// Shrinks coordinates by γ = `target_extent / max(width, height)` when the
/// map is larger than the target, dividing `alpha` and `beta` by γ so that
/// SOC changes are unchanged. Costs computed on the result are converted
/// back by dividing by the recorded scale.
pub fn scale_map(map: &QuietZoneMap, target_extent: f64) -> Result<QuietZoneMap> {
    if !(target_extent > 0.0 && target_extent.is_finite()) {
        return Err(Error::Validation("target extent must be positive".into()));
    }
    let (w, h) = map.extent();
    let size = w.max(h);
    if !(size > 0.0) {
        return Err(Error::Validation("map has zero extent".into()));
    }
    let gamma = target_extent / size;
    if gamma >= 1.0 {
        return Ok(map.clone());
    }
    let f = |p: Point2D| p * gamma;
    Ok(QuietZoneMap {
        zones: map.zones.iter().map(|z| z.map_points(f)).collect(),
        source: f(map.source),
        goal: map.goal.map(f),
        targets: map.targets.iter().map(|p| f(*p)).collect(),
        params: map.params.scaled(gamma),
        scale: map.scale * gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Between two sides of one zone; the segment crosses the zone.
    Intra,
    /// Between distinct zones or involving a terminal.
    Inter,
}

/// Undirected edge with `u < v`; `params` is oriented from `u` to `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
    pub params: BoundaryParams,
}

/// One orientation of a [`GraphEdge`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub params: BoundaryParams,
}

/// Side nodes and side-to-side edges of a map. Terminal-independent, so one
/// instance serves every source/goal pair on the same map.
#[derive(Debug, Clone)]
pub struct SideGraph {
    pub zones: Vec<ConvexPolygon>,
    pub sides: Vec<Side>,
    /// Edges between indices of `sides`.
    pub edges: Vec<GraphEdge>,
    pub scale: f64,
}

impl SideGraph {
    pub fn build(map: &QuietZoneMap) -> SideGraph {
        let mut sides = Vec::new();
        for (zi, z) in map.zones.iter().enumerate() {
            for (k, (m, n)) in z.sides().enumerate() {
                if m.dist(n) >= MIN_SIDE_LENGTH {
                    sides.push(Side::new(zi, k, m, n));
                }
            }
        }
        let mut pairs = Vec::new();
        for i in 0..sides.len() {
            for j in i + 1..sides.len() {
                pairs.push((i, j));
            }
        }
        let zones = &map.zones;
        let edges: Vec<GraphEdge> = pairs
            .par_iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (&sides[i], &sides[j]);
                if a.zone == b.zone {
                    return Some(GraphEdge {
                        u: i,
                        v: j,
                        kind: EdgeKind::Intra,
                        params: BoundaryParams::FULL,
                    });
                }
                let class = classify_visibility(a, b, zones);
                boundary_params(a, b, zones, class).map(|params| GraphEdge {
                    u: i,
                    v: j,
                    kind: EdgeKind::Inter,
                    params,
                })
            })
            .collect();
        SideGraph {
            zones: map.zones.clone(),
            sides,
            edges,
            scale: map.scale,
        }
    }
}

/// Nodes are `[s, g, sides...]`; see [`SOURCE`] and [`GOAL`].
#[derive(Debug, Clone)]
pub struct PlanningGraph {
    pub nodes: Vec<Side>,
    pub edges: Vec<GraphEdge>,
    pub arcs: Vec<Arc>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    pub zones: Vec<ConvexPolygon>,
    /// Scale factor γ of the coordinates the graph lives in.
    pub scale: f64,
}

impl PlanningGraph {
    /// Adds the two terminals to a side graph.
    pub fn attach(sg: &SideGraph, s: Point2D, g: Point2D) -> Result<PlanningGraph> {
        let tol = GEOM_TOL;
        for (name, p) in [("source", s), ("goal", g)] {
            if !p.is_finite() {
                return Err(Error::Validation(format!("{name} has non-finite coordinates")));
            }
            if let Some(i) = sg.zones.iter().position(|z| z.contains_strict(p, tol)) {
                return Err(Error::Validation(format!("{name} lies inside zone {i}")));
            }
        }
        if s.dist(g) <= tol {
            return Err(Error::Validation("source and goal coincide".into()));
        }
        let mut nodes = vec![Side::terminal(s), Side::terminal(g)];
        nodes.extend(sg.sides.iter().copied());
        let off = 2;
        let mut edges: Vec<GraphEdge> = Vec::with_capacity(sg.edges.len() + 2 * sg.sides.len() + 1);
        if !segment_blocked(s, g, &sg.zones) {
            edges.push(GraphEdge {
                u: SOURCE,
                v: GOAL,
                kind: EdgeKind::Inter,
                params: BoundaryParams::FULL,
            });
        }
        for t in [SOURCE, GOAL] {
            let term = nodes[t];
            let found: Vec<GraphEdge> = (0..sg.sides.len())
                .into_par_iter()
                .filter_map(|k| {
                    let side = &sg.sides[k];
                    let class = classify_visibility(&term, side, &sg.zones);
                    boundary_params(&term, side, &sg.zones, class).map(|params| GraphEdge {
                        u: t,
                        v: k + off,
                        kind: EdgeKind::Inter,
                        params,
                    })
                })
                .collect();
            edges.extend(found);
        }
        edges.extend(sg.edges.iter().map(|e| GraphEdge {
            u: e.u + off,
            v: e.v + off,
            ..*e
        }));
        Ok(Self::from_parts(nodes, edges, sg.zones.clone(), sg.scale))
    }

    fn from_parts(nodes: Vec<Side>, edges: Vec<GraphEdge>, zones: Vec<ConvexPolygon>, scale: f64) -> PlanningGraph {
        let mut arcs = Vec::with_capacity(2 * edges.len());
        for (k, e) in edges.iter().enumerate() {
            let fwd = Arc {
                edge: k,
                from: e.u,
                to: e.v,
                kind: e.kind,
                params: e.params,
            };
            let bwd = Arc {
                edge: k,
                from: e.v,
                to: e.u,
                kind: e.kind,
                params: e.params.swapped(),
            };
            for a in [fwd, bwd] {
                if a.to != SOURCE && a.from != GOAL {
                    arcs.push(a);
                }
            }
        }
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        for (k, a) in arcs.iter().enumerate() {
            out_arcs[a.from].push(k);
            in_arcs[a.to].push(k);
        }
        PlanningGraph {
            nodes,
            edges,
            arcs,
            out_arcs,
            in_arcs,
            zones,
            scale,
        }
    }

    pub fn num_sides(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn is_side(&self, node: usize) -> bool {
        node >= 2
    }

    /// The arc `from -> to`, if present.
    pub fn find_arc(&self, from: usize, to: usize) -> Option<usize> {
        self.out_arcs.get(from)?.iter().copied().find(|&k| self.arcs[k].to == to)
    }
}

/// Builds the planning graph of `map` with the given terminals.
pub fn build_graph(map: &QuietZoneMap, s: Point2D, g: Point2D) -> Result<PlanningGraph> {
    PlanningGraph::attach(&SideGraph::build(map), s, g)
}

/// Scales `map` to `target_extent` and builds the planning graph for the
/// unscaled terminals `s` and `g`. Returns the scaled map with the graph.
pub fn build_scaled(map: &QuietZoneMap, s: Point2D, g: Point2D, target_extent: f64) -> Result<(QuietZoneMap, PlanningGraph)> {
    let scaled = scale_map(map, target_extent)?;
    let f = scaled.scale / map.scale;
    let graph = build_graph(&scaled, s * f, g * f)?;
    Ok((scaled, graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> EnergyParams {
        EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0)
    }

    #[test]
    fn empty_map_has_direct_edge() {
        let map = QuietZoneMap::new(vec![], Point2D::new(0.0, 0.0), None, vec![], params()).unwrap();
        let g = build_graph(&map, Point2D::new(0.0, 0.0), Point2D::new(5.0, 0.0)).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.arcs.len(), 1);
        assert_eq!((g.arcs[0].from, g.arcs[0].to), (SOURCE, GOAL));
    }

    #[test]
    fn scaling_example() {
        let sq = ConvexPolygon::new(vec![
            Point2D::new(0.0, 0.0),
            Point2D::new(12000.0, 0.0),
            Point2D::new(12000.0, 8000.0),
            Point2D::new(0.0, 8000.0),
        ])
        .unwrap();
        let mut map = QuietZoneMap::new(vec![], Point2D::new(1200.0, 800.0), None, vec![], params()).unwrap();
        map.zones.push(sq);
        let s = scale_map(&map, 100.0).unwrap();
        assert!((s.scale - 1.0 / 120.0).abs() < 1e-15);
        assert!((s.source.x - 10.0).abs() < 1e-12);
        assert!((s.source.y - 800.0 / 120.0).abs() < 1e-12);
        assert!((s.params.alpha - 9.6).abs() < 1e-12);
    }
}
