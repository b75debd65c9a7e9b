//! Discretized baseline: sampled boundary points crossed with SOC levels,
//! searched with Dijkstra. At fine resolution it doubles as an oracle for
//! the exact solver.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{segment_blocked, ConvexPolygon, Point2D};
use crate::graph::{EnergyParams, QuietZoneMap};
use crate::model::{min_fuel_schedule, pick_schedule, Leg};
use crate::validate::{Segment, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteConfig {
    /// Number of SOC levels, spread uniformly over `[q_min, q_max]`.
    pub soc_levels: usize,
    /// Boundary sample spacing in unscaled map units.
    pub spacing: f64,
}

impl Default for DiscreteConfig {
    fn default() -> Self {
        DiscreteConfig {
            soc_levels: 10,
            spacing: 100.0,
        }
    }
}

impl DiscreteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.soc_levels < 2 {
            return Err(Error::Validation("need at least two SOC levels".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Validation("spacing must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretePoint {
    pub position: Point2D,
    pub zone: Option<usize>,
    /// Local side indices the point lies on (equal unless it is a vertex).
    pub sides: [usize; 2],
}

/// A node of the search graph: a sample point at a given SOC level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteNode {
    pub point: usize,
    pub soc_level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteArc {
    pub to: usize,
    pub length: f64,
    /// Crosses a zone: no fuel allowed.
    pub electric_only: bool,
}

/// Point adjacency plus SOC levels; SOC transitions are expanded lazily
/// during the search. Point 0 is the source and point 1 the goal.
#[derive(Debug, Clone)]
pub struct DiscreteGraph {
    pub points: Vec<DiscretePoint>,
    pub adjacency: Vec<Vec<DiscreteArc>>,
    pub levels: Vec<f64>,
    pub params: EnergyParams,
    pub scale: f64,
}

impl DiscreteGraph {
    pub fn num_nodes(&self) -> usize {
        self.points.len() * self.levels.len()
    }

    pub fn num_point_arcs(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    fn node_id(&self, n: DiscreteNode) -> usize {
        n.point * self.levels.len() + n.soc_level
    }

    /// Highest level at or below `q`.
    fn level_below(&self, q: f64) -> Option<usize> {
        let eps = 1e-9 * self.params.q_max.max(1.0);
        self.levels.iter().rposition(|&l| l <= q + eps)
    }

    /// Successors of `(point, level)` with their fuel distance.
    fn transitions(&self, arc: &DiscreteArc, level: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let p = &self.params;
        let q = self.levels[level];
        let l = arc.length;
        let eps = 1e-9 * p.q_max.max(1.0);
        if arc.electric_only {
            let q1 = q - p.alpha * l;
            if q1 >= p.q_min - eps {
                if let Some(m) = self.level_below(q1) {
                    out.push((m, 0.0));
                }
            }
            return;
        }
        let top = q + p.beta * l;
        for (m, &qm) in self.levels.iter().enumerate() {
            if qm > top + eps {
                break;
            }
            let z = ((qm - q + p.alpha * l) / (p.alpha + p.beta)).clamp(0.0, l);
            out.push((m, z));
        }
    }
}

/// Samples sit at whole multiples of `spacing` from each side's first
/// vertex, so halving the spacing keeps every old sample.
fn sample_points(zones: &[ConvexPolygon], spacing: f64) -> Vec<DiscretePoint> {
    let mut pts = Vec::new();
    for (zi, z) in zones.iter().enumerate() {
        let k = z.len();
        for (si, (m, n)) in z.sides().enumerate() {
            let len = m.dist(n);
            let mut i = 0usize;
            while i == 0 || (i as f64) * spacing < len - 1e-9 * len.max(1.0) {
                let sides = if i == 0 { [(si + k - 1) % k, si] } else { [si, si] };
                pts.push(DiscretePoint {
                    position: m.lerp(n, (i as f64 * spacing / len).min(1.0)),
                    zone: Some(zi),
                    sides,
                });
                i += 1;
            }
        }
    }
    pts
}

fn share_side(a: &DiscretePoint, b: &DiscretePoint) -> bool {
    a.sides.iter().any(|s| b.sides.contains(s))
}

/// Samples every side every `cfg.spacing` (vertices always included) and
/// connects point pairs: pairs on one side travel along the boundary with
/// either mode, other pairs of one zone cross it on electric power, and
/// pairs from different zones (or terminals) need an unblocked segment.
pub fn build_discrete_graph(map: &QuietZoneMap, s: Point2D, g: Point2D, cfg: &DiscreteConfig) -> Result<DiscreteGraph> {
    cfg.validate()?;
    map.validate()?;
    map.check_point(s)?;
    map.check_point(g)?;
    let spacing = cfg.spacing * map.scale;
    let mut points = vec![
        DiscretePoint {
            position: s,
            zone: None,
            sides: [usize::MAX; 2],
        },
        DiscretePoint {
            position: g,
            zone: None,
            sides: [usize::MAX; 2],
        },
    ];
    points.extend(sample_points(&map.zones, spacing));
    let zones = &map.zones;
    let n = points.len();
    let adjacency: Vec<Vec<DiscreteArc>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &points[i];
            let mut out = Vec::new();
            if i == 1 {
                return out;
            }
            for (j, b) in points.iter().enumerate() {
                if j == i || j == 0 {
                    continue;
                }
                let length = a.position.dist(b.position);
                let electric_only = match (a.zone, b.zone) {
                    (Some(za), Some(zb)) if za == zb => !share_side(a, b),
                    _ => {
                        if segment_blocked(a.position, b.position, zones) {
                            continue;
                        }
                        false
                    }
                };
                out.push(DiscreteArc {
                    to: j,
                    length,
                    electric_only,
                });
            }
            out
        })
        .collect();
    let p = map.params;
    let d = cfg.soc_levels;
    let levels = (0..d)
        .map(|k| p.q_min + (p.q_max - p.q_min) * k as f64 / (d - 1) as f64)
        .collect();
    Ok(DiscreteGraph {
        points,
        adjacency,
        levels,
        params: p,
        scale: map.scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath {
    /// Discrete fuel cost Σz, unscaled.
    pub cost: f64,
    pub nodes: Vec<DiscreteNode>,
    /// Point positions, unscaled.
    pub points: Vec<Point2D>,
    /// Fuel distance of each hop as charged by the search, unscaled.
    pub hop_fuel: Vec<f64>,
    /// The same polyline with exact (un-quantized) SOC transitions.
    pub trajectory: Trajectory,
}

impl DiscretePath {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize, usize);

impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1)).then(self.2.cmp(&o.2))
    }
}

/// Least-fuel path from the source at the highest level not above `q_init`
/// to the goal at any level not below `q_goal_min`. Ties go to fewer hops,
/// then to the smaller node id.
pub fn discrete_shortest_path(graph: &DiscreteGraph) -> Result<DiscretePath> {
    let p = &graph.params;
    let nl = graph.levels.len();
    let start_level = graph
        .level_below(p.q_init)
        .ok_or_else(|| Error::Infeasible("q_init below the lowest SOC level".into()))?;
    let eps = 1e-9 * p.q_max.max(1.0);
    let total = graph.num_nodes();
    let mut dist = vec![(f64::INFINITY, usize::MAX); total];
    let mut pred = vec![usize::MAX; total];
    let mut pred_z = vec![0.0; total];
    let mut done = vec![false; total];
    let start = graph.node_id(DiscreteNode {
        point: 0,
        soc_level: start_level,
    });
    dist[start] = (0.0, 0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Key(0.0, 0, start)));
    let mut buf = Vec::new();
    let mut goal = None;
    while let Some(Reverse(Key(cost, hops, id))) = heap.pop() {
        if done[id] {
            continue;
        }
        done[id] = true;
        let (pt, lv) = (id / nl, id % nl);
        if pt == 1 {
            if graph.levels[lv] >= p.q_goal_min - eps {
                goal = Some(id);
                break;
            }
            continue;
        }
        for arc in &graph.adjacency[pt] {
            graph.transitions(arc, lv, &mut buf);
            for &(m, z) in &buf {
                let nid = arc.to * nl + m;
                if done[nid] {
                    continue;
                }
                let cand = (cost + z, hops + 1);
                let better = match cand.0.total_cmp(&dist[nid].0) {
                    Ordering::Less => true,
                    Ordering::Equal => cand.1 < dist[nid].1 || (cand.1 == dist[nid].1 && id < pred[nid]),
                    Ordering::Greater => false,
                };
                if better {
                    dist[nid] = cand;
                    pred[nid] = id;
                    pred_z[nid] = z;
                    heap.push(Reverse(Key(cand.0, cand.1, nid)));
                }
            }
        }
    }
    let goal = goal.ok_or_else(|| Error::Infeasible("goal unreachable in the discrete graph".into()))?;
    let mut ids = vec![goal];
    let mut zs = Vec::new();
    let mut cur = goal;
    while cur != start {
        zs.push(pred_z[cur]);
        cur = pred[cur];
        ids.push(cur);
    }
    ids.reverse();
    zs.reverse();
    let gamma = graph.scale;
    let nodes: Vec<DiscreteNode> = ids
        .iter()
        .map(|&id| DiscreteNode {
            point: id / nl,
            soc_level: id % nl,
        })
        .collect();
    let scaled_pts: Vec<Point2D> = nodes.iter().map(|n| graph.points[n.point].position).collect();
    let mut legs = Vec::new();
    let mut zone_of = Vec::new();
    for w in nodes.windows(2) {
        let arc = graph.adjacency[w[0].point]
            .iter()
            .find(|a| a.to == w[1].point)
            .expect("path follows adjacency");
        legs.push(Leg {
            length: arc.length,
            electric_only: arc.electric_only,
        });
        zone_of.push(if arc.electric_only { graph.points[w[0].point].zone } else { None });
    }
    let (q, z) = min_fuel_schedule(&legs, p)?;
    let segments = (0..legs.len())
        .map(|k| Segment {
            start: scaled_pts[k] * (1.0 / gamma),
            end: scaled_pts[k + 1] * (1.0 / gamma),
            fuel: z[k] / gamma,
            schedule: pick_schedule(legs[k].length, z[k], q[k], p),
            zone: zone_of[k],
        })
        .collect();
    Ok(DiscretePath {
        cost: dist[goal].0 / gamma,
        nodes,
        points: scaled_pts.iter().map(|&x| x * (1.0 / gamma)).collect(),
        hop_fuel: zs.iter().map(|z| z / gamma).collect(),
        trajectory: Trajectory {
            segments,
            q_init: p.q_init,
            scale: gamma,
        },
    })
}

/// Builds the graph and searches it in one call.
pub fn solve_discrete(map: &QuietZoneMap, s: Point2D, g: Point2D, cfg: &DiscreteConfig) -> Result<DiscretePath> {
    discrete_shortest_path(&build_discrete_graph(map, s, g, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_map_costs_nothing() {
        let p = EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0);
        let map = QuietZoneMap::new(vec![], Point2D::new(0.0, 0.0), None, vec![], p).unwrap();
        let r = solve_discrete(&map, Point2D::new(0.0, 0.0), Point2D::new(900.0, 0.0), &DiscreteConfig::default()).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.hops(), 1);
    }
}
