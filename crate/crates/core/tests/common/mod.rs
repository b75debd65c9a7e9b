#![allow(dead_code)]

use quietpath::cli::{generate_map, GenerateOptions, ParamsFile};
use quietpath::graph::{build_scaled, PlanningGraph, GOAL, SOURCE};
use quietpath::solver::{solve_path, BnBResult, BnbConfig};
use quietpath::{ConvexPolygon, EnergyParams, Point2D, QuietZoneMap};

pub fn p(x: f64, y: f64) -> Point2D {
    Point2D::new(x, y)
}

pub fn paper_params() -> EnergyParams {
    EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0)
}

pub fn tour_params() -> EnergyParams {
    EnergyParams::new(0.1, 0.05, 20.0, 100.0, 100.0)
}

pub fn rect(x0: f64, y0: f64, w: f64, h: f64) -> ConvexPolygon {
    ConvexPolygon::new(vec![p(x0, y0), p(x0 + w, y0), p(x0 + w, y0 + h), p(x0, y0 + h)]).unwrap()
}

pub fn open_map(d: f64, params: EnergyParams) -> (QuietZoneMap, Point2D, Point2D) {
    let s = p(0.0, 0.0);
    let g = p(d, 0.0);
    (QuietZoneMap::new(vec![], s, Some(g), vec![], params).unwrap(), s, g)
}

/// A generated map with its source and goal.
pub fn random_instance(seed: u64, zones: usize, width: f64, height: f64) -> (QuietZoneMap, Point2D, Point2D) {
    let f = generate_map(&GenerateOptions {
        zones,
        width,
        height,
        seed,
        min_distance: 0.5 * width.max(height),
        min_radius: 0.05 * width.min(height),
        max_radius: 0.15 * width.min(height),
        ..GenerateOptions::default()
    })
    .unwrap();
    let map = f.to_map().unwrap();
    let g = map.goal.unwrap();
    (map.clone(), map.source, g)
}

pub fn random_tour_instance(seed: u64, zones: usize, targets: usize, width: f64, height: f64) -> QuietZoneMap {
    let p = tour_params();
    let f = generate_map(&GenerateOptions {
        zones,
        width,
        height,
        seed,
        targets,
        min_distance: 0.0,
        min_radius: 0.05 * width.min(height),
        max_radius: 0.15 * width.min(height),
        params: ParamsFile {
            alpha: p.alpha,
            beta: p.beta,
            q_min: p.q_min,
            q_max: p.q_max,
            q_init: p.q_init,
        },
    })
    .unwrap();
    f.to_map().unwrap()
}

pub fn exact(map: &QuietZoneMap, s: Point2D, g: Point2D, gap: f64) -> (QuietZoneMap, PlanningGraph, BnBResult) {
    let (scaled, graph) = build_scaled(map, s, g, 100.0).unwrap();
    let cfg = BnbConfig {
        gap,
        ..BnbConfig::default()
    };
    let r = solve_path(&graph, &scaled.params, &cfg).unwrap();
    (scaled, graph, r)
}

/// Every simple source-goal node sequence with at most `max_edges` arcs.
pub fn simple_paths(graph: &PlanningGraph, max_edges: usize) -> Vec<Vec<usize>> {
    fn walk(g: &PlanningGraph, max: usize, seq: &mut Vec<usize>, seen: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let cur = *seq.last().unwrap();
        if cur == GOAL {
            out.push(seq.clone());
            return;
        }
        if seq.len() > max {
            return;
        }
        for &k in &g.out_arcs[cur] {
            let to = g.arcs[k].to;
            if !seen[to] {
                seen[to] = true;
                seq.push(to);
                walk(g, max, seq, seen, out);
                seq.pop();
                seen[to] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; graph.nodes.len()];
    seen[SOURCE] = true;
    walk(graph, max_edges, &mut vec![SOURCE], &mut seen, &mut out);
    out
}

use quietpath::tsp::{ClusterInstance, CostMatrix};

fn lex_better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Calls `f` with every ordering of `items`.
pub fn for_each_permutation(items: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Optimal closed tours of `m` by enumeration, all starting at node 0.
pub fn brute_force_atsp(m: &CostMatrix) -> ((usize, f64), Vec<Vec<usize>>) {
    let mut rest: Vec<usize> = (1..m.n).collect();
    let mut best = (usize::MAX, f64::INFINITY);
    let mut all: Vec<(Vec<usize>, (usize, f64))> = Vec::new();
    for_each_permutation(&mut rest, 0, &mut |perm| {
        let mut order = vec![0];
        order.extend_from_slice(perm);
        let c = m.tour_cost(&order);
        if lex_better(c, best) {
            best = c;
        }
        all.push((order, c));
    });
    let tol = 1e-9 * (1.0 + best.1.abs());
    let opt = all
        .into_iter()
        .filter(|(_, c)| c.0 == best.0 && c.1 <= best.1 + tol)
        .map(|(o, _)| o)
        .collect();
    (best, opt)
}

/// Held-Karp dynamic program; one optimal tour from node 0 (finite hops only).
pub fn held_karp(m: &CostMatrix) -> Option<(f64, Vec<usize>)> {
    let n = m.n;
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * n];
    let mut parent = vec![usize::MAX; full * n];
    dp[1 * n] = 0.0;
    for set in 1..full {
        if set & 1 == 0 {
            continue;
        }
        for last in 0..n {
            let cur = dp[set * n + last];
            if !cur.is_finite() || set & (1 << last) == 0 {
                continue;
            }
            for next in 1..n {
                if set & (1 << next) != 0 {
                    continue;
                }
                if let Some(c) = m.get(last, next) {
                    let ns = set | (1 << next);
                    if cur + c < dp[ns * n + next] {
                        dp[ns * n + next] = cur + c;
                        parent[ns * n + next] = last;
                    }
                }
            }
        }
    }
    let (mut best, mut last) = (f64::INFINITY, usize::MAX);
    for l in 1..n {
        if let Some(c) = m.get(l, 0) {
            let v = dp[(full - 1) * n + l] + c;
            if v < best {
                best = v;
                last = l;
            }
        }
    }
    if !best.is_finite() {
        return None;
    }
    let mut order = Vec::with_capacity(n);
    let mut set = full - 1;
    while last != 0 {
        order.push(last);
        let p = parent[set * n + last];
        set &= !(1 << last);
        last = p;
    }
    order.push(0);
    order.reverse();
    Some((best, order))
}

/// Best one-node-per-cluster tour by enumeration, starting in cluster 0.
pub fn brute_force_gtsp(inst: &ClusterInstance) -> Option<(f64, Vec<usize>)> {
    let k = inst.clusters.len();
    let mut rest: Vec<usize> = (1..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_permutation(&mut rest, 0, &mut |perm| {
        let mut seq = vec![0];
        seq.extend_from_slice(perm);
        let mut pick = vec![0usize; k];
        loop {
            let nodes: Vec<usize> = seq.iter().map(|&c| inst.clusters[c][pick[c]]).collect();
            let (inf, c) = inst.tour_cost(&nodes);
            if inf == 0 && best.as_ref().map_or(true, |b| c < b.0) {
                best = Some((c, nodes));
            }
            let mut i = 0;
            while i < k {
                pick[i] += 1;
                if pick[i] < inst.clusters[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    });
    best
}

/// Random clustered instance; each off-cluster cost is absent with
/// probability `p_none`.
pub fn random_cluster_instance(rng: &mut impl rand::Rng, clusters: usize, max_d: usize, p_none: f64) -> ClusterInstance {
    let mut groups = Vec::new();
    let mut n = 0;
    for _ in 0..clusters {
        let size = rng.gen_range(1..=max_d);
        groups.push((n..n + size).collect::<Vec<_>>());
        n += size;
    }
    let mut of = vec![0; n];
    for (c, g) in groups.iter().enumerate() {
        for &v in g {
            of[v] = c;
        }
    }
    let mut cost = CostMatrix::new(n);
    for u in 0..n {
        for v in 0..n {
            if of[u] != of[v] && !rng.gen_bool(p_none) {
                cost.set(u, v, Some(rng.gen_range(0..100) as f64));
            }
        }
    }
    ClusterInstance {
        clusters: groups,
        cost,
        levels: vec![0.0; n],
        d: max_d,
    }
}

/// Whether a closed tour enters and leaves every cluster exactly once.
pub fn clusters_contiguous(order: &[usize], cluster_of: &[usize]) -> bool {
    let k = order.len();
    let changes = (0..k).filter(|&i| cluster_of[order[i]] != cluster_of[order[(i + 1) % k]]).count();
    let distinct = {
        let mut c: Vec<usize> = order.iter().map(|&v| cluster_of[v]).collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    if distinct == 1 {
        changes == 0
    } else {
        changes == distinct
    }
}
