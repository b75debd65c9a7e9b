mod common;

use common::{
    brute_force_atsp, brute_force_gtsp, clusters_contiguous, held_karp, p, random_cluster_instance, random_tour_instance,
    rect, tour_params,
};
use proptest::prelude::*;
use quietpath::graph::build_scaled;
use quietpath::solver::{solve_path, BnbConfig};
use quietpath::tsp::{
    gtsp_cost_matrix, minsoc_cost_matrix, noon_bean, plan_tour_gtsp, plan_tour_minsoc, solve_atsp, AtspOptions,
    ClusterInstance, CostMatrix, TourOptions,
};
use quietpath::validate::{check_zone_compliance, simulate_soc};
use quietpath::{ConvexPolygon, Error, Point2D, QuietZoneMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn open_tour_map(targets: Vec<Point2D>) -> QuietZoneMap {
    QuietZoneMap::new(vec![], p(0.0, 0.0), None, targets, tour_params()).unwrap()
}

fn small_tour_map() -> QuietZoneMap {
    let z = ConvexPolygon::new(vec![p(900.0, 500.0), p(1500.0, 600.0), p(1300.0, 1200.0), p(800.0, 1000.0)]).unwrap();
    let targets = vec![p(2200.0, 900.0), p(1200.0, 1900.0), p(300.0, 1400.0)];
    QuietZoneMap::new(vec![z, rect(1700.0, 1300.0, 300.0, 300.0)], p(100.0, 100.0), None, targets, tour_params()).unwrap()
}

#[test]
fn minsoc_entry_from_q_min_matches_hand_computation() {
    let map = open_tour_map(vec![p(300.0, 0.0), p(300.0, 400.0)]);
    let m = minsoc_cost_matrix(&map, &map.targets, &TourOptions::default()).unwrap();
    // from q_min every unit of electric travel must be bought back with fuel
    assert!((m.get(1, 2).unwrap() - 0.1 * 400.0 / 0.15).abs() < 1e-6);
    assert!((m.get(2, 1).unwrap() - 0.1 * 400.0 / 0.15).abs() < 1e-6);
    // leaving the source full, 300 units are free
    assert!(m.get(0, 1).unwrap().abs() < 1e-6);
    let single = open_tour_map(vec![p(300.0, 0.0)]);
    let m = minsoc_cost_matrix(&single, &single.targets, &TourOptions::default()).unwrap();
    assert!((m.get(1, 0).unwrap() - 200.0).abs() < 1e-6);
    assert_eq!(m.get(0, 0), None);
}

#[test]
fn minsoc_entries_are_nonnegative_and_dominate_full_departures() {
    let map = small_tour_map();
    let m = minsoc_cost_matrix(&map, &map.targets, &TourOptions::default()).unwrap();
    let mut full = map.clone();
    full.params.q_min = 20.0;
    let inst = gtsp_cost_matrix(&map, &map.targets, 2, &TourOptions::default()).unwrap();
    // node 1 + t·2 + 1 departs target t at q_max
    for i in 1..=3 {
        for j in 0..=3 {
            if i == j {
                continue;
            }
            let c = m.get(i, j).unwrap();
            assert!(c >= 0.0);
            let top = 1 + (i - 1) * 2 + 1;
            let to = if j == 0 { 0 } else { 1 + (j - 1) * 2 };
            assert!(c >= inst.cost.get(top, to).unwrap() - 1e-6);
        }
    }
}

#[test]
fn mirrored_instance_has_the_same_matrix() {
    let map = small_tour_map();
    let flip = |q: Point2D| p(-q.x, q.y);
    let mirrored = QuietZoneMap::new(
        map.zones.iter().map(|z| ConvexPolygon::new(z.vertices().iter().map(|&v| flip(v)).collect()).unwrap()).collect(),
        flip(map.source),
        None,
        map.targets.iter().map(|&t| flip(t)).collect(),
        map.params,
    )
    .unwrap();
    let a = minsoc_cost_matrix(&map, &map.targets, &TourOptions::default()).unwrap();
    let b = minsoc_cost_matrix(&mirrored, &mirrored.targets, &TourOptions::default()).unwrap();
    for (x, y) in a.data.iter().zip(&b.data) {
        match (x, y) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-5 * x.max(1.0), "{x} vs {y}"),
            (x, y) => assert_eq!(x, y),
        }
    }
}

#[test]
fn one_level_clusters_reduce_to_minsoc() {
    let map = small_tour_map();
    let m = minsoc_cost_matrix(&map, &map.targets, &TourOptions::default()).unwrap();
    let inst = gtsp_cost_matrix(&map, &map.targets, 1, &TourOptions::default()).unwrap();
    assert_eq!(inst.cost.n, 4);
    for (x, y) in m.data.iter().zip(&inst.cost.data) {
        match (x, y) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-9 * x.max(1.0)),
            (x, y) => assert_eq!(x, y),
        }
    }
}

#[test]
fn cluster_costs_are_monotone_in_levels_and_count_every_pair() {
    let map = small_tour_map();
    let d = 3;
    let inst = gtsp_cost_matrix(&map, &map.targets, d, &TourOptions::default()).unwrap();
    let nt = map.targets.len();
    let node = |t: usize, k: usize| 1 + t * d + k;
    let mut target_pairs = 0;
    for ti in 0..nt {
        for tj in 0..nt {
            if ti == tj {
                continue;
            }
            for ki in 0..d {
                for kj in 0..d {
                    target_pairs += 1;
                    let c = inst.cost.get(node(ti, ki), node(tj, kj));
                    if ki + 1 < d {
                        let higher = inst.cost.get(node(ti, ki + 1), node(tj, kj));
                        if let Some(c) = c {
                            assert!(higher.unwrap() <= c + 1e-6, "departure monotonicity");
                        }
                    }
                    if kj + 1 < d {
                        let stricter = inst.cost.get(node(ti, ki), node(tj, kj + 1));
                        if let Some(s) = stricter {
                            assert!(s >= c.unwrap() - 1e-6, "arrival monotonicity");
                        }
                    }
                }
            }
            for k in 0..d {
                for kk in 0..d {
                    if k != kk {
                        assert_eq!(inst.cost.get(node(ti, k), node(ti, kk)), None);
                    }
                }
            }
        }
    }
    assert_eq!(target_pairs, nt * (nt - 1) * d * d);
}

#[test]
fn cluster_entries_match_exact_solves() {
    let map = small_tour_map();
    let d = 2;
    let inst = gtsp_cost_matrix(&map, &map.targets, d, &TourOptions::default()).unwrap();
    let stops: Vec<Point2D> = std::iter::once(map.source).chain(map.targets.iter().copied()).collect();
    let stop = |v: usize| if v == 0 { 0 } else { 1 + (v - 1) / d };
    let pm = map.params;
    for u in 0..inst.cost.n {
        for v in 0..inst.cost.n {
            if stop(u) == stop(v) {
                continue;
            }
            let (scaled, graph) = build_scaled(&map, stops[stop(u)], stops[stop(v)], 100.0).unwrap();
            let arrive = if v == 0 { pm.q_min } else { inst.levels[v] };
            let prm = scaled.params.with_departure(inst.levels[u]).with_arrival(arrive, pm.q_max);
            let r = solve_path(&graph, &prm, &BnbConfig::default()).unwrap();
            match (inst.cost.get(u, v), r.objective()) {
                (Some(c), Some(e)) => {
                    assert!(c <= e + 1e-6, "relaxed {c} above exact {e}");
                    assert!(e - c <= 0.02 * e + 1e-6, "{u}->{v}: relaxed {c} exact {e}");
                }
                (None, None) => {}
                // cone lengths are only bounded below, so the relaxation may
                // stretch a leg to recharge further than any real path can
                (Some(_), None) => assert!(inst.levels[v] > inst.levels[u]),
                (c, e) => panic!("{u}->{v}: relaxed {c:?} exact {e:?}"),
            }
        }
    }
}

#[test]
fn singleton_clusters_shift_by_big_m() {
    let cost = CostMatrix::from_rows(&[
        vec![None, Some(3.0), Some(5.0)],
        vec![Some(4.0), None, Some(1.0)],
        vec![Some(2.0), None, None],
    ]);
    let inst = ClusterInstance {
        clusters: vec![vec![0], vec![1], vec![2]],
        cost: cost.clone(),
        levels: vec![0.0; 3],
        d: 1,
    };
    let nb = noon_bean(&inst).unwrap();
    assert_eq!(nb.big_m, 1.0 + 3.0 + 5.0 + 4.0 + 1.0 + 2.0);
    for u in 0..3 {
        for v in 0..3 {
            assert_eq!(nb.matrix.get(u, v), cost.get(u, v).map(|c| c + nb.big_m));
        }
    }
    let (_, a) = brute_force_atsp(&nb.matrix);
    let (_, b) = brute_force_atsp(&cost);
    assert_eq!(a, b);
    let empty = ClusterInstance {
        clusters: vec![vec![0], vec![]],
        ..inst
    };
    assert!(matches!(noon_bean(&empty), Err(Error::Validation(_))));
}

#[test]
fn three_pairs_hand_built_instance() {
    // clusters {0,1}, {2,3}, {4,5}; the cheap tour is 1 -> 2 -> 5 -> 1
    let mut c = CostMatrix::new(6);
    for u in 0..6 {
        for v in 0..6 {
            if u / 2 != v / 2 {
                c.set(u, v, Some(10.0 + ((u * 7 + v * 3) % 5) as f64));
            }
        }
    }
    c.set(1, 2, Some(1.0));
    c.set(2, 5, Some(1.0));
    c.set(5, 1, Some(1.0));
    let inst = ClusterInstance {
        clusters: vec![vec![0, 1], vec![2, 3], vec![4, 5]],
        cost: c,
        levels: vec![0.0; 6],
        d: 2,
    };
    let (gcost, gnodes) = brute_force_gtsp(&inst).unwrap();
    assert_eq!(gcost, 3.0);
    assert_eq!(gnodes, vec![1, 2, 5]);
    let nb = noon_bean(&inst).unwrap();
    let ((inf, acost), tours) = brute_force_atsp(&nb.matrix);
    assert_eq!(inf, 0);
    assert!((acost - (gcost + 3.0 * nb.big_m)).abs() < 1e-9);
    for t in &tours {
        assert!(clusters_contiguous(t, &nb.cluster_of));
        let nodes = nb.detransform(t);
        assert_eq!(inst.tour_cost(&nodes), (0, gcost));
    }
}

#[test]
fn noon_bean_preserves_optima_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 40 {
        let k = rng.gen_range(2..=4);
        let inst = random_cluster_instance(&mut rng, k, 3, 0.1);
        let Some((gcost, _)) = brute_force_gtsp(&inst) else { continue };
        let nb = noon_bean(&inst).unwrap();
        let k = inst.clusters.len() as f64;
        if nb.matrix.n <= 8 {
            let ((inf, acost), tours) = brute_force_atsp(&nb.matrix);
            assert_eq!(inf, 0);
            assert!((acost - (gcost + k * nb.big_m)).abs() <= 1e-9 * acost);
            for t in &tours {
                assert!(clusters_contiguous(t, &nb.cluster_of));
                assert_eq!(inst.tour_cost(&nb.detransform(t)), (0, gcost));
            }
        } else {
            let (acost, t) = held_karp(&nb.matrix).unwrap();
            assert!((acost - (gcost + k * nb.big_m)).abs() <= 1e-9 * acost);
            assert!(clusters_contiguous(&t, &nb.cluster_of));
            assert_eq!(inst.tour_cost(&nb.detransform(&t)), (0, gcost));
        }
        checked += 1;
    }
}

#[test]
fn square_tour_is_the_perimeter() {
    let pts = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
    let rows: Vec<Vec<Option<f64>>> = pts.iter().map(|a| pts.iter().map(|b| Some(a.dist(*b))).collect()).collect();
    let t = solve_atsp(&CostMatrix::from_rows(&rows), &AtspOptions::default()).unwrap();
    assert!((t.cost - 4.0).abs() < 1e-12);
    assert_eq!(t.order[0], 0);
}

#[test]
fn asymmetric_triangle_takes_the_cheap_direction() {
    let m = CostMatrix::from_rows(&[
        vec![None, Some(1.0), Some(10.0)],
        vec![Some(10.0), None, Some(1.0)],
        vec![Some(1.0), Some(10.0), None],
    ]);
    let t = solve_atsp(&m, &AtspOptions::default()).unwrap();
    assert_eq!(t.order, vec![0, 1, 2]);
    assert_eq!(t.cost, 3.0);
}

#[test]
fn unreachable_row_is_infeasible() {
    let m = CostMatrix::from_rows(&[
        vec![None, Some(1.0), Some(1.0)],
        vec![None, None, None],
        vec![Some(1.0), Some(1.0), None],
    ]);
    assert!(matches!(solve_atsp(&m, &AtspOptions::default()), Err(Error::Infeasible(_))));
}

#[test]
fn heuristic_matches_enumeration_on_small_matrices() {
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..=8);
        let mut m = CostMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, Some(rng.gen_range(1.0..100.0)));
                }
            }
        }
        let ((_, best), _) = brute_force_atsp(&m);
        let t = solve_atsp(&m, &AtspOptions::default()).unwrap();
        assert!(t.cost <= best * 1.05 + 1e-9, "seed {seed}: {} vs {best}", t.cost);
        hits += (t.cost <= best + 1e-9) as usize;
        let mut sorted = t.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let again = solve_atsp(&m, &AtspOptions::default()).unwrap();
        assert_eq!(again, t);
    }
    assert!(hits >= 95, "{hits} of 100 optimal");
}

#[test]
fn single_target_tour_is_two_chained_solves() {
    let map = small_tour_map();
    let t = [map.targets[0]];
    let plan = plan_tour_minsoc(&map, &t, &TourOptions::default()).unwrap();
    assert_eq!(plan.tour.order, vec![0, 1]);
    assert_eq!(plan.legs.len(), 2);
    let (scaled, graph) = build_scaled(&map, map.source, t[0], 100.0).unwrap();
    let out = solve_path(&graph, &scaled.params, &BnbConfig::default()).unwrap().incumbent.unwrap();
    assert!((out.objective - plan.legs[0].objective).abs() < 1e-6);
    let (scaled, graph) = build_scaled(&map, t[0], map.source, 100.0).unwrap();
    let back = solve_path(&graph, &scaled.params.with_departure(out.final_soc()), &BnbConfig::default())
        .unwrap()
        .incumbent
        .unwrap();
    assert!((back.objective - plan.legs[1].objective).abs() < 1e-6);
    assert!((plan.cost - out.objective - back.objective).abs() < 1e-6);
    plan.certify(&map).unwrap();
}

fn assert_plan_sound(plan: &quietpath::tsp::TourPlan, map: &QuietZoneMap, n: usize) {
    plan.certify(map).unwrap();
    let mut order = plan.tour.order.clone();
    assert_eq!(order[0], 0);
    order.sort_unstable();
    assert_eq!(order, (0..=n).collect::<Vec<_>>());
    assert_eq!(plan.legs.len(), n + 1);
    let sum: f64 = plan.legs.iter().map(|l| l.objective).sum();
    assert!((sum - plan.cost).abs() < 1e-6);
    let mut q = map.params.q_init;
    for leg in &plan.legs {
        assert!((leg.q_init - q).abs() < 1e-6);
        let prof = simulate_soc(leg, &map.params.with_departure(q)).unwrap();
        assert!(check_zone_compliance(leg, &map.zones).passed());
        q = prof.final_soc();
    }
}

#[test]
fn tours_certify_and_one_level_matches_minsoc_order() {
    let map = small_tour_map();
    let opts = TourOptions::default();
    let a = plan_tour_minsoc(&map, &map.targets, &opts).unwrap();
    assert_plan_sound(&a, &map, 3);
    let g1 = plan_tour_gtsp(&map, &map.targets, 1, &opts).unwrap();
    assert_eq!(g1.tour.order, a.tour.order);
    let g = plan_tour_gtsp(&map, &map.targets, 3, &opts).unwrap();
    assert_plan_sound(&g, &map, 3);
    assert_eq!(g.tour.levels.as_ref().unwrap().len(), 4);
}

#[test]
fn clustered_tour_beats_every_enumerated_assignment() {
    let map = random_tour_instance(8, 1, 4, 3000.0, 2000.0);
    let opts = TourOptions::default();
    let d = 2;
    let inst = gtsp_cost_matrix(&map, &map.targets, d, &opts).unwrap();
    let (best, _) = brute_force_gtsp(&inst).unwrap();
    let plan = plan_tour_gtsp(&map, &map.targets, d, &opts).unwrap();
    assert_plan_sound(&plan, &map, 4);
    assert!(plan.tour.cost <= best + 1e-6, "heuristic {} enumeration {best}", plan.tour.cost);
    assert!(plan.cost <= best * 1.02 + 1e-6, "stitched {} enumeration {best}", plan.cost);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noon_bean_small_instance_theorem(seed in any::<u64>(), clusters in 2usize..=4, d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_cluster_instance(&mut rng, clusters, d, 0.15);
        let nb = noon_bean(&inst).unwrap();
        match (brute_force_gtsp(&inst), held_karp(&nb.matrix)) {
            (Some((g, _)), Some((a, t))) => {
                prop_assert!((a - (g + clusters as f64 * nb.big_m)).abs() <= 1e-9 * a);
                prop_assert!(clusters_contiguous(&t, &nb.cluster_of));
                prop_assert_eq!(inst.tour_cost(&nb.detransform(&t)), (0, g));
            }
            (None, Some((a, _))) => prop_assert!(a >= (clusters as f64 + 1.0) * nb.big_m),
            (g, None) => prop_assert!(g.is_none()),
        }
    }
}
