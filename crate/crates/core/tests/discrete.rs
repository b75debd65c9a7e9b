mod common;

use common::{exact, open_map, p, paper_params, random_instance, rect};
use quietpath::discrete::{build_discrete_graph, discrete_shortest_path, solve_discrete, DiscreteConfig};
use quietpath::graph::scale_map;
use quietpath::validate::{check_trajectory_compliance, simulate_trajectory};
use quietpath::{EnergyParams, Error, QuietZoneMap};

#[test]
fn defaults_are_ten_levels_at_one_hundred_units() {
    let c = DiscreteConfig::default();
    assert_eq!(c.soc_levels, 10);
    assert_eq!(c.spacing, 100.0);
    assert!(DiscreteConfig { soc_levels: 1, ..c }.validate().is_err());
    assert!(DiscreteConfig { spacing: 0.0, ..c }.validate().is_err());
}

#[test]
fn short_open_trip_is_free() {
    let (map, s, g) = open_map(900.0, paper_params());
    let d = solve_discrete(&map, s, g, &DiscreteConfig::default()).unwrap();
    assert_eq!(d.cost, 0.0);
    assert!(d.hop_fuel.iter().all(|z| *z == 0.0));
}

#[test]
fn forced_fuel_costs_at_least_the_continuous_optimum() {
    let (map, s, g) = open_map(2000.0, paper_params());
    let d = solve_discrete(&map, s, g, &DiscreteConfig::default()).unwrap();
    assert!(d.cost >= 80.0 / 0.12 - 1e-9);
    let prof = simulate_trajectory(&d.trajectory, &map.params).unwrap();
    assert!(prof.final_soc() >= 20.0 - 1e-6);
}

#[test]
fn unreachable_goal_is_infeasible() {
    let (map, s, g) = open_map(100.0, EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0));
    let mut graph = build_discrete_graph(&map, s, g, &DiscreteConfig::default()).unwrap();
    graph.adjacency[0].clear();
    assert!(matches!(discrete_shortest_path(&graph), Err(Error::Infeasible(_))));
}

#[test]
fn samples_include_every_vertex() {
    let zone = rect(400.0, -200.0, 250.0, 400.0);
    let map = QuietZoneMap::new(vec![zone.clone()], p(0.0, 0.0), None, vec![], paper_params()).unwrap();
    let graph = build_discrete_graph(&map, p(0.0, 0.0), p(1000.0, 0.0), &DiscreteConfig::default()).unwrap();
    for v in zone.vertices() {
        assert!(graph.points.iter().any(|q| q.position.dist(*v) < 1e-9));
    }
    // 250-unit sides carry 3 samples, 400-unit sides 4
    assert_eq!(graph.points.len(), 2 + 3 + 4 + 3 + 4);
    assert_eq!(graph.levels.len(), 10);
    assert_eq!(graph.num_nodes(), graph.points.len() * 10);
}

#[test]
fn refinement_never_increases_cost() {
    for seed in 0..10 {
        let (map, s, g) = random_instance(seed, 2, 3000.0, 2000.0);
        let coarse = solve_discrete(&map, s, g, &DiscreteConfig { soc_levels: 10, spacing: 100.0 }).unwrap();
        let fine = solve_discrete(&map, s, g, &DiscreteConfig { soc_levels: 19, spacing: 50.0 }).unwrap();
        assert!(fine.cost <= coarse.cost + 1e-9, "seed {seed}: {} > {}", fine.cost, coarse.cost);
    }
}

#[test]
fn discrete_cost_bounds_the_exact_incumbent() {
    for seed in 30..36 {
        let (map, s, g) = random_instance(seed, 3, 6000.0, 4000.0);
        let (_, _, r) = exact(&map, s, g, 0.01);
        let inc = r.objective().unwrap();
        let scaled = scale_map(&map, 100.0).unwrap();
        let f = scaled.scale;
        let d = solve_discrete(&scaled, s * f, g * f, &DiscreteConfig::default()).unwrap();
        assert!(d.cost >= inc - r.gap * inc - 1e-6, "seed {seed}: discrete {} exact {inc}", d.cost);
        let prof = simulate_trajectory(&d.trajectory, &map.params).unwrap();
        assert!(prof.final_soc() >= map.params.q_goal_min - 1e-6);
        assert!(check_trajectory_compliance(&d.trajectory, &map.zones).passed());
        assert!(d.trajectory.fuel() <= d.cost + 1e-6);
    }
}

#[test]
fn scaled_and_raw_maps_agree() {
    let (map, s, g) = random_instance(5, 2, 3000.0, 2000.0);
    let raw = solve_discrete(&map, s, g, &DiscreteConfig::default()).unwrap();
    let scaled = scale_map(&map, 100.0).unwrap();
    let f = scaled.scale;
    let d = solve_discrete(&scaled, s * f, g * f, &DiscreteConfig::default()).unwrap();
    assert!((raw.cost - d.cost).abs() <= 1e-6 * raw.cost.max(1.0));
}
