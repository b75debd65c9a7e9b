//! Continuous relaxation as a lower bound, next to the exact optimum.

use quietpath::cli::{generate_map, GenerateOptions};
use quietpath::graph::build_scaled;
use quietpath::solver::{solve_path, solve_relaxation, BnbConfig, SolverConfig};

fn main() -> Result<(), quietpath::Error> {
    for seed in 0..3 {
        let map = generate_map(&GenerateOptions {
            zones: 5,
            seed,
            ..GenerateOptions::default()
        })?
        .to_map()?;
        let g = map.goal.expect("generated maps have a goal");
        let (scaled, graph) = build_scaled(&map, map.source, g, 100.0)?;
        let relaxed = solve_relaxation(&graph, &scaled.params, &SolverConfig::default())?;
        let exact = solve_path(&graph, &scaled.params, &BnbConfig::default())?;
        let e = exact.objective().unwrap_or(f64::NAN);
        let gap = if e > 1e-9 { 100.0 * (e - relaxed.bound) / e } else { 0.0 };
        println!("seed {seed}: relaxed {:>9.3}  exact {e:>9.3}  gap {gap:.3}%", relaxed.bound);
    }
    Ok(())
}
