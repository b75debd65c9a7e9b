//! The discretized shortest-path baseline at two resolutions.

use quietpath::cli::{generate_map, GenerateOptions};
use quietpath::discrete::{solve_discrete, DiscreteConfig};

fn main() -> Result<(), quietpath::Error> {
    let map = generate_map(&GenerateOptions {
        zones: 6,
        seed: 13,
        width: 6000.0,
        height: 4000.0,
        ..GenerateOptions::default()
    })?
    .to_map()?;
    let s = map.source;
    let g = map.goal.expect("generated maps have a goal");
    println!("straight-line distance {:.1}", s.dist(g));
    for cfg in [DiscreteConfig::default(), DiscreteConfig { soc_levels: 19, spacing: 50.0 }] {
        let d = solve_discrete(&map, s, g, &cfg)?;
        println!(
            "{} levels, spacing {}: cost {:.3}, {} hops, re-simulated fuel {:.3}",
            cfg.soc_levels,
            cfg.spacing,
            d.cost,
            d.hops(),
            d.trajectory.fuel()
        );
    }
    Ok(())
}
