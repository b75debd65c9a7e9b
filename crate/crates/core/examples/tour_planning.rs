//! Closed tours through several targets: the minimum-SOC decoupling
//! against the clustered SOC-level formulation.

use quietpath::cli::{generate_map, percentage_difference, GenerateOptions, ParamsFile};
use quietpath::tsp::{plan_tour_gtsp, plan_tour_minsoc, TourOptions};

fn main() -> Result<(), quietpath::Error> {
    let map = generate_map(&GenerateOptions {
        zones: 4,
        seed: 9,
        targets: 5,
        min_distance: 0.0,
        params: ParamsFile {
            alpha: 0.1,
            beta: 0.05,
            ..ParamsFile::default()
        },
        ..GenerateOptions::default()
    })?
    .to_map()?;
    let opts = TourOptions::default();
    let a = plan_tour_minsoc(&map, &map.targets, &opts)?;
    let b = plan_tour_gtsp(&map, &map.targets, 3, &opts)?;
    for plan in [&a, &b] {
        plan.certify(&map)?;
        println!("{:?}: order {:?}, cost {:.2}", plan.method, plan.tour.order, plan.cost);
        for (k, leg) in plan.legs.iter().enumerate() {
            println!("  leg {k}: fuel {:>8.2}  SOC {:>6.2} -> {:>6.2}", leg.objective, leg.q_init, leg.final_soc());
        }
    }
    println!("difference {:.3}%", percentage_difference(a.cost, b.cost));
    Ok(())
}
