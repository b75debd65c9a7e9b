//! Generates a random map, plans a path, and writes the map file and an SVG
//! plot next to the build directory.

use quietpath::cli::svg::{path_svg, Layer};
use quietpath::cli::{generate_map, solve_scenario, GenerateOptions, MapFile, ScenarioOptions};
use quietpath::validate::simulate_soc;

fn main() -> Result<(), quietpath::Error> {
    let file = generate_map(&GenerateOptions {
        zones: 8,
        seed: 4,
        ..GenerateOptions::default()
    })?;
    let map = file.to_map()?;
    let out = std::env::temp_dir().join("quietpath-example");
    std::fs::create_dir_all(&out)?;
    file.save(&out.join("map.json"))?;
    assert_eq!(MapFile::load(&out.join("map.json"))?, file);

    let g = file.goal_point()?;
    let (rec, discrete) = solve_scenario(&map, map.source, g, &ScenarioOptions::default())?;
    let exact = rec.exact.expect("exact ran");
    let t = exact.plan.trajectory();
    let mut layers = vec![Layer {
        name: "exact",
        trajectory: &t,
    }];
    if let Some(d) = &discrete {
        layers.push(Layer {
            name: "discrete",
            trajectory: &d.trajectory,
        });
    }
    let profile = simulate_soc(&exact.plan, &map.params)?;
    let svg = path_svg(&map.zones, &layers, Some(&profile), (map.params.q_min, map.params.q_max));
    std::fs::write(out.join("path.svg"), svg)?;
    println!("exact {:.2}, relaxed {:.2}", exact.cost, rec.relaxed.unwrap_or(f64::NAN));
    println!("wrote {}", out.display());
    Ok(())
}
