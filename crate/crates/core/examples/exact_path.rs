//! Exact minimum-fuel path by branch-and-bound, with certification and the
//! mode switch points.

use quietpath::graph::build_scaled;
use quietpath::solver::{solve_path, BnbConfig};
use quietpath::validate::certify;
use quietpath::{ConvexPolygon, EnergyParams, Point2D, QuietZoneMap};

fn main() -> Result<(), quietpath::Error> {
    let p = Point2D::new;
    let zones = vec![
        ConvexPolygon::new(vec![p(600.0, -400.0), p(1400.0, -500.0), p(1500.0, 300.0), p(700.0, 450.0)])?,
        ConvexPolygon::new(vec![p(1900.0, -200.0), p(2500.0, -300.0), p(2400.0, 500.0)])?,
    ];
    let params = EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0);
    let (s, g) = (p(0.0, 0.0), p(3200.0, 100.0));
    let map = QuietZoneMap::new(zones, s, Some(g), vec![], params)?;
    let (scaled, graph) = build_scaled(&map, s, g, 100.0)?;
    let cfg = BnbConfig {
        gap: 1e-4,
        ..BnbConfig::default()
    };
    let r = solve_path(&graph, &scaled.params, &cfg)?;
    println!("{:?} after {} nodes, bound {:.3}, gap {:.2e}", r.status, r.nodes_explored, r.lower_bound, r.gap);
    let plan = r.incumbent.expect("a path exists");
    let profile = certify(&plan, &map.params, &map.zones)?;
    println!("fuel distance {:.3} over length {:.1}", plan.objective, plan.length());
    println!("final SOC {:.3}", profile.final_soc());
    for n in &plan.nodes {
        println!("  node {:>3}  q_entry {:>7.3}  q_exit {:>7.3}", n.node, n.q_entry, n.q_exit);
    }
    for sp in plan.switch_points() {
        println!("switch at ({:.1}, {:.1})", sp.x, sp.y);
    }
    Ok(())
}
