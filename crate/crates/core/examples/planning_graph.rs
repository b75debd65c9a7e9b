//! Builds the scaled planning graph for a small map and summarizes it.

use quietpath::graph::{build_scaled, EdgeKind};
use quietpath::{ConvexPolygon, EnergyParams, Point2D, QuietZoneMap};

fn main() -> Result<(), quietpath::Error> {
    let p = Point2D::new;
    let zones = vec![
        ConvexPolygon::new(vec![p(2000.0, 1000.0), p(3500.0, 800.0), p(3800.0, 2500.0), p(2300.0, 2900.0)])?,
        ConvexPolygon::new(vec![p(5000.0, 3000.0), p(6200.0, 3300.0), p(5600.0, 4600.0)])?,
    ];
    let params = EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0);
    let (s, g) = (p(500.0, 500.0), p(7500.0, 4500.0));
    let map = QuietZoneMap::new(zones, s, Some(g), vec![], params)?;
    let (scaled, graph) = build_scaled(&map, s, g, 100.0)?;
    println!("gamma = {:.6}", scaled.scale);
    println!("alpha, beta after scaling: {:.4}, {:.4}", scaled.params.alpha, scaled.params.beta);
    println!("{} nodes, {} edges, {} arcs", graph.nodes.len(), graph.edges.len(), graph.arcs.len());
    let intra = graph.edges.iter().filter(|e| e.kind == EdgeKind::Intra).count();
    println!("{intra} intra-zone edges, {} inter-zone edges", graph.edges.len() - intra);
    let partial = graph.edges.iter().filter(|e| e.params.area() < 1.0).count();
    println!("{partial} edges with a shrunk lambda box");
    Ok(())
}
