//! Writes the mixed-integer conic model of a path problem in text form and
//! reads it back.

use quietpath::graph::build_scaled;
use quietpath::model::{build_rmicp, ConicModel};
use quietpath::{ConvexPolygon, EnergyParams, Point2D, QuietZoneMap};

fn main() -> Result<(), quietpath::Error> {
    let p = Point2D::new;
    let zone = ConvexPolygon::new(vec![p(400.0, -300.0), p(800.0, -300.0), p(800.0, 300.0), p(400.0, 300.0)])?;
    let params = EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0);
    let (s, g) = (p(0.0, 0.0), p(1300.0, 100.0));
    let map = QuietZoneMap::new(vec![zone], s, Some(g), vec![], params)?;
    let (scaled, graph) = build_scaled(&map, s, g, 100.0)?;
    let (model, index) = build_rmicp(&graph, &scaled.params, false);
    println!(
        "{} columns ({} binary), {} equalities, {} inequalities, {} cones",
        model.num_vars(),
        index.binaries().len(),
        model.eqs.len(),
        model.les.len(),
        model.socs.len()
    );
    let text = model.export();
    let back = ConicModel::import(&text)?;
    assert_eq!(back.export(), text);
    for line in text.lines().take(12) {
        println!("{line}");
    }
    Ok(())
}
