//! Side-to-side visibility and boundary parameters around one occluder.

use quietpath::geometry::{boundary_params, classify_visibility, convex_hull, point_on_side};
use quietpath::{Point2D, Side};

fn main() -> Result<(), quietpath::Error> {
    let p = Point2D::new;
    // hull of a noisy point cloud becomes a zone
    let a = convex_hull(&[p(0.0, 0.0), p(4.0, 0.0), p(4.0, 3.0), p(2.0, 1.0), p(0.0, 3.0)])?;
    let b = convex_hull(&[p(10.0, 0.0), p(14.0, 0.0), p(14.0, 3.0), p(10.0, 3.0)])?;
    let wall = convex_hull(&[p(6.0, 2.5), p(8.0, 2.5), p(8.0, 6.0), p(6.0, 6.0)])?;
    println!("zone a has {} vertices after hulling", a.len());
    let zones = vec![a.clone(), b.clone(), wall];

    let sides_a: Vec<Side> = a.sides().enumerate().map(|(i, (m, n))| Side::new(0, i, m, n)).collect();
    let sides_b: Vec<Side> = b.sides().enumerate().map(|(i, (m, n))| Side::new(1, i, m, n)).collect();
    for u in &sides_a {
        for v in &sides_b {
            let class = classify_visibility(u, v, &zones);
            match boundary_params(u, v, &zones, class) {
                Some(bp) => println!(
                    "a{} -> b{}: {class:?}, lambda_u in [{:.3}, {:.3}], lambda_v in [{:.3}, {:.3}]",
                    u.index, v.index, bp.lo_u, bp.hi_u, bp.lo_v, bp.hi_v
                ),
                None => println!("a{} -> b{}: {class:?}, no edge", u.index, v.index),
            }
        }
    }
    let mid = point_on_side(&sides_a[1], 0.5)?;
    println!("midpoint of a1: ({:.2}, {:.2})", mid.x, mid.y);
    Ok(())
}
