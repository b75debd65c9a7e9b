use proptest::prelude::*;
use quietpath::cli::{generate_map, GenerateOptions};
use quietpath::geometry::{
    boundary_params, classify_visibility, convex_hull, point_on_side, segment_blocked, BoundaryParams, ConvexPolygon,
    Point2D, Side, VisibilityClass,
};
use quietpath::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(x: f64, y: f64) -> Point2D {
    Point2D::new(x, y)
}

fn square(x0: f64, y0: f64, s: f64) -> ConvexPolygon {
    ConvexPolygon::new(vec![p(x0, y0), p(x0 + s, y0), p(x0 + s, y0 + s), p(x0, y0 + s)]).unwrap()
}

fn sides_of(zones: &[ConvexPolygon]) -> Vec<Side> {
    let mut out = Vec::new();
    for (zi, z) in zones.iter().enumerate() {
        for (k, (m, n)) in z.sides().enumerate() {
            out.push(Side::new(zi, k, m, n));
        }
    }
    out
}

fn close(a: Point2D, b: Point2D) -> bool {
    a.dist(b) < 1e-12
}

#[test]
fn point_on_side_endpoints_and_midpoint() {
    let s = Side::new(0, 0, p(0.0, 0.0), p(10.0, 0.0));
    assert!(close(point_on_side(&s, 1.0).unwrap(), p(0.0, 0.0)));
    assert!(close(point_on_side(&s, 0.0).unwrap(), p(10.0, 0.0)));
    let s = Side::new(0, 0, p(2.0, 2.0), p(4.0, 6.0));
    assert!(close(point_on_side(&s, 0.5).unwrap(), p(3.0, 4.0)));
}

#[test]
fn point_on_side_rejects_lambda_outside_unit_interval() {
    let s = Side::new(0, 0, p(0.0, 0.0), p(1.0, 0.0));
    assert!(matches!(point_on_side(&s, -0.1), Err(Error::Domain(_))));
    assert!(matches!(point_on_side(&s, 1.5), Err(Error::Domain(_))));
}

#[test]
fn hull_drops_interior_point() {
    let h = convex_hull(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(0.5, 0.5)]).unwrap();
    assert_eq!(h.vertices(), square(0.0, 0.0, 1.0).vertices());
}

#[test]
fn hull_of_triangle_is_triangle() {
    let pts = [p(0.0, 0.0), p(4.0, 1.0), p(1.0, 3.0)];
    let h = convex_hull(&pts).unwrap();
    assert_eq!(h.len(), 3);
    for q in pts {
        assert!(h.vertices().contains(&q));
    }
    assert!(h.area() > 0.0);
}

#[test]
fn hull_of_collinear_points_is_degenerate() {
    let r = convex_hull(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)]);
    assert!(matches!(r, Err(Error::Degenerate(_))));
}

/// Directed edges (i, j) with every other point strictly left of i→j.
fn brute_force_hull_edges(pts: &[Point2D]) -> Vec<(Point2D, Point2D)> {
    let mut edges = Vec::new();
    for (i, &a) in pts.iter().enumerate() {
        for (j, &b) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let ok = pts
                .iter()
                .enumerate()
                .all(|(k, &c)| k == i || k == j || (b - a).cross(c - a) > 0.0);
            if ok {
                edges.push((a, b));
            }
        }
    }
    edges
}

#[test]
fn hull_of_random_disk_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let pts: Vec<Point2D> = (0..100)
            .map(|_| {
                let r = rng.gen_range(0.0f64..1.0).sqrt() * 50.0;
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                p(r * t.cos(), r * t.sin())
            })
            .collect();
        let h = convex_hull(&pts).unwrap();
        let mut got: Vec<(Point2D, Point2D)> = h.sides().collect();
        let mut want = brute_force_hull_edges(&pts);
        let key = |e: &(Point2D, Point2D)| (e.0.x, e.0.y, e.1.x, e.1.y);
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        assert_eq!(got, want);
    }
}

#[test]
fn segment_through_square_is_blocked() {
    let z = [square(0.0, 0.0, 1.0)];
    assert!(segment_blocked(p(-1.0, 0.5), p(2.0, 0.5), &z));
}

#[test]
fn segment_along_edge_or_grazing_vertex_is_free() {
    let z = [square(0.0, 0.0, 1.0)];
    assert!(!segment_blocked(p(0.0, 1.0), p(1.0, 1.0), &z));
    assert!(!segment_blocked(p(-1.0, 1.0), p(3.0, 1.0), &z));
    assert!(!segment_blocked(p(0.0, 2.0), p(2.0, 0.0), &z));
    assert!(!segment_blocked(p(2.0, 2.0), p(3.0, 3.0), &z));
}

fn random_polygon(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ConvexPolygon {
    loop {
        let cx = rng.gen_range(lo..hi);
        let cy = rng.gen_range(lo..hi);
        let r = rng.gen_range(0.5..3.0);
        let k = rng.gen_range(3..=8);
        let pts: Vec<Point2D> = (0..k)
            .map(|_| {
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                p(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect();
        if let Ok(h) = convex_hull(&pts) {
            return h;
        }
    }
}

/// Dense sampling: blocked when some probe is deeper than 1e-9 inside.
/// Depth along a segment is concave, so a ternary search around the best
/// probe catches slivers thinner than the probe spacing.
fn sampled_blocked(a: Point2D, b: Point2D, z: &ConvexPolygon) -> bool {
    const PROBES: usize = 10_000;
    let depth = |t: f64| z.depth(a.lerp(b, t));
    let best = (1..PROBES)
        .max_by(|&i, &j| depth(i as f64 / PROBES as f64).total_cmp(&depth(j as f64 / PROBES as f64)))
        .unwrap();
    let (mut lo, mut hi) = ((best - 1) as f64 / PROBES as f64, (best + 1) as f64 / PROBES as f64);
    for _ in 0..100 {
        let (t1, t2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if depth(t1) < depth(t2) {
            lo = t1;
        } else {
            hi = t2;
        }
    }
    depth(best as f64 / PROBES as f64).max(depth(lo)) > 1e-9
}

#[test]
fn segment_blocked_agrees_with_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut blocked = 0;
    for i in 0..1000 {
        let z = random_polygon(&mut rng, 0.0, 10.0);
        let (a, b) = match i % 4 {
            // a segment lying on one of the zone's sides
            0 => {
                let (m, n) = z.sides().nth(rng.gen_range(0..z.len())).unwrap();
                (m.lerp(n, rng.gen_range(-0.5..0.3)), m.lerp(n, rng.gen_range(0.7..1.5)))
            }
            _ => (
                p(rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0)),
                p(rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0)),
            ),
        };
        let zones = [z];
        let want = sampled_blocked(a, b, &zones[0]);
        assert_eq!(segment_blocked(a, b, &zones), want, "case {i}: {a:?} {b:?} {:?}", zones[0]);
        blocked += want as usize;
    }
    assert!(blocked > 100 && blocked < 900, "unbalanced corpus: {blocked} blocked");
}

#[test]
fn facing_squares_are_completely_visible() {
    let zones = vec![square(0.0, 0.0, 1.0), square(11.0, 0.0, 1.0)];
    let u = Side::new(0, 1, p(1.0, 0.0), p(1.0, 1.0));
    let v = Side::new(1, 3, p(11.0, 1.0), p(11.0, 0.0));
    assert_eq!(classify_visibility(&u, &v, &zones), VisibilityClass::CompletelyVisible);
    assert_eq!(
        boundary_params(&u, &v, &zones, VisibilityClass::CompletelyVisible),
        Some(BoundaryParams::FULL)
    );
}

#[test]
fn occluded_squares_are_not_visible() {
    let wall = ConvexPolygon::new(vec![p(4.0, -5.0), p(8.0, -5.0), p(8.0, 6.0), p(4.0, 6.0)]).unwrap();
    let zones = vec![square(0.0, 0.0, 1.0), square(11.0, 0.0, 1.0), wall];
    let u = Side::new(0, 1, p(1.0, 0.0), p(1.0, 1.0));
    let v = Side::new(1, 3, p(11.0, 1.0), p(11.0, 0.0));
    assert_eq!(classify_visibility(&u, &v, &zones), VisibilityClass::NotVisible);
    assert_eq!(boundary_params(&u, &v, &zones, VisibilityClass::NotVisible), None);
}

fn corner_blocks(u: &Side, v: &Side, zones: &[ConvexPolygon]) -> usize {
    let mut n = 0;
    for a in [u.m, u.n] {
        for b in [v.m, v.n] {
            n += segment_blocked(a, b, zones) as usize;
        }
    }
    n
}

fn assert_box_sound(u: &Side, v: &Side, zones: &[ConvexPolygon], bp: &BoundaryParams) {
    for i in 0..50 {
        for j in 0..50 {
            let lu = bp.lo_u + (bp.hi_u - bp.lo_u) * i as f64 / 49.0;
            let lv = bp.lo_v + (bp.hi_v - bp.lo_v) * j as f64 / 49.0;
            let a = point_on_side(u, lu).unwrap();
            let b = point_on_side(v, lv).unwrap();
            for z in zones {
                assert!(
                    (1..1000).all(|k| z.depth(a.lerp(b, k as f64 / 1000.0)) <= 1e-9),
                    "box {bp:?} blocked at ({lu}, {lv})"
                );
            }
        }
    }
}

/// Side pairs of distinct zones on generated maps, by class.
fn generated_pairs(seed: u64) -> (Vec<ConvexPolygon>, Vec<(Side, Side, VisibilityClass)>) {
    let f = generate_map(&GenerateOptions {
        zones: 6,
        width: 6000.0,
        height: 4000.0,
        seed,
        ..GenerateOptions::default()
    })
    .unwrap();
    let zones = f.to_map().unwrap().zones;
    let sides = sides_of(&zones);
    let mut pairs = Vec::new();
    for (i, u) in sides.iter().enumerate() {
        for v in &sides[i + 1..] {
            if u.zone != v.zone {
                pairs.push((*u, *v, classify_visibility(u, v, &zones)));
            }
        }
    }
    (zones, pairs)
}

#[test]
fn partially_visible_pairs_have_one_blocked_corner_and_sound_boxes() {
    let mut checked = 0;
    for seed in 0..3 {
        let (zones, pairs) = generated_pairs(seed);
        for (u, v, class) in pairs.iter().filter(|c| c.2 == VisibilityClass::PartiallyVisible).take(5) {
            assert_eq!(corner_blocks(u, v, &zones), 1);
            if let Some(bp) = boundary_params(u, v, &zones, *class) {
                assert!(bp.lo_u <= bp.hi_u && bp.lo_v <= bp.hi_v);
                assert!(bp.area() < 1.0);
                assert_box_sound(u, v, &zones, &bp);
                checked += 1;
            }
        }
    }
    assert!(checked >= 5, "only {checked} partial boxes");
}

#[test]
fn classes_match_corner_counts() {
    let (zones, pairs) = generated_pairs(4);
    for (u, v, class) in pairs {
        let want = match corner_blocks(&u, &v, &zones) {
            0 => VisibilityClass::CompletelyVisible,
            1 => VisibilityClass::PartiallyVisible,
            _ => VisibilityClass::NotVisible,
        };
        assert_eq!(class, want);
    }
}

#[test]
fn terminal_sides_use_two_distinct_segments() {
    let zones = vec![square(0.0, 0.0, 1.0), square(2.0, 0.4, 0.2)];
    let t = Side::terminal(p(3.0, 0.5));
    let u = Side::new(0, 1, p(1.0, 0.0), p(1.0, 1.0));
    // both corner segments pass the small square, the fan between them does not
    assert_eq!(classify_visibility(&t, &u, &zones), VisibilityClass::CompletelyVisible);
    let bp = boundary_params(&t, &u, &zones, VisibilityClass::CompletelyVisible).unwrap();
    assert!(bp.area() < 1.0);
    assert_box_sound(&t, &u, &zones, &bp);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn visibility_is_symmetric(seed in 0u64..1000, pick in 0usize..10_000) {
        let (zones, pairs) = generated_pairs(seed);
        let (u, v, class) = pairs[pick % pairs.len()];
        prop_assert_eq!(classify_visibility(&v, &u, &zones), class);
        let uv = boundary_params(&u, &v, &zones, class);
        let vu = boundary_params(&v, &u, &zones, class);
        prop_assert_eq!(uv, vu.map(|b| b.swapped()));
        if let Some(bp) = uv {
            assert_box_sound(&u, &v, &zones, &bp);
        }
    }
}

proptest! {
    #[test]
    fn point_on_side_is_affine(
        mx in -1e3f64..1e3, my in -1e3f64..1e3, nx in -1e3f64..1e3, ny in -1e3f64..1e3,
        l1 in 0.0f64..=1.0, l2 in 0.0f64..=1.0,
    ) {
        let s = Side::new(0, 0, p(mx, my), p(nx, ny));
        let d = point_on_side(&s, l1).unwrap().dist(point_on_side(&s, l2).unwrap());
        let want = (l1 - l2).abs() * s.length();
        prop_assert!((d - want).abs() <= 1e-9 * (1.0 + want));
    }

    #[test]
    fn hull_is_idempotent(pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)) {
        let pts: Vec<Point2D> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
        if let Ok(h) = convex_hull(&pts) {
            let again = convex_hull(h.vertices()).unwrap();
            prop_assert_eq!(again.vertices(), h.vertices());
            for q in &pts {
                prop_assert!(h.depth(*q) >= -1e-9);
            }
        }
    }
}
