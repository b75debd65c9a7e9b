//! Planar primitives: points, convex polygons, polygon sides and the
//! visibility tests that decide which portions of two sides can be joined
//! by a straight segment without entering a quiet zone.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::Error;

/// Interior/boundary classification tolerance, in scaled units.
pub const GEOM_TOL: f64 = 1e-9;

/// Bisection tolerance on λ when shrinking a partially visible side pair.
pub const LAMBDA_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn dot(self, o: Point2D) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2D) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2D) -> f64 {
        (self - o).norm()
    }

    /// Left-hand normal (rotated +90 degrees).
    pub fn perp(self) -> Point2D {
        Point2D::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point2D, t: f64) -> Point2D {
        self + (o - self) * t
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, o: Point2D) -> Point2D {
        Point2D::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, o: Point2D) -> Point2D {
        Point2D::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, k: f64) -> Point2D {
        Point2D::new(self.x * k, self.y * k)
    }
}

fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b - a).cross(c - a)
}

/// A strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2D>,
}

impl ConvexPolygon {
    /// Accepts vertices in either orientation; duplicate and collinear
    /// vertices are removed. Fails unless the rest is strictly convex.
    pub fn new(vertices: Vec<Point2D>) -> Result<Self, Error> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation("polygon has non-finite coordinates".into()));
        }
        let mut v = vertices;
        v.dedup_by(|a, b| a.dist(*b) <= GEOM_TOL);
        while v.len() > 1 && v[0].dist(v[v.len() - 1]) <= GEOM_TOL {
            v.pop();
        }
        if signed_area(&v) < 0.0 {
            v.reverse();
        }
        let mut changed = true;
        while changed && v.len() >= 3 {
            changed = false;
            let k = v.len();
            for i in 0..k {
                let (a, b, c) = (v[(i + k - 1) % k], v[i], v[(i + 1) % k]);
                let scale = (c - a).norm().max(1.0);
                if orient(a, b, c).abs() <= GEOM_TOL * scale {
                    v.remove(i);
                    changed = true;
                    break;
                }
            }
        }
        if v.len() < 3 {
            return Err(Error::Degenerate("polygon needs three non-collinear vertices".into()));
        }
        let k = v.len();
        for i in 0..k {
            if orient(v[i], v[(i + 1) % k], v[(i + 2) % k]) <= 0.0 {
                return Err(Error::Validation("polygon is not convex".into()));
            }
        }
        // a convex turn at every vertex still admits self-winding stars
        let turn: f64 = (0..k)
            .map(|i| {
                let d0 = v[(i + 1) % k] - v[i];
                let d1 = v[(i + 2) % k] - v[(i + 1) % k];
                d0.cross(d1).atan2(d0.dot(d1))
            })
            .sum();
        if (turn - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(Error::Validation("polygon winds more than once".into()));
        }
        Ok(ConvexPolygon { vertices: v })
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Sides as (m, n) pairs following the vertex order.
    pub fn sides(&self) -> impl Iterator<Item = (Point2D, Point2D)> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| (self.vertices[i], self.vertices[(i + 1) % k]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bbox(&self) -> (Point2D, Point2D) {
        bbox(&self.vertices)
    }

    /// Signed clearance of `p` from the boundary: positive inside.
    pub fn depth(&self, p: Point2D) -> f64 {
        self.sides()
            .map(|(a, b)| {
                let d = b - a;
                d.cross(p - a) / d.norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains_strict(&self, p: Point2D, tol: f64) -> bool {
        self.depth(p) > tol
    }

    pub fn map_points(&self, f: impl Fn(Point2D) -> Point2D) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|p| f(*p)).collect(),
        }
    }
}

fn signed_area(v: &[Point2D]) -> f64 {
    let k = v.len();
    (0..k).map(|i| v[i].cross(v[(i + 1) % k])).sum::<f64>() / 2.0
}

pub(crate) fn bbox(points: &[Point2D]) -> (Point2D, Point2D) {
    let mut lo = Point2D::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// One side of a zone, or a terminal when `zone` is `None` and `m == n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Side {
    pub zone: Option<usize>,
    pub index: usize,
    pub m: Point2D,
    pub n: Point2D,
}

impl Side {
    pub fn new(zone: usize, index: usize, m: Point2D, n: Point2D) -> Self {
        Side {
            zone: Some(zone),
            index,
            m,
            n,
        }
    }

    pub fn terminal(p: Point2D) -> Self {
        Side {
            zone: None,
            index: 0,
            m: p,
            n: p,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.zone.is_none()
    }

    pub fn length(&self) -> f64 {
        self.m.dist(self.n)
    }

    fn corners(&self) -> Vec<Point2D> {
        if self.m == self.n {
            vec![self.m]
        } else {
            vec![self.m, self.n]
        }
    }

    fn key(&self) -> [f64; 4] {
        [self.m.x, self.m.y, self.n.x, self.n.y]
    }
}

/// `lam * m + (1 - lam) * n`.
pub fn point_on_side(side: &Side, lam: f64) -> Result<Point2D, Error> {
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::Domain(format!("lambda {lam} outside [0, 1]")));
    }
    Ok(lerp_side(side, lam))
}

pub(crate) fn lerp_side(side: &Side, lam: f64) -> Point2D {
    side.m * lam + side.n * (1.0 - lam)
}

/// Andrew's monotone chain; collinear boundary points are dropped.
pub fn convex_hull(points: &[Point2D]) -> Result<ConvexPolygon, Error> {
    let chain = hull_chain(points);
    if chain.len() < 3 {
        return Err(Error::Degenerate("points are collinear".into()));
    }
    ConvexPolygon::new(chain)
}

/// Hull vertices in CCW order; may have fewer than three points.
pub(crate) fn hull_chain(points: &[Point2D]) -> Vec<Point2D> {
    let mut p: Vec<Point2D> = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<Point2D> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Point2D> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether the convex hull of `points` meets the interior of `zone` by
/// more than `tol` on every separating axis.
fn hull_overlaps(points: &[Point2D], zone: &ConvexPolygon, tol: f64) -> bool {
    let hull = hull_chain(points);
    if hull.len() == 1 {
        return zone.contains_strict(hull[0], tol);
    }
    let (lo, hi) = bbox(&hull);
    let (zlo, zhi) = zone.bbox();
    if hi.x <= zlo.x + tol || lo.x >= zhi.x - tol || hi.y <= zlo.y + tol || lo.y >= zhi.y - tol {
        return false;
    }
    let mut axes: Vec<Point2D> = Vec::with_capacity(hull.len() + zone.len());
    let k = hull.len();
    let edges = if k == 2 { 1 } else { k };
    for i in 0..edges {
        axes.push((hull[(i + 1) % k] - hull[i]).perp());
    }
    for (a, b) in zone.sides() {
        axes.push((b - a).perp());
    }
    for ax in axes {
        let len = ax.norm();
        if len == 0.0 {
            continue;
        }
        let ax = ax * (1.0 / len);
        let (pmin, pmax) = project(&hull, ax);
        let (zmin, zmax) = project(zone.vertices(), ax);
        if pmax <= zmin + tol || zmax <= pmin + tol {
            return false;
        }
    }
    true
}

fn project(points: &[Point2D], ax: Point2D) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = p.dot(ax);
        (lo.min(t), hi.max(t))
    })
}

/// True iff the open segment (a, b) meets the interior of some zone.
/// Grazing a vertex or sliding along an edge is not blocking.
pub fn segment_blocked(a: Point2D, b: Point2D, zones: &[ConvexPolygon]) -> bool {
    zones.iter().any(|z| hull_overlaps(&[a, b], z, GEOM_TOL))
}

/// Whether any pair of points drawn from the λ boxes of `u` and `v` would
/// be blocked; the union of those segments is the hull of the four corners.
pub(crate) fn box_blocked(u: &Side, v: &Side, bp: &BoundaryParams, zones: &[ConvexPolygon]) -> bool {
    let pts = [
        lerp_side(u, bp.lo_u),
        lerp_side(u, bp.hi_u),
        lerp_side(v, bp.lo_v),
        lerp_side(v, bp.hi_v),
    ];
    zones.iter().any(|z| hull_overlaps(&pts, z, GEOM_TOL))
}

/// Whether two zones have intersecting or touching closures.
pub fn polygons_touch(a: &ConvexPolygon, b: &ConvexPolygon, gap: f64) -> bool {
    let mut axes: Vec<Point2D> = Vec::new();
    for (p, q) in a.sides().chain(b.sides()) {
        axes.push((q - p).perp());
    }
    for ax in axes {
        let ax = ax * (1.0 / ax.norm());
        let (amin, amax) = project(a.vertices(), ax);
        let (bmin, bmax) = project(b.vertices(), ax);
        if amax.min(bmax) - amin.max(bmin) < -gap {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VisibilityClass {
    CompletelyVisible,
    PartiallyVisible,
    NotVisible,
}

/// λ intervals on the two ends of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub lo_u: f64,
    pub hi_u: f64,
    pub lo_v: f64,
    pub hi_v: f64,
}

impl BoundaryParams {
    pub const FULL: BoundaryParams = BoundaryParams {
        lo_u: 0.0,
        hi_u: 1.0,
        lo_v: 0.0,
        hi_v: 1.0,
    };

    pub fn swapped(&self) -> BoundaryParams {
        BoundaryParams {
            lo_u: self.lo_v,
            hi_u: self.hi_v,
            lo_v: self.lo_u,
            hi_v: self.hi_u,
        }
    }

    pub fn area(&self) -> f64 {
        (self.hi_u - self.lo_u) * (self.hi_v - self.lo_v)
    }

    pub fn contains(&self, lam_u: f64, lam_v: f64, tol: f64) -> bool {
        lam_u >= self.lo_u - tol && lam_u <= self.hi_u + tol && lam_v >= self.lo_v - tol && lam_v <= self.hi_v + tol
    }
}

/// Counts blocked segments among the (deduplicated) corner connections.
pub fn classify_visibility(u: &Side, v: &Side, zones: &[ConvexPolygon]) -> VisibilityClass {
    let mut blocked = 0;
    for a in u.corners() {
        for b in v.corners() {
            if a != b && segment_blocked(a, b, zones) {
                blocked += 1;
            }
        }
    }
    match blocked {
        0 => VisibilityClass::CompletelyVisible,
        1 => VisibilityClass::PartiallyVisible,
        _ => VisibilityClass::NotVisible,
    }
}

/// λ box for an edge between `u` and `v`, or `None` when no edge exists.
///
/// A completely visible pair gets the full box when it is sound. Otherwise
/// (a partial pair, or a small zone sitting between four unblocked corner
/// segments) the box is shrunk by bisection and the sound candidate with
/// the largest area is kept.
pub fn boundary_params(u: &Side, v: &Side, zones: &[ConvexPolygon], class: VisibilityClass) -> Option<BoundaryParams> {
    if class == VisibilityClass::NotVisible {
        return None;
    }
    if u.key() > v.key() {
        return boundary_params(v, u, zones, class).map(|b| b.swapped());
    }
    if !box_blocked(u, v, &BoundaryParams::FULL, zones) {
        return Some(BoundaryParams::FULL);
    }
    refine_box(u, v, zones)
}

fn refine_box(u: &Side, v: &Side, zones: &[ConvexPolygon]) -> Option<BoundaryParams> {
    let su = !u.is_terminal();
    let sv = !v.is_terminal();
    // which ends each candidate pulls inward: (u low, u high, v low, v high)
    let mut candidates: Vec<[bool; 4]> = Vec::new();
    if su {
        candidates.push([true, false, false, false]);
        candidates.push([false, true, false, false]);
    }
    if sv {
        candidates.push([false, false, true, false]);
        candidates.push([false, false, false, true]);
    }
    if su && sv {
        for ul in [true, false] {
            for vl in [true, false] {
                candidates.push([ul, !ul, vl, !vl]);
            }
        }
    }
    let make = |c: &[bool; 4], t: f64| BoundaryParams {
        lo_u: if c[0] { t } else { 0.0 },
        hi_u: if c[1] { 1.0 - t } else { 1.0 },
        lo_v: if c[2] { t } else { 0.0 },
        hi_v: if c[3] { 1.0 - t } else { 1.0 },
    };
    let mut best: Option<BoundaryParams> = None;
    for c in &candidates {
        if box_blocked(u, v, &make(c, 1.0), zones) {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > LAMBDA_TOL {
            let mid = 0.5 * (lo + hi);
            if box_blocked(u, v, &make(c, mid), zones) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let bp = make(c, hi);
        if best.map_or(true, |b| bp.area() > b.area()) {
            best = Some(bp);
        }
    }
    best
}
