//! SVG plots: zones, trajectories coloured by mode, switch points, and an
//! SOC-versus-distance inset.

use std::fmt::Write as _;

use crate::geometry::{ConvexPolygon, Point2D};
use crate::validate::{Schedule, SocProfile, Trajectory};

const WIDTH: f64 = 900.0;
const MARGIN: f64 = 20.0;
const INSET_W: f64 = 260.0;
const INSET_H: f64 = 140.0;

/// A trajectory to draw, with an optional label at its start.
pub struct Layer<'a> {
    pub name: &'a str,
    pub trajectory: &'a Trajectory,
}

struct Frame {
    lo: Point2D,
    k: f64,
    height: f64,
}

impl Frame {
    fn new(points: &[Point2D]) -> Frame {
        let mut lo = Point2D::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = Point2D::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2D::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Point2D::new(0.0, 0.0);
            hi = Point2D::new(1.0, 1.0);
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let k = (WIDTH - 2.0 * MARGIN) / span;
        let height = (hi.y - lo.y) * k + 2.0 * MARGIN + INSET_H + MARGIN;
        Frame { lo, k, height }
    }

    fn map(&self, p: Point2D) -> (f64, f64) {
        let top = self.height - INSET_H - MARGIN;
        (MARGIN + (p.x - self.lo.x) * self.k, top - MARGIN - (p.y - self.lo.y) * self.k)
    }
}

fn mode_class(s: Schedule) -> &'static str {
    match s {
        Schedule::Electric => "electric",
        Schedule::Fuel => "fuel",
        _ => "mixed",
    }
}

fn header(out: &mut String, f: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{:.0}" viewBox="0 0 {WIDTH:.0} {:.0}">"#,
        f.height, f.height
    );
    out.push_str(
        "<style>.zone{fill:#cfe3cf;stroke:#3a7a3a;stroke-width:1}.seg{stroke-width:2;fill:none}\
         .electric{stroke:#1f5fbf}.fuel{stroke:#c0392b}.mixed{stroke:#8e44ad}\
         .switch{fill:#f1c40f;stroke:#000;stroke-width:0.5}.stop{fill:#000}.order{font:12px sans-serif}\
         .soc{stroke:#333;fill:none;stroke-width:1.5}.axis{stroke:#999;stroke-width:1}</style>\n",
    );
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
}

fn zones(out: &mut String, f: &Frame, zones: &[ConvexPolygon]) {
    for (i, z) in zones.iter().enumerate() {
        let pts: Vec<String> = z
            .vertices()
            .iter()
            .map(|&v| {
                let (x, y) = f.map(v);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, r#"<polygon class="zone" data-zone="{i}" points="{}"/>"#, pts.join(" "));
    }
}

fn trajectory(out: &mut String, f: &Frame, t: &Trajectory, leg: usize) {
    for s in &t.segments {
        let (x1, y1) = f.map(s.start);
        let (x2, y2) = f.map(s.end);
        let _ = writeln!(
            out,
            r#"<line class="seg {}" data-leg="{leg}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#,
            mode_class(s.schedule)
        );
    }
    for s in &t.segments {
        for p in s.switch_points() {
            let (x, y) = f.map(p);
            let _ = writeln!(out, r#"<circle class="switch" data-leg="{leg}" cx="{x:.2}" cy="{y:.2}" r="3.5"/>"#);
        }
    }
}

fn inset(out: &mut String, f: &Frame, profiles: &[&SocProfile], q_range: (f64, f64)) {
    let x0 = MARGIN;
    let y0 = f.height - MARGIN - INSET_H;
    let _ = writeln!(
        out,
        r#"<g class="inset"><rect class="axis" x="{x0:.2}" y="{y0:.2}" width="{INSET_W}" height="{INSET_H}" fill="none"/>"#
    );
    let total: f64 = profiles
        .iter()
        .map(|p| p.breakpoints.last().map_or(0.0, |b| b.0))
        .sum::<f64>()
        .max(1e-9);
    let (qlo, qhi) = q_range;
    let span = (qhi - qlo).max(1e-9);
    let mut offset = 0.0;
    let mut pts = Vec::new();
    for p in profiles {
        for &(d, q) in &p.breakpoints {
            let x = x0 + (offset + d) / total * INSET_W;
            let y = y0 + INSET_H - (q - qlo) / span * INSET_H;
            pts.push(format!("{x:.2},{y:.2}"));
        }
        offset += p.breakpoints.last().map_or(0.0, |b| b.0);
    }
    let _ = writeln!(out, r#"<polyline class="soc" points="{}"/>"#, pts.join(" "));
    let _ = writeln!(
        out,
        r#"<text class="order" x="{:.2}" y="{:.2}">SOC vs distance</text></g>"#,
        x0 + 4.0,
        y0 + 14.0
    );
}

/// Plot of one or more path solutions on a map.
pub fn path_svg(map_zones: &[ConvexPolygon], layers: &[Layer], profile: Option<&SocProfile>, q_range: (f64, f64)) -> String {
    let mut pts: Vec<Point2D> = map_zones.iter().flat_map(|z| z.vertices().iter().copied()).collect();
    for l in layers {
        pts.extend(l.trajectory.waypoints());
    }
    let f = Frame::new(&pts);
    let mut out = String::new();
    header(&mut out, &f);
    zones(&mut out, &f, map_zones);
    for (k, l) in layers.iter().enumerate() {
        trajectory(&mut out, &f, l.trajectory, k);
        if let Some(p) = l.trajectory.waypoints().first() {
            let (x, y) = f.map(*p);
            let _ = writeln!(out, r#"<text class="order" x="{:.2}" y="{:.2}">{}</text>"#, x + 5.0, y - 5.0, l.name);
        }
    }
    if let Some(p) = profile {
        inset(&mut out, &f, &[p], q_range);
    }
    out.push_str("</svg>\n");
    out
}

/// Plot of a tour: every leg, its switch points, and numbered stops.
pub fn tour_svg(
    map_zones: &[ConvexPolygon],
    stops: &[Point2D],
    order: &[usize],
    legs: &[Trajectory],
    profiles: &[SocProfile],
    q_range: (f64, f64),
) -> String {
    let mut pts: Vec<Point2D> = map_zones.iter().flat_map(|z| z.vertices().iter().copied()).collect();
    pts.extend_from_slice(stops);
    let f = Frame::new(&pts);
    let mut out = String::new();
    header(&mut out, &f);
    zones(&mut out, &f, map_zones);
    for (k, t) in legs.iter().enumerate() {
        trajectory(&mut out, &f, t, k);
    }
    for (rank, &s) in order.iter().enumerate() {
        let (x, y) = f.map(stops[s]);
        let _ = writeln!(out, r#"<circle class="stop" cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
        let _ = writeln!(
            out,
            r#"<text class="order" data-stop="{s}" x="{:.2}" y="{:.2}">{rank}</text>"#,
            x + 5.0,
            y - 5.0
        );
    }
    let refs: Vec<&SocProfile> = profiles.iter().collect();
    if !refs.is_empty() {
        inset(&mut out, &f, &refs, q_range);
    }
    out.push_str("</svg>\n");
    out
}
