//! JSON map files and the random map generator.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{polygons_touch, ConvexPolygon, Point2D};
use crate::graph::{EnergyParams, QuietZoneMap};
use crate::{Error, Result};

pub const MAP_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub alpha: f64,
    pub beta: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub q_init: f64,
}

impl Default for ParamsFile {
    fn default() -> Self {
        ParamsFile {
            alpha: 0.08,
            beta: 0.04,
            q_min: 20.0,
            q_max: 100.0,
            q_init: 100.0,
        }
    }
}

impl From<ParamsFile> for EnergyParams {
    fn from(p: ParamsFile) -> Self {
        EnergyParams::new(p.alpha, p.beta, p.q_min, p.q_max, p.q_init)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub version: u32,
    pub zones: Vec<Vec<[f64; 2]>>,
    pub source: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<[f64; 2]>,
    pub params: ParamsFile,
}

fn pt(p: [f64; 2]) -> Point2D {
    Point2D::new(p[0], p[1])
}

fn arr(p: Point2D) -> [f64; 2] {
    [p.x, p.y]
}

impl MapFile {
    pub fn parse(text: &str) -> Result<MapFile> {
        let f: MapFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if f.version != MAP_VERSION {
            return Err(Error::Validation(format!("unsupported map version {}", f.version)));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<MapFile> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map files serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn to_map(&self) -> Result<QuietZoneMap> {
        let zones = self
            .zones
            .iter()
            .enumerate()
            .map(|(i, z)| {
                ConvexPolygon::new(z.iter().map(|&p| pt(p)).collect())
                    .map_err(|e| Error::Validation(format!("zone {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        QuietZoneMap::new(
            zones,
            pt(self.source),
            self.goal.map(pt),
            self.targets.iter().map(|&p| pt(p)).collect(),
            self.params.into(),
        )
    }

    pub fn from_map(map: &QuietZoneMap) -> MapFile {
        let p = map.params;
        let back = |q: Point2D| arr(q * (1.0 / map.scale));
        MapFile {
            version: MAP_VERSION,
            zones: map.zones.iter().map(|z| z.vertices().iter().map(|&v| back(v)).collect()).collect(),
            source: back(map.source),
            goal: map.goal.map(back),
            targets: map.targets.iter().map(|&t| back(t)).collect(),
            params: ParamsFile {
                alpha: p.alpha * map.scale,
                beta: p.beta * map.scale,
                q_min: p.q_min,
                q_max: p.q_max,
                q_init: p.q_init,
            },
        }
    }

    pub fn goal_point(&self) -> Result<Point2D> {
        self.goal.map(pt).ok_or_else(|| Error::Validation("map has no goal".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub zones: usize,
    pub width: f64,
    pub height: f64,
    pub seed: u64,
    pub targets: usize,
    /// Least source-goal distance.
    pub min_distance: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub params: ParamsFile,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            zones: 15,
            width: 12000.0,
            height: 8000.0,
            seed: 0,
            targets: 0,
            min_distance: 1000.0,
            min_radius: 300.0,
            max_radius: 900.0,
            params: ParamsFile::default(),
        }
    }
}

const MAX_ATTEMPTS: usize = 100_000;
/// Least clearance between generated zones.
const ZONE_GAP: f64 = 1.0;

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn random_zone(rng: &mut ChaCha8Rng, o: &GenerateOptions) -> Option<ConvexPolygon> {
    let r = rng.gen_range(o.min_radius..=o.max_radius);
    if 2.0 * r >= o.width || 2.0 * r >= o.height {
        return None;
    }
    let cx = rng.gen_range(r..o.width - r);
    let cy = rng.gen_range(r..o.height - r);
    let k = rng.gen_range(5..=9);
    let base = rng.gen_range(0.0..std::f64::consts::TAU);
    let verts = (0..k)
        .map(|i| {
            let jitter: f64 = rng.gen_range(-0.3..0.3);
            let t = base + std::f64::consts::TAU * (i as f64 + jitter) / k as f64;
            Point2D::new(round2(cx + r * t.cos()), round2(cy + r * t.sin()))
        })
        .collect();
    ConvexPolygon::new(verts).ok().filter(|z| z.len() == k)
}

/// A uniformly drawn point clear of every zone.
pub fn random_free_point(rng: &mut ChaCha8Rng, zones: &[ConvexPolygon], width: f64, height: f64) -> Result<Point2D> {
    for _ in 0..MAX_ATTEMPTS {
        let p = Point2D::new(round2(rng.gen_range(0.0..width)), round2(rng.gen_range(0.0..height)));
        if zones.iter().all(|z| z.depth(p) < -ZONE_GAP) {
            return Ok(p);
        }
    }
    Err(Error::Validation("could not place a point outside the zones".into()))
}

/// Source and goal at least `min_distance` apart.
pub fn random_terminals(
    rng: &mut ChaCha8Rng,
    zones: &[ConvexPolygon],
    width: f64,
    height: f64,
    min_distance: f64,
) -> Result<(Point2D, Point2D)> {
    for _ in 0..MAX_ATTEMPTS {
        let s = random_free_point(rng, zones, width, height)?;
        let g = random_free_point(rng, zones, width, height)?;
        if s.dist(g) >= min_distance {
            return Ok((s, g));
        }
    }
    Err(Error::Validation(format!("no terminal pair {min_distance} apart")))
}

/// Rejection-samples disjoint convex zones, then terminals and targets.
/// Deterministic for a given seed.
pub fn generate_map(o: &GenerateOptions) -> Result<MapFile> {
    if !(o.width > 0.0 && o.height > 0.0 && o.min_radius > 0.0 && o.min_radius <= o.max_radius) {
        return Err(Error::Validation("invalid generator extents".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut zones: Vec<ConvexPolygon> = Vec::with_capacity(o.zones);
    let mut attempts = 0;
    while zones.len() < o.zones {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::Validation(format!(
                "placed only {} of {} zones after {MAX_ATTEMPTS} attempts; try fewer zones",
                zones.len(),
                o.zones
            )));
        }
        if let Some(z) = random_zone(&mut rng, o) {
            if zones.iter().all(|other| !polygons_touch(&z, other, ZONE_GAP)) {
                zones.push(z);
            }
        }
    }
    let (s, g) = random_terminals(&mut rng, &zones, o.width, o.height, o.min_distance)?;
    let mut targets: Vec<Point2D> = Vec::with_capacity(o.targets);
    let mut tries = 0;
    while targets.len() < o.targets {
        tries += 1;
        if tries > MAX_ATTEMPTS {
            return Err(Error::Validation("could not place the targets".into()));
        }
        let t = random_free_point(&mut rng, &zones, o.width, o.height)?;
        if t.dist(s) > 1.0 && targets.iter().all(|u| u.dist(t) > 1.0) {
            targets.push(t);
        }
    }
    Ok(MapFile {
        version: MAP_VERSION,
        zones: zones.iter().map(|z| z.vertices().iter().map(|&v| arr(v)).collect()).collect(),
        source: arr(s),
        goal: Some(arr(g)),
        targets: targets.iter().map(|&t| arr(t)).collect(),
        params: o.params,
    })
}
