//! Independent certification of plans. The checks only look at decoded
//! geometry and mode schedules, never at model variables.

use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexPolygon, Point2D};
use crate::graph::{EnergyParams, PlanningGraph};
use crate::model::PathSolution;
use crate::{Error, Result};

/// Certification tolerance on SOC and distances.
pub const CERT_TOL: f64 = 1e-6;

/// Sampling step for zone compliance, in scaled units.
pub const SAMPLE_STEP: f64 = 1e-3;

/// How fuel and electric travel are arranged along one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    Electric,
    Fuel,
    /// Electric first, then a single switch to fuel.
    ElectricThenFuel,
    /// Fuel first, then a single switch to electric.
    FuelThenElectric,
    /// Fuel and electric mixed uniformly along the segment.
    Interleaved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point2D,
    pub end: Point2D,
    pub fuel: f64,
    pub schedule: Schedule,
    /// Set for segments that cross the interior of this zone.
    pub zone: Option<usize>,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }

    /// Points where the propulsion mode changes.
    pub fn switch_points(&self) -> Vec<Point2D> {
        let len = self.length();
        if len <= 0.0 {
            return vec![];
        }
        match self.schedule {
            Schedule::ElectricThenFuel => vec![self.start.lerp(self.end, (len - self.fuel) / len)],
            Schedule::FuelThenElectric => vec![self.start.lerp(self.end, self.fuel / len)],
            _ => vec![],
        }
    }
}

/// A plan as a chain of straight segments in unscaled map units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub q_init: f64,
    /// Scale factor γ the plan was computed at; fixes the sampling step.
    pub scale: f64,
}

impl Trajectory {
    pub fn fuel(&self) -> f64 {
        self.segments.iter().map(|s| s.fuel).sum()
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    pub fn waypoints(&self) -> Vec<Point2D> {
        let mut pts: Vec<Point2D> = self.segments.iter().map(|s| s.start).collect();
        pts.extend(self.segments.last().map(|s| s.end));
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Electric,
    Fuel,
    Interleaved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocProfile {
    /// (cumulative distance, SOC) pairs.
    pub breakpoints: Vec<(f64, f64)>,
    /// Mode between consecutive breakpoints.
    pub modes: Vec<Mode>,
}

impl SocProfile {
    pub fn final_soc(&self) -> f64 {
        self.breakpoints.last().map_or(f64::NAN, |b| b.1)
    }
}

/// Re-simulates SOC along a plan and checks every bound.
pub fn simulate_soc(plan: &PathSolution, params: &EnergyParams) -> Result<SocProfile> {
    simulate_trajectory(&plan.trajectory(), params)
}

/// SOC simulation on an arbitrary trajectory, in unscaled units.
pub fn simulate_trajectory(t: &Trajectory, p: &EnergyParams) -> Result<SocProfile> {
    let fail = |k: usize, msg: String| Err(Error::Certification(format!("segment {k}: {msg}")));
    let mut q = t.q_init;
    let mut dist = 0.0;
    if (q - p.q_init).abs() > CERT_TOL {
        return fail(0, format!("starts at SOC {q}, expected {}", p.q_init));
    }
    let mut breakpoints = vec![(0.0, q)];
    let mut modes = Vec::new();
    for (k, s) in t.segments.iter().enumerate() {
        let len = s.length();
        let z = s.fuel;
        if !(z >= -CERT_TOL && z <= len + CERT_TOL * len.max(1.0)) {
            return fail(k, format!("fuel distance {z} outside [0, {len}]"));
        }
        let z = z.clamp(0.0, len);
        let e = len - z;
        let pieces: Vec<(f64, f64, Mode)> = match s.schedule {
            Schedule::Electric => {
                if z > CERT_TOL * len.max(1.0) {
                    return fail(k, "electric schedule carries fuel".into());
                }
                vec![(len, -p.alpha * len, Mode::Electric)]
            }
            Schedule::Fuel => {
                if e > CERT_TOL * len.max(1.0) {
                    return fail(k, "fuel schedule carries electric travel".into());
                }
                vec![(len, p.beta * len, Mode::Fuel)]
            }
            Schedule::ElectricThenFuel => {
                vec![(e, -p.alpha * e, Mode::Electric), (z, p.beta * z, Mode::Fuel)]
            }
            Schedule::FuelThenElectric => {
                vec![(z, p.beta * z, Mode::Fuel), (e, -p.alpha * e, Mode::Electric)]
            }
            Schedule::Interleaved => vec![(len, p.beta * z - p.alpha * e, Mode::Interleaved)],
        };
        for (d, dq, mode) in pieces {
            q += dq;
            dist += d;
            if q < p.q_min - CERT_TOL || q > p.q_max + CERT_TOL {
                return fail(k, format!("SOC {q} leaves [{}, {}]", p.q_min, p.q_max));
            }
            breakpoints.push((dist, q));
            modes.push(mode);
        }
    }
    if q < p.q_goal_min - CERT_TOL || q > p.q_goal_max + CERT_TOL {
        return Err(Error::Certification(format!(
            "final SOC {q} outside goal range [{}, {}]",
            p.q_goal_min, p.q_goal_max
        )));
    }
    Ok(SocProfile { breakpoints, modes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub segment: usize,
    pub zone: usize,
    pub point: Point2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub violations: Vec<Violation>,
    pub samples: usize,
}

impl ComplianceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples every fuel-bearing segment and reports samples strictly inside a
/// zone; zone-crossing segments must carry no fuel at all.
pub fn check_zone_compliance(plan: &PathSolution, zones: &[ConvexPolygon]) -> ComplianceReport {
    check_trajectory_compliance(&plan.trajectory(), zones)
}

/// `zones` are in the same (unscaled) units as the trajectory.
pub fn check_trajectory_compliance(t: &Trajectory, zones: &[ConvexPolygon]) -> ComplianceReport {
    let step = SAMPLE_STEP / t.scale;
    let tol = 1e-9 / t.scale;
    let boxes: Vec<(Point2D, Point2D)> = zones.iter().map(|z| z.bbox()).collect();
    let mut violations = Vec::new();
    let mut samples = 0;
    for (k, s) in t.segments.iter().enumerate() {
        let len = s.length();
        if s.fuel <= CERT_TOL * len.max(1.0) {
            continue;
        }
        if let Some(z) = s.zone {
            violations.push(Violation {
                segment: k,
                zone: z,
                point: s.start,
            });
            continue;
        }
        let count = (len / step).ceil().max(1.0) as usize;
        let (slo, shi) = crate::geometry::bbox(&[s.start, s.end]);
        for (zi, zone) in zones.iter().enumerate() {
            let (lo, hi) = boxes[zi];
            if shi.x < lo.x || slo.x > hi.x || shi.y < lo.y || slo.y > hi.y {
                continue;
            }
            for i in 0..=count {
                let p = s.start.lerp(s.end, i as f64 / count as f64);
                samples += 1;
                if p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y {
                    continue;
                }
                if zone.contains_strict(p, tol) {
                    violations.push(Violation {
                        segment: k,
                        zone: zi,
                        point: p,
                    });
                    break;
                }
            }
        }
    }
    ComplianceReport { violations, samples }
}

/// Checks that every exit/entry λ lies in the box of the edge it uses.
pub fn check_boundary_membership(plan: &PathSolution, graph: &PlanningGraph) -> Result<()> {
    for (k, w) in plan.nodes.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let arc = graph
            .find_arc(a.node, b.node)
            .ok_or_else(|| Error::Certification(format!("edge {k} is not in the graph")))?;
        let bp = graph.arcs[arc].params;
        let lu = if graph.is_side(a.node) { a.lambda_exit } else { bp.lo_u };
        let lv = if graph.is_side(b.node) { b.lambda_entry } else { bp.lo_v };
        if !bp.contains(lu, lv, 1e-6) {
            return Err(Error::Certification(format!("edge {k}: lambda ({lu}, {lv}) outside its box")));
        }
    }
    Ok(())
}

/// Runs SOC simulation and zone compliance together.
pub fn certify(plan: &PathSolution, params: &EnergyParams, zones: &[ConvexPolygon]) -> Result<SocProfile> {
    let profile = simulate_soc(plan, params)?;
    let report = check_zone_compliance(plan, zones);
    if let Some(v) = report.violations.first() {
        return Err(Error::Certification(format!(
            "segment {} uses fuel inside zone {}",
            v.segment, v.zone
        )));
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn electric_leg_arithmetic() {
        let p = EnergyParams::new(0.08, 0.04, 20.0, 100.0, 100.0);
        let t = Trajectory {
            segments: vec![Segment {
                start: Point2D::new(0.0, 0.0),
                end: Point2D::new(500.0, 0.0),
                fuel: 0.0,
                schedule: Schedule::Electric,
                zone: None,
            }],
            q_init: 100.0,
            scale: 1.0,
        };
        let prof = simulate_trajectory(&t, &p).unwrap();
        assert!((prof.final_soc() - 60.0).abs() < 1e-12);
    }
}
