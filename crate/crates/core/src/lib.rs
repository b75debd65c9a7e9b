//! Minimum-fuel path and tour planning for a hybrid (fuel/electric) vehicle
//! moving among convex quiet zones, where only electric propulsion is
//! allowed inside a zone.
//!
//! The exact planner builds a mixed-integer conic program over a graph whose
//! nodes are zone sides, solves it by branch-and-bound on top of
//! [`quietpath_conic`], and certifies every result with an independent
//! simulator. A discretized shortest-path baseline and two tour planners
//! round out the toolkit.

pub mod cli;
pub mod discrete;
pub mod geometry;
pub mod graph;
pub mod model;
pub mod solver;
pub mod tsp;
pub mod validate;

pub use geometry::{BoundaryParams, ConvexPolygon, Point2D, Side, VisibilityClass};
pub use graph::{EnergyParams, PlanningGraph, QuietZoneMap};
pub use model::{ConicModel, PathSolution, VarIndex};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("decode failed: {0}")]
    Decode(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 3,
            Error::Decode(_) | Error::Solver(_) | Error::Certification(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
