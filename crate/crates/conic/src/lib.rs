//! Sparse conic solver for problems of the form
//!
//! ```text
//! minimize    c'x
//! subject to  A x + s = b,   s in K
//! ```
//!
//! where `K` is a product of zero cones, nonnegative orthants and
//! second-order cones. Two methods are provided, both working on the
//! homogeneous self-dual embedding of the primal-dual pair:
//!
//! * [`Method::InteriorPoint`]: predictor-corrector path following with
//!   Nesterov-Todd scaling (default, high accuracy).
//! * [`Method::Splitting`]: first-order operator splitting (ADMM) with a
//!   cached factorization of the constant linear system.
//!
//! Infeasibility and unboundedness are reported through certificates of the
//! embedding rather than as errors.

pub mod cones;
pub mod csc;
mod ipm;
mod ldl;
mod splitting;

pub use cones::Cone;
pub use csc::CscMatrix;
pub use ldl::LdlFactor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// A conic program in standard form.
#[derive(Debug, Clone)]
pub struct Problem {
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl Problem {
    pub fn new(c: Vec<f64>, a: CscMatrix, b: Vec<f64>, cones: Vec<Cone>) -> Result<Self, SolverError> {
        if a.ncols != c.len() {
            return Err(SolverError::Dimension(format!(
                "A has {} columns but c has {} entries",
                a.ncols,
                c.len()
            )));
        }
        if a.nrows != b.len() {
            return Err(SolverError::Dimension(format!("A has {} rows but b has {} entries", a.nrows, b.len())));
        }
        let total: usize = cones.iter().map(Cone::dim).sum();
        if total != b.len() {
            return Err(SolverError::Dimension(format!("cones cover {total} rows, expected {}", b.len())));
        }
        if c.iter().chain(&b).chain(&a.nzval).any(|v| !v.is_finite()) {
            return Err(SolverError::Dimension("non-finite problem data".into()));
        }
        Ok(Problem { c, a, b, cones })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    InteriorPoint,
    Splitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// Stalled within a reduced tolerance of optimality.
    OptimalInaccurate,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub method: Method,
    /// Iteration cap; `None` picks a per-method default (200 interior-point
    /// iterations, 100 000 splitting iterations).
    pub max_iter: Option<usize>,
    pub tol_feas: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_infeas: f64,
    /// ADMM relaxation parameter (splitting only).
    pub relaxation: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            method: Method::InteriorPoint,
            max_iter: None,
            tol_feas: 1e-9,
            tol_gap_abs: 1e-9,
            tol_gap_rel: 1e-9,
            tol_infeas: 1e-9,
            relaxation: 1.5,
        }
    }
}

impl Settings {
    pub fn splitting() -> Self {
        Settings {
            method: Method::Splitting,
            tol_feas: 1e-6,
            tol_gap_abs: 1e-6,
            tol_gap_rel: 1e-6,
            tol_infeas: 1e-7,
            ..Settings::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// Dual variable of the cone constraints (`z in K*`).
    pub z: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl Status {
    pub fn is_optimal(self) -> bool {
        matches!(self, Status::Optimal | Status::OptimalInaccurate)
    }
}

/// Solves the problem with the configured method.
pub fn solve(problem: &Problem, settings: &Settings) -> Result<Solution, SolverError> {
    match settings.method {
        Method::InteriorPoint => ipm::solve(problem, settings),
        Method::Splitting => splitting::solve(problem, settings),
    }
}

/// Relative residual measures shared by both methods. Returns
/// `(primal, dual, pobj, dobj)` for a candidate `(x, s, z)`.
pub(crate) fn residuals(p: &Problem, x: &[f64], s: &[f64], z: &[f64]) -> (f64, f64, f64, f64) {
    let m = p.num_rows();
    let n = p.num_vars();
    let mut ax = vec![0.0; m];
    p.a.gemv(x, &mut ax, 1.0);
    let mut rp = 0.0f64;
    for i in 0..m {
        rp = rp.max((ax[i] + s[i] - p.b[i]).abs());
    }
    let pscale = 1.0 + csc::norm_inf(&p.b).max(csc::norm_inf(&ax)).max(csc::norm_inf(s));
    let mut atz = vec![0.0; n];
    p.a.gemv_t(z, &mut atz, 1.0);
    let mut rd = 0.0f64;
    for j in 0..n {
        rd = rd.max((atz[j] + p.c[j]).abs());
    }
    let dscale = 1.0 + csc::norm_inf(&p.c).max(csc::norm_inf(&atz));
    let pobj = csc::dot(&p.c, x);
    let dobj = -csc::dot(&p.b, z);
    (rp / pscale, rd / dscale, pobj, dobj)
}
