//! First-order operator splitting (ADMM) on the homogeneous self-dual
//! embedding. The constant linear system `[I A'; A -I]` is factored once;
//! each iteration is one solve, one cone projection and a dual update.

use crate::cones::{project_dual, Cone};
use crate::csc::{dot, norm_inf, CscMatrix};
use crate::ldl::LdlFactor;
use crate::{residuals, Problem, Settings, Solution, SolverError, Status};

const CHECK_EVERY: usize = 10;

struct LinearSystem {
    factor: LdlFactor,
    n: usize,
    m: usize,
    /// (M + h h')^{-1} pieces: g = M^{-1} h and 1 + h' g
    g: Vec<f64>,
    denom: f64,
    h: Vec<f64>,
}

impl LinearSystem {
    fn new(p: &Problem) -> Result<Self, SolverError> {
        let (n, m) = (p.num_vars(), p.num_rows());
        let at = p.a.transpose();
        // upper triangle of [I A'; A -I]
        let mut colptr = vec![0usize];
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        for j in 0..n {
            rowval.push(j);
            nzval.push(1.0);
            colptr.push(rowval.len());
        }
        for i in 0..m {
            for k in at.colptr[i]..at.colptr[i + 1] {
                rowval.push(at.rowval[k]);
                nzval.push(at.nzval[k]);
            }
            rowval.push(n + i);
            nzval.push(-1.0);
            colptr.push(rowval.len());
        }
        let kkt = CscMatrix {
            nrows: n + m,
            ncols: n + m,
            colptr,
            rowval,
            nzval,
        };
        let mut signs = vec![1.0; n + m];
        signs[n..].iter_mut().for_each(|s| *s = -1.0);
        let mut factor = LdlFactor::new(&kkt, &signs)?;
        factor.factor(&kkt.nzval, 1e-13, 1e-9)?;
        let mut h = p.c.clone();
        h.extend_from_slice(&p.b);
        let mut sys = LinearSystem {
            factor,
            n,
            m,
            g: Vec::new(),
            denom: 1.0,
            h: h.clone(),
        };
        let g = sys.solve_m(&h);
        sys.denom = 1.0 + dot(&h, &g);
        sys.g = g;
        Ok(sys)
    }

    /// Solves `M w = r` with `M = [I A'; -A I]`.
    fn solve_m(&self, r: &[f64]) -> Vec<f64> {
        let mut w = r.to_vec();
        for v in w[self.n..].iter_mut() {
            *v = -*v;
        }
        self.factor.solve(&mut w);
        w
    }

    /// Solves `(I + Q) u = w` for the embedding operator `Q`.
    fn solve(&self, w: &[f64]) -> Vec<f64> {
        let nm = self.n + self.m;
        let wtau = w[nm];
        let rhs: Vec<f64> = (0..nm).map(|i| w[i] - wtau * self.h[i]).collect();
        let mut u = self.solve_m(&rhs);
        let coef = dot(&self.h, &u) / self.denom;
        for i in 0..nm {
            u[i] -= coef * self.g[i];
        }
        let tau = wtau + dot(&self.h, &u);
        u.push(tau);
        u
    }
}

const RUIZ_PASSES: usize = 25;

/// Row scaling `d` and column scaling `e` with `diag(d) A diag(e)` close to
/// unit row and column norms. Rows of one second-order cone share a factor
/// so the cone is preserved.
fn equilibrate(p: &Problem) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (p.num_vars(), p.num_rows());
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    for _ in 0..RUIZ_PASSES {
        let mut row = vec![0.0f64; m];
        let mut col = vec![0.0f64; n];
        for j in 0..n {
            for k in p.a.colptr[j]..p.a.colptr[j + 1] {
                let i = p.a.rowval[k];
                let v = (d[i] * p.a.nzval[k] * e[j]).abs();
                row[i] = row[i].max(v);
                col[j] = col[j].max(v);
            }
        }
        let mut start = 0;
        for c in &p.cones {
            let k = c.dim();
            if let Cone::SecondOrder(_) = c {
                let top = row[start..start + k].iter().cloned().fold(0.0, f64::max);
                row[start..start + k].iter_mut().for_each(|r| *r = top);
            }
            start += k;
        }
        for (di, r) in d.iter_mut().zip(&row) {
            if *r > 1e-12 {
                *di /= r.sqrt();
            }
        }
        for (ej, c) in e.iter_mut().zip(&col) {
            if *c > 1e-12 {
                *ej /= c.sqrt();
            }
        }
    }
    (d, e)
}

fn scaled_problem(p: &Problem, d: &[f64], e: &[f64]) -> Problem {
    let mut a = p.a.clone();
    for j in 0..a.ncols {
        for k in a.colptr[j]..a.colptr[j + 1] {
            a.nzval[k] *= d[a.rowval[k]] * e[j];
        }
    }
    Problem {
        c: p.c.iter().zip(e).map(|(c, e)| c * e).collect(),
        a,
        b: p.b.iter().zip(d).map(|(b, d)| b * d).collect(),
        cones: p.cones.clone(),
    }
}

pub(crate) fn solve(original: &Problem, settings: &Settings) -> Result<Solution, SolverError> {
    let (n, m) = (original.num_vars(), original.num_rows());
    let (row_scale, col_scale) = equilibrate(original);
    let problem = &scaled_problem(original, &row_scale, &col_scale);
    // scaled iterates back to the original space
    let unscale = |x: &[f64], s: &[f64], y: &[f64], k: f64| {
        let x: Vec<f64> = x.iter().zip(&col_scale).map(|(x, e)| x * e * k).collect();
        let s: Vec<f64> = s.iter().zip(&row_scale).map(|(s, d)| s / d * k).collect();
        let y: Vec<f64> = y.iter().zip(&row_scale).map(|(y, d)| y * d * k).collect();
        (x, s, y)
    };
    let sys = LinearSystem::new(problem)?;
    let max_iter = settings.max_iter.unwrap_or(100_000);
    let alpha = settings.relaxation;
    let len = n + m + 1;
    let mut u = vec![0.0; len];
    let mut v = vec![0.0; len];
    u[len - 1] = 1.0;
    v[len - 1] = 1.0;
    let mut status = Status::IterLimit;
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        let w: Vec<f64> = (0..len).map(|i| u[i] + v[i]).collect();
        let ut = sys.solve(&w);
        let relaxed: Vec<f64> = (0..len).map(|i| alpha * ut[i] + (1.0 - alpha) * u[i]).collect();
        let mut unew: Vec<f64> = (0..len).map(|i| relaxed[i] - v[i]).collect();
        project_dual(&problem.cones, &mut unew[n..n + m]);
        unew[len - 1] = unew[len - 1].max(0.0);
        for i in 0..len {
            v[i] += unew[i] - relaxed[i];
        }
        u = unew;

        if iter % CHECK_EVERY != 0 {
            continue;
        }
        let tau = u[len - 1];
        let kappa = v[len - 1];
        let x = &u[..n];
        let y = &u[n..n + m];
        let s = &v[n..n + m];
        if tau > 1e-12 {
            let (xs, ss, ys) = unscale(x, s, y, 1.0 / tau);
            let (pr, dr, pobj, dobj) = residuals(original, &xs, &ss, &ys);
            let gap = (pobj - dobj).abs();
            let rel = gap / (1.0f64).max(pobj.abs().min(dobj.abs()));
            if pr <= settings.tol_feas
                && dr <= settings.tol_feas
                && (gap <= settings.tol_gap_abs || rel <= settings.tol_gap_rel)
            {
                status = Status::Optimal;
                break;
            }
        }
        if tau < kappa {
            let (x, s, y) = unscale(x, s, y, 1.0);
            let by = dot(&original.b, &y);
            if by < 0.0 {
                let mut aty = vec![0.0; n];
                original.a.gemv_t(&y, &mut aty, 1.0);
                if norm_inf(&aty) / (-by) <= settings.tol_infeas {
                    status = Status::Infeasible;
                    break;
                }
            }
            let cx = dot(&original.c, &x);
            if cx < 0.0 {
                let mut axs = s.to_vec();
                original.a.gemv(&x, &mut axs, 1.0);
                if norm_inf(&axs) / (-cx) <= settings.tol_infeas {
                    status = Status::Unbounded;
                    break;
                }
            }
        }
    }

    let tau = u[len - 1];
    let scale = match status {
        Status::Infeasible | Status::Unbounded => 1.0,
        _ if tau > 1e-300 => 1.0 / tau,
        _ => 1.0,
    };
    let (x, s, z) = unscale(&u[..n], &v[n..n + m], &u[n..n + m], scale);
    let (pr, dr, pobj, dobj) = residuals(original, &x, &s, &z);
    let objective = match status {
        Status::Infeasible => f64::INFINITY,
        Status::Unbounded => f64::NEG_INFINITY,
        _ => pobj,
    };
    Ok(Solution {
        status,
        x,
        s,
        z,
        objective,
        dual_objective: dobj,
        primal_residual: pr,
        dual_residual: dr,
        gap: (pobj - dobj).abs(),
        iterations,
    })
}
