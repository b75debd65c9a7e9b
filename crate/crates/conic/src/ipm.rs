//! Predictor-corrector interior-point method on the homogeneous self-dual
//! embedding with Nesterov-Todd scaling.

use crate::cones::{Cone, SymCones};
use crate::csc::{dot, norm_inf, CscMatrix};
use crate::ldl::{sym_upper_mul, LdlFactor};
use crate::{residuals, Problem, Settings, Solution, SolverError, Status};

const STATIC_REG: f64 = 1e-8;
const DYN_EPS: f64 = 1e-13;
const DYN_DELTA: f64 = 2e-7;
const STEP_FRACTION: f64 = 0.99;
/// Tolerance multiplier accepted for a stalled run.
const REDUCED_ACCURACY: f64 = 1e3;
const MAX_REFINE: usize = 10;

/// Equality rows (`A_eq x = b_eq`) and cone rows (`G x + s = h`) split out of
/// the standard form, remembering where each row came from.
struct Split {
    n: usize,
    aeq: CscMatrix,
    beq: Vec<f64>,
    g: CscMatrix,
    h: Vec<f64>,
    cones: Vec<Cone>,
    eq_rows: Vec<usize>,
    cone_rows: Vec<usize>,
}

fn split(p: &Problem) -> Split {
    let mut eq_rows = Vec::new();
    let mut cone_rows = Vec::new();
    let mut cones = Vec::new();
    let mut off = 0;
    for c in &p.cones {
        let d = c.dim();
        match c {
            Cone::Zero(_) => eq_rows.extend(off..off + d),
            other => {
                cone_rows.extend(off..off + d);
                if d > 0 {
                    cones.push(*other);
                }
            }
        }
        off += d;
    }
    let mut eq_pos = vec![usize::MAX; p.num_rows()];
    let mut cone_pos = vec![usize::MAX; p.num_rows()];
    for (k, &r) in eq_rows.iter().enumerate() {
        eq_pos[r] = k;
    }
    for (k, &r) in cone_rows.iter().enumerate() {
        cone_pos[r] = k;
    }
    let mut teq = Vec::new();
    let mut tg = Vec::new();
    for j in 0..p.a.ncols {
        for k in p.a.colptr[j]..p.a.colptr[j + 1] {
            let r = p.a.rowval[k];
            if eq_pos[r] != usize::MAX {
                teq.push((eq_pos[r], j, p.a.nzval[k]));
            } else {
                tg.push((cone_pos[r], j, p.a.nzval[k]));
            }
        }
    }
    let n = p.num_vars();
    Split {
        n,
        aeq: CscMatrix::from_triplets(eq_rows.len(), n, &teq),
        beq: eq_rows.iter().map(|&r| p.b[r]).collect(),
        g: CscMatrix::from_triplets(cone_rows.len(), n, &tg),
        h: cone_rows.iter().map(|&r| p.b[r]).collect(),
        cones,
        eq_rows,
        cone_rows,
    }
}

/// KKT system `[0 A' G'; A 0 0; G 0 -W^2]` with a fixed sparsity pattern.
struct Kkt {
    pattern: CscMatrix,
    values: Vec<f64>,
    reg_values: Vec<f64>,
    /// nz positions of the W^2 entries, in `SymCones::for_each_w2_upper` order
    w2_slots: Vec<usize>,
    diag_slots: Vec<usize>,
    n: usize,
    p: usize,
    factor: LdlFactor,
}

impl Kkt {
    fn new(sp: &Split, cones: &SymCones) -> Result<Self, SolverError> {
        let (n, p, m) = (sp.n, sp.aeq.nrows, sp.g.nrows);
        let dim = n + p + m;
        let aeq_rows = sp.aeq.transpose(); // columns = equality rows
        let g_rows = sp.g.transpose();
        let w2 = cones.w2_pattern();
        // group W^2 entries by column
        let mut w2_by_col: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        for (k, &(i, j)) in w2.iter().enumerate() {
            w2_by_col[j].push((i, k));
        }
        let mut colptr = vec![0usize];
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        let mut w2_slots = vec![0usize; w2.len()];
        let mut diag_slots = vec![0usize; dim];
        for j in 0..n {
            diag_slots[j] = rowval.len();
            rowval.push(j);
            nzval.push(0.0);
            colptr.push(rowval.len());
        }
        for i in 0..p {
            for k in aeq_rows.colptr[i]..aeq_rows.colptr[i + 1] {
                rowval.push(aeq_rows.rowval[k]);
                nzval.push(aeq_rows.nzval[k]);
            }
            diag_slots[n + i] = rowval.len();
            rowval.push(n + i);
            nzval.push(0.0);
            colptr.push(rowval.len());
        }
        for r in 0..m {
            for k in g_rows.colptr[r]..g_rows.colptr[r + 1] {
                rowval.push(g_rows.rowval[k]);
                nzval.push(g_rows.nzval[k]);
            }
            let mut entries = w2_by_col[r].clone();
            entries.sort_by_key(|e| e.0);
            for (i, k) in entries {
                if i == r {
                    diag_slots[n + p + r] = rowval.len();
                }
                w2_slots[k] = rowval.len();
                rowval.push(n + p + i);
                nzval.push(0.0);
            }
            colptr.push(rowval.len());
        }
        let pattern = CscMatrix {
            nrows: dim,
            ncols: dim,
            colptr,
            rowval,
            nzval: nzval.clone(),
        };
        let mut signs = vec![1.0; dim];
        for s in signs[n..].iter_mut() {
            *s = -1.0;
        }
        let factor = LdlFactor::new(&pattern, &signs)?;
        Ok(Kkt {
            reg_values: nzval.clone(),
            values: nzval,
            pattern,
            w2_slots,
            diag_slots,
            n,
            p,
            factor,
        })
    }

    fn refactor(&mut self, cones: &SymCones) -> Result<(), SolverError> {
        let mut k = 0;
        let slots = &self.w2_slots;
        let values = &mut self.values;
        cones.for_each_w2_upper(|_, _, v| {
            values[slots[k]] = -v;
            k += 1;
        });
        self.reg_values.copy_from_slice(&self.values);
        let dim = self.pattern.ncols;
        for i in 0..dim {
            let reg = if i < self.n { STATIC_REG } else { -STATIC_REG };
            self.reg_values[self.diag_slots[i]] += reg;
        }
        let _ = self.p;
        self.factor.factor(&self.reg_values, DYN_EPS, DYN_DELTA)
    }

    /// Solves against the unregularized matrix with iterative refinement.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let dim = rhs.len();
        let mut sol = rhs.to_vec();
        self.factor.solve(&mut sol);
        let mut r = vec![0.0; dim];
        let scale = 1.0 + norm_inf(rhs);
        let mut best = sol.clone();
        let mut last = f64::INFINITY;
        for _ in 0..MAX_REFINE {
            sym_upper_mul(&self.pattern, &self.values, &sol, &mut r);
            for i in 0..dim {
                r[i] = rhs[i] - r[i];
            }
            let err = norm_inf(&r);
            if err >= last {
                break;
            }
            last = err;
            best.copy_from_slice(&sol);
            if err <= 1e-14 * scale {
                break;
            }
            self.factor.solve(&mut r);
            for i in 0..dim {
                sol[i] += r[i];
            }
        }
        best
    }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

pub(crate) fn solve(problem: &Problem, settings: &Settings) -> Result<Solution, SolverError> {
    let sp = split(problem);
    let (n, p, m) = (sp.n, sp.aeq.nrows, sp.g.nrows);
    let mut cones = SymCones::new(&sp.cones);
    let degree = cones.degree as f64;
    let mut kkt = Kkt::new(&sp, &cones)?;
    let c = &problem.c;
    let max_iter = settings.max_iter.unwrap_or(200);

    // initial point: W = I
    kkt.refactor(&cones)?;
    let mut rhs = vec![0.0; n + p + m];
    rhs[n..n + p].copy_from_slice(&sp.beq);
    rhs[n + p..].copy_from_slice(&sp.h);
    let sol = kkt.solve(&rhs);
    let x0 = sol[..n].to_vec();
    let mut s0: Vec<f64> = sol[n + p..].iter().map(|v| -v).collect();
    cones.shift_to_interior(&mut s0);
    let mut rhs = vec![0.0; n + p + m];
    for j in 0..n {
        rhs[j] = -c[j];
    }
    let sol = kkt.solve(&rhs);
    let y0 = sol[n..n + p].to_vec();
    let mut z0 = sol[n + p..].to_vec();
    cones.shift_to_interior(&mut z0);

    let mut it = Iterate {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };

    let hnorm = norm_inf(&sp.h).max(norm_inf(&sp.beq));
    let cnorm = norm_inf(c);
    let mut status = Status::IterLimit;
    let mut iterations = 0;
    let mut lambda = vec![0.0; m];
    let mut best: Option<(f64, Iterate)> = None;

    for iter in 0..=max_iter {
        iterations = iter;
        // residuals of the embedding
        let mut rx = vec![0.0; n];
        sp.aeq.gemv_t(&it.y, &mut rx, 1.0);
        sp.g.gemv_t(&it.z, &mut rx, 1.0);
        let atyz = rx.clone();
        for j in 0..n {
            rx[j] += c[j] * it.tau;
        }
        let mut ax = vec![0.0; p];
        sp.aeq.gemv(&it.x, &mut ax, 1.0);
        let ry: Vec<f64> = (0..p).map(|i| -ax[i] + sp.beq[i] * it.tau).collect();
        let mut gx = vec![0.0; m];
        sp.g.gemv(&it.x, &mut gx, 1.0);
        let rz: Vec<f64> = (0..m).map(|i| it.s[i] + gx[i] - sp.h[i] * it.tau).collect();
        let cx = dot(c, &it.x);
        let by_hz = dot(&sp.beq, &it.y) + dot(&sp.h, &it.z);
        let rt = it.kappa + cx + by_hz;

        // termination on the normalized point
        let tau = it.tau;
        let pres = {
            let e1 = (0..p).map(|i| (ax[i] / tau - sp.beq[i]).abs()).fold(0.0, f64::max);
            let e2 = (0..m)
                .map(|i| ((gx[i] + it.s[i]) / tau - sp.h[i]).abs())
                .fold(0.0, f64::max);
            e1.max(e2) / (1.0 + hnorm.max(norm_inf(&ax) / tau).max(norm_inf(&gx) / tau))
        };
        let dres = {
            let e = (0..n).map(|j| (atyz[j] / tau + c[j]).abs()).fold(0.0, f64::max);
            e / (1.0 + cnorm.max(norm_inf(&atyz) / tau))
        };
        let pobj = cx / tau;
        let dobj = -by_hz / tau;
        let gap = (pobj - dobj).abs();
        let relgap = gap / (1.0f64).max(pobj.abs().min(dobj.abs()));
        if pres <= settings.tol_feas
            && dres <= settings.tol_feas
            && (gap <= settings.tol_gap_abs || relgap <= settings.tol_gap_rel)
        {
            status = Status::Optimal;
            break;
        }
        let score = pres.max(dres).max(gap.min(relgap));
        if best.as_ref().map_or(true, |(b, _)| score < *b) {
            best = Some((score, it.clone()));
        }
        // certificates
        if by_hz < 0.0 {
            let res = norm_inf(&atyz) / (-by_hz);
            if res <= settings.tol_infeas && it.tau < it.kappa {
                status = Status::Infeasible;
                break;
            }
        }
        if cx < 0.0 {
            let r1 = norm_inf(&ax);
            let r2 = (0..m).map(|i| (gx[i] + it.s[i]).abs()).fold(0.0, f64::max);
            if r1.max(r2) / (-cx) <= settings.tol_infeas && it.tau < it.kappa {
                status = Status::Unbounded;
                break;
            }
        }
        if iter == max_iter {
            break;
        }

        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (degree + 1.0);
        if !cones.update_scaling(&it.s, &it.z, &mut lambda) {
            break;
        }
        if kkt.refactor(&cones).is_err() {
            break;
        }

        // tau-direction: K [x1;y1;z1] = [-c; b; h]
        let mut rhs1 = vec![0.0; n + p + m];
        for j in 0..n {
            rhs1[j] = -c[j];
        }
        rhs1[n..n + p].copy_from_slice(&sp.beq);
        rhs1[n + p..].copy_from_slice(&sp.h);
        let sol1 = kkt.solve(&rhs1);
        let denom_base = dot(c, &sol1[..n]) + dot(&sp.beq, &sol1[n..n + p]) + dot(&sp.h, &sol1[n + p..]);

        let mut lam_sq = vec![0.0; m];
        cones.circ(&lambda, &lambda, &mut lam_sq);
        let mut e = vec![0.0; m];
        cones.identity(&mut e);

        let direction = |ds: &[f64], dkappa: f64, eta: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64) {
            let mut u = vec![0.0; m];
            cones.inv_circ(&lambda, ds, &mut u);
            let mut wu = vec![0.0; m];
            cones.w_mul(&u, &mut wu, false);
            let mut rhs2 = vec![0.0; n + p + m];
            for j in 0..n {
                rhs2[j] = -eta * rx[j];
            }
            for i in 0..p {
                rhs2[n + i] = eta * ry[i];
            }
            for i in 0..m {
                rhs2[n + p + i] = -eta * rz[i] - wu[i];
            }
            let sol2 = kkt.solve(&rhs2);
            let num = -eta * rt
                - (dot(c, &sol2[..n]) + dot(&sp.beq, &sol2[n..n + p]) + dot(&sp.h, &sol2[n + p..]))
                - dkappa / it.tau;
            let den = denom_base - it.kappa / it.tau;
            let dtau = num / den;
            let dx: Vec<f64> = (0..n).map(|j| dtau * sol1[j] + sol2[j]).collect();
            let dy: Vec<f64> = (0..p).map(|i| dtau * sol1[n + i] + sol2[n + i]).collect();
            let dz: Vec<f64> = (0..m).map(|i| dtau * sol1[n + p + i] + sol2[n + p + i]).collect();
            // ds = W (u - W dz)
            let mut wdz = vec![0.0; m];
            cones.w_mul(&dz, &mut wdz, false);
            let diff: Vec<f64> = (0..m).map(|i| u[i] - wdz[i]).collect();
            let mut dsv = vec![0.0; m];
            cones.w_mul(&diff, &mut dsv, false);
            let dk = (dkappa - it.kappa * dtau) / it.tau;
            (dx, dy, dz, dsv, dtau, dk)
        };

        let step = |dz: &[f64], ds: &[f64], dtau: f64, dk: f64| -> f64 {
            let mut a = cones.max_step(&it.s, ds, 1.0).min(cones.max_step(&it.z, dz, 1.0));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dk < 0.0 {
                a = a.min(-it.kappa / dk);
            }
            a
        };

        // affine (predictor) direction
        let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let (_, _, dz_a, ds_a, dtau_a, dk_a) = direction(&ds_aff, -it.tau * it.kappa, 1.0);
        let alpha_a = step(&dz_a, &ds_a, dtau_a, dk_a);
        let sigma = (1.0 - alpha_a).powi(3).clamp(0.0, 1.0);

        // combined direction with Mehrotra correction
        let mut winv_ds = vec![0.0; m];
        cones.w_mul(&ds_a, &mut winv_ds, true);
        let mut w_dz = vec![0.0; m];
        cones.w_mul(&dz_a, &mut w_dz, false);
        let mut corr = vec![0.0; m];
        cones.circ(&winv_ds, &w_dz, &mut corr);
        let ds_comb: Vec<f64> = (0..m).map(|i| -lam_sq[i] - corr[i] + sigma * mu * e[i]).collect();
        let dk_comb = -it.tau * it.kappa - dtau_a * dk_a + sigma * mu;
        let (dx, dy, dz, ds, dtau, dk) = direction(&ds_comb, dk_comb, 1.0 - sigma);
        let alpha = (STEP_FRACTION * step(&dz, &ds, dtau, dk)).min(1.0);
        if !(alpha > 1e-12) {
            break;
        }
        for j in 0..n {
            it.x[j] += alpha * dx[j];
        }
        for i in 0..p {
            it.y[i] += alpha * dy[i];
        }
        for i in 0..m {
            it.z[i] += alpha * dz[i];
            it.s[i] += alpha * ds[i];
        }
        it.tau += alpha * dtau;
        it.kappa += alpha * dk;
        if !(it.tau.is_finite() && it.kappa.is_finite()) {
            break;
        }
    }

    // on a stall, fall back to the best point seen if it is nearly optimal
    if status == Status::IterLimit {
        if let Some((score, b)) = best {
            if score <= REDUCED_ACCURACY * settings.tol_feas.max(settings.tol_gap_rel) {
                status = Status::OptimalInaccurate;
                it = b;
            }
        }
    }

    // assemble the solution in the original row order
    let rows = problem.num_rows();
    let mut s_full = vec![0.0; rows];
    let mut z_full = vec![0.0; rows];
    let scale = match status {
        Status::Infeasible | Status::Unbounded => 1.0,
        _ => 1.0 / it.tau,
    };
    for (k, &r) in sp.eq_rows.iter().enumerate() {
        z_full[r] = it.y[k] * scale;
    }
    for (k, &r) in sp.cone_rows.iter().enumerate() {
        s_full[r] = it.s[k] * scale;
        z_full[r] = it.z[k] * scale;
    }
    let x: Vec<f64> = it.x.iter().map(|v| v * scale).collect();
    let (pr, dr, pobj, dobj) = residuals(problem, &x, &s_full, &z_full);
    let (objective, dual_objective) = match status {
        Status::Infeasible => (f64::INFINITY, dobj),
        Status::Unbounded => (f64::NEG_INFINITY, dobj),
        _ => (pobj, dobj),
    };
    Ok(Solution {
        status,
        x,
        s: s_full,
        z: z_full,
        objective,
        dual_objective,
        primal_residual: pr,
        dual_residual: dr,
        gap: (pobj - dobj).abs(),
        iterations,
    })
}
