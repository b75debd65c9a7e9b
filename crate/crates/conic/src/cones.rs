//! Cone algebra: projections, Jordan products, Nesterov-Todd scaling and
//! step-length computations for nonnegative orthants and second-order cones.

use crate::csc::{dot, norm};

/// A block of consecutive constraint rows belonging to one cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `s = 0` (equality rows).
    Zero(usize),
    /// `s >= 0` componentwise.
    Nonnegative(usize),
    /// `s_0 >= ||s_{1..}||_2`.
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::Nonnegative(n) | Cone::SecondOrder(n) => n,
        }
    }
}

/// Euclidean projection of `x` onto the second-order cone, in place.
pub fn project_soc(x: &mut [f64]) {
    let t = x[0];
    let nv = norm(&x[1..]);
    if nv <= t {
        return;
    }
    if nv <= -t {
        x.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let a = 0.5 * (t + nv);
    x[0] = a;
    let f = a / nv;
    for v in x[1..].iter_mut() {
        *v *= f;
    }
}

/// Projection onto the product cone `K` (primal). Zero blocks map to 0.
pub fn project_primal(cones: &[Cone], x: &mut [f64]) {
    let mut off = 0;
    for c in cones {
        let d = c.dim();
        let blk = &mut x[off..off + d];
        match c {
            Cone::Zero(_) => blk.iter_mut().for_each(|v| *v = 0.0),
            Cone::Nonnegative(_) => blk.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::SecondOrder(_) => project_soc(blk),
        }
        off += d;
    }
}

/// Projection onto the dual cone `K*`. Zero blocks are free.
pub fn project_dual(cones: &[Cone], x: &mut [f64]) {
    let mut off = 0;
    for c in cones {
        let d = c.dim();
        let blk = &mut x[off..off + d];
        match c {
            Cone::Zero(_) => {}
            Cone::Nonnegative(_) => blk.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::SecondOrder(_) => project_soc(blk),
        }
        off += d;
    }
}

#[derive(Debug, Clone)]
enum Block {
    Nonneg {
        off: usize,
        dim: usize,
    },
    Soc {
        off: usize,
        dim: usize,
        eta: f64,
        /// normalized scaling point, w0^2 - ||w1||^2 = 1
        w: Vec<f64>,
    },
}

/// Symmetric cone product (nonnegative and second-order blocks only) with
/// the Nesterov-Todd scaling used by the interior-point iteration.
#[derive(Debug, Clone)]
pub(crate) struct SymCones {
    blocks: Vec<Block>,
    /// `sqrt(s/z)` on orthant rows
    orthant_w: Vec<f64>,
    pub dim: usize,
    pub degree: usize,
}

impl SymCones {
    pub fn new(cones: &[Cone]) -> Self {
        let mut blocks = Vec::new();
        let mut off = 0;
        let mut degree = 0;
        for c in cones {
            match *c {
                Cone::Zero(_) => panic!("zero cones are handled as equality rows"),
                Cone::Nonnegative(d) => {
                    if d > 0 {
                        blocks.push(Block::Nonneg { off, dim: d });
                        degree += d;
                    }
                }
                Cone::SecondOrder(d) => {
                    assert!(d >= 1, "second-order cone needs dimension >= 1");
                    let mut w = vec![0.0; d];
                    w[0] = 1.0;
                    blocks.push(Block::Soc {
                        off,
                        dim: d,
                        eta: 1.0,
                        w,
                    });
                    degree += 1;
                }
            }
            off += c.dim();
        }
        SymCones {
            blocks,
            orthant_w: vec![1.0; off],
            dim: off,
            degree,
        }
    }

    pub fn identity(&self, e: &mut [f64]) {
        e.iter_mut().for_each(|v| *v = 0.0);
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => e[*off..off + dim].iter_mut().for_each(|v| *v = 1.0),
                Block::Soc { off, .. } => e[*off] = 1.0,
            }
        }
    }

    /// Largest `a` such that `x + a e` would still be outside the interior;
    /// negative when `x` is strictly interior.
    pub fn interior_margin(&self, x: &[f64]) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => {
                    for v in &x[*off..off + dim] {
                        m = m.max(-v);
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let blk = &x[*off..off + dim];
                    m = m.max(norm(&blk[1..]) - blk[0]);
                }
            }
        }
        m
    }

    /// Shifts `x` into the interior along the identity direction if needed.
    pub fn shift_to_interior(&self, x: &mut [f64]) {
        let m = self.interior_margin(x);
        if m >= -1e-8 {
            let mut e = vec![0.0; self.dim];
            self.identity(&mut e);
            let shift = 1.0 + m.max(0.0);
            for (xi, ei) in x.iter_mut().zip(&e) {
                *xi += shift * ei;
            }
        }
    }

    /// Updates the scaling from strictly interior `s`, `z`; writes `lambda = W z`.
    pub fn update_scaling(&mut self, s: &[f64], z: &[f64], lambda: &mut [f64]) -> bool {
        let orthant_w = &mut self.orthant_w;
        for b in self.blocks.iter_mut() {
            match b {
                Block::Nonneg { off, dim } => {
                    for i in *off..*off + *dim {
                        if !(s[i] > 0.0 && z[i] > 0.0) {
                            return false;
                        }
                        lambda[i] = (s[i] * z[i]).sqrt();
                        orthant_w[i] = (s[i] / z[i]).sqrt();
                    }
                }
                Block::Soc { off, dim, eta, w } => {
                    let (o, d) = (*off, *dim);
                    let sb = &s[o..o + d];
                    let zb = &z[o..o + d];
                    let sres = sb[0] * sb[0] - dot(&sb[1..], &sb[1..]);
                    let zres = zb[0] * zb[0] - dot(&zb[1..], &zb[1..]);
                    if !(sres > 0.0 && zres > 0.0 && sb[0] > 0.0 && zb[0] > 0.0) {
                        return false;
                    }
                    let sn = sres.sqrt();
                    let zn = zres.sqrt();
                    let sbar: Vec<f64> = sb.iter().map(|v| v / sn).collect();
                    let zbar: Vec<f64> = zb.iter().map(|v| v / zn).collect();
                    let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                    w[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                    for i in 1..d {
                        w[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                    }
                    // renormalize against round-off: w0 = sqrt(1 + ||w1||^2)
                    w[0] = (1.0 + dot(&w[1..], &w[1..])).sqrt();
                    *eta = (sn / zn).sqrt();
                    let mut out = vec![0.0; d];
                    soc_w_mul(*eta, w, zb, &mut out, false);
                    lambda[o..o + d].copy_from_slice(&out);
                }
            }
        }
        true
    }

    /// Jordan product `out = u o v`.
    pub fn circ(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => {
                    for i in *off..off + dim {
                        out[i] = u[i] * v[i];
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let (o, d) = (*off, *dim);
                    out[o] = dot(&u[o..o + d], &v[o..o + d]);
                    for i in 1..d {
                        out[o + i] = u[o] * v[o + i] + v[o] * u[o + i];
                    }
                }
            }
        }
    }

    /// Solves `lambda o out = v` for `out`.
    pub fn inv_circ(&self, lambda: &[f64], v: &[f64], out: &mut [f64]) {
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => {
                    for i in *off..off + dim {
                        out[i] = v[i] / lambda[i];
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let (o, d) = (*off, *dim);
                    let l = &lambda[o..o + d];
                    let vb = &v[o..o + d];
                    let rho = l[0] * l[0] - dot(&l[1..], &l[1..]);
                    let u0 = (l[0] * vb[0] - dot(&l[1..], &vb[1..])) / rho;
                    out[o] = u0;
                    for i in 1..d {
                        out[o + i] = (vb[i] - u0 * l[i]) / l[0];
                    }
                }
            }
        }
    }

    /// Maximum step `a <= cap` keeping `x + a dx` inside the cone.
    pub fn max_step(&self, x: &[f64], dx: &[f64], cap: f64) -> f64 {
        let mut a = cap;
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => {
                    for i in *off..off + dim {
                        if dx[i] < 0.0 {
                            a = a.min(-x[i] / dx[i]);
                        }
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let (o, d) = (*off, *dim);
                    a = a.min(soc_max_step(&x[o..o + d], &dx[o..o + d], cap));
                }
            }
        }
        a.max(0.0)
    }

    /// Fills the diagonal/blocks of `W^2` for the KKT matrix via a callback
    /// `(row, col, value)` over the upper triangle (row <= col), block by block.
    pub fn for_each_w2_upper(&self, mut f: impl FnMut(usize, usize, f64)) {
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => {
                    for i in *off..off + dim {
                        f(i, i, self.orthant_w[i] * self.orthant_w[i]);
                    }
                }
                Block::Soc { off, dim, eta, w } => {
                    let (o, d) = (*off, *dim);
                    // W^2 = eta^2 (2 w w' - J)
                    let e2 = eta * eta;
                    for j in 0..d {
                        for i in 0..=j {
                            let mut v = 2.0 * w[i] * w[j];
                            if i == j {
                                v += if i == 0 { -1.0 } else { 1.0 };
                            }
                            f(o + i, o + j, e2 * v);
                        }
                    }
                }
            }
        }
    }

    /// Upper-triangle sparsity pattern of `W^2`, in the same order as
    /// [`SymCones::for_each_w2_upper`].
    pub fn w2_pattern(&self) -> Vec<(usize, usize)> {
        let mut p = Vec::new();
        self.for_each_w2_upper(|i, j, _| p.push((i, j)));
        p
    }

    /// `out = W v` (or `W^{-1} v` when `inverse`).
    pub fn w_mul(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        for b in &self.blocks {
            match b {
                Block::Nonneg { off, dim } => {
                    for i in *off..off + dim {
                        let w = self.orthant_w[i];
                        out[i] = if inverse { v[i] / w } else { v[i] * w };
                    }
                }
                Block::Soc { off, dim, eta, w } => {
                    let (o, d) = (*off, *dim);
                    soc_w_mul(*eta, w, &v[o..o + d], &mut out[o..o + d], inverse);
                }
            }
        }
    }
}

/// `out = eta * W_bar v` (or its inverse), with
/// `W_bar = [w0 w1'; w1 I + w1 w1'/(1+w0)]`.
fn soc_w_mul(eta: f64, w: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let d = w.len();
    let w0 = w[0];
    let sgn = if inverse { -1.0 } else { 1.0 };
    let w1v1 = dot(&w[1..], &v[1..]);
    let scale = if inverse { 1.0 / eta } else { eta };
    out[0] = scale * (w0 * v[0] + sgn * w1v1);
    let c = sgn * v[0] + w1v1 / (1.0 + w0);
    for i in 1..d {
        out[i] = scale * (v[i] + c * w[i]);
    }
}

fn soc_max_step(x: &[f64], dx: &[f64], cap: f64) -> f64 {
    let a = dx[0] * dx[0] - dot(&dx[1..], &dx[1..]);
    let b = x[0] * dx[0] - dot(&x[1..], &dx[1..]);
    let c = (x[0] * x[0] - dot(&x[1..], &x[1..])).max(0.0);
    let mut best = cap;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if a.abs() < 1e-300 {
        if b < 0.0 {
            consider(-c / (2.0 * b));
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -(b + b.signum() * sq);
            if q != 0.0 {
                consider(q / a);
                consider(c / q);
            } else {
                consider((-b + sq) / a);
                consider((-b - sq) / a);
            }
        }
    }
    if dx[0] < 0.0 {
        consider(-x[0] / dx[0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soc_projection_cases() {
        let mut a = vec![5.0, 3.0, 4.0];
        project_soc(&mut a);
        assert_eq!(a, vec![5.0, 3.0, 4.0]);
        let mut b = vec![-5.0, 3.0, 4.0];
        project_soc(&mut b);
        assert_eq!(b, vec![0.0, 0.0, 0.0]);
        let mut c = vec![0.0, 3.0, 4.0];
        project_soc(&mut c);
        assert!((c[0] - 2.5).abs() < 1e-12 && (c[1] - 1.5).abs() < 1e-12 && (c[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let mut k = SymCones::new(&[Cone::Nonnegative(2), Cone::SecondOrder(3)]);
        let s = [1.0, 2.0, 3.0, 1.0, -0.5];
        let z = [4.0, 0.5, 2.0, -0.3, 1.2];
        let mut lam = vec![0.0; 5];
        assert!(k.update_scaling(&s, &z, &mut lam));
        let mut wz = vec![0.0; 5];
        let mut winvs = vec![0.0; 5];
        k.w_mul(&z, &mut wz, false);
        k.w_mul(&s, &mut winvs, true);
        for i in 0..5 {
            assert!((wz[i] - winvs[i]).abs() < 1e-12, "{i}: {} vs {}", wz[i], winvs[i]);
            assert!((wz[i] - lam[i]).abs() < 1e-12);
        }
        // W^2 blocks agree with W applied twice
        let mut w2 = vec![vec![0.0; 5]; 5];
        k.for_each_w2_upper(|i, j, v| {
            w2[i][j] = v;
            w2[j][i] = v;
        });
        let v = [0.3, -1.0, 0.7, 2.0, -0.4];
        let mut t = vec![0.0; 5];
        let mut tt = vec![0.0; 5];
        k.w_mul(&v, &mut t, false);
        k.w_mul(&t, &mut tt, false);
        for i in 0..5 {
            let direct: f64 = (0..5).map(|j| w2[i][j] * v[j]).sum();
            assert!((direct - tt[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_jordan_product() {
        let k = SymCones::new(&[Cone::Nonnegative(1), Cone::SecondOrder(3)]);
        let lam = [2.0, 3.0, 1.0, -1.5];
        let v = [1.0, 0.2, -0.7, 0.4];
        let mut u = vec![0.0; 4];
        k.inv_circ(&lam, &v, &mut u);
        let mut back = vec![0.0; 4];
        k.circ(&lam, &u, &mut back);
        for i in 0..4 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let x = [2.0, 0.0, 0.0];
        let dx = [0.0, 1.0, 0.0];
        let a = soc_max_step(&x, &dx, 10.0);
        assert!((a - 2.0).abs() < 1e-12);
        let dx2 = [1.0, 0.5, 0.0];
        assert_eq!(soc_max_step(&x, &dx2, 10.0), 10.0);
        let dx3 = [-1.0, 0.0, 0.0];
        assert!((soc_max_step(&x, &dx3, 10.0) - 2.0).abs() < 1e-12);
    }
}
