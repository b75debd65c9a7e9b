//! Sparse LDL' factorization for quasi-definite matrices.
//!
//! The symbolic phase computes an AMD fill-reducing ordering and the
//! elimination tree once; numeric refactorization reuses both, so a KKT
//! matrix whose pattern is fixed across iterations is analysed only once.

use crate::csc::CscMatrix;
use crate::SolverError;

const UNKNOWN: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<f64>,
    /// position of each input nonzero in the permuted storage
    map: Vec<usize>,
    signs: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    work: Vec<f64>,
    /// Number of pivots replaced by dynamic regularization in the last factorization.
    pub regularized_pivots: usize,
}

impl LdlFactor {
    /// Symbolic analysis of an upper-triangular pattern. `signs[i]` is the
    /// expected sign (+1 / -1) of pivot `i` in the original ordering.
    pub fn new(upper: &CscMatrix, signs: &[f64]) -> Result<Self, SolverError> {
        let n = upper.ncols;
        if upper.nrows != n || signs.len() != n {
            return Err(SolverError::Dimension("KKT matrix must be square".into()));
        }
        for j in 0..n {
            let has_diag = (upper.colptr[j]..upper.colptr[j + 1]).any(|k| upper.rowval[k] == j);
            if !has_diag {
                return Err(SolverError::Dimension(format!("missing diagonal entry {j}")));
            }
            if (upper.colptr[j]..upper.colptr[j + 1]).any(|k| upper.rowval[k] > j) {
                return Err(SolverError::Dimension("matrix is not upper triangular".into()));
            }
        }
        let (perm, iperm) = if n == 0 {
            (Vec::new(), Vec::new())
        } else {
            let control = amd::Control::default();
            let (p, pinv, _info) = amd::order(n, &upper.colptr, &upper.rowval, &control)
                .map_err(|s| SolverError::Numerical(format!("ordering failed: {s:?}")))?;
            (p, pinv)
        };

        // permuted upper triangle, remembering where each entry lands
        let mut counts = vec![0usize; n + 1];
        let mut dest = Vec::with_capacity(upper.nnz());
        for j in 0..n {
            for k in upper.colptr[j]..upper.colptr[j + 1] {
                let (pi, pj) = (iperm[upper.rowval[k]], iperm[j]);
                let (r, c) = if pi <= pj { (pi, pj) } else { (pj, pi) };
                dest.push((r, c));
                counts[c + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let ap = counts.clone();
        let mut next = counts;
        let mut ai = vec![0usize; upper.nnz()];
        let mut map = vec![0usize; upper.nnz()];
        for (k, &(r, c)) in dest.iter().enumerate() {
            let slot = next[c];
            ai[slot] = r;
            map[k] = slot;
            next[c] += 1;
        }

        // elimination tree and column counts
        let mut etree = vec![UNKNOWN; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![UNKNOWN; n];
        for j in 0..n {
            flag[j] = j;
            for p in ap[j]..ap[j + 1] {
                let mut i = ai[p];
                while flag[i] != j {
                    if etree[i] == UNKNOWN {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    flag[i] = j;
                    i = etree[i];
                    if i == UNKNOWN {
                        break;
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let psigns = (0..n).map(|i| signs[perm[i]]).collect();
        Ok(LdlFactor {
            n,
            perm,
            ap,
            ai,
            ax: vec![0.0; upper.nnz()],
            map,
            signs: psigns,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            work: vec![0.0; n],
            regularized_pivots: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization. `values` follows the nonzero order of the
    /// matrix passed to [`LdlFactor::new`]. Pivots whose sign disagrees with
    /// the expected sign (or are smaller than `eps`) are replaced by
    /// `sign * delta`.
    pub fn factor(&mut self, values: &[f64], eps: f64, delta: f64) -> Result<(), SolverError> {
        if values.len() != self.map.len() {
            return Err(SolverError::Dimension("value vector length mismatch".into()));
        }
        for v in self.ax.iter_mut() {
            *v = 0.0;
        }
        for (k, &slot) in self.map.iter().enumerate() {
            self.ax[slot] += values[k];
        }
        let n = self.n;
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        let mut marker = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let y = &mut self.work;
        y.iter_mut().for_each(|v| *v = 0.0);
        self.regularized_pivots = 0;

        for k in 0..n {
            let mut nnz_y = 0usize;
            self.d[k] = 0.0;
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    self.d[k] += self.ax[p];
                    continue;
                }
                y[b] += self.ax[p];
                if !marker[b] {
                    marker[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = self.etree[b];
                    while next != UNKNOWN && next < k {
                        if marker[next] {
                            break;
                        }
                        marker[next] = true;
                        elim[ne] = next;
                        ne += 1;
                        next = self.etree[next];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let slot = next_space[c];
                let yc = y[c];
                for j in self.lp[c]..slot {
                    y[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[slot] = k;
                let lval = yc * self.dinv[c];
                self.lx[slot] = lval;
                self.d[k] -= yc * lval;
                next_space[c] += 1;
                y[c] = 0.0;
                marker[c] = false;
            }
            let s = self.signs[k];
            if !(s * self.d[k] > eps) {
                self.d[k] = s * delta;
                self.regularized_pivots += 1;
            }
            if !self.d[k].is_finite() {
                return Err(SolverError::Numerical("non-finite pivot".into()));
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    /// Solves `L D L' x = b` in place (in the original ordering).
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
        for i in 0..n {
            b[self.perm[i]] = x[i];
        }
    }
}

/// `y = K x` for a symmetric matrix stored as its upper triangle.
pub(crate) fn sym_upper_mul(upper: &CscMatrix, values: &[f64], x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..upper.ncols {
        for k in upper.colptr[j]..upper.colptr[j + 1] {
            let i = upper.rowval[k];
            let v = values[k];
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper_of(dense: &[Vec<f64>]) -> CscMatrix {
        let n = dense.len();
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                if dense[i][j] != 0.0 || i == j {
                    t.push((i, j, dense[i][j]));
                }
            }
        }
        CscMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_quasi_definite_system() {
        // [ 4 1 2 ; 1 3 0 ; 2 0 -5 ] is quasi-definite with signs (+,+,-)
        let dense = vec![
            vec![4.0, 1.0, 2.0],
            vec![1.0, 3.0, 0.0],
            vec![2.0, 0.0, -5.0],
        ];
        let up = upper_of(&dense);
        let mut f = LdlFactor::new(&up, &[1.0, 1.0, -1.0]).unwrap();
        f.factor(&up.nzval, 1e-14, 1e-8).unwrap();
        let xs = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| dense[i][j] * xs[j]).sum()).collect();
        f.solve(&mut b);
        for i in 0..3 {
            assert!((b[i] - xs[i]).abs() < 1e-12);
        }
        assert_eq!(f.regularized_pivots, 0);
    }

    #[test]
    fn refactor_with_new_values() {
        let dense = vec![vec![2.0, 1.0], vec![1.0, -3.0]];
        let up = upper_of(&dense);
        let mut f = LdlFactor::new(&up, &[1.0, -1.0]).unwrap();
        f.factor(&up.nzval, 1e-14, 1e-8).unwrap();
        let vals: Vec<f64> = up.nzval.iter().map(|v| 2.0 * v).collect();
        f.factor(&vals, 1e-14, 1e-8).unwrap();
        let mut b = vec![2.0 * (2.0 + 1.0), 2.0 * (1.0 - 3.0)];
        f.solve(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
    }
}
