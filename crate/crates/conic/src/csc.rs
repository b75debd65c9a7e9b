//! Compressed sparse column storage.

/// Sparse matrix in compressed sparse column format.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowval: Vec<usize>,
    pub nzval: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowval: Vec::new(),
            nzval: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed;
    /// explicit zeros are kept so that the sparsity pattern is stable.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of range");
            counts[c + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = next[c];
            rows[k] = r;
            vals[k] = v;
            next[c] += 1;
        }
        // sort each column and merge duplicates
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowval = Vec::with_capacity(triplets.len());
        let mut nzval = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            scratch.extend((counts[j]..counts[j + 1]).map(|k| (rows[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(r, v) in &scratch {
                if last == Some(r) {
                    *nzval.last_mut().unwrap() += v;
                } else {
                    rowval.push(r);
                    nzval.push(v);
                    last = Some(r);
                }
            }
            colptr[j + 1] = rowval.len();
        }
        CscMatrix {
            nrows,
            ncols,
            colptr,
            rowval,
            nzval,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rowval.len()
    }

    /// `y += alpha * A x`
    pub fn gemv(&self, x: &[f64], y: &mut [f64], alpha: f64) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowval[k]] += self.nzval[k] * xj;
            }
        }
    }

    /// `y += alpha * A' x`
    pub fn gemv_t(&self, x: &[f64], y: &mut [f64], alpha: f64) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for k in self.colptr[j]..self.colptr[j + 1] {
                acc += self.nzval[k] * x[self.rowval[k]];
            }
            y[j] += alpha * acc;
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                trip.push((j, self.rowval[k], self.nzval[k]));
            }
        }
        CscMatrix::from_triplets(self.ncols, self.nrows, &trip)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                d[self.rowval[k]][j] += self.nzval[k];
            }
        }
        d
    }

    /// Selects a contiguous block of rows.
    pub fn row_slice(&self, start: usize, end: usize) -> CscMatrix {
        let mut trip = Vec::new();
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                let r = self.rowval[k];
                if r >= start && r < end {
                    trip.push((r - start, j, self.nzval[k]));
                }
            }
        }
        CscMatrix::from_triplets(end - start, self.ncols, &trip)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_multiply() {
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 2, 2.0), (0, 0, 3.0), (1, 0, -1.0)]);
        assert_eq!(a.nnz(), 3);
        let mut y = vec![0.0; 2];
        a.gemv(&[1.0, 5.0, 2.0], &mut y, 1.0);
        assert_eq!(y, vec![4.0, 3.0]);
        let mut z = vec![0.0; 3];
        a.gemv_t(&[1.0, 1.0], &mut z, 2.0);
        assert_eq!(z, vec![6.0, 0.0, 4.0]);
        assert_eq!(a.transpose().transpose(), a);
    }
}
