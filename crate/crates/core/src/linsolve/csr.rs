use std::fmt::Write as _;

use nalgebra::DMatrix;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Coordinate-format accumulator; duplicates are summed on build.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols, "({row},{col}) out of bounds");
        if val != 0.0 {
            self.entries.push((row, col, val));
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn build(mut self) -> SparseMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; self.nrows + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            offsets[r + 1] += offsets[r];
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            offsets,
            cols,
            vals,
        }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        let mut t = Triplets::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            t.push(i, i, v);
        }
        t.build()
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Triplets::new(a.nrows(), a.ncols());
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                t.push(r, c, a[(r, c)]);
            }
        }
        t.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                a[(r, c)] += v;
            }
        }
        a
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.offsets[r]..self.offsets[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let span = self.offsets[r]..self.offsets[r + 1];
            *yr = self.cols[span.clone()]
                .iter()
                .zip(&self.vals[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    /// y += alpha A x
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let s: f64 = self.row(r).map(|(c, v)| v * x[c]).sum();
            *yr += alpha * s;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut cols = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let k = next[c];
                cols[k] = r;
                vals[k] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            offsets,
            cols,
            vals,
        }
    }

    /// Sparse product A B using a dense row accumulator.
    pub fn matmul(&self, b: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut mark = vec![usize::MAX; b.ncols];
        let mut touched = Vec::new();
        let mut offsets = Vec::with_capacity(self.nrows + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, v) in b.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * v;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != 0.0 {
                    cols.push(c);
                    vals.push(acc[c]);
                }
            }
            offsets.push(cols.len());
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: b.ncols,
            offsets,
            cols,
            vals,
        }
    }

    /// alpha A + beta B
    pub fn add(&self, alpha: f64, b: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (b.nrows, b.ncols));
        let mut t = Triplets::new(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(r, c, alpha * v);
            }
            for (c, v) in b.row(r) {
                t.push(r, c, beta * v);
            }
        }
        t.build()
    }

    /// Scales row r by d[r].
    pub fn scale_rows(&self, d: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in self.offsets[r]..self.offsets[r + 1] {
                out.vals[k] *= d[r];
            }
        }
        out
    }

    /// Submatrix with the given (sorted or not) row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let mut t = Triplets::new(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if map[c] != usize::MAX {
                    t.push(i, map[c], v);
                }
            }
        }
        t.build()
    }

    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let _ = writeln!(s, "{} {} {:.16e}", r + 1, c + 1, v);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMatrix {
        let mut t = Triplets::new(3, 4);
        t.push(0, 3, 1.0);
        t.push(0, 0, 2.0);
        t.push(0, 3, 0.5);
        t.push(2, 1, -1.0);
        t.push(1, 2, 0.0);
        t.build()
    }

    #[test]
    fn triplets_sorted_and_summed() {
        let a = sample();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.row(0).collect::<Vec<_>>(), vec![(0, 2.0), (3, 1.5)]);
        assert_eq!(a.row_nnz(1), 0);
        assert_eq!(a.get(2, 1), -1.0);
        assert_eq!(a.get(2, 2), 0.0);
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = a.transpose();
        assert_eq!(b.to_dense(), a.to_dense().transpose());
        let ab = a.matmul(&b);
        assert_eq!(ab.to_dense(), a.to_dense() * b.to_dense());
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = a.mul_vec(&x);
        assert_eq!(y, vec![8.0, 0.0, -2.0]);
        let s = a.add(2.0, &a, -1.0);
        assert_eq!(s.to_dense(), a.to_dense());
        let sub = a.submatrix(&[2, 0], &[1, 3]);
        assert_eq!(sub.to_dense(), DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.5]));
    }

    #[test]
    fn matrix_market_header() {
        let mm = SparseMatrix::identity(2).to_matrix_market();
        assert!(mm.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 "));
    }
}
