use std::io::Write;

use rayon::prelude::*;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Rows per rayon task in matrix-vector products.
const ROW_CHUNK: usize = 2048;

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates
    /// in their input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, preserving input order within a row
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.values.iter_mut() {
            *v *= s;
        }
    }

    /// `y = A x`. Rows are processed in parallel blocks; each entry is a
    /// fixed-order sum, so the result does not depend on the thread count.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row_dot = |i: usize| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>()
        };
        if self.nrows >= 2 * ROW_CHUNK {
            y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * ROW_CHUNK;
                for (k, yi) in ys.iter_mut().enumerate() {
                    *yi = row_dot(base + k);
                }
            });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&c, &v)| v * y[c]).sum::<f64>()
            })
            .sum()
    }

    /// Submatrix with the given rows and columns (both in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &r in rows {
            let (cs, vs) = self.row(r);
            let mut entries: Vec<(usize, f64)> = cs
                .iter()
                .zip(vs)
                .filter(|(&c, _)| col_map[c] != usize::MAX)
                .map(|(&c, &v)| (col_map[c], v))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), row_ptr, col_idx, values }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&c, &v) in cs.iter().zip(vs) {
                triplets.push((c, i, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, &triplets)
    }

    /// `max |A - A^T| / max |A|` (0 for the zero matrix).
    pub fn symmetry_error(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut err: f64 = 0.0;
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                err = err.max((v - self.get(j, i)).abs());
            }
        }
        err / scale
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn from_dense(d: &nalgebra::DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != 0.0 {
                    triplets.push((i, j, d[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(d.nrows(), d.ncols(), &triplets)
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}
