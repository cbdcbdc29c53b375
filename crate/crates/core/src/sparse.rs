// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Compressed sparse row storage for complex operators and superoperators.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex matrix in CSR layout. Column indices within a row are sorted and
/// unique; explicit zeros are dropped on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let n = values.len();
        Self::from_triplets(n, n, values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        Self::from_rows(ncols, rows)
    }

    /// Builds a matrix from unsorted per-row entry lists.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = ZERO;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != ZERO {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn from_dense(a: &Array2<Complex64>) -> Self {
        let (n, m) = a.dim();
        Self::from_triplets(
            n,
            m,
            a.indexed_iter()
                .filter(|(_, v)| **v != ZERO)
                .map(|((i, j), v)| (i, j, *v)),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Entries of row `r` as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[s..e]
            .iter()
            .copied()
            .zip(self.data[s..e].iter().copied())
    }

    /// All stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[s..e].binary_search(&c) {
            Ok(k) => self.data[s + k],
            Err(_) => ZERO,
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.ncols];
        for (r, c, v) in self.iter() {
            rows[c].push((r, v));
        }
        Self::from_rows(self.nrows, rows)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out.prune();
        out
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: Complex64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let rows = (0..self.nrows)
            .map(|r| {
                self.row(r)
                    .chain(other.row(r).map(|(c, v)| (c, alpha * v)))
                    .collect()
            })
            .collect();
        Ok(Self::from_rows(self.ncols, rows))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let rows = (0..self.nrows)
            .map(|r| {
                let mut acc = Vec::new();
                for (k, a) in self.row(r) {
                    acc.extend(other.row(k).map(|(c, b)| (c, a * b)));
                }
                acc
            })
            .collect();
        Ok(Self::from_rows(other.ncols, rows))
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add_scaled(&ba, Complex64::new(-1.0, 0.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (m, n) = other.shape();
        let mut rows = Vec::with_capacity(self.nrows * m);
        for r in 0..self.nrows {
            for s in 0..m {
                let mut row = Vec::new();
                for (c, a) in self.row(r) {
                    row.extend(other.row(s).map(|(d, b)| (c * n + d, a * b)));
                }
                rows.push(row);
            }
        }
        Self::from_rows(self.ncols * n, rows)
    }

    /// Submatrix with the given row and column index lists.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let out_rows = rows
            .iter()
            .map(|&r| {
                self.row(r)
                    .filter(|(c, _)| col_pos[*c] != usize::MAX)
                    .map(|(c, v)| (col_pos[c], v))
                    .collect()
            })
            .collect();
        Self::from_rows(cols.len(), out_rows)
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.iter() {
            a[[r, c]] = v;
        }
        a
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum (induced 1-norm).
    pub fn norm_one(&self) -> f64 {
        let mut cols = vec![0.0; self.ncols];
        for (_, c, v) in self.iter() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let diff = match self.add_scaled(&self.adjoint(), Complex64::new(-1.0, 0.0)) {
            Ok(d) => d,
            Err(_) => return false,
        };
        diff.frobenius_norm() <= rel_tol * self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    pub fn diagonal_values(&self) -> Vec<Complex64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Copy into a faer column-major sparse matrix, optionally shifted by `-sigma * I`.
    pub(crate) fn to_faer_shifted(
        &self,
        sigma: Complex64,
    ) -> Result<faer::sparse::SparseColMat<usize, Complex64>> {
        use faer::sparse::Triplet;
        let mut trip: Vec<Triplet<usize, usize, Complex64>> =
            self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        if sigma != ZERO {
            trip.extend((0..self.nrows).map(|i| Triplet::new(i, i, -sigma)));
        }
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
    }

    fn prune(&mut self) {
        if self.data.iter().all(|v| *v != ZERO) {
            return;
        }
        let rows = (0..self.nrows).map(|r| self.row(r).collect()).collect();
        *self = Self::from_rows(self.ncols, rows);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            [
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(2.0, 0.0)),
                (1, 0, c(1.0, 0.0)),
                (1, 0, c(-1.0, 0.0)),
            ],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
    }

    #[test]
    fn kron_matches_dense_definition() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, c(1.0, 1.0)), (1, 1, c(2.0, 0.0))]);
        let b = SparseMatrix::from_triplets(2, 3, [(0, 2, c(3.0, 0.0)), (1, 0, c(0.0, -1.0))]);
        let k = a.kron(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..3 {
                        assert_eq!(k[[i * 2 + p, j * 3 + q]], ad[[i, j]] * bd[[p, q]]);
                    }
                }
            }
        }
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, c(0.0, 1.0)), (1, 0, c(2.0, 0.0))]);
        let p = a.matmul(&a.adjoint()).unwrap();
        assert_eq!(p.get(0, 0), c(1.0, 0.0));
        assert_eq!(p.get(1, 1), c(4.0, 0.0));
        assert!(p.is_hermitian(1e-14));
        assert!(!a.is_hermitian(1e-14));
    }

    #[test]
    fn restrict_picks_submatrix() {
        let a = SparseMatrix::from_dense(&ndarray::arr2(&[
            [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
            [c(4.0, 0.0), c(5.0, 0.0), c(6.0, 0.0)],
            [c(7.0, 0.0), c(8.0, 0.0), c(9.0, 0.0)],
        ]));
        let s = a.restrict(&[0, 2], &[1, 2]);
        assert_eq!(
            s.to_dense(),
            ndarray::arr2(&[[c(2.0, 0.0), c(3.0, 0.0)], [c(8.0, 0.0), c(9.0, 0.0)]])
        );
    }
}
