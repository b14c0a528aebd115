//! Compressed sparse row storage used for assembly and patch extraction.
//! Factorizations go through `faer`.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{LodError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; explicit zeros are kept.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted = triplets.to_vec();
        sorted.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
            .collect();
        Self::from_triplets(rows.len(), n_cols, &triplets)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).filter(|&(j, _)| j == c).map(|(_, v)| v).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n_rows);
        let mut out = vec![0.0; self.n_cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (c, v) in self.row(r) {
                    out[c] += v * yr;
                }
            }
        }
        out
    }

    pub fn dot_form(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n_rows)
            .map(|r| x[r] * self.row(r).map(|(c, v)| v * y[c]).sum::<f64>())
            .sum()
    }

    /// Rows `rows` and columns `cols` (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let local = local_index(self.n_cols, cols);
        let mut triplets = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if local[c] != usize::MAX {
                    triplets.push((i, local[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &triplets)
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut t = self.triplets();
        t.extend(other.triplets());
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, &t)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji|`
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &t).map_err(|e| LodError::Factorization {
            context: "sparse conversion".into(),
            reason: format!("{e:?}"),
        })
    }
}

/// Inverse of an index list: `local[global] = position` or `usize::MAX`.
pub fn local_index(n: usize, globals: &[usize]) -> Vec<usize> {
    let mut local = vec![usize::MAX; n];
    for (i, &g) in globals.iter().enumerate() {
        local[g] = i;
    }
    local
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
