//! Envelope (profile) Cholesky factorization.
//!
//! Row `i` of the lower factor is stored densely from its first structural
//! nonzero column up to the diagonal. For the row-major node numbering of a
//! structured grid the envelope width is about one grid row, which keeps the
//! factor small without a fill-reducing ordering.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    first_col: Vec<usize>,
    /// Start of row `i` inside `entries`.
    offsets: Vec<usize>,
    entries: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Number of stored factor entries the matrix would need.
    pub fn envelope_size(a: &SparseMatrix) -> usize {
        (0..a.n_rows()).map(|i| i + 1 - first_nonzero(a, i)).sum()
    }

    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                context: "Cholesky of non-square matrix",
                expected: n,
                actual: a.n_cols(),
            });
        }
        let first_col: Vec<usize> = (0..n).map(|i| first_nonzero(a, i)).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + i + 1 - first_col[i]);
        }
        let mut entries = vec![0.0; offsets[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    entries[offsets[i] + j - first_col[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first_col[i];
            let row_i = offsets[i];
            for j in fi..=i {
                let fj = first_col[j];
                let row_j = offsets[j];
                let start = fi.max(fj);
                let mut sum = entries[row_i + j - fi];
                for k in start..j {
                    sum -= entries[row_i + k - fi] * entries[row_j + k - fj];
                }
                if j == i {
                    if !(sum > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    entries[row_i + i - fi] = libm::sqrt(sum);
                } else {
                    entries[row_i + j - fi] = sum / entries[row_j + j - fj];
                }
            }
        }
        Ok(Self {
            n,
            first_col,
            offsets,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first_col[i];
            let row = self.offsets[i];
            let mut sum = y[i];
            for k in fi..i {
                sum -= self.entries[row + k - fi] * y[k];
            }
            y[i] = sum / self.entries[row + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first_col[i];
            let row = self.offsets[i];
            y[i] /= self.entries[row + i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.entries[row + k - fi] * yi;
            }
        }
        y
    }
}

fn first_nonzero(a: &SparseMatrix, i: usize) -> usize {
    a.row(i).map(|(j, _)| j).next().map_or(i, |j| j.min(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_tridiagonal() {
        let a = SparseMatrix::from_dense(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let chol = EnvelopeCholesky::factor(&a).unwrap();
        let x = chol.solve(&[1.0, 0.0, 1.0]);
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
        assert_eq!(EnvelopeCholesky::envelope_size(&a), 5);
    }

    #[test]
    fn rejects_indefinite() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            EnvelopeCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }
}
