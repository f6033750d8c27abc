//! Sparse symmetric linear algebra.
//!
//! [`SpdSolver`] owns a matrix together with whatever it needs to solve with
//! it (an envelope Cholesky factor or a Jacobi preconditioner), built once at
//! construction. Solves borrow the solver immutably, so one factorization can
//! serve any number of concurrent right-hand sides.

mod dense;
mod envelope;
mod sparse;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense::{symmetric_eigenvalues, DenseCholesky};
pub use envelope::EnvelopeCholesky;
pub use sparse::SparseMatrix;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest envelope (stored factor entries) the automatic strategy factors directly.
const MAX_DIRECT_ENVELOPE: usize = 50_000_000;

const REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Direct,
    Cg,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Direct,
    Cg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub choice: SolverChoice,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            choice: SolverChoice::Auto,
            tol: DEFAULT_TOL,
        }
    }
}

impl SolveOptions {
    pub fn cg(tol: f64) -> Self {
        Self {
            choice: SolverChoice::Cg,
            tol,
        }
    }

    pub fn direct(tol: f64) -> Self {
        Self {
            choice: SolverChoice::Direct,
            tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||Ax - b|| / ||b||`.
    pub final_residual: f64,
    pub method: SolveMethod,
}

enum Backend {
    Direct(EnvelopeCholesky),
    Cg { inv_diag: Vec<f64> },
}

/// A symmetric positive definite matrix prepared for repeated solves.
pub struct SpdSolver {
    matrix: SparseMatrix,
    backend: Backend,
    tol: f64,
}

impl SpdSolver {
    pub fn new(matrix: SparseMatrix, opts: SolveOptions) -> Result<Self> {
        if matrix.n_rows() != matrix.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "SPD solver needs a square matrix",
                expected: matrix.n_rows(),
                actual: matrix.n_cols(),
            });
        }
        let direct = match opts.choice {
            SolverChoice::Direct => true,
            SolverChoice::Cg => false,
            SolverChoice::Auto => EnvelopeCholesky::envelope_size(&matrix) <= MAX_DIRECT_ENVELOPE,
        };
        let backend = if direct {
            Backend::Direct(EnvelopeCholesky::factor(&matrix)?)
        } else {
            let inv_diag = (0..matrix.n_rows())
                .map(|i| {
                    let d = matrix.get(i, i);
                    if d > 0.0 {
                        Ok(1.0 / d)
                    } else {
                        Err(Error::NotPositiveDefinite { row: i, pivot: d })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Backend::Cg { inv_diag }
        };
        Ok(Self {
            matrix,
            backend,
            tol: opts.tol,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn method(&self) -> SolveMethod {
        match self.backend {
            Backend::Direct(_) => SolveMethod::Direct,
            Backend::Cg { .. } => SolveMethod::Cg,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "right-hand side length",
                expected: n,
                actual: b.len(),
            });
        }
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok((
                vec![0.0; n],
                SolveReport {
                    iterations: 0,
                    final_residual: 0.0,
                    method: self.method(),
                },
            ));
        }
        match &self.backend {
            Backend::Direct(chol) => {
                let mut x = chol.solve(b);
                let mut residual = residual_vec(&self.matrix, &x, b);
                let mut rel = norm(&residual) / b_norm;
                let mut steps = 0;
                while rel > self.tol && steps < REFINEMENT_STEPS {
                    let dx = chol.solve(&residual);
                    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
                    residual = residual_vec(&self.matrix, &x, b);
                    rel = norm(&residual) / b_norm;
                    steps += 1;
                }
                let report = SolveReport {
                    iterations: steps,
                    final_residual: rel,
                    method: SolveMethod::Direct,
                };
                if rel > self.tol {
                    return Err(Error::NotConverged {
                        tol: self.tol,
                        report,
                    });
                }
                Ok((x, report))
            }
            Backend::Cg { inv_diag } => {
                let (x, report) = preconditioned_cg(
                    |v| self.matrix.mul_vec(v).expect("square operator"),
                    |r| r.iter().zip(inv_diag).map(|(ri, d)| ri * d).collect(),
                    b,
                    self.tol,
                    20 * n,
                );
                if report.final_residual > self.tol {
                    return Err(Error::NotConverged {
                        tol: self.tol,
                        report,
                    });
                }
                Ok((x, report))
            }
        }
    }
}

/// One-shot solve of an SPD system.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    check_rhs(a, b)?;
    SpdSolver::new(
        a.clone(),
        SolveOptions {
            choice: SolverChoice::Auto,
            tol,
        },
    )?
    .solve(b)
}

/// Solves `A^T x = b`.
///
/// Symmetric matrices go through [`solve`]. Anything else is handled by CG
/// on the normal equations `A A^T x = A b`, which is only meant for small
/// systems.
pub fn solve_transpose(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    check_rhs(a, b)?;
    if a.is_symmetric(1e-14) {
        return solve(a, b, tol);
    }
    let n = a.n_rows();
    if norm(b) == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                final_residual: 0.0,
                method: SolveMethod::Cg,
            },
        ));
    }
    let ab = a.mul_vec(b)?;
    let (x, mut report) = preconditioned_cg(
        |v| {
            let t = a.mul_vec_transpose(v).expect("square operator");
            a.mul_vec(&t).expect("square operator")
        },
        |r| r.to_vec(),
        &ab,
        tol * 1e-2,
        20 * n.max(1),
    );
    let at_x = a.mul_vec_transpose(&x)?;
    let r: Vec<f64> = at_x.iter().zip(b).map(|(p, q)| q - p).collect();
    report.final_residual = norm(&r) / norm(b);
    if report.final_residual > tol {
        return Err(Error::NotConverged { tol, report });
    }
    Ok((x, report))
}

fn check_rhs(a: &SparseMatrix, b: &[f64]) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "solve needs a square matrix",
            expected: a.n_rows(),
            actual: a.n_cols(),
        });
    }
    if b.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "right-hand side length",
            expected: a.n_rows(),
            actual: b.len(),
        });
    }
    Ok(())
}

fn preconditioned_cg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveReport) {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    while iterations < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;
        if norm(&r) / b_norm <= tol {
            break;
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    // Recompute the true residual; the recursive one drifts.
    let true_rel = {
        let ax = apply(&x);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        norm(&res) / b_norm
    };
    (
        x,
        SolveReport {
            iterations,
            final_residual: true_rel,
            method: SolveMethod::Cg,
        },
    )
}

fn residual_vec(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x).expect("square operator");
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}
