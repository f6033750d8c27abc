use alloc::string::String;

use thiserror::Error;

use crate::linalg::SolveReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("a structured mesh needs at least 2 cells per side, got {0}")]
    TooFewCells(usize),

    #[error("point ({x}, {y}) is not strictly inside the unit square")]
    PointNotInterior { x: f64, y: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("linear solve did not reach tolerance {tol:e}: {report:?}")]
    NotConverged { tol: f64, report: SolveReport },

    #[error("coefficient value {value} on element {element} lies outside [{lower}, {upper}]")]
    CoefficientOutOfBounds {
        element: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("coefficients live on different meshes ({0} vs {1} elements)")]
    MeshMismatch(usize, usize),

    #[error(
        "adjoint flux degenerate: |flux|^2 = {flux_norm_sq:e} for |y|^2 = {direction_norm_sq:e}"
    )]
    DegenerateFlux {
        flux_norm_sq: f64,
        direction_norm_sq: f64,
    },

    #[error("fluxes numerically dependent: Gram condition number {0:e}")]
    DependentFluxes(f64),

    #[error("naive scheme hit a critical point at s = {s}")]
    CriticalPoint { s: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
