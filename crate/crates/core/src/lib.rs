//! Boundary-control homotopy for gradient constraints of elliptic solutions.
//!
//! Given a diffusion coefficient `gamma` on the unit square and interior
//! points, the crate evolves Dirichlet data `f_s` along the coefficient path
//! `gamma_s = (1 - s) gamma_0 + s gamma` so that `|grad u_s(x)|` (or a
//! multilinear form of several gradients) never decreases. The velocity of
//! `f_s` is the minimal-L2 boundary control computed from an adjoint solve
//! with a dipole source.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front-end live in the `hbc` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coefficients;
pub mod control;
pub mod elliptic;
pub mod error;
pub mod homotopy;
pub mod linalg;
pub mod mesh;
pub mod traces;
pub mod verify;

pub use error::{Error, Result};
