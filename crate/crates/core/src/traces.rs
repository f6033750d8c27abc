//! Seeded random boundary data.
//!
//! A random trace is a truncated Fourier series in the normalized loop
//! parameter `t = arclength / perimeter`, with coefficients drawn from
//! `N(0, 1) / (1 + k^2)` for the modes `k = 0..=8`. The decay keeps samples
//! smooth, and the seed makes every draw reproducible.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::elliptic::BoundaryTrace;
use crate::mesh::Mesh;

pub const FOURIER_MODES: usize = 8;

pub struct TraceSampler {
    rng: ChaCha8Rng,
}

impl TraceSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// A random smooth trace on the boundary loop.
    pub fn fourier_trace(&mut self, mesh: &Mesh) -> BoundaryTrace {
        let a0 = self.normal();
        let modes: Vec<(f64, f64)> = (1..=FOURIER_MODES)
            .map(|k| {
                let decay = 1.0 / (1.0 + (k * k) as f64);
                (self.normal() * decay, self.normal() * decay)
            })
            .collect();
        let perimeter: f64 = mesh.boundary_edges().iter().map(|e| e.length).sum();
        let values = mesh
            .boundary_arclength()
            .into_iter()
            .map(|arc| {
                let t = arc / perimeter;
                a0 + modes
                    .iter()
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let w = TAU * (i + 1) as f64 * t;
                        a * libm::cos(w) + b * libm::sin(w)
                    })
                    .sum::<f64>()
            })
            .collect();
        BoundaryTrace::new(mesh, values).expect("one value per boundary node")
    }

    /// A random unit vector in the plane.
    pub fn unit_direction(&mut self) -> [f64; 2] {
        loop {
            let v = [self.normal(), self.normal()];
            let n = libm::hypot(v[0], v[1]);
            if n > 1e-8 {
                return [v[0] / n, v[1] / n];
            }
        }
    }
}

/// Trace of the coordinate function `x_{axis+1}`.
pub fn coordinate_trace(mesh: &Mesh, axis: usize) -> BoundaryTrace {
    BoundaryTrace::from_fn(mesh, |p| p[axis])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_trace() {
        let mesh = Mesh::build_structured(8).unwrap();
        let a = TraceSampler::new(7).fourier_trace(&mesh);
        let b = TraceSampler::new(7).fourier_trace(&mesh);
        let c = TraceSampler::new(8).fourier_trace(&mesh);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn trace_is_periodic_along_loop() {
        // The last node sits one edge before the loop closes, so the jump
        // back to the first node is one edge-length step of a smooth function.
        let mesh = Mesh::build_structured(64).unwrap();
        let t = TraceSampler::new(3).fourier_trace(&mesh);
        let jump = (t.values()[0] - t.values()[t.len() - 1]).abs();
        assert!(jump < 0.5);
    }
}
