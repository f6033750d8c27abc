//! Structured P1 triangulations of the unit square.
//!
//! Vertices are numbered row by row, `index = j * (n + 1) + i` for the grid
//! point `(i / n, j / n)`. Every cell is split along its `(i, j)`–`(i+1, j+1)`
//! diagonal, so the same `n` always yields the same mesh bit for bit.
//!
//! The boundary is stored as a closed loop starting at the origin and running
//! counterclockwise. Boundary traces are indexed by position in that loop.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Barycentric tolerance used when deciding whether a point lies in a triangle.
const CONTAINMENT_EPS: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub start: usize,
    pub end: usize,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    n_per_side: usize,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<BoundaryEdge>,
    interior_nodes: Vec<usize>,
    /// Position of each vertex in `boundary_nodes`, if any.
    boundary_slot: Vec<Option<usize>>,
    /// Position of each vertex in `interior_nodes`, if any.
    interior_slot: Vec<Option<usize>>,
    /// Lumped boundary mass: half the length of the two adjacent boundary edges.
    boundary_mass: Vec<f64>,
}

/// A point located inside a mesh triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointLocation {
    pub point: Point,
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

impl Mesh {
    /// Builds the `n x n` cell triangulation of `[0,1]^2`.
    pub fn build_structured(n_per_side: usize) -> Result<Self> {
        if n_per_side < 2 {
            return Err(Error::TooFewCells(n_per_side));
        }
        let n = n_per_side;
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| j * (n + 1) + i;

        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        // Exact endpoints, independent of rounding in i * h.
        for v in vertices.iter_mut() {
            for c in v.iter_mut() {
                if (*c - 1.0).abs() < 0.5 * h {
                    *c = 1.0;
                }
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = idx(i, j);
                let b = idx(i + 1, j);
                let c = idx(i + 1, j + 1);
                let d = idx(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        let mut boundary_nodes = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary_nodes.push(idx(i, 0));
        }
        for j in 0..n {
            boundary_nodes.push(idx(n, j));
        }
        for i in (1..=n).rev() {
            boundary_nodes.push(idx(i, n));
        }
        for j in (1..=n).rev() {
            boundary_nodes.push(idx(0, j));
        }

        let nb = boundary_nodes.len();
        let boundary_edges: Vec<BoundaryEdge> = (0..nb)
            .map(|k| {
                let start = boundary_nodes[k];
                let end = boundary_nodes[(k + 1) % nb];
                BoundaryEdge {
                    start,
                    end,
                    length: distance(vertices[start], vertices[end]),
                }
            })
            .collect();

        let mut boundary_slot = vec![None; vertices.len()];
        for (k, &v) in boundary_nodes.iter().enumerate() {
            boundary_slot[v] = Some(k);
        }
        let interior_nodes: Vec<usize> = (0..vertices.len())
            .filter(|&v| boundary_slot[v].is_none())
            .collect();
        let mut interior_slot = vec![None; vertices.len()];
        for (k, &v) in interior_nodes.iter().enumerate() {
            interior_slot[v] = Some(k);
        }

        let boundary_mass = (0..nb)
            .map(|k| 0.5 * (boundary_edges[k].length + boundary_edges[(k + nb - 1) % nb].length))
            .collect();

        Ok(Self {
            n_per_side,
            vertices,
            triangles,
            boundary_nodes,
            boundary_edges,
            interior_nodes,
            boundary_slot,
            interior_slot,
            boundary_mass,
        })
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn node_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn boundary_slot(&self, vertex: usize) -> Option<usize> {
        self.boundary_slot[vertex]
    }

    pub fn interior_slot(&self, vertex: usize) -> Option<usize> {
        self.interior_slot[vertex]
    }

    /// Lumped boundary mass per boundary-loop position.
    pub fn boundary_mass(&self) -> &[f64] {
        &self.boundary_mass
    }

    /// Arclength parameter of each boundary node along the loop, in `[0, 4)`.
    pub fn boundary_arclength(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.boundary_edges.len());
        let mut acc = 0.0;
        for e in &self.boundary_edges {
            t.push(acc);
            acc += e.length;
        }
        t
    }

    /// Signed area of triangle `t` (positive for counterclockwise ordering).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Gradients of the three P1 hat functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        let (p0, p1, p2) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let two_area = 2.0 * signed_area(p0, p1, p2);
        [
            [(p1[1] - p2[1]) / two_area, (p2[0] - p1[0]) / two_area],
            [(p2[1] - p0[1]) / two_area, (p0[0] - p2[0]) / two_area],
            [(p0[1] - p1[1]) / two_area, (p1[0] - p0[0]) / two_area],
        ]
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (p0, p1, p2) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let area = signed_area(p0, p1, p2);
        let l0 = signed_area(p, p1, p2) / area;
        let l1 = signed_area(p0, p, p2) / area;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Finds the lowest-index triangle containing an interior point.
    pub fn locate(&self, point: Point) -> Result<PointLocation> {
        let [x, y] = point;
        let inside = x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0;
        if !inside || !x.is_finite() || !y.is_finite() {
            return Err(Error::PointNotInterior { x, y });
        }
        for t in 0..self.triangles.len() {
            let bary = self.barycentric(t, point);
            if bary.iter().all(|&l| l >= -CONTAINMENT_EPS) {
                let mut clamped = bary.map(|l| l.max(0.0));
                let sum: f64 = clamped.iter().sum();
                clamped.iter_mut().for_each(|l| *l /= sum);
                return Ok(PointLocation {
                    point,
                    triangle: t,
                    barycentric: clamped,
                });
            }
        }
        // Unreachable for points strictly inside the square.
        Err(Error::PointNotInterior { x, y })
    }

    /// Nodal values of a function sampled at the vertices.
    pub fn sample_nodes(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|&p| f(p)).collect()
    }

    /// Values of a function at the boundary nodes, in loop order.
    pub fn sample_boundary(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.boundary_nodes
            .iter()
            .map(|&v| f(self.vertices[v]))
            .collect()
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn distance(a: Point, b: Point) -> f64 {
    libm::hypot(b[0] - a[0], b[1] - a[1])
}
