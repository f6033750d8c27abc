//! P1 finite elements for `div(gamma grad u) = 0` with Dirichlet data.
//!
//! Three problems share one assembled operator per coefficient:
//!
//! * the primal Dirichlet problem `K_II u_I = -K_IB f + r_I`,
//! * the linearized problem, whose volume source is `-K(gamma') u`,
//! * the adjoint problem with the dipole load `r_j = y . grad phi_j(x)`.
//!
//! The dipole load is the exact representer of `w -> y . grad w(x)` on P1
//! fields, and the boundary flux is recovered from the residual of the full
//! stiffness matrix. Together they make the discrete Green identity
//!
//! ```text
//! y . grad v(x) = -lambda_I^T [K(gamma') u]_I - sum_b m_b flux_b g_b
//! ```
//!
//! hold to solver precision for every boundary datum `g`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::coefficients::Coefficient;
use crate::error::{Error, Result};
use crate::linalg::{SolveOptions, SparseMatrix, SpdSolver};
use crate::mesh::{Mesh, PointLocation};

/// Nodal values of a P1 function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field(Vec<f64>);

/// Values at the boundary nodes, in boundary-loop order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace(Vec<f64>);

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        check_len("field", mesh.node_count(), values.len())?;
        Ok(Self(values))
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self(vec![0.0; mesh.node_count()])
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self(mesh.sample_nodes(f))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Restriction to the boundary nodes.
    pub fn trace(&self, mesh: &Mesh) -> BoundaryTrace {
        BoundaryTrace(mesh.boundary_nodes().iter().map(|&v| self.0[v]).collect())
    }
}

impl BoundaryTrace {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        check_len("boundary trace", mesh.boundary_nodes().len(), values.len())?;
        Ok(Self(values))
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self(vec![0.0; mesh.boundary_nodes().len()])
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self(mesh.sample_boundary(f))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &BoundaryTrace) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + factor * b)
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for BoundaryTrace {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Source `y . grad delta_x` of the adjoint problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleSpec {
    pub location: PointLocation,
    pub direction: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct AdjointSolution {
    pub lambda: Field,
    /// Discrete dipole load over all nodes.
    pub load: Vec<f64>,
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Full stiffness matrix for arbitrary per-element weights (signed allowed).
pub fn assemble_weighted(mesh: &Mesh, weights: &[f64]) -> Result<SparseMatrix> {
    check_len("element weights", mesh.triangle_count(), weights.len())?;
    let mut triplets = Vec::with_capacity(9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let grads = mesh.basis_gradients(t);
        let scale = weights[t] * mesh.signed_area(t);
        for a in 0..3 {
            for b in 0..3 {
                let value = scale * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                triplets.push((tri[a], tri[b], value));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.node_count(), mesh.node_count(), triplets)
}

/// `K[i,j] = sum_T gamma_T int_T grad phi_i . grad phi_j`.
pub fn assemble_stiffness(mesh: &Mesh, gamma: &Coefficient) -> Result<SparseMatrix> {
    assemble_weighted(mesh, gamma.values())
}

/// Constant P1 gradient of `u` on the triangle holding `loc`.
pub fn gradient_at(mesh: &Mesh, u: &[f64], loc: &PointLocation) -> [f64; 2] {
    let tri = mesh.triangles()[loc.triangle];
    let grads = mesh.basis_gradients(loc.triangle);
    let mut g = [0.0; 2];
    for k in 0..3 {
        g[0] += u[tri[k]] * grads[k][0];
        g[1] += u[tri[k]] * grads[k][1];
    }
    g
}

/// P1 interpolation of `u` at `loc`.
pub fn value_at(mesh: &Mesh, u: &[f64], loc: &PointLocation) -> f64 {
    let tri = mesh.triangles()[loc.triangle];
    (0..3).map(|k| loc.barycentric[k] * u[tri[k]]).sum()
}

/// `r_j = y . grad phi_j(x)`, nonzero only on the three vertices of the host triangle.
pub fn dipole_load(mesh: &Mesh, dipole: &DipoleSpec) -> Vec<f64> {
    let mut load = vec![0.0; mesh.node_count()];
    let tri = mesh.triangles()[dipole.location.triangle];
    let grads = mesh.basis_gradients(dipole.location.triangle);
    let [y0, y1] = dipole.direction;
    for k in 0..3 {
        load[tri[k]] += y0 * grads[k][0] + y1 * grads[k][1];
    }
    load
}

/// `sum_b m_b a_b b_b` with the lumped boundary mass.
pub fn boundary_l2_inner(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    mesh.boundary_mass()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(m, (x, y))| m * x * y)
        .sum()
}

pub fn boundary_l2_norm(mesh: &Mesh, a: &[f64]) -> f64 {
    libm::sqrt(boundary_l2_inner(mesh, a, a))
}

/// Mass-lumped `L^2(X)` norm of a nodal field.
pub fn field_l2_norm(mesh: &Mesh, u: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.signed_area(t) / 3.0;
        sum += tri.iter().map(|&v| w * u[v] * u[v]).sum::<f64>();
    }
    libm::sqrt(sum)
}

/// The stiffness operator of one coefficient, split into interior and
/// boundary blocks, with the interior block factorized.
pub struct EllipticOperator<'m> {
    mesh: &'m Mesh,
    stiffness: SparseMatrix,
    interior: SpdSolver,
    /// `K_IB` with boundary columns in loop order.
    coupling: SparseMatrix,
}

impl<'m> EllipticOperator<'m> {
    pub fn new(mesh: &'m Mesh, gamma: &Coefficient, opts: SolveOptions) -> Result<Self> {
        let stiffness = assemble_stiffness(mesh, gamma)?;
        Self::from_stiffness(mesh, stiffness, opts)
    }

    pub fn from_stiffness(
        mesh: &'m Mesh,
        stiffness: SparseMatrix,
        opts: SolveOptions,
    ) -> Result<Self> {
        check_len("stiffness rows", mesh.node_count(), stiffness.n_rows())?;
        let interior_map: Vec<Option<usize>> = (0..mesh.node_count())
            .map(|v| mesh.interior_slot(v))
            .collect();
        let boundary_map: Vec<Option<usize>> = (0..mesh.node_count())
            .map(|v| mesh.boundary_slot(v))
            .collect();
        let interior_block = stiffness.select(
            mesh.interior_nodes(),
            &interior_map,
            mesh.interior_nodes().len(),
        );
        let coupling = stiffness.select(
            mesh.interior_nodes(),
            &boundary_map,
            mesh.boundary_nodes().len(),
        );
        let interior = SpdSolver::new(interior_block, opts)?;
        Ok(Self {
            mesh,
            stiffness,
            interior,
            coupling,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    fn interior_rhs(&self, g: &[f64], extra: Option<&[f64]>, extra_sign: f64) -> Result<Vec<f64>> {
        let mut rhs = self.coupling.mul_vec(g)?;
        rhs.iter_mut().for_each(|v| *v = -*v);
        if let Some(extra) = extra {
            check_len("volume load", self.mesh.node_count(), extra.len())?;
            for (k, &node) in self.mesh.interior_nodes().iter().enumerate() {
                rhs[k] += extra_sign * extra[node];
            }
        }
        Ok(rhs)
    }

    fn assemble_field(&self, interior: &[f64], boundary: &[f64]) -> Field {
        let mut values = vec![0.0; self.mesh.node_count()];
        for (k, &node) in self.mesh.interior_nodes().iter().enumerate() {
            values[node] = interior[k];
        }
        for (k, &node) in self.mesh.boundary_nodes().iter().enumerate() {
            values[node] = boundary[k];
        }
        Field(values)
    }

    /// Solves `K_II u_I = -K_IB f + rhs_I` with `u = f` on the boundary.
    pub fn solve_dirichlet(&self, f: &BoundaryTrace, rhs: Option<&[f64]>) -> Result<Field> {
        check_len("Dirichlet data", self.mesh.boundary_nodes().len(), f.len())?;
        let b = self.interior_rhs(f, rhs, 1.0)?;
        let (u_i, _) = self.interior.solve(&b)?;
        Ok(self.assemble_field(&u_i, f))
    }

    /// Derivative of the primal solution along the coefficient path:
    /// `K_II v_I = -K_IB g - [K(gamma') u]_I`, `v = g` on the boundary.
    pub fn solve_linearized(
        &self,
        gamma_prime_stiffness: &SparseMatrix,
        u: &Field,
        g: &BoundaryTrace,
    ) -> Result<Field> {
        check_len("linearized data", self.mesh.boundary_nodes().len(), g.len())?;
        let source = gamma_prime_stiffness.mul_vec(u)?;
        let b = self.interior_rhs(g, Some(&source), -1.0)?;
        let (v_i, _) = self.interior.solve(&b)?;
        Ok(self.assemble_field(&v_i, g))
    }

    /// Adjoint solve `K_II^T lambda_I = r_I`, `lambda = 0` on the boundary.
    pub fn solve_adjoint(&self, dipole: &DipoleSpec) -> Result<AdjointSolution> {
        let load = dipole_load(self.mesh, dipole);
        let r_i: Vec<f64> = self
            .mesh
            .interior_nodes()
            .iter()
            .map(|&v| load[v])
            .collect();
        // K_II is symmetric, so the transpose solve reuses the primal factor.
        let (lambda_i, _) = self.interior.solve(&r_i)?;
        let zeros = vec![0.0; self.mesh.boundary_nodes().len()];
        Ok(AdjointSolution {
            lambda: self.assemble_field(&lambda_i, &zeros),
            load,
        })
    }

    /// Residual-based conormal flux `([K w]_b - load_b) / m_b`.
    pub fn conormal_flux(&self, w: &Field, load: &[f64]) -> Result<BoundaryTrace> {
        check_len("flux load", self.mesh.node_count(), load.len())?;
        let kw = self.stiffness.mul_vec(w)?;
        let mass = self.mesh.boundary_mass();
        Ok(BoundaryTrace(
            self.mesh
                .boundary_nodes()
                .iter()
                .enumerate()
                .map(|(k, &node)| (kw[node] - load[node]) / mass[k])
                .collect(),
        ))
    }
}

/// One-shot primal solve.
pub fn solve_dirichlet(
    mesh: &Mesh,
    gamma: &Coefficient,
    f: &BoundaryTrace,
    rhs: Option<&[f64]>,
    opts: SolveOptions,
) -> Result<Field> {
    EllipticOperator::new(mesh, gamma, opts)?.solve_dirichlet(f, rhs)
}

/// One-shot linearized solve; `gamma_prime` may take either sign.
pub fn solve_linearized(
    mesh: &Mesh,
    gamma_s: &Coefficient,
    gamma_prime: &[f64],
    u: &Field,
    g: &BoundaryTrace,
    opts: SolveOptions,
) -> Result<Field> {
    let k_prime = assemble_weighted(mesh, gamma_prime)?;
    EllipticOperator::new(mesh, gamma_s, opts)?.solve_linearized(&k_prime, u, g)
}

/// One-shot adjoint solve.
pub fn solve_adjoint(
    mesh: &Mesh,
    gamma_s: &Coefficient,
    dipole: &DipoleSpec,
    opts: SolveOptions,
) -> Result<AdjointSolution> {
    EllipticOperator::new(mesh, gamma_s, opts)?.solve_adjoint(dipole)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(mesh: &Mesh) -> Coefficient {
        Coefficient::constant(mesh, 1.0).unwrap()
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let mesh = Mesh::build_structured(5).unwrap();
        let gamma = crate::coefficients::CoefficientExpr::gaussian_bump(0.5, [0.7, 0.3], 0.05)
            .evaluate(&mesh)
            .unwrap();
        let k = assemble_stiffness(&mesh, &gamma).unwrap();
        for i in 0..k.n_rows() {
            let sum: f64 = k.row(i).map(|(_, v)| v).sum();
            assert!(sum.abs() < 1e-12);
        }
        assert!(k.is_symmetric(1e-14));
    }

    #[test]
    fn stiffness_scales_with_gamma() {
        let mesh = Mesh::build_structured(3).unwrap();
        let k1 = assemble_stiffness(&mesh, &unit(&mesh)).unwrap();
        let k2 = assemble_stiffness(&mesh, &Coefficient::constant(&mesh, 2.0).unwrap()).unwrap();
        assert_eq!(k1.scaled(2.0), k2);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let mesh = Mesh::build_structured(6).unwrap();
        let op = EllipticOperator::new(&mesh, &unit(&mesh), SolveOptions::default()).unwrap();
        let f = BoundaryTrace::from_fn(&mesh, |p| p[0]);
        let u = op.solve_dirichlet(&f, None).unwrap();
        for (p, &v) in mesh.vertices().iter().zip(u.values()) {
            assert!((v - p[0]).abs() < 1e-10);
        }
        for t in 0..mesh.triangle_count() {
            let loc = PointLocation {
                point: mesh.centroid(t),
                triangle: t,
                barycentric: [1.0 / 3.0; 3],
            };
            let g = gradient_at(&mesh, &u, &loc);
            assert!((g[0] - 1.0).abs() < 1e-10 && g[1].abs() < 1e-10);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let mesh = Mesh::build_structured(4).unwrap();
        let u = solve_dirichlet(
            &mesh,
            &unit(&mesh),
            &BoundaryTrace::zeros(&mesh),
            None,
            SolveOptions::default(),
        )
        .unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_linear_fields() {
        let mesh = Mesh::build_structured(4).unwrap();
        let loc = mesh.locate([0.31, 0.62]).unwrap();
        let u = Field::from_fn(&mesh, |p| p[0]);
        assert_eq!(gradient_at(&mesh, &u, &loc), [1.0, 0.0]);
        let w = Field::from_fn(&mesh, |p| p[0] + 2.0 * p[1]);
        let g = gradient_at(&mesh, &w, &loc);
        assert!((g[0] - 1.0).abs() < 1e-14 && (g[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_dipole_gives_zero_adjoint() {
        let mesh = Mesh::build_structured(8).unwrap();
        let dipole = DipoleSpec {
            location: mesh.locate([0.4, 0.55]).unwrap(),
            direction: [0.0, 0.0],
        };
        let adj = solve_adjoint(&mesh, &unit(&mesh), &dipole, SolveOptions::default()).unwrap();
        assert!(adj.lambda.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_inner_products() {
        let mesh = Mesh::build_structured(8).unwrap();
        let ones = BoundaryTrace::from_fn(&mesh, |_| 1.0);
        let x1 = BoundaryTrace::from_fn(&mesh, |p| p[0]);
        assert!((boundary_l2_inner(&mesh, &ones, &ones) - 4.0).abs() < 1e-12);
        assert!((boundary_l2_inner(&mesh, &ones, &x1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linearized_decouples_without_coefficient_change() {
        let mesh = Mesh::build_structured(6).unwrap();
        let gamma = unit(&mesh);
        let op = EllipticOperator::new(&mesh, &gamma, SolveOptions::default()).unwrap();
        let zero_prime = assemble_weighted(&mesh, &vec![0.0; mesh.triangle_count()]).unwrap();
        let f = BoundaryTrace::from_fn(&mesh, |p| p[0] * p[1] + 0.3);
        let u = op.solve_dirichlet(&f, None).unwrap();
        let v0 = op
            .solve_linearized(&zero_prime, &u, &BoundaryTrace::zeros(&mesh))
            .unwrap();
        assert!(v0.values().iter().all(|&v| v == 0.0));
        let v = op.solve_linearized(&zero_prime, &u, &f).unwrap();
        for (a, b) in v.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
