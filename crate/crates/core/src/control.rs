//! The boundary control functional and its multi-point and multilinear
//! extensions.
//!
//! For boundary data `f` at homotopy time `s`, let `u` solve the primal
//! problem for `gamma_s`, let `lambda` solve the adjoint problem with dipole
//! direction `y`, and write
//!
//! ```text
//! vol  = -lambda^T K(gamma - gamma0) u
//! flux = conormal flux of lambda
//! ```
//!
//! For any boundary velocity `g`, the induced derivative satisfies
//! `y . grad v^g(x) = vol - <flux, g>`, where `<.,.>` is the lumped
//! `L^2` product on the boundary. Each control below picks the `g` that
//! keeps the protected quantity from decreasing.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::coefficients::Coefficient;
use crate::elliptic::{
    assemble_weighted, boundary_l2_inner, gradient_at, AdjointSolution, BoundaryTrace, DipoleSpec,
    EllipticOperator, Field,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigenvalues, DenseCholesky, SolveOptions, SparseMatrix};
use crate::mesh::{Mesh, PointLocation};

/// Relative floor on `|flux|^2 / |y|^2` below which the adjoint is degenerate.
pub const DEGENERATE_FLUX_RATIO: f64 = 1e-14;

/// Gradients below this multiple of `max |f|` count as a critical point.
pub const CRITICAL_GRADIENT_RATIO: f64 = 1e-10;

/// Largest Gram condition number accepted by the multi-point control.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// A multilinear form `L : (R^2)^m -> R`, stored as its coefficient tensor.
///
/// Entry `sum_i c_i 2^(m-1-i)` holds the coefficient of
/// `p_1[c_1] p_2[c_2] ... p_m[c_m]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearForm {
    num_solutions: usize,
    coefficients: Vec<f64>,
}

impl MultilinearForm {
    pub fn new(num_solutions: usize, coefficients: Vec<f64>) -> Result<Self> {
        if num_solutions == 0 || num_solutions > 16 {
            return Err(Error::InvalidParameter(alloc::format!(
                "multilinear form needs 1..=16 slots, got {num_solutions}"
            )));
        }
        if coefficients.len() != 1 << num_solutions {
            return Err(Error::DimensionMismatch {
                context: "multilinear coefficient tensor",
                expected: 1 << num_solutions,
                actual: coefficients.len(),
            });
        }
        Ok(Self {
            num_solutions,
            coefficients,
        })
    }

    /// `det[p_1 p_2]` in the plane.
    pub fn determinant() -> Self {
        Self {
            num_solutions: 2,
            coefficients: vec![0.0, 1.0, -1.0, 0.0],
        }
    }

    /// `p_1[axis]`.
    pub fn projection(axis: usize) -> Self {
        let mut coefficients = vec![0.0, 0.0];
        coefficients[axis.min(1)] = 1.0;
        Self {
            num_solutions: 1,
            coefficients,
        }
    }

    pub fn num_solutions(&self) -> usize {
        self.num_solutions
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn component(&self, index: usize, slot: usize) -> usize {
        (index >> (self.num_solutions - 1 - slot)) & 1
    }

    pub fn evaluate(&self, grads: &[[f64; 2]]) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(index, c)| {
                c * (0..self.num_solutions)
                    .map(|slot| grads[slot][self.component(index, slot)])
                    .product::<f64>()
            })
            .sum()
    }

    /// Partial gradient of `L` with respect to slot `slot`.
    pub fn slot_gradient(&self, slot: usize, grads: &[[f64; 2]]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (index, &c) in self.coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let rest: f64 = (0..self.num_solutions)
                .filter(|&other| other != slot)
                .map(|other| grads[other][self.component(index, other)])
                .product();
            out[self.component(index, slot)] += c * rest;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    SingleGradient {
        point: PointLocation,
    },
    MultiPoint {
        points: Vec<PointLocation>,
    },
    Multilinear {
        point: PointLocation,
        form: MultilinearForm,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub constraint: Constraint,
    pub threshold: f64,
    /// Clamp the shared multilinear multiplier to `min(0, mu)`.
    pub mu_clamp: bool,
}

impl ConstraintSpec {
    pub fn single_gradient(mesh: &Mesh, point: [f64; 2]) -> Result<Self> {
        Self::new(Constraint::SingleGradient {
            point: mesh.locate(point)?,
        })
    }

    pub fn multi_point(mesh: &Mesh, points: &[[f64; 2]]) -> Result<Self> {
        let points = points
            .iter()
            .map(|&p| mesh.locate(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Constraint::MultiPoint { points })
    }

    pub fn multilinear(mesh: &Mesh, point: [f64; 2], form: MultilinearForm) -> Result<Self> {
        Self::new(Constraint::Multilinear {
            point: mesh.locate(point)?,
            form,
        })
    }

    pub fn new(constraint: Constraint) -> Result<Self> {
        let spec = Self {
            constraint,
            threshold: 1.0,
            mu_clamp: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mu_clamp(mut self, mu_clamp: bool) -> Self {
        self.mu_clamp = mu_clamp;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if let Constraint::MultiPoint { points } = &self.constraint {
            if points.is_empty() {
                return Err(Error::InvalidParameter(
                    "multi-point constraint without points".into(),
                ));
            }
            for (i, a) in points.iter().enumerate() {
                for b in &points[i + 1..] {
                    if a.point == b.point {
                        return Err(Error::InvalidParameter(alloc::format!(
                            "constraint point ({}, {}) listed twice",
                            a.point[0],
                            a.point[1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of boundary traces the constraint acts on.
    pub fn num_solutions(&self) -> usize {
        match &self.constraint {
            Constraint::Multilinear { form, .. } => form.num_solutions(),
            _ => 1,
        }
    }

    pub fn points(&self) -> Vec<PointLocation> {
        match &self.constraint {
            Constraint::SingleGradient { point } | Constraint::Multilinear { point, .. } => {
                vec![*point]
            }
            Constraint::MultiPoint { points } => points.clone(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.constraint {
            Constraint::SingleGradient { .. } => "single_gradient",
            Constraint::MultiPoint { .. } => "multi_point",
            Constraint::Multilinear { .. } => "multilinear",
        }
    }

    /// The usual starting data: `x_1` for gradient constraints, `x_i` for slot `i`.
    pub fn default_initial_data(&self, mesh: &Mesh) -> Vec<BoundaryTrace> {
        (0..self.num_solutions())
            .map(|i| BoundaryTrace::from_fn(mesh, |p| p[i % 2]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `g = 0`.
    Inactive,
    /// `g` is a nonzero combination of adjoint fluxes.
    Active,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Inactive => "inactive",
            Branch::Active => "active",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlOutput {
    /// Boundary velocity, one trace per solution.
    pub g: Vec<BoundaryTrace>,
    /// Multiplier: one value for single/multilinear, one per point for multi-point.
    pub mu: Vec<f64>,
    /// `-lambda_i^T K(gamma') u` per adjoint problem.
    pub volume_terms: Vec<f64>,
    /// Sum of `|flux_i|^2` over the adjoint problems.
    pub flux_norm_sq: f64,
    pub branch: Branch,
    /// The protected quantity at `(f, s)`.
    pub constraint_value: f64,
    /// Adjoint fluxes, one per adjoint problem.
    pub fluxes: Vec<BoundaryTrace>,
    /// Gradients at the constraint points (or of each solution, multilinear).
    pub gradients: Vec<[f64; 2]>,
    /// Dipole directions of the adjoint problems.
    pub directions: Vec<[f64; 2]>,
    /// Predicted `y_i . grad v_i(x)` from the adjoint identity.
    pub rates: Vec<f64>,
    /// Set when the single-point gradient vanished and `g = 0` was returned.
    pub critical: bool,
}

impl ControlOutput {
    pub fn g_l2_norm(&self, mesh: &Mesh) -> f64 {
        libm::sqrt(self.g.iter().map(|g| boundary_l2_inner(mesh, g, g)).sum())
    }

    pub fn record(&self, mesh: &Mesh, s: f64) -> ControlRecord {
        ControlRecord {
            s,
            mu: self.mu.clone(),
            branch: self.branch,
            volume_term: self.volume_terms.clone(),
            flux_norm_sq: self.flux_norm_sq,
            g_l2_norm: self.g_l2_norm(mesh),
        }
    }
}

/// Flat record of a control evaluation for trajectory logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub s: f64,
    pub mu: Vec<f64>,
    pub branch: Branch,
    pub volume_term: Vec<f64>,
    pub flux_norm_sq: f64,
    pub g_l2_norm: f64,
}

/// Everything that stays fixed along one homotopy: the mesh, both end
/// coefficients and the stiffness matrix of `gamma - gamma0`.
pub struct ControlProblem<'m> {
    mesh: &'m Mesh,
    gamma0: Coefficient,
    gamma: Coefficient,
    gamma_prime: Vec<f64>,
    gamma_prime_stiffness: SparseMatrix,
    solve: SolveOptions,
}

impl<'m> ControlProblem<'m> {
    pub fn new(
        mesh: &'m Mesh,
        gamma0: Coefficient,
        gamma: Coefficient,
        solve: SolveOptions,
    ) -> Result<Self> {
        if gamma0.values().len() != mesh.triangle_count() {
            return Err(Error::MeshMismatch(
                gamma0.values().len(),
                mesh.triangle_count(),
            ));
        }
        let gamma_prime = gamma.difference(&gamma0)?;
        let gamma_prime_stiffness = assemble_weighted(mesh, &gamma_prime)?;
        Ok(Self {
            mesh,
            gamma0,
            gamma,
            gamma_prime,
            gamma_prime_stiffness,
            solve,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn gamma0(&self) -> &Coefficient {
        &self.gamma0
    }

    pub fn gamma(&self) -> &Coefficient {
        &self.gamma
    }

    pub fn gamma_prime(&self) -> &[f64] {
        &self.gamma_prime
    }

    pub fn gamma_prime_stiffness(&self) -> &SparseMatrix {
        &self.gamma_prime_stiffness
    }

    pub fn solve_options(&self) -> SolveOptions {
        self.solve
    }

    pub fn gamma_at(&self, s: f64) -> Result<Coefficient> {
        Coefficient::blend(&self.gamma0, &self.gamma, s)
    }

    /// Assembles and factorizes the operator for `gamma_s`.
    pub fn stage(&self, s: f64) -> Result<Stage<'_, 'm>> {
        let gamma_s = self.gamma_at(s)?;
        Ok(Stage {
            problem: self,
            s,
            operator: EllipticOperator::new(self.mesh, &gamma_s, self.solve)?,
        })
    }
}

/// Adjoint quantities for one dipole.
#[derive(Clone, Debug)]
pub struct AdjointTerms {
    pub adjoint: AdjointSolution,
    pub flux: BoundaryTrace,
    pub volume_term: f64,
    pub flux_norm_sq: f64,
}

/// A [`ControlProblem`] frozen at one homotopy time.
pub struct Stage<'p, 'm> {
    problem: &'p ControlProblem<'m>,
    s: f64,
    operator: EllipticOperator<'m>,
}

impl<'p, 'm> Stage<'p, 'm> {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn problem(&self) -> &'p ControlProblem<'m> {
        self.problem
    }

    pub fn operator(&self) -> &EllipticOperator<'m> {
        &self.operator
    }

    pub fn primal(&self, f: &BoundaryTrace) -> Result<Field> {
        self.operator.solve_dirichlet(f, None)
    }

    pub fn linearized(&self, u: &Field, g: &BoundaryTrace) -> Result<Field> {
        self.operator
            .solve_linearized(&self.problem.gamma_prime_stiffness, u, g)
    }

    /// Adjoint solve for direction `y` at `point`, with the volume term taken against `u`.
    pub fn adjoint_terms(
        &self,
        u: &Field,
        point: &PointLocation,
        y: [f64; 2],
    ) -> Result<AdjointTerms> {
        let adjoint = self.operator.solve_adjoint(&DipoleSpec {
            location: *point,
            direction: y,
        })?;
        let flux = self
            .operator
            .conormal_flux(&adjoint.lambda, &adjoint.load)?;
        let k_prime_u = self.problem.gamma_prime_stiffness.mul_vec(u)?;
        // lambda vanishes on the boundary, so the full dot product equals the interior one.
        let volume_term = -dot(&adjoint.lambda, &k_prime_u);
        let flux_norm_sq = boundary_l2_inner(self.problem.mesh, &flux, &flux);
        Ok(AdjointTerms {
            adjoint,
            flux,
            volume_term,
            flux_norm_sq,
        })
    }

    /// Gradients of the primal solutions that the constraint looks at.
    pub fn constraint_gradients(
        &self,
        f: &[BoundaryTrace],
        spec: &ConstraintSpec,
    ) -> Result<Vec<[f64; 2]>> {
        check_traces(f, spec)?;
        let mesh = self.problem.mesh;
        Ok(match &spec.constraint {
            Constraint::SingleGradient { point } => {
                vec![gradient_at(mesh, &self.primal(&f[0])?, point)]
            }
            Constraint::MultiPoint { points } => {
                let u = self.primal(&f[0])?;
                points.iter().map(|p| gradient_at(mesh, &u, p)).collect()
            }
            Constraint::Multilinear { point, .. } => f
                .iter()
                .map(|fi| Ok(gradient_at(mesh, &self.primal(fi)?, point)))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// The protected quantity at `(f, s)`.
    pub fn constraint_value(&self, f: &[BoundaryTrace], spec: &ConstraintSpec) -> Result<f64> {
        let grads = self.constraint_gradients(f, spec)?;
        Ok(constraint_value_from_gradients(&grads, spec))
    }

    /// Dispatches on the constraint kind.
    pub fn control(&self, f: &[BoundaryTrace], spec: &ConstraintSpec) -> Result<ControlOutput> {
        check_traces(f, spec)?;
        match &spec.constraint {
            Constraint::SingleGradient { point } => self.single_gradient(&f[0], point),
            Constraint::MultiPoint { points } => self.multi_point(&f[0], points),
            Constraint::Multilinear { point, form } => {
                self.multilinear(f, point, form, spec.mu_clamp)
            }
        }
    }

    /// Minimal-norm velocity keeping `|grad u(x)|` from decreasing.
    pub fn single_gradient(
        &self,
        f: &BoundaryTrace,
        point: &PointLocation,
    ) -> Result<ControlOutput> {
        let mesh = self.problem.mesh;
        let u = self.primal(f)?;
        let y = gradient_at(mesh, &u, point);
        let y_norm_sq = y[0] * y[0] + y[1] * y[1];
        if y_norm_sq <= critical_floor_sq(f) {
            return Ok(ControlOutput {
                g: vec![BoundaryTrace::zeros(mesh)],
                mu: vec![0.0],
                volume_terms: vec![0.0],
                flux_norm_sq: 0.0,
                branch: Branch::Inactive,
                constraint_value: libm::sqrt(y_norm_sq),
                fluxes: vec![BoundaryTrace::zeros(mesh)],
                gradients: vec![y],
                directions: vec![y],
                rates: vec![0.0],
                critical: true,
            });
        }
        let terms = self.adjoint_terms(&u, point, y)?;
        check_flux(terms.flux_norm_sq, y_norm_sq)?;
        let mu = terms.volume_term / terms.flux_norm_sq;
        let (branch, g, rate) = if mu < 0.0 {
            let g = terms.flux.scaled(mu);
            let rate = terms.volume_term - boundary_l2_inner(mesh, &terms.flux, &g);
            (Branch::Active, g, rate)
        } else {
            (
                Branch::Inactive,
                BoundaryTrace::zeros(mesh),
                terms.volume_term,
            )
        };
        Ok(ControlOutput {
            g: vec![g],
            mu: vec![mu],
            volume_terms: vec![terms.volume_term],
            flux_norm_sq: terms.flux_norm_sq,
            branch,
            constraint_value: libm::sqrt(y_norm_sq),
            fluxes: vec![terms.flux],
            gradients: vec![y],
            directions: vec![y],
            rates: vec![rate],
            critical: false,
        })
    }

    /// Velocity in the span of the point fluxes that freezes every `|grad u(x_i)|`.
    pub fn multi_point(
        &self,
        f: &BoundaryTrace,
        points: &[PointLocation],
    ) -> Result<ControlOutput> {
        let mesh = self.problem.mesh;
        let u = self.primal(f)?;
        let mut gradients = Vec::with_capacity(points.len());
        let mut fluxes = Vec::with_capacity(points.len());
        let mut volume_terms = Vec::with_capacity(points.len());
        for point in points {
            let y = gradient_at(mesh, &u, point);
            let y_norm_sq = y[0] * y[0] + y[1] * y[1];
            if y_norm_sq == 0.0 {
                return Err(Error::DegenerateFlux {
                    flux_norm_sq: 0.0,
                    direction_norm_sq: 0.0,
                });
            }
            let terms = self.adjoint_terms(&u, point, y)?;
            check_flux(terms.flux_norm_sq, y_norm_sq)?;
            gradients.push(y);
            fluxes.push(terms.flux);
            volume_terms.push(terms.volume_term);
        }
        let k = points.len();
        let gram: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| boundary_l2_inner(mesh, &fluxes[i], &fluxes[j]))
                    .collect()
            })
            .collect();
        let eig = symmetric_eigenvalues(&gram);
        let (lo, hi) = (eig[0], eig[k - 1]);
        if !(lo > 0.0) || hi / lo > MAX_GRAM_CONDITION {
            let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            return Err(Error::DependentFluxes(cond));
        }
        let flux_norm_sq = (0..k).map(|i| gram[i][i]).sum();
        let constraint_value = gradients
            .iter()
            .map(|y| libm::hypot(y[0], y[1]))
            .fold(f64::INFINITY, f64::min);

        let (branch, coeffs, g) = if volume_terms.iter().all(|&b| b == 0.0) {
            (Branch::Inactive, vec![0.0; k], BoundaryTrace::zeros(mesh))
        } else {
            let coeffs = DenseCholesky::factor(&gram)?.solve(&volume_terms);
            let mut g = BoundaryTrace::zeros(mesh);
            for (c, flux) in coeffs.iter().zip(&fluxes) {
                g = g.add_scaled(*c, flux);
            }
            (Branch::Active, coeffs, g)
        };
        let rates = fluxes
            .iter()
            .zip(&volume_terms)
            .map(|(flux, vol)| vol - boundary_l2_inner(mesh, flux, &g))
            .collect();
        Ok(ControlOutput {
            g: vec![g],
            mu: coeffs,
            volume_terms,
            flux_norm_sq,
            branch,
            constraint_value,
            fluxes,
            gradients: gradients.clone(),
            directions: gradients,
            rates,
            critical: false,
        })
    }

    /// Shared-multiplier velocities keeping `L(grad u^1, ..., grad u^m)` fixed
    /// (or non-decreasing when clamped).
    pub fn multilinear(
        &self,
        f: &[BoundaryTrace],
        point: &PointLocation,
        form: &MultilinearForm,
        mu_clamp: bool,
    ) -> Result<ControlOutput> {
        let mesh = self.problem.mesh;
        let solutions = f
            .iter()
            .map(|fi| self.primal(fi))
            .collect::<Result<Vec<_>>>()?;
        let gradients: Vec<[f64; 2]> = solutions
            .iter()
            .map(|u| gradient_at(mesh, u, point))
            .collect();
        let constraint_value = form.evaluate(&gradients);

        let mut fluxes = Vec::with_capacity(f.len());
        let mut volume_terms = Vec::with_capacity(f.len());
        let mut directions = Vec::with_capacity(f.len());
        let mut direction_norm_sq = 0.0;
        for (slot, u) in solutions.iter().enumerate() {
            let y = form.slot_gradient(slot, &gradients);
            directions.push(y);
            let y_sq = y[0] * y[0] + y[1] * y[1];
            if y_sq == 0.0 {
                fluxes.push(BoundaryTrace::zeros(mesh));
                volume_terms.push(0.0);
                continue;
            }
            direction_norm_sq += y_sq;
            let terms = self.adjoint_terms(u, point, y)?;
            fluxes.push(terms.flux);
            volume_terms.push(terms.volume_term);
        }
        let flux_norm_sq: f64 = fluxes.iter().map(|q| boundary_l2_inner(mesh, q, q)).sum();
        if direction_norm_sq == 0.0 {
            return Err(Error::DegenerateFlux {
                flux_norm_sq,
                direction_norm_sq,
            });
        }
        check_flux(flux_norm_sq, direction_norm_sq)?;
        let mut mu = volume_terms.iter().sum::<f64>() / flux_norm_sq;
        if mu_clamp {
            mu = mu.min(0.0);
        }
        let (branch, g) = if mu == 0.0 {
            (Branch::Inactive, vec![BoundaryTrace::zeros(mesh); f.len()])
        } else {
            (
                Branch::Active,
                fluxes.iter().map(|q| q.scaled(mu)).collect(),
            )
        };
        let rates = fluxes
            .iter()
            .zip(&volume_terms)
            .zip(&g)
            .map(|((q, vol), gi)| vol - boundary_l2_inner(mesh, q, gi))
            .collect();
        Ok(ControlOutput {
            g,
            mu: vec![mu],
            volume_terms,
            flux_norm_sq,
            branch,
            constraint_value,
            fluxes,
            gradients,
            directions,
            rates,
            critical: false,
        })
    }

    /// `phi'(s)` of the scaling baseline `f_s = phi(s) f0`.
    pub fn naive_scaling_rate(
        &self,
        phi: f64,
        f0: &BoundaryTrace,
        point: &PointLocation,
    ) -> Result<f64> {
        if phi == 0.0 || !phi.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "scaling factor phi = {phi}"
            )));
        }
        let mesh = self.problem.mesh;
        let u = self.primal(&f0.scaled(phi))?;
        let w = self.linearized(&u, &BoundaryTrace::zeros(mesh))?;
        let y = gradient_at(mesh, &u, point);
        let y_sq = y[0] * y[0] + y[1] * y[1];
        if y_sq <= critical_floor_sq(f0) * phi * phi {
            return Err(Error::CriticalPoint { s: self.s });
        }
        let w_grad = gradient_at(mesh, &w, point);
        let ratio = (-(y[0] * w_grad[0] + y[1] * w_grad[1]) / y_sq).max(0.0);
        Ok(phi * ratio)
    }
}

/// Squared gradient size treated as zero: rounding noise relative to the data.
fn critical_floor_sq(f: &BoundaryTrace) -> f64 {
    let scale = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = CRITICAL_GRADIENT_RATIO * scale;
    floor * floor
}

fn check_traces(f: &[BoundaryTrace], spec: &ConstraintSpec) -> Result<()> {
    if f.len() != spec.num_solutions() {
        return Err(Error::DimensionMismatch {
            context: "number of boundary traces for the constraint",
            expected: spec.num_solutions(),
            actual: f.len(),
        });
    }
    Ok(())
}

fn check_flux(flux_norm_sq: f64, direction_norm_sq: f64) -> Result<()> {
    if !(flux_norm_sq >= DEGENERATE_FLUX_RATIO * direction_norm_sq) || flux_norm_sq == 0.0 {
        return Err(Error::DegenerateFlux {
            flux_norm_sq,
            direction_norm_sq,
        });
    }
    Ok(())
}

pub fn constraint_value_from_gradients(grads: &[[f64; 2]], spec: &ConstraintSpec) -> f64 {
    match &spec.constraint {
        Constraint::SingleGradient { .. } => libm::hypot(grads[0][0], grads[0][1]),
        Constraint::MultiPoint { .. } => grads
            .iter()
            .map(|y| libm::hypot(y[0], y[1]))
            .fold(f64::INFINITY, f64::min),
        Constraint::Multilinear { form, .. } => form.evaluate(grads),
    }
}

/// `F(f, s)` for any constraint kind.
pub fn control_functional(
    problem: &ControlProblem<'_>,
    s: f64,
    f: &[BoundaryTrace],
    spec: &ConstraintSpec,
) -> Result<ControlOutput> {
    problem.stage(s)?.control(f, spec)
}

/// `phi'(s)` of the scaling baseline.
pub fn naive_scaling_step(
    problem: &ControlProblem<'_>,
    s: f64,
    phi: f64,
    f0: &BoundaryTrace,
    point: &PointLocation,
) -> Result<f64> {
    problem.stage(s)?.naive_scaling_rate(phi, f0, point)
}
