//! Run configuration: TOML with dotted keys.
//!
//! ```toml
//! output_dir = "runs/bump"
//! seed = 7
//! mesh.n_per_side = 32
//! coefficient.kind = "gaussian_bumps"
//! coefficient.bumps = [{ amplitude = 0.5, center = [0.7, 0.3], width_sq = 0.05 }]
//! constraint.kind = "single_gradient"
//! constraint.points = [[0.5, 0.5]]
//! integrator.method = "rk4"
//! ```
//!
//! Every table except the coefficient rejects unknown keys, and parse errors
//! carry the line and key of the offending entry.

use std::fs;
use std::path::{Path, PathBuf};

use hbc_core::coefficients::CoefficientExpr;
use hbc_core::control::{ConstraintSpec, MultilinearForm};
use hbc_core::homotopy::{IntegratorOptions, Method};
use hbc_core::linalg::{SolveOptions, SolverChoice, DEFAULT_TOL};
use hbc_core::mesh::{Mesh, Point};
use hbc_core::verify::Scenario;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshConfig,
    pub coefficient: CoefficientExpr,
    /// Starting coefficient; constant 1 when absent.
    #[serde(default = "unit_coefficient")]
    pub gamma0: CoefficientExpr,
    pub constraint: ConstraintConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn unit_coefficient() -> CoefficientExpr {
    CoefficientExpr::constant(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_per_side: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    SingleGradient,
    MultiPoint,
    Multilinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormPreset {
    Determinant,
    ProjectionX,
    ProjectionY,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub kind: ConstraintKind,
    pub points: Vec<Point>,
    #[serde(default = "one")]
    pub threshold: f64,
    #[serde(default)]
    pub mu_clamp: bool,
    /// Multilinear preset; ignored by the other kinds.
    #[serde(default)]
    pub form: Option<FormPreset>,
    /// Custom multilinear tensor, used when no preset is given.
    #[serde(default)]
    pub num_solutions: Option<usize>,
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub initial_step: f64,
    pub min_step: f64,
    pub slack_tolerance: Option<f64>,
    pub corrector_iterations: usize,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegratorOptions::default();
        Self {
            method: d.method,
            initial_step: d.initial_step,
            min_step: d.min_step,
            slack_tolerance: d.slack_tolerance,
            corrector_iterations: d.corrector_iterations,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: SolverChoice,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverChoice::Auto,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub s_values: Vec<f64>,
    pub duality_trials: usize,
    pub directions: usize,
    pub competitors: usize,
    pub triples: usize,
    pub lipschitz_pairs: usize,
    /// Feasibility floor for random data: `|grad u(x)| > eta`.
    pub eta: f64,
    /// Resolution paired with `mesh.n_per_side` in the Lipschitz certificate.
    pub coarse_n_per_side: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            s_values: vec![0.0, 0.5, 1.0],
            duality_trials: 20,
            directions: 16,
            competitors: 20,
            triples: 50,
            lipschitz_pairs: 20,
            eta: 0.1,
            coarse_n_per_side: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Rows of comparison.csv: `s = k / samples`.
    pub samples: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { samples: 16 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Factors applied to the variable part of the coefficient; `[1]` when empty.
    pub amplitude_scales: Vec<f64>,
    /// Mesh resolutions; `[mesh.n_per_side]` when empty.
    pub n_per_side: Vec<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_owned(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Best-effort `output_dir` of a config that failed to load, so the
    /// failure can still be recorded next to the intended outputs.
    pub fn salvage_output_dir(path: &Path) -> Option<PathBuf> {
        let text = fs::read_to_string(path).ok()?;
        let table: toml::Table = toml::from_str(&text).ok()?;
        table.get("output_dir")?.as_str().map(PathBuf::from)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mesh.n_per_side < 2 {
            return Err(invalid(
                "mesh.n_per_side",
                "needs at least 2 cells per side",
            ));
        }
        let c = &self.constraint;
        if !(c.threshold > 0.0) {
            return Err(invalid("constraint.threshold", "must be positive"));
        }
        match c.kind {
            ConstraintKind::SingleGradient | ConstraintKind::Multilinear if c.points.len() != 1 => {
                return Err(invalid(
                    "constraint.points",
                    "this kind takes exactly one point",
                ));
            }
            ConstraintKind::MultiPoint if c.points.is_empty() => {
                return Err(invalid(
                    "constraint.points",
                    "at least one point is required",
                ));
            }
            _ => {}
        }
        for p in &c.points {
            let inside = p.iter().all(|v| v.is_finite() && *v > 0.0 && *v < 1.0);
            if !inside {
                return Err(invalid(
                    "constraint.points",
                    format!(
                        "point ({}, {}) is not interior to the unit square",
                        p[0], p[1]
                    ),
                ));
            }
        }
        if c.kind == ConstraintKind::Multilinear {
            self.form()?;
        }
        let i = &self.integrator;
        if !(i.initial_step > 0.0 && i.initial_step <= 1.0) {
            return Err(invalid("integrator.initial_step", "must lie in (0, 1]"));
        }
        if !(i.min_step > 0.0 && i.min_step <= i.initial_step) {
            return Err(invalid(
                "integrator.min_step",
                "must lie in (0, initial_step]",
            ));
        }
        if i.slack_tolerance.is_some_and(|s| !(s >= 0.0)) {
            return Err(invalid(
                "integrator.slack_tolerance",
                "must be non-negative",
            ));
        }
        if !(self.solver.tol > 0.0) {
            return Err(invalid("solver.tol", "must be positive"));
        }
        let cert = &self.certify;
        if cert.s_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(invalid("certify.s_values", "homotopy times lie in [0, 1]"));
        }
        if cert.directions < 8 {
            return Err(invalid(
                "certify.directions",
                "at least 8 directions are needed",
            ));
        }
        if cert.coarse_n_per_side < 2 {
            return Err(invalid(
                "certify.coarse_n_per_side",
                "needs at least 2 cells per side",
            ));
        }
        if self.compare.samples == 0 {
            return Err(invalid("compare.samples", "must be positive"));
        }
        if self.sweep.n_per_side.iter().any(|&n| n < 2) {
            return Err(invalid(
                "sweep.n_per_side",
                "needs at least 2 cells per side",
            ));
        }
        Ok(())
    }

    fn form(&self) -> Result<MultilinearForm, ConfigError> {
        let c = &self.constraint;
        match (c.form, c.num_solutions, &c.coefficients) {
            (Some(FormPreset::Determinant), _, _) => Ok(MultilinearForm::determinant()),
            (Some(FormPreset::ProjectionX), _, _) => Ok(MultilinearForm::projection(0)),
            (Some(FormPreset::ProjectionY), _, _) => Ok(MultilinearForm::projection(1)),
            (None, Some(m), Some(coeffs)) => MultilinearForm::new(m, coeffs.clone())
                .map_err(|e| invalid("constraint.coefficients", e.to_string())),
            _ => Err(invalid(
                "constraint.form",
                "multilinear needs `form` or both `num_solutions` and `coefficients`",
            )),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            choice: self.solver.method,
            tol: self.solver.tol,
        }
    }

    pub fn integrator_options(&self, checkpoints: Vec<f64>) -> IntegratorOptions {
        let i = &self.integrator;
        IntegratorOptions {
            method: i.method,
            initial_step: i.initial_step,
            min_step: i.min_step,
            slack_tolerance: i.slack_tolerance,
            checkpoints,
            max_steps: i.max_steps,
            corrector_iterations: i.corrector_iterations,
        }
    }

    pub fn slack(&self) -> f64 {
        self.integrator_options(Vec::new())
            .slack_for(self.constraint.threshold)
    }

    /// Constraint bound to `mesh`; fails with the offending point when a
    /// point does not lie strictly inside a triangle of the mesh.
    pub fn constraint_spec(&self, mesh: &Mesh) -> Result<ConstraintSpec, ConfigError> {
        let c = &self.constraint;
        let wrap = |e: hbc_core::Error| invalid("constraint.points", e.to_string());
        let spec = match c.kind {
            ConstraintKind::SingleGradient => ConstraintSpec::single_gradient(mesh, c.points[0]),
            ConstraintKind::MultiPoint => ConstraintSpec::multi_point(mesh, &c.points),
            ConstraintKind::Multilinear => {
                ConstraintSpec::multilinear(mesh, c.points[0], self.form()?)
            }
        }
        .map_err(wrap)?;
        spec.with_threshold(c.threshold)
            .map(|s| s.with_mu_clamp(c.mu_clamp))
            .map_err(|e| invalid("constraint.threshold", e.to_string()))
    }

    /// The certificate scenario: both coefficients and the first constraint point.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            gamma0: self.gamma0.clone(),
            gamma: self.coefficient.clone(),
            point: self.constraint.points[0],
            solve: self.solve_options(),
        }
    }
}
