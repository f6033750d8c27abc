//! Continuation of the boundary data along `gamma_s = (1 - s) gamma0 + s gamma`.
//!
//! The integrator advances `df/ds = F(f, s)` with explicit Euler or classical
//! RK4. After every trial step it re-evaluates the protected quantity and
//! rejects the step (halving it) when the value fell by more than the slack
//! relative to the previous state, or below `threshold - slack`. Accepted
//! steps regrow by doubling, capped at the initial step.
//!
//! Explicit steps lose `O(h^2)` of the protected quantity per step where the
//! control holds it with equality. A trial step that lost value is therefore
//! corrected before the guard sees it: the fluxes at the trial point give the
//! first-order change of every constraint under a boundary perturbation
//! (`y . grad du(x) = -<flux, df>`), and the minimal-norm perturbation that
//! restores the previous values lies in their span.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::Coefficient;
use crate::control::{
    constraint_value_from_gradients, Branch, Constraint, ConstraintSpec, ControlOutput,
    ControlProblem, Stage,
};
use crate::elliptic::{
    boundary_l2_inner, boundary_l2_norm, gradient_at, BoundaryTrace, EllipticOperator,
};
use crate::error::Error;
use crate::linalg::{DenseCholesky, SolveOptions};
use crate::mesh::{Mesh, PointLocation};

/// Slack per unit threshold used when none is given.
pub const DEFAULT_RELATIVE_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Euler,
    Rk4,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    pub method: Method,
    pub initial_step: f64,
    pub min_step: f64,
    /// Allowed decrease per step; `None` means `1e-6 * threshold`.
    pub slack_tolerance: Option<f64>,
    /// Homotopy times the integrator must land on exactly.
    pub checkpoints: Vec<f64>,
    /// Hard cap on trial steps, accepted or not.
    pub max_steps: usize,
    /// Newton corrections applied to a trial step that lost value; 0 disables.
    pub corrector_iterations: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Euler,
            initial_step: 1.0 / 32.0,
            min_step: 1e-6,
            slack_tolerance: None,
            checkpoints: Vec::new(),
            max_steps: 200_000,
            corrector_iterations: 2,
        }
    }
}

impl IntegratorOptions {
    pub fn slack_for(&self, threshold: f64) -> f64 {
        self.slack_tolerance
            .unwrap_or(DEFAULT_RELATIVE_SLACK * threshold)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return bad("initial_step must lie in (0, 1]");
        }
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step) {
            return bad("min_step must lie in (0, initial_step]");
        }
        if let Some(slack) = self.slack_tolerance {
            if !(slack >= 0.0) {
                return bad("slack_tolerance must be non-negative");
            }
        }
        if self.checkpoints.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("checkpoints must lie in [0, 1]");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }

    fn sorted_checkpoints(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self
            .checkpoints
            .iter()
            .copied()
            .filter(|&c| c > 0.0 && c < 1.0)
            .collect();
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }
}

/// One accepted point of the continuation.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyState {
    pub s: f64,
    pub f: Vec<BoundaryTrace>,
    pub constraint_value: f64,
    pub mu: Vec<f64>,
    /// `|F(f, s)|` in the boundary norm, the velocity leaving this state.
    pub g_norm: f64,
    /// Step that led to this state, zero for the start.
    pub step_size: f64,
    pub branch: Branch,
    pub gradients: Vec<[f64; 2]>,
    pub critical: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<HomotopyState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_f: Vec<BoundaryTrace>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&HomotopyState> {
        self.states.last()
    }

    /// Index of the state at exactly `s`, if one was recorded.
    pub fn state_at(&self, s: f64) -> Option<&HomotopyState> {
        self.states.iter().find(|st| st.s == s)
    }

    /// Largest decrease of the constraint between consecutive states.
    pub fn worst_decrease(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| w[0].constraint_value - w[1].constraint_value)
            .fold(0.0, f64::max)
    }

    pub fn min_constraint(&self) -> f64 {
        self.states
            .iter()
            .map(|st| st.constraint_value)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IntegrationFailure {
    #[error("initial data violates the constraint: value {value} < threshold {threshold} - slack {slack}")]
    InitialInfeasible {
        value: f64,
        threshold: f64,
        slack: f64,
    },
    #[error(
        "step size fell below {min_step} at s = {s} (constraint {value}, trial value {trial})"
    )]
    StepUnderflow {
        s: f64,
        min_step: f64,
        value: f64,
        trial: f64,
    },
    #[error("step budget of {0} trial steps exhausted")]
    StepBudget(usize),
    #[error("control evaluation failed at s = {s}: {source}")]
    Control { s: f64, source: Error },
}

/// Integration failure together with everything accepted so far.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{cause}")]
pub struct IntegrationError {
    pub partial: Trajectory,
    pub cause: IntegrationFailure,
}

/// Integrates `df/ds = F(f, s)` from `s = 0` to `s = 1`.
pub fn integrate(
    problem: &ControlProblem<'_>,
    f0: &[BoundaryTrace],
    spec: &ConstraintSpec,
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrationError> {
    let mut traj = Trajectory {
        final_f: f0.to_vec(),
        ..Trajectory::default()
    };
    let fail = |traj: Trajectory, cause| IntegrationError {
        partial: traj,
        cause,
    };
    if let Err(e) = opts.validate().and_then(|_| spec.validate()) {
        return Err(fail(
            traj,
            IntegrationFailure::Control { s: 0.0, source: e },
        ));
    }
    let mesh = problem.mesh();
    let slack = opts.slack_for(spec.threshold);
    let floor = spec.threshold - slack;
    let checkpoints = opts.sorted_checkpoints();

    let control_at = |stage: &Stage<'_, '_>, f: &[BoundaryTrace]| {
        stage
            .control(f, spec)
            .map_err(|source| IntegrationFailure::Control {
                s: stage.s(),
                source,
            })
    };
    let stage_at = |s: f64| {
        problem
            .stage(s)
            .map_err(|source| IntegrationFailure::Control { s, source })
    };

    let start = match stage_at(0.0).and_then(|stage| control_at(&stage, f0)) {
        Ok(out) => out,
        Err(cause) => return Err(fail(traj, cause)),
    };
    if start.constraint_value < floor {
        let cause = IntegrationFailure::InitialInfeasible {
            value: start.constraint_value,
            threshold: spec.threshold,
            slack,
        };
        return Err(fail(traj, cause));
    }
    traj.states
        .push(make_state(mesh, 0.0, f0.to_vec(), &start, 0.0));
    let mut current = start;
    let mut f = f0.to_vec();
    let mut s = 0.0;
    let mut h = opts.initial_step;
    let mut trials = 0usize;

    while s < 1.0 {
        let next_stop = checkpoints.iter().copied().find(|&c| c > s).unwrap_or(1.0);
        let mut rejected_here = false;
        loop {
            trials += 1;
            if trials > opts.max_steps {
                traj.final_f = f;
                return Err(fail(traj, IntegrationFailure::StepBudget(opts.max_steps)));
            }
            let step = h.min(next_stop - s);
            let s_new = if step >= next_stop - s {
                next_stop
            } else {
                s + step
            };
            let trial = match opts.method {
                Method::Euler => euler_step(&f, &current, step),
                Method::Rk4 => match rk4_step(&stage_at, &control_at, &f, &current, s, step) {
                    Ok(t) => t,
                    Err(cause) => {
                        traj.final_f = f;
                        return Err(fail(traj, cause));
                    }
                },
            };
            let corrected = stage_at(s_new).and_then(|stage| {
                let mut trial = trial;
                let mut out = control_at(&stage, &trial)?;
                for _ in 0..opts.corrector_iterations {
                    match correction(mesh, &current, &out, spec) {
                        Some(delta) => {
                            trial = combine(&trial, &[(1.0, &delta)]);
                            out = control_at(&stage, &trial)?;
                        }
                        None => break,
                    }
                }
                Ok((trial, out))
            });
            let (trial, out) = match corrected {
                Ok(pair) => pair,
                Err(cause) => {
                    traj.final_f = f;
                    return Err(fail(traj, cause));
                }
            };
            let previous = current.constraint_value;
            let value = out.constraint_value;
            if value >= previous - slack && value >= floor {
                traj.accepted_steps += 1;
                traj.states
                    .push(make_state(mesh, s_new, trial.clone(), &out, s_new - s));
                f = trial;
                current = out;
                s = s_new;
                if !rejected_here {
                    h = (2.0 * h).min(opts.initial_step);
                }
                break;
            }
            traj.rejected_steps += 1;
            rejected_here = true;
            h = step / 2.0;
            if h < opts.min_step {
                traj.final_f = f;
                let cause = IntegrationFailure::StepUnderflow {
                    s,
                    min_step: opts.min_step,
                    value: previous,
                    trial: value,
                };
                return Err(fail(traj, cause));
            }
        }
    }
    traj.final_f = f;
    Ok(traj)
}

fn make_state(
    mesh: &Mesh,
    s: f64,
    f: Vec<BoundaryTrace>,
    out: &ControlOutput,
    step_size: f64,
) -> HomotopyState {
    HomotopyState {
        s,
        f,
        constraint_value: out.constraint_value,
        mu: out.mu.clone(),
        g_norm: out.g_l2_norm(mesh),
        step_size,
        branch: out.branch,
        gradients: out.gradients.clone(),
        critical: out.critical,
    }
}

/// Minimal-norm boundary perturbation restoring the constraint values of
/// `previous` to first order, or `None` when nothing was lost.
fn correction(
    mesh: &Mesh,
    previous: &ControlOutput,
    trial: &ControlOutput,
    spec: &ConstraintSpec,
) -> Option<Vec<BoundaryTrace>> {
    if trial.critical || trial.flux_norm_sq == 0.0 {
        return None;
    }
    match &spec.constraint {
        Constraint::SingleGradient { .. } => {
            let deficit = previous.constraint_value - trial.constraint_value;
            if !(deficit > 0.0) {
                return None;
            }
            // d|grad u| = -<flux, df> / |y| with the flux of direction y.
            let c = -deficit * trial.constraint_value / trial.flux_norm_sq;
            Some(vec![trial.fluxes[0].scaled(c)])
        }
        Constraint::MultiPoint { .. } => {
            let targets: Vec<f64> = previous
                .gradients
                .iter()
                .zip(&trial.gradients)
                .map(|(p, t)| {
                    let (p, t) = (libm::hypot(p[0], p[1]), libm::hypot(t[0], t[1]));
                    (p - t).max(0.0) * t
                })
                .collect();
            if targets.iter().all(|&d| d == 0.0) {
                return None;
            }
            let k = trial.fluxes.len();
            let gram: Vec<Vec<f64>> = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| boundary_l2_inner(mesh, &trial.fluxes[i], &trial.fluxes[j]))
                        .collect()
                })
                .collect();
            let coeffs = DenseCholesky::factor(&gram).ok()?.solve(&targets);
            let delta = coeffs
                .iter()
                .zip(&trial.fluxes)
                .fold(BoundaryTrace::zeros(mesh), |acc, (c, q)| {
                    acc.add_scaled(-c, q)
                });
            Some(vec![delta])
        }
        Constraint::Multilinear { .. } => {
            let deficit = previous.constraint_value - trial.constraint_value;
            if !(deficit > 0.0) {
                return None;
            }
            let c = -deficit / trial.flux_norm_sq;
            Some(trial.fluxes.iter().map(|q| q.scaled(c)).collect())
        }
    }
}

fn combine(f: &[BoundaryTrace], terms: &[(f64, &[BoundaryTrace])]) -> Vec<BoundaryTrace> {
    f.iter()
        .enumerate()
        .map(|(i, fi)| {
            terms
                .iter()
                .fold(fi.clone(), |acc, (c, k)| acc.add_scaled(*c, &k[i]))
        })
        .collect()
}

fn euler_step(f: &[BoundaryTrace], k1: &ControlOutput, h: f64) -> Vec<BoundaryTrace> {
    combine(f, &[(h, &k1.g)])
}

fn rk4_step<'m, 'p, SA, CA>(
    stage_at: &SA,
    control_at: &CA,
    f: &[BoundaryTrace],
    k1: &ControlOutput,
    s: f64,
    h: f64,
) -> Result<Vec<BoundaryTrace>, IntegrationFailure>
where
    SA: Fn(f64) -> Result<Stage<'p, 'm>, IntegrationFailure>,
    CA: Fn(&Stage<'p, 'm>, &[BoundaryTrace]) -> Result<ControlOutput, IntegrationFailure>,
    'm: 'p,
{
    let mid = stage_at(s + 0.5 * h)?;
    let k2 = control_at(&mid, &combine(f, &[(0.5 * h, &k1.g)]))?;
    let k3 = control_at(&mid, &combine(f, &[(0.5 * h, &k2.g)]))?;
    let end = stage_at(s + h)?;
    let k4 = control_at(&end, &combine(f, &[(h, &k3.g)]))?;
    Ok(combine(
        f,
        &[
            (h / 6.0, &k1.g),
            (h / 3.0, &k2.g),
            (h / 3.0, &k3.g),
            (h / 6.0, &k4.g),
        ],
    ))
}

/// Independent check of the end data: a fresh solve with `gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub constraint_value: f64,
    pub threshold: f64,
    pub slack: f64,
    pub passed: bool,
    pub gradients: Vec<[f64; 2]>,
}

/// Solves from scratch at `s = 1` and compares against `threshold - slack`.
pub fn verify_final(
    mesh: &Mesh,
    gamma: &Coefficient,
    f_final: &[BoundaryTrace],
    spec: &ConstraintSpec,
    slack: f64,
    solve: SolveOptions,
) -> Result<FinalReport, Error> {
    if f_final.len() != spec.num_solutions() {
        return Err(Error::DimensionMismatch {
            context: "number of final boundary traces",
            expected: spec.num_solutions(),
            actual: f_final.len(),
        });
    }
    let operator = EllipticOperator::new(mesh, gamma, solve)?;
    let points = spec.points();
    let gradients = match spec.num_solutions() {
        1 if points.len() > 1 => {
            let u = operator.solve_dirichlet(&f_final[0], None)?;
            points.iter().map(|p| gradient_at(mesh, &u, p)).collect()
        }
        _ => f_final
            .iter()
            .map(|fi| {
                Ok(gradient_at(
                    mesh,
                    &operator.solve_dirichlet(fi, None)?,
                    &points[0],
                ))
            })
            .collect::<Result<Vec<_>, Error>>()?,
    };
    let constraint_value = constraint_value_from_gradients(&gradients, spec);
    Ok(FinalReport {
        constraint_value,
        threshold: spec.threshold,
        slack,
        passed: constraint_value >= spec.threshold - slack,
        gradients,
    })
}

/// One point of the scaling baseline `f_s = phi(s) f0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveState {
    pub s: f64,
    pub phi: f64,
    pub phi_prime: f64,
    pub constraint_value: f64,
    pub step_size: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NaiveTrajectory {
    pub states: Vec<NaiveState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{cause}")]
pub struct NaiveError {
    pub partial: NaiveTrajectory,
    pub cause: IntegrationFailure,
}

/// Largest relative change of `phi` accepted in one step of the baseline.
pub const NAIVE_MAX_RELATIVE_GROWTH: f64 = 0.5;

/// Integrates the scaling baseline with the production rate.
pub fn integrate_naive(
    problem: &ControlProblem<'_>,
    f0: &BoundaryTrace,
    point: &PointLocation,
    opts: &IntegratorOptions,
) -> Result<NaiveTrajectory, NaiveError> {
    integrate_naive_with(problem, f0, point, opts, |stage, phi| {
        stage.naive_scaling_rate(phi, f0, point)
    })
}

/// Integrates `phi' = rate(stage, phi)` from `phi(0) = 1`.
///
/// Steps whose relative change in `phi` exceeds
/// [`NAIVE_MAX_RELATIVE_GROWTH`] are halved, so a blow-up surfaces as a step
/// underflow. The rate is injectable so failure paths can be exercised.
pub fn integrate_naive_with<R>(
    problem: &ControlProblem<'_>,
    f0: &BoundaryTrace,
    point: &PointLocation,
    opts: &IntegratorOptions,
    mut rate: R,
) -> Result<NaiveTrajectory, NaiveError>
where
    R: FnMut(&Stage<'_, '_>, f64) -> Result<f64, Error>,
{
    let mut traj = NaiveTrajectory::default();
    let fail = |traj: NaiveTrajectory, cause| NaiveError {
        partial: traj,
        cause,
    };
    if let Err(source) = opts.validate() {
        return Err(fail(traj, IntegrationFailure::Control { s: 0.0, source }));
    }
    let mesh = problem.mesh();
    let checkpoints = opts.sorted_checkpoints();
    let mut eval = |s: f64, phi: f64| -> Result<(f64, f64), IntegrationFailure> {
        let wrap = |source| IntegrationFailure::Control { s, source };
        let stage = problem.stage(s).map_err(wrap)?;
        let d = rate(&stage, phi).map_err(wrap)?;
        let u = stage.primal(&f0.scaled(phi)).map_err(wrap)?;
        let y = gradient_at(mesh, &u, point);
        Ok((d, libm::hypot(y[0], y[1])))
    };

    let (mut d, value) = match eval(0.0, 1.0) {
        Ok(v) => v,
        Err(cause) => return Err(fail(traj, cause)),
    };
    traj.states.push(NaiveState {
        s: 0.0,
        phi: 1.0,
        phi_prime: d,
        constraint_value: value,
        step_size: 0.0,
    });
    let (mut s, mut phi, mut h) = (0.0, 1.0, opts.initial_step);
    let mut trials = 0usize;
    while s < 1.0 {
        let next_stop = checkpoints.iter().copied().find(|&c| c > s).unwrap_or(1.0);
        let mut rejected_here = false;
        loop {
            trials += 1;
            if trials > opts.max_steps {
                return Err(fail(traj, IntegrationFailure::StepBudget(opts.max_steps)));
            }
            let step = h.min(next_stop - s);
            let s_new = if step >= next_stop - s {
                next_stop
            } else {
                s + step
            };
            let phi_new = phi + step * d;
            let grow = ((phi_new - phi) / phi).abs();
            if grow <= NAIVE_MAX_RELATIVE_GROWTH && phi_new.is_finite() {
                let (d_new, value) = match eval(s_new, phi_new) {
                    Ok(v) => v,
                    Err(cause) => return Err(fail(traj, cause)),
                };
                traj.accepted_steps += 1;
                traj.states.push(NaiveState {
                    s: s_new,
                    phi: phi_new,
                    phi_prime: d_new,
                    constraint_value: value,
                    step_size: s_new - s,
                });
                s = s_new;
                phi = phi_new;
                d = d_new;
                if !rejected_here {
                    h = (2.0 * h).min(opts.initial_step);
                }
                break;
            }
            traj.rejected_steps += 1;
            rejected_here = true;
            h = step / 2.0;
            if h < opts.min_step {
                let value = traj.states.last().map_or(0.0, |st| st.constraint_value);
                let cause = IntegrationFailure::StepUnderflow {
                    s,
                    min_step: opts.min_step,
                    value,
                    trial: value,
                };
                return Err(fail(traj, cause));
            }
        }
    }
    Ok(traj)
}

/// `|f|` summed over traces in the boundary norm.
pub fn traces_norm(mesh: &Mesh, f: &[BoundaryTrace]) -> f64 {
    libm::sqrt(
        f.iter()
            .map(|fi| {
                let n = boundary_l2_norm(mesh, fi);
                n * n
            })
            .sum(),
    )
}

/// Zero traces shaped like the constraint expects.
pub fn zero_traces(mesh: &Mesh, spec: &ConstraintSpec) -> Vec<BoundaryTrace> {
    vec![BoundaryTrace::zeros(mesh); spec.num_solutions()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientExpr;
    use crate::control::MultilinearForm;

    fn identity_problem(mesh: &Mesh) -> ControlProblem<'_> {
        let one = Coefficient::constant(mesh, 1.0).unwrap();
        ControlProblem::new(mesh, one.clone(), one, SolveOptions::default()).unwrap()
    }

    #[test]
    fn stationary_homotopy_keeps_data() {
        let mesh = Mesh::build_structured(8).unwrap();
        let problem = identity_problem(&mesh);
        let spec = ConstraintSpec::single_gradient(&mesh, [0.45, 0.55]).unwrap();
        let f0 = spec.default_initial_data(&mesh);
        let opts = IntegratorOptions {
            checkpoints: vec![0.5],
            ..IntegratorOptions::default()
        };
        let traj = integrate(&problem, &f0, &spec, &opts).unwrap();
        assert_eq!(traj.states[0].s, 0.0);
        assert_eq!(traj.last().unwrap().s, 1.0);
        assert!(traj.state_at(0.5).is_some());
        assert_eq!(traj.rejected_steps, 0);
        assert_eq!(traj.final_f, f0);
        for st in &traj.states {
            assert!((st.constraint_value - 1.0).abs() < 1e-10);
        }
        assert!(traj.states.windows(2).all(|w| w[1].s > w[0].s));
    }

    #[test]
    fn determinant_stays_one_without_coefficient_change() {
        let mesh = Mesh::build_structured(8).unwrap();
        let problem = identity_problem(&mesh);
        let spec = ConstraintSpec::multilinear(&mesh, [0.45, 0.55], MultilinearForm::determinant())
            .unwrap();
        let f0 = spec.default_initial_data(&mesh);
        let traj = integrate(&problem, &f0, &spec, &IntegratorOptions::default()).unwrap();
        for st in &traj.states {
            assert!((st.constraint_value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn infeasible_start_is_reported() {
        let mesh = Mesh::build_structured(8).unwrap();
        let problem = identity_problem(&mesh);
        let spec = ConstraintSpec::single_gradient(&mesh, [0.45, 0.55])
            .unwrap()
            .with_threshold(2.0)
            .unwrap();
        let f0 = spec.default_initial_data(&mesh);
        let err = integrate(&problem, &f0, &spec, &IntegratorOptions::default()).unwrap_err();
        assert!(matches!(
            err.cause,
            IntegrationFailure::InitialInfeasible { .. }
        ));
        assert!(err.partial.states.is_empty());
    }

    #[test]
    fn verify_final_identity() {
        let mesh = Mesh::build_structured(8).unwrap();
        let gamma = CoefficientExpr::constant(1.0).evaluate(&mesh).unwrap();
        let spec = ConstraintSpec::single_gradient(&mesh, [0.45, 0.55]).unwrap();
        let f = spec.default_initial_data(&mesh);
        let report = verify_final(&mesh, &gamma, &f, &spec, 1e-6, SolveOptions::default()).unwrap();
        assert!(report.passed);
        assert!((report.constraint_value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn naive_identity_keeps_phi() {
        let mesh = Mesh::build_structured(8).unwrap();
        let problem = identity_problem(&mesh);
        let point = mesh.locate([0.45, 0.55]).unwrap();
        let f0 = BoundaryTrace::from_fn(&mesh, |p| p[0]);
        let traj = integrate_naive(&problem, &f0, &point, &IntegratorOptions::default()).unwrap();
        assert!(traj
            .states
            .iter()
            .all(|st| st.phi == 1.0 && st.phi_prime == 0.0));
        assert_eq!(traj.states.last().unwrap().s, 1.0);
    }

    #[test]
    fn naive_failure_carries_partial() {
        let mesh = Mesh::build_structured(8).unwrap();
        let problem = identity_problem(&mesh);
        let point = mesh.locate([0.45, 0.55]).unwrap();
        let f0 = BoundaryTrace::from_fn(&mesh, |p| p[0]);
        let err = integrate_naive_with(
            &problem,
            &f0,
            &point,
            &IntegratorOptions::default(),
            |stage, _| {
                if stage.s() > 0.3 {
                    Err(Error::CriticalPoint { s: stage.s() })
                } else {
                    Ok(0.0)
                }
            },
        )
        .unwrap_err();
        assert!(matches!(
            err.cause,
            IntegrationFailure::Control {
                source: Error::CriticalPoint { .. },
                ..
            }
        ));
        assert!(!err.partial.states.is_empty());
        assert!(err.partial.states.last().unwrap().s <= 0.3);
    }
}
