//! Control outputs checked by direct linearized solves.

use hbc_core::coefficients::{Coefficient, CoefficientExpr};
use hbc_core::control::{Branch, ConstraintSpec, ControlProblem, MultilinearForm};
use hbc_core::elliptic::{boundary_l2_norm, gradient_at, BoundaryTrace};
use hbc_core::linalg::SolveOptions;
use hbc_core::mesh::Mesh;
use hbc_core::Error;

fn bump_problem(mesh: &Mesh) -> ControlProblem<'_> {
    ControlProblem::new(
        mesh,
        Coefficient::constant(mesh, 1.0).unwrap(),
        CoefficientExpr::gaussian_bump(0.5, [0.7, 0.3], 0.05)
            .evaluate(mesh)
            .unwrap(),
        SolveOptions::default(),
    )
    .unwrap()
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[test]
fn single_gradient_branches_obey_their_postconditions() {
    let mesh = Mesh::build_structured(32).unwrap();
    let problem = bump_problem(&mesh);
    let spec = ConstraintSpec::single_gradient(&mesh, [0.5, 0.5]).unwrap();
    let point = spec.points()[0];
    let f = spec.default_initial_data(&mesh);
    let mut seen = [false; 2];
    for s in [0.0, 0.25, 0.5, 1.0] {
        let stage = problem.stage(s).unwrap();
        let out = stage.control(&f, &spec).unwrap();
        let u = stage.primal(&f[0]).unwrap();
        let v = stage.linearized(&u, &out.g[0]).unwrap();
        let rate = dot(out.gradients[0], gradient_at(&mesh, &v, &point));
        match out.branch {
            Branch::Active => {
                seen[1] = true;
                assert!(out.mu[0] < 0.0);
                assert!(rate.abs() < 1e-8, "s = {s}: rate {rate}");
            }
            Branch::Inactive => {
                seen[0] = true;
                assert!(out.volume_terms[0] >= 0.0);
                assert!(out.g[0].is_zero());
                assert!((rate - out.volume_terms[0]).abs() < 1e-10);
            }
        }
    }
    assert_eq!(
        seen,
        [true, true],
        "both branches should occur along this path"
    );
}

#[test]
fn multi_point_holds_every_gradient() {
    let mesh = Mesh::build_structured(24).unwrap();
    let problem = bump_problem(&mesh);
    let spec = ConstraintSpec::multi_point(&mesh, &[[0.3, 0.3], [0.7, 0.7]]).unwrap();
    let f = spec.default_initial_data(&mesh);
    let stage = problem.stage(0.6).unwrap();
    let out = stage.control(&f, &spec).unwrap();
    assert_eq!(out.branch, Branch::Active);
    let u = stage.primal(&f[0]).unwrap();
    let v = stage.linearized(&u, &out.g[0]).unwrap();
    for (point, y) in spec.points().iter().zip(&out.gradients) {
        let rate = dot(*y, gradient_at(&mesh, &v, point));
        assert!(rate.abs() < 1e-8, "rate {rate}");
    }
}

#[test]
fn one_point_multi_point_matches_active_single_point() {
    let mesh = Mesh::build_structured(16).unwrap();
    let problem = bump_problem(&mesh);
    let single = ConstraintSpec::single_gradient(&mesh, [0.5, 0.5]).unwrap();
    let multi = ConstraintSpec::multi_point(&mesh, &[[0.5, 0.5]]).unwrap();
    let f = single.default_initial_data(&mesh);
    let stage = problem.stage(1.0).unwrap();
    let a = stage.control(&f, &single).unwrap();
    let b = stage.control(&f, &multi).unwrap();
    assert_eq!(a.branch, Branch::Active);
    let diff = boundary_l2_norm(&mesh, &a.g[0].add_scaled(-1.0, &b.g[0]));
    assert!(diff <= 1e-12 * boundary_l2_norm(&mesh, &a.g[0]));
}

#[test]
fn multi_point_without_coefficient_change_is_still() {
    let mesh = Mesh::build_structured(12).unwrap();
    let one = Coefficient::constant(&mesh, 1.0).unwrap();
    let problem = ControlProblem::new(&mesh, one.clone(), one, SolveOptions::default()).unwrap();
    let spec = ConstraintSpec::multi_point(&mesh, &[[0.3, 0.3], [0.7, 0.7]]).unwrap();
    let out = problem
        .stage(0.5)
        .unwrap()
        .control(&spec.default_initial_data(&mesh), &spec)
        .unwrap();
    assert!(out.g[0].is_zero());
    assert_eq!(out.mu, vec![0.0, 0.0]);
}

#[test]
fn points_sharing_a_triangle_have_dependent_fluxes() {
    let mesh = Mesh::build_structured(4).unwrap();
    let problem = bump_problem(&mesh);
    let spec = ConstraintSpec::multi_point(&mesh, &[[0.55, 0.53], [0.58, 0.52]]).unwrap();
    let points = spec.points();
    assert_eq!(points[0].triangle, points[1].triangle);
    let err = problem
        .stage(0.5)
        .unwrap()
        .control(&spec.default_initial_data(&mesh), &spec)
        .unwrap_err();
    assert!(matches!(err, Error::DependentFluxes(_)), "{err:?}");
}

#[test]
fn projection_form_reduces_to_one_adjoint() {
    let mesh = Mesh::build_structured(16).unwrap();
    let problem = bump_problem(&mesh);
    let spec =
        ConstraintSpec::multilinear(&mesh, [0.5, 0.5], MultilinearForm::projection(0)).unwrap();
    let point = spec.points()[0];
    let f = spec.default_initial_data(&mesh);
    let stage = problem.stage(0.7).unwrap();
    let out = stage.control(&f, &spec).unwrap();
    let u = stage.primal(&f[0]).unwrap();
    let terms = stage.adjoint_terms(&u, &point, [1.0, 0.0]).unwrap();
    let expect = terms.flux.scaled(terms.volume_term / terms.flux_norm_sq);
    let diff = boundary_l2_norm(&mesh, &out.g[0].add_scaled(-1.0, &expect));
    assert!(diff <= 1e-12 * boundary_l2_norm(&mesh, &expect));
}

#[test]
fn determinant_control_freezes_the_determinant() {
    let mesh = Mesh::build_structured(20).unwrap();
    let problem = bump_problem(&mesh);
    let spec =
        ConstraintSpec::multilinear(&mesh, [0.5, 0.5], MultilinearForm::determinant()).unwrap();
    let point = spec.points()[0];
    let f = spec.default_initial_data(&mesh);
    let stage = problem.stage(0.4).unwrap();
    let out = stage.control(&f, &spec).unwrap();
    let mut rate = 0.0;
    for (i, fi) in f.iter().enumerate() {
        let u = stage.primal(fi).unwrap();
        let v = stage.linearized(&u, &out.g[i]).unwrap();
        rate += dot(out.directions[i], gradient_at(&mesh, &v, &point));
    }
    assert!(rate.abs() < 1e-8, "d/ds det = {rate}");
    // The determinant preset differentiates to rotated gradients.
    let [p1, p2] = [out.gradients[0], out.gradients[1]];
    assert_eq!(out.directions[0], [p2[1], -p2[0]]);
    assert_eq!(out.directions[1], [-p1[1], p1[0]]);
}

#[test]
fn clamped_multiplier_never_pushes_up() {
    let mesh = Mesh::build_structured(16).unwrap();
    let problem = bump_problem(&mesh);
    let spec = ConstraintSpec::multilinear(&mesh, [0.5, 0.5], MultilinearForm::determinant())
        .unwrap()
        .with_mu_clamp(true);
    let f = spec.default_initial_data(&mesh);
    for s in [0.0, 0.3, 0.6, 1.0] {
        let out = problem.stage(s).unwrap().control(&f, &spec).unwrap();
        assert!(out.mu[0] <= 0.0);
        if out.mu[0] == 0.0 {
            assert_eq!(out.branch, Branch::Inactive);
            assert!(out.g.iter().all(BoundaryTrace::is_zero));
            assert!(out.rates.iter().sum::<f64>() >= 0.0);
        }
    }
}
