//! The linearized solve against central differences along the homotopy.

use hbc_core::coefficients::CoefficientExpr;
use hbc_core::control::ControlProblem;
use hbc_core::elliptic::BoundaryTrace;
use hbc_core::linalg::SolveOptions;
use hbc_core::mesh::Mesh;
use hbc_core::traces::TraceSampler;

#[test]
fn linearized_matches_central_difference() {
    let mesh = Mesh::build_structured(16).unwrap();
    let problem = ControlProblem::new(
        &mesh,
        CoefficientExpr::constant(1.0).evaluate(&mesh).unwrap(),
        CoefficientExpr::gaussian_bump(0.8, [0.3, 0.6], 0.04)
            .evaluate(&mesh)
            .unwrap(),
        SolveOptions::default(),
    )
    .unwrap();
    let mut sampler = TraceSampler::new(5);
    let f = sampler.fourier_trace(&mesh);
    let g = sampler.fourier_trace(&mesh);
    let (s, h) = (0.4, 1e-3);
    let stage = problem.stage(s).unwrap();
    let u = stage.primal(&f).unwrap();
    let v = stage.linearized(&u, &g).unwrap();
    let shifted = |t: f64| -> Vec<f64> {
        let data: BoundaryTrace = f.add_scaled(t - s, &g);
        problem.stage(t).unwrap().primal(&data).unwrap().into_vec()
    };
    let (plus, minus) = (shifted(s + h), shifted(s - h));
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let worst = (0..v.len())
        .map(|i| ((plus[i] - minus[i]) / (2.0 * h) - v[i]).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-5 * scale, "worst {worst}, scale {scale}");
}
