use std::path::Path;

use hbc_core::control::{Constraint, Stage};
use hbc_core::elliptic::BoundaryTrace;
use hbc_core::homotopy::{integrate, integrate_naive_with};
use hbc_core::mesh::PointLocation;
use serde_json::json;

use super::synthesize::trajectory_details;
use super::{build_mesh_and_spec, build_problem, mesh_details, Recorder};
use crate::output::{write_comparison, ComparisonRow};
use crate::Exit;

/// `phi'(s)` of the scaling baseline, given the stage, `phi`, `f0` and the point.
pub type NaiveRate<'a> =
    dyn FnMut(&Stage<'_, '_>, f64, &BoundaryTrace, &PointLocation) -> hbc_core::Result<f64> + 'a;

pub fn compare_naive(path: &Path) -> Exit {
    compare_naive_with(path, &mut |stage, phi, f0, point| {
        stage.naive_scaling_rate(phi, f0, point)
    })
}

/// [`compare_naive`] with a replaceable baseline rate.
pub fn compare_naive_with(path: &Path, rate: &mut NaiveRate<'_>) -> Exit {
    let (mut rec, config) = match Recorder::new("compare-naive").load(path) {
        Ok(loaded) => loaded,
        Err(exit) => return exit,
    };
    let (mesh, spec) = match build_mesh_and_spec(&config, config.mesh.n_per_side) {
        Ok(built) => built,
        Err(e) => return rec.finish("setup", Exit::Config, Some(e.to_string())),
    };
    let Constraint::SingleGradient { point } = spec.constraint else {
        let message = "compare-naive needs constraint.kind = \"single_gradient\"".to_owned();
        return rec.finish("setup", Exit::Config, Some(message));
    };
    let problem = match build_problem(&config, &config.coefficient, &mesh) {
        Ok(problem) => problem,
        Err(e) => return rec.finish("setup", Exit::Config, Some(e.to_string())),
    };
    rec.set("mesh", mesh_details(&mesh));
    rec.set(
        "coefficient",
        json!({ "gamma0": config.gamma0.to_string(), "gamma": config.coefficient.to_string() }),
    );

    let samples = config.compare.samples;
    let grid: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
    let opts = config.integrator_options(grid[1..samples].to_vec());
    let f0 = spec.default_initial_data(&mesh);

    let optimal = integrate(&problem, &f0, &spec, &opts);
    let naive = integrate_naive_with(&problem, &f0[0], &point, &opts, |stage, phi| {
        rate(stage, phi, &f0[0], &point)
    });
    let (optimal_traj, optimal_error) = match optimal {
        Ok(traj) => (traj, None),
        Err(e) => (e.partial, Some(e.cause.to_string())),
    };
    let (naive_traj, naive_error) = match naive {
        Ok(traj) => (traj, None),
        Err(e) => (e.partial, Some(e.cause.to_string())),
    };

    let rows: Vec<ComparisonRow> = grid
        .iter()
        .map(|&s| ComparisonRow {
            s,
            naive: naive_traj.states.iter().copied().find(|st| st.s == s),
            optimal: optimal_traj
                .state_at(s)
                .map(|st| (st.g_norm, st.constraint_value)),
        })
        .collect();
    let csv = config.output_dir.join("comparison.csv");
    if let Err(e) = write_comparison(&csv, &rows) {
        return rec.finish(
            "naive",
            Exit::Config,
            Some(format!("cannot write {}: {e}", csv.display())),
        );
    }

    rec.set("optimal", trajectory_details(&optimal_traj));
    rec.set("optimal_error", &optimal_error);
    rec.set(
        "naive",
        json!({
            "accepted_steps": naive_traj.accepted_steps,
            "rejected_steps": naive_traj.rejected_steps,
            "reached_s": naive_traj.states.last().map(|st| st.s),
            "max_phi": naive_traj.states.iter().map(|st| st.phi).fold(f64::NEG_INFINITY, f64::max),
            "error": naive_error,
        }),
    );
    match (optimal_error, naive_error) {
        (Some(e), _) => rec.finish(
            "integrate",
            Exit::Integrator,
            Some(format!("optimal scheme failed: {e}")),
        ),
        (None, Some(e)) => rec.finish(
            "naive",
            Exit::NaiveFailed,
            Some(format!("naive scheme failed: {e}")),
        ),
        (None, None) => rec.finish("complete", Exit::Ok, None),
    }
}
