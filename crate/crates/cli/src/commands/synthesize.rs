use std::io;
use std::path::Path;

use hbc_core::control::{ConstraintSpec, ControlProblem};
use hbc_core::elliptic::BoundaryTrace;
use hbc_core::homotopy::{integrate, verify_final, HomotopyState, IntegrationFailure, Trajectory};
use serde_json::json;

use super::{build_mesh_and_spec, build_problem, mesh_details, Recorder};
use crate::output::{
    ensure_dir, write_element_field, write_final_trace, write_mesh, write_nodal_fields,
    write_trajectory,
};
use crate::Exit;

/// Homotopy times with field dumps.
pub const FIELD_TIMES: [f64; 3] = [0.0, 0.5, 1.0];

pub fn synthesize(path: &Path) -> Exit {
    let (mut rec, config) = match Recorder::new("synthesize").load(path) {
        Ok(loaded) => loaded,
        Err(exit) => return exit,
    };
    let (mesh, spec) = match build_mesh_and_spec(&config, config.mesh.n_per_side) {
        Ok(built) => built,
        Err(e) => return rec.finish("setup", Exit::Config, Some(e.to_string())),
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
    rec.set("constraint", &spec);
    let opts = config.integrator_options(vec![0.5]);
    rec.set("integrator", &opts);
    let slack = opts.slack_for(spec.threshold);
    rec.set("slack_tolerance", slack);

    let dir = config.output_dir.clone();
    let f0 = spec.default_initial_data(&mesh);
    let result = integrate(&problem, &f0, &spec, &opts);
    let (traj, failure) = match result {
        Ok(traj) => (traj, None),
        Err(err) => (err.partial, Some(err.cause)),
    };
    rec.set("trajectory", trajectory_details(&traj));
    if let Err(e) = write_run_outputs(&dir, &problem, &spec, &traj) {
        let message = format!("cannot write outputs in {}: {e}", dir.display());
        return rec.finish("integrate", Exit::Config, Some(message));
    }
    if let Some(cause) = failure {
        let exit = match cause {
            IntegrationFailure::InitialInfeasible { .. } => Exit::Constraint,
            _ => Exit::Integrator,
        };
        return rec.finish("integrate", exit, Some(cause.to_string()));
    }

    let report = match verify_final(
        &mesh,
        problem.gamma(),
        &traj.final_f,
        &spec,
        slack,
        config.solve_options(),
    ) {
        Ok(report) => report,
        Err(e) => return rec.finish("verify", Exit::Constraint, Some(e.to_string())),
    };
    rec.set("final_constraint_value", report.constraint_value);
    rec.set("final_verification", &report);
    if report.passed {
        rec.finish("complete", Exit::Ok, None)
    } else {
        let message = format!(
            "final constraint value {} is below threshold {} - slack {}",
            report.constraint_value, report.threshold, report.slack
        );
        rec.finish("verify", Exit::Constraint, Some(message))
    }
}

pub(crate) fn trajectory_details(traj: &Trajectory) -> serde_json::Value {
    json!({
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "states": traj.states.len(),
        "final_s": traj.last().map(|st| st.s),
        "final_constraint_value": traj.last().map(|st| st.constraint_value),
        "min_constraint_value": (!traj.states.is_empty()).then(|| traj.min_constraint()),
        "worst_decrease": traj.worst_decrease(),
        "max_g_norm": traj.states.iter().map(|st| st.g_norm).fold(0.0, f64::max),
    })
}

/// trajectory.csv, final_trace.txt and fields/ for whatever was reached.
fn write_run_outputs(
    dir: &Path,
    problem: &ControlProblem<'_>,
    spec: &ConstraintSpec,
    traj: &Trajectory,
) -> io::Result<()> {
    let mesh = problem.mesh();
    write_trajectory(&dir.join("trajectory.csv"), &traj.states)?;
    write_final_trace(&dir.join("final_trace.txt"), mesh, &traj.final_f)?;
    let fields = dir.join("fields");
    ensure_dir(&fields)?;
    write_mesh(&fields, mesh)?;
    write_element_field(&fields.join("gamma0.txt"), mesh, problem.gamma0().values())?;
    write_element_field(&fields.join("gamma.txt"), mesh, problem.gamma().values())?;
    for s in FIELD_TIMES {
        if let Some(state) = traj.state_at(s) {
            let solutions = solve_state(problem, state, spec).map_err(io::Error::other)?;
            write_nodal_fields(&fields.join(format!("u_s{s:.3}.txt")), mesh, &solutions)?;
        }
    }
    Ok(())
}

fn solve_state(
    problem: &ControlProblem<'_>,
    state: &HomotopyState,
    spec: &ConstraintSpec,
) -> hbc_core::Result<Vec<Vec<f64>>> {
    debug_assert_eq!(state.f.len(), spec.num_solutions());
    let stage = problem.stage(state.s)?;
    state
        .f
        .iter()
        .map(|f: &BoundaryTrace| Ok(stage.primal(f)?.into_vec()))
        .collect()
}
