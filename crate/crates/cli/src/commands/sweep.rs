use std::path::Path;

use hbc_core::homotopy::{integrate, traces_norm, verify_final, IntegrationFailure};
use rayon::prelude::*;
use serde::Serialize;

use super::{build_mesh_and_spec, build_problem, Recorder};
use crate::config::RunConfig;
use crate::output::{num, write_rows};
use crate::Exit;

pub const SWEEP_HEADER: [&str; 11] = [
    "index",
    "n_per_side",
    "amplitude_scale",
    "status",
    "accepted_steps",
    "rejected_steps",
    "final_s",
    "min_constraint",
    "final_constraint",
    "verified_constraint",
    "final_f_norm",
];

#[derive(Debug, Default, Serialize)]
struct EntryOutcome {
    index: usize,
    n_per_side: usize,
    amplitude_scale: f64,
    #[serde(skip)]
    exit: Option<Exit>,
    status: &'static str,
    accepted_steps: Option<usize>,
    rejected_steps: Option<usize>,
    final_s: Option<f64>,
    min_constraint: Option<f64>,
    final_constraint: Option<f64>,
    verified_constraint: Option<f64>,
    final_f_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl EntryOutcome {
    fn row(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        let count = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.index.to_string(),
            self.n_per_side.to_string(),
            num(self.amplitude_scale),
            self.status.to_owned(),
            count(self.accepted_steps),
            count(self.rejected_steps),
            opt(self.final_s),
            opt(self.min_constraint),
            opt(self.final_constraint),
            opt(self.verified_constraint),
            opt(self.final_f_norm),
        ]
    }
}

pub fn sweep(path: &Path, jobs: usize) -> Exit {
    let (mut rec, config) = match Recorder::new("sweep").load(path) {
        Ok(loaded) => loaded,
        Err(exit) => return exit,
    };
    let sizes = if config.sweep.n_per_side.is_empty() {
        vec![config.mesh.n_per_side]
    } else {
        config.sweep.n_per_side.clone()
    };
    let scales = if config.sweep.amplitude_scales.is_empty() {
        vec![1.0]
    } else {
        config.sweep.amplitude_scales.clone()
    };
    let entries: Vec<(usize, usize, f64)> = sizes
        .iter()
        .flat_map(|&n| scales.iter().map(move |&a| (n, a)))
        .enumerate()
        .map(|(i, (n, a))| (i, n, a))
        .collect();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            return rec.finish(
                "sweep",
                Exit::Config,
                Some(format!("cannot start {jobs} workers: {e}")),
            )
        }
    };
    let outcomes: Vec<EntryOutcome> = pool.install(|| {
        entries
            .par_iter()
            .map(|&(index, n, scale)| run_entry(&config, index, n, scale))
            .collect()
    });

    let rows: Vec<Vec<String>> = outcomes.iter().map(EntryOutcome::row).collect();
    let csv = config.output_dir.join("sweep.csv");
    if let Err(e) = write_rows(&csv, &SWEEP_HEADER, &rows) {
        return rec.finish(
            "sweep",
            Exit::Config,
            Some(format!("cannot write {}: {e}", csv.display())),
        );
    }
    let exit = outcomes
        .iter()
        .filter_map(|o| o.exit)
        .filter(|&e| e != Exit::Ok)
        .min()
        .unwrap_or(Exit::Ok);
    rec.set("jobs", jobs.max(1));
    rec.set("entries", &outcomes);
    if exit == Exit::Ok {
        rec.finish("complete", Exit::Ok, None)
    } else {
        let failed = outcomes.iter().filter(|o| o.exit != Some(Exit::Ok)).count();
        rec.finish(
            "sweep",
            exit,
            Some(format!(
                "{failed} of {} sweep entries failed",
                outcomes.len()
            )),
        )
    }
}

fn run_entry(config: &RunConfig, index: usize, n: usize, scale: f64) -> EntryOutcome {
    let mut out = EntryOutcome {
        index,
        n_per_side: n,
        amplitude_scale: scale,
        ..EntryOutcome::default()
    };
    let fail = |mut out: EntryOutcome, exit: Exit, error: String| {
        out.exit = Some(exit);
        out.status = exit.status();
        out.error = Some(error);
        out
    };
    let coefficient = config.coefficient.scale_amplitude(scale);
    let (mesh, spec) = match build_mesh_and_spec(config, n) {
        Ok(built) => built,
        Err(e) => return fail(out, Exit::Config, e.to_string()),
    };
    let problem = match build_problem(config, &coefficient, &mesh) {
        Ok(problem) => problem,
        Err(e) => return fail(out, Exit::Config, e.to_string()),
    };
    let opts = config.integrator_options(Vec::new());
    let (traj, failure) = match integrate(&problem, &spec.default_initial_data(&mesh), &spec, &opts)
    {
        Ok(traj) => (traj, None),
        Err(e) => (e.partial, Some(e.cause)),
    };
    out.accepted_steps = Some(traj.accepted_steps);
    out.rejected_steps = Some(traj.rejected_steps);
    out.final_s = traj.last().map(|st| st.s);
    out.min_constraint = (!traj.states.is_empty()).then(|| traj.min_constraint());
    out.final_constraint = traj.last().map(|st| st.constraint_value);
    out.final_f_norm = Some(traces_norm(&mesh, &traj.final_f));
    if let Some(cause) = failure {
        let exit = match cause {
            IntegrationFailure::InitialInfeasible { .. } => Exit::Constraint,
            _ => Exit::Integrator,
        };
        return fail(out, exit, cause.to_string());
    }
    let slack = opts.slack_for(spec.threshold);
    match verify_final(
        &mesh,
        problem.gamma(),
        &traj.final_f,
        &spec,
        slack,
        config.solve_options(),
    ) {
        Ok(report) => {
            out.verified_constraint = Some(report.constraint_value);
            if report.passed {
                out.exit = Some(Exit::Ok);
                out.status = Exit::Ok.status();
                out
            } else {
                fail(
                    out,
                    Exit::Constraint,
                    "final verification below threshold".into(),
                )
            }
        }
        Err(e) => fail(out, Exit::Constraint, e.to_string()),
    }
}
