use std::path::Path;

use hbc_core::elliptic::BoundaryTrace;
use hbc_core::verify::{
    certify_duality, certify_injectivity_constants, certify_kkt_optimality,
    certify_lipschitz_bound, certify_sign_and_boundedness, CertificateReport, DUALITY_TOLERANCE,
};
use rayon::prelude::*;
use serde::Serialize;

use super::{build_mesh_and_spec, build_problem, mesh_details, Recorder};
use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, FORMAT_VERSION};
use crate::Exit;

#[derive(Debug, Serialize)]
struct AggregateEntry {
    name: String,
    file: String,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured: Option<std::collections::BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Aggregate {
    format_version: u32,
    passed: bool,
    failed: Vec<String>,
    certificates: Vec<AggregateEntry>,
}

type Job<'a> =
    Box<dyn Fn() -> Vec<(String, hbc_core::Result<CertificateReport>)> + Send + Sync + 'a>;

pub fn certify(path: &Path) -> Exit {
    let (mut rec, config) = match Recorder::new("certify").load(path) {
        Ok(loaded) => loaded,
        Err(exit) => return exit,
    };
    let cert = config.certify.clone();
    let built = build_mesh_and_spec(&config, config.mesh.n_per_side).and_then(|(mesh, _)| {
        build_problem(&config, &config.coefficient, &mesh)?;
        let (coarse, _) = build_mesh_and_spec(&config, cert.coarse_n_per_side)?;
        Ok((mesh, coarse))
    });
    let (mesh, coarse) = match built {
        Ok(meshes) => meshes,
        Err(e) => return rec.finish("setup", Exit::Config, Some(e.to_string())),
    };
    rec.set("mesh", mesh_details(&mesh));
    rec.set("coarse_mesh", mesh_details(&coarse));

    let results = run_certificates(&config, &mesh, &coarse);
    let dir = config.output_dir.join("certificates");
    if let Err(e) = ensure_dir(&dir) {
        return rec.finish(
            "certify",
            Exit::Config,
            Some(format!("cannot create {}: {e}", dir.display())),
        );
    }
    let mut entries = Vec::with_capacity(results.len());
    for (name, result) in results {
        let file = format!("{name}.json");
        let entry = match result {
            Ok(mut report) => {
                report.name = name.clone();
                if let Err(e) = write_json(&dir.join(&file), &report) {
                    return rec.finish(
                        "certify",
                        Exit::Config,
                        Some(format!("cannot write {file}: {e}")),
                    );
                }
                AggregateEntry {
                    name,
                    file,
                    passed: report.passed,
                    tolerance: Some(report.tolerance),
                    measured: Some(report.measured),
                    error: None,
                }
            }
            Err(e) => AggregateEntry {
                name,
                file: String::new(),
                passed: false,
                tolerance: None,
                measured: None,
                error: Some(e.to_string()),
            },
        };
        entries.push(entry);
    }
    let failed: Vec<String> = entries
        .iter()
        .filter(|e| !e.passed)
        .map(|e| e.name.clone())
        .collect();
    let aggregate = Aggregate {
        format_version: FORMAT_VERSION,
        passed: failed.is_empty(),
        failed: failed.clone(),
        certificates: entries,
    };
    if let Err(e) = write_json(&dir.join("aggregate.json"), &aggregate) {
        return rec.finish(
            "certify",
            Exit::Config,
            Some(format!("cannot write aggregate: {e}")),
        );
    }
    rec.set("failed_certificates", &failed);
    rec.set("certificates", aggregate.certificates.len());
    if failed.is_empty() {
        rec.finish("complete", Exit::Ok, None)
    } else {
        let message = format!("certificates failed: {}", failed.join(", "));
        rec.finish("certify", Exit::Constraint, Some(message))
    }
}

/// All certificates, in a fixed order, computed concurrently.
fn run_certificates(
    config: &RunConfig,
    mesh: &hbc_core::mesh::Mesh,
    coarse: &hbc_core::mesh::Mesh,
) -> Vec<(String, hbc_core::Result<CertificateReport>)> {
    let scenario = config.scenario();
    let cert = &config.certify;
    let seed = config.seed;
    let x1 = BoundaryTrace::from_fn(mesh, |p| p[0]);
    let mut jobs: Vec<Job<'_>> = vec![
        Box::new(|| {
            vec![(
                "duality".into(),
                certify_duality(
                    &scenario,
                    mesh,
                    &cert.s_values,
                    cert.duality_trials,
                    seed,
                    DUALITY_TOLERANCE,
                ),
            )]
        }),
        Box::new(|| {
            vec![(
                "injectivity_constants".into(),
                certify_injectivity_constants(&scenario, mesh, &cert.s_values, cert.directions),
            )]
        }),
        Box::new(|| {
            match certify_sign_and_boundedness(
                &scenario,
                mesh,
                cert.triples,
                cert.eta,
                seed.wrapping_add(1),
            ) {
                Ok([sign, bound]) => {
                    vec![("sign".into(), Ok(sign)), ("boundedness".into(), Ok(bound))]
                }
                Err(e) => vec![
                    ("sign".into(), Err(e.clone())),
                    ("boundedness".into(), Err(e)),
                ],
            }
        }),
        Box::new(|| {
            vec![(
                "lipschitz_bound".into(),
                certify_lipschitz_bound(
                    &scenario,
                    [coarse, mesh],
                    &cert.s_values,
                    cert.lipschitz_pairs,
                    cert.eta,
                    seed.wrapping_add(2),
                ),
            )]
        }),
    ];
    for &s in &cert.s_values {
        let (scenario, x1) = (&scenario, &x1);
        jobs.push(Box::new(move || {
            vec![(
                format!("kkt_optimality_s{s}"),
                certify_kkt_optimality(
                    scenario,
                    mesh,
                    s,
                    x1,
                    cert.competitors,
                    seed.wrapping_add(3),
                ),
            )]
        }));
    }
    jobs.par_iter().flat_map_iter(|job| job()).collect()
}
