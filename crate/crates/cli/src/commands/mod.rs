//! Command implementations and the summary every command leaves behind.

mod certify;
mod compare;
mod sweep;
mod synthesize;

use std::path::{Path, PathBuf};

use hbc_core::control::{ConstraintSpec, ControlProblem};
use hbc_core::mesh::Mesh;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{ConfigError, RunConfig};
use crate::output::{ensure_dir, write_json, FORMAT_VERSION};
use crate::Exit;

pub use certify::certify;
pub use compare::{compare_naive, compare_naive_with, NaiveRate};
pub use sweep::sweep;
pub use synthesize::synthesize;

/// Contents of `summary.json`.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub format_version: u32,
    pub command: &'static str,
    /// Last stage entered: config, setup, integrate, verify, certify, naive, sweep or complete.
    pub stage: &'static str,
    pub status: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub details: Map<String, Value>,
}

/// Collects summary details while a command runs.
pub(crate) struct Recorder {
    command: &'static str,
    dir: Option<PathBuf>,
    config: Option<RunConfig>,
    details: Map<String, Value>,
}

impl Recorder {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            dir: None,
            config: None,
            details: Map::new(),
        }
    }

    pub(crate) fn set(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.details.insert(key.to_owned(), value);
    }

    /// Writes `summary.json` (when the output directory is known) and returns `exit`.
    pub(crate) fn finish(self, stage: &'static str, exit: Exit, error: Option<String>) -> Exit {
        if let Some(message) = &error {
            eprintln!("hbc {}: {message}", self.command);
        }
        let summary = Summary {
            format_version: FORMAT_VERSION,
            command: self.command,
            stage,
            status: exit.status(),
            exit_code: exit.code(),
            error,
            config: self.config,
            details: self.details,
        };
        if let Some(dir) = &self.dir {
            if let Err(e) =
                ensure_dir(dir).and_then(|_| write_json(&dir.join("summary.json"), &summary))
            {
                eprintln!(
                    "hbc {}: cannot write summary in {}: {e}",
                    self.command,
                    dir.display()
                );
            }
        }
        exit
    }

    /// Loads the config and creates the output directory, or finishes with exit 1.
    fn load(mut self, path: &Path) -> Result<(Self, RunConfig), Exit> {
        let config = match RunConfig::load(path) {
            Ok(config) => config,
            Err(e) => {
                self.dir = RunConfig::salvage_output_dir(path);
                return Err(self.finish("config", Exit::Config, Some(e.to_string())));
            }
        };
        self.dir = Some(config.output_dir.clone());
        self.config = Some(config.clone());
        if let Err(e) = ensure_dir(&config.output_dir) {
            let message = format!(
                "cannot create output_dir {}: {e}",
                config.output_dir.display()
            );
            self.dir = None;
            return Err(self.finish("config", Exit::Config, Some(message)));
        }
        Ok((self, config))
    }
}

/// Mesh and constraint for a config; failures are configuration errors.
fn build_mesh_and_spec(
    config: &RunConfig,
    n: usize,
) -> Result<(Mesh, ConstraintSpec), ConfigError> {
    let mesh = Mesh::build_structured(n).map_err(|e| ConfigError::Invalid {
        key: "mesh.n_per_side",
        message: e.to_string(),
    })?;
    let spec = config.constraint_spec(&mesh)?;
    Ok((mesh, spec))
}

fn build_problem<'m>(
    config: &RunConfig,
    coefficient: &hbc_core::coefficients::CoefficientExpr,
    mesh: &'m Mesh,
) -> Result<ControlProblem<'m>, ConfigError> {
    let gamma0 = config
        .gamma0
        .evaluate(mesh)
        .map_err(|e| ConfigError::Invalid {
            key: "gamma0",
            message: e.to_string(),
        })?;
    let gamma = coefficient
        .evaluate(mesh)
        .map_err(|e| ConfigError::Invalid {
            key: "coefficient",
            message: e.to_string(),
        })?;
    ControlProblem::new(mesh, gamma0, gamma, config.solve_options()).map_err(|e| {
        ConfigError::Invalid {
            key: "coefficient",
            message: e.to_string(),
        }
    })
}

fn mesh_details(mesh: &Mesh) -> Value {
    serde_json::json!({
        "n_per_side": mesh.n_per_side(),
        "nodes": mesh.node_count(),
        "triangles": mesh.triangle_count(),
        "boundary_nodes": mesh.boundary_nodes().len(),
    })
}
