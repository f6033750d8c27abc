//! File formats. Numbers in text tables carry 17 significant digits.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use hbc_core::elliptic::BoundaryTrace;
use hbc_core::homotopy::{HomotopyState, NaiveState};
use hbc_core::mesh::Mesh;
use serde::Serialize;

/// Version of the CSV columns and summary layout.
pub const FORMAT_VERSION: u32 = 1;

pub const TRAJECTORY_HEADER: [&str; 6] = [
    "s",
    "constraint_value",
    "mu",
    "g_l2_norm",
    "step_size",
    "branch",
];
pub const COMPARISON_HEADER: [&str; 5] = [
    "s",
    "phi",
    "phi_prime",
    "optimal_g_norm",
    "optimal_constraint",
];

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value).map_err(io::Error::other)?;
    writeln!(file)?;
    file.flush()
}

fn csv_writer(path: &Path) -> io::Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(io::Error::other)
}

fn finish(mut w: csv::Writer<File>) -> io::Result<()> {
    w.flush()
}

/// Multipliers joined by `;` when there is more than one (multi-point runs).
fn join_mu(mu: &[f64]) -> String {
    mu.iter().map(|&m| num(m)).collect::<Vec<_>>().join(";")
}

pub fn write_trajectory(path: &Path, states: &[HomotopyState]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRAJECTORY_HEADER)
        .map_err(io::Error::other)?;
    for st in states {
        w.write_record([
            num(st.s),
            num(st.constraint_value),
            join_mu(&st.mu),
            num(st.g_norm),
            num(st.step_size),
            st.branch.as_str().to_owned(),
        ])
        .map_err(io::Error::other)?;
    }
    finish(w)
}

/// One comparison row; the naive columns are empty past a naive failure.
pub struct ComparisonRow {
    pub s: f64,
    pub naive: Option<NaiveState>,
    pub optimal: Option<(f64, f64)>,
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(COMPARISON_HEADER)
        .map_err(io::Error::other)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for row in rows {
        w.write_record([
            num(row.s),
            opt(row.naive.map(|n| n.phi)),
            opt(row.naive.map(|n| n.phi_prime)),
            opt(row.optimal.map(|o| o.0)),
            opt(row.optimal.map(|o| o.1)),
        ])
        .map_err(io::Error::other)?;
    }
    finish(w)
}

pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(io::Error::other)?;
    for row in rows {
        w.write_record(row).map_err(io::Error::other)?;
    }
    finish(w)
}

/// Boundary-loop parameter `t` in `[0, 1)` against each trace.
pub fn write_final_trace(path: &Path, mesh: &Mesh, traces: &[BoundaryTrace]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let perimeter: f64 = mesh.boundary_edges().iter().map(|e| e.length).sum();
    write!(out, "# t x y")?;
    for i in 0..traces.len() {
        write!(out, " f{}", i + 1)?;
    }
    writeln!(out)?;
    for (k, (arc, &node)) in mesh
        .boundary_arclength()
        .into_iter()
        .zip(mesh.boundary_nodes())
        .enumerate()
    {
        let p = mesh.vertices()[node];
        write!(out, "{} {} {}", num(arc / perimeter), num(p[0]), num(p[1]))?;
        for f in traces {
            write!(out, " {}", num(f[k]))?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Node coordinates and triangle connectivity.
pub fn write_mesh(dir: &Path, mesh: &Mesh) -> io::Result<()> {
    let mut nodes = BufWriter::new(File::create(dir.join("mesh_nodes.txt"))?);
    writeln!(nodes, "# x y")?;
    for p in mesh.vertices() {
        writeln!(nodes, "{} {}", num(p[0]), num(p[1]))?;
    }
    nodes.flush()?;
    let mut tris = BufWriter::new(File::create(dir.join("mesh_triangles.txt"))?);
    writeln!(tris, "# a b c (zero-based node indices, counter-clockwise)")?;
    for t in mesh.triangles() {
        writeln!(tris, "{} {} {}", t[0], t[1], t[2])?;
    }
    tris.flush()
}

/// Nodal fields as `x y u1 [u2 ...]`.
pub fn write_nodal_fields(path: &Path, mesh: &Mesh, fields: &[Vec<f64>]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "# x y")?;
    for i in 0..fields.len() {
        write!(out, " u{}", i + 1)?;
    }
    writeln!(out)?;
    for (v, p) in mesh.vertices().iter().enumerate() {
        write!(out, "{} {}", num(p[0]), num(p[1]))?;
        for u in fields {
            write!(out, " {}", num(u[v]))?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Per-triangle values at the centroids: `x y value`.
pub fn write_element_field(path: &Path, mesh: &Mesh, values: &[f64]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# x y gamma (triangle centroids)")?;
    for (t, v) in values.iter().enumerate() {
        let c = mesh.centroid(t);
        writeln!(out, "{} {} {}", num(c[0]), num(c[1]), num(*v))?;
    }
    out.flush()
}

pub fn ensure_dir(path: &Path) -> io::Result<()> {
    fs::create_dir_all(path)
}
