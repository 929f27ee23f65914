//! Field and diagnostics serialization: legacy ASCII VTK snapshots, CSV field
//! round-tripping, and the per-step diagnostics table.
//!
//! Every floating-point value is written with 17 significant digits, enough
//! for exact f64 round-trips, and rows are emitted in a fixed order so
//! repeated runs produce byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::diagnostics::DiagnosticsRow;
use crate::mesh::{Field, Mesh};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("field does not match mesh: {0}")]
    MeshMismatch(String),
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Formats with 17 significant digits; parses back to the identical f64.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a vertex scalar field as a legacy ASCII VTK unstructured grid.
pub fn write_vtk(path: &Path, mesh: &Mesh, name: &str, field: &Field) -> Result<(), IoError> {
    if field.len() != mesh.n_vertices() {
        return Err(IoError::MeshMismatch(format!(
            "field has {} values, mesh has {} vertices",
            field.len(),
            mesh.n_vertices()
        )));
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(name);
    out.push('\n');
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");
    out.push_str(&format!("POINTS {} double\n", mesh.n_vertices()));
    for p in mesh.vertices() {
        out.push_str(&format!("{} {} 0\n", fmt_g17(p[0]), fmt_g17(p[1])));
    }
    out.push_str(&format!(
        "CELLS {} {}\n",
        mesh.n_triangles(),
        4 * mesh.n_triangles()
    ));
    for t in mesh.triangles() {
        out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    out.push_str(&format!("CELL_TYPES {}\n", mesh.n_triangles()));
    for _ in 0..mesh.n_triangles() {
        out.push_str("5\n");
    }
    out.push_str(&format!("POINT_DATA {}\n", mesh.n_vertices()));
    out.push_str(&format!("SCALARS {name} double 1\n"));
    out.push_str("LOOKUP_TABLE default\n");
    for v in &field.values {
        out.push_str(&fmt_g17(*v));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Writes a field as `vertex_index,x,y,value` CSV.
pub fn write_field_csv(path: &Path, mesh: &Mesh, field: &Field) -> Result<(), IoError> {
    if field.len() != mesh.n_vertices() {
        return Err(IoError::MeshMismatch(format!(
            "field has {} values, mesh has {} vertices",
            field.len(),
            mesh.n_vertices()
        )));
    }
    let mut out = String::from("vertex_index,x,y,value\n");
    for (v, p) in mesh.vertices().iter().enumerate() {
        out.push_str(&format!(
            "{v},{},{},{}\n",
            fmt_g17(p[0]),
            fmt_g17(p[1]),
            fmt_g17(field.values[v])
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a `vertex_index,x,y,value` CSV back into a field on `mesh`,
/// checking index coverage and coordinate agreement.
pub fn read_field_csv(path: &Path, mesh: &Mesh) -> Result<Field, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let pname = path.display().to_string();
    let mut values = vec![f64::NAN; mesh.n_vertices()];
    let mut seen = vec![false; mesh.n_vertices()];
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "vertex_index,x,y,value" {
                return Err(IoError::Malformed {
                    path: pname,
                    line: 1,
                    message: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| IoError::Malformed {
            path: pname.clone(),
            line: lineno + 1,
            message,
        };
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(malformed(format!("expected 4 fields, got {}", parts.len())));
        }
        let v: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| malformed(format!("bad vertex index: {e}")))?;
        if v >= mesh.n_vertices() {
            return Err(malformed(format!(
                "vertex index {v} out of range (mesh has {})",
                mesh.n_vertices()
            )));
        }
        if seen[v] {
            return Err(malformed(format!("duplicate vertex index {v}")));
        }
        let parse = |s: &str, what: &str| -> Result<f64, IoError> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| malformed(format!("bad {what}: {e}")))
        };
        let x = parse(parts[1], "x")?;
        let y = parse(parts[2], "y")?;
        let val = parse(parts[3], "value")?;
        let p = mesh.vertex(v);
        if (x - p[0]).abs() > 1e-12 || (y - p[1]).abs() > 1e-12 {
            return Err(malformed(format!(
                "coordinates ({x}, {y}) do not match mesh vertex {v} at ({}, {})",
                p[0], p[1]
            )));
        }
        seen[v] = true;
        values[v] = val;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(IoError::MeshMismatch(format!(
            "vertex {missing} missing from CSV"
        )));
    }
    Ok(Field { values })
}

/// Header of the diagnostics CSV for a run with `n_segments` Dirichlet
/// segments.
pub fn diagnostics_header(n_segments: usize) -> String {
    let mut h = String::from("t,l1_u,weighted_grad,energy_p,aug_energy,joule,robin_flux,balance_res");
    for s in 0..n_segments {
        h.push_str(&format!(",I_seg{s}"));
    }
    h
}

pub fn diagnostics_row_line(row: &DiagnosticsRow) -> String {
    let mut line = format!(
        "{},{},{},{},{},{},{},{}",
        fmt_g17(row.time),
        fmt_g17(row.l1_u),
        fmt_g17(row.weighted_grad),
        fmt_g17(row.energy_p),
        fmt_g17(row.aug_energy),
        fmt_g17(row.joule),
        fmt_g17(row.robin_flux),
        fmt_g17(row.balance_res),
    );
    for c in &row.currents {
        line.push(',');
        line.push_str(&fmt_g17(*c));
    }
    line
}

/// Writes the per-step diagnostics table.
pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<(), IoError> {
    let n_segments = rows.first().map_or(0, |r| r.currents.len());
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = diagnostics_header(n_segments);
    out.push('\n');
    for row in rows {
        out.push_str(&diagnostics_row_line(row));
        out.push('\n');
    }
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))
}
