//! OBJ and PLY serialization.
//!
//! OBJ: ASCII `v x y z` / `f i j k` with 1-based indices. PLY: ASCII 1.0,
//! per-vertex `x y z` plus one floating-point property `quality` carrying a
//! scalar such as mean curvature. Coordinates are written with shortest
//! round-trip formatting, so write → read reproduces positions exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::{MeshError, TriMesh};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("loaded mesh is invalid: {0}")]
    Validation(#[from] MeshError),
    #[error("per-vertex scalar has {got} entries for {expected} vertices")]
    ScalarLengthMismatch { expected: usize, got: usize },
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse {
        line,
        message: message.into(),
    }
}

/// Read an OBJ file into a validated [`TriMesh`]. Only `v` and `f` records
/// are interpreted; `f` entries may carry `/vt/vn` suffixes, which are
/// ignored. Faces must be triangles.
pub fn read_obj<S: Scalar>(path: impl AsRef<Path>) -> Result<TriMesh<S>, MeshIoError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut vertices: Vec<Vector3<S>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate `{tok}`")))?;
                }
                vertices.push(Vector3::new(
                    crate::scalar::real(coords[0]),
                    crate::scalar::real(coords[1]),
                    crate::scalar::real(coords[2]),
                ));
            }
            Some("f") => {
                let mut ix = [0u32; 3];
                for (k, slot) in ix.iter_mut().enumerate() {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "face needs 3 indices"))?;
                    let first = tok.split('/').next().unwrap_or(tok);
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index `{tok}`")))?;
                    if raw < 1 {
                        return Err(parse_err(
                            lineno,
                            format!("face index {raw} at position {k} must be >= 1"),
                        ));
                    }
                    *slot = (raw - 1) as u32;
                }
                if tokens.next().is_some() {
                    return Err(parse_err(lineno, "only triangular faces are supported"));
                }
                faces.push(ix);
            }
            _ => {} // comments, normals, texture coords, empty lines
        }
    }

    Ok(TriMesh::new(vertices, faces)?)
}

/// Write vertex positions and triangles as OBJ (1-based indices).
pub fn write_obj_raw<S: Scalar>(
    vertices: &[Vector3<S>],
    faces: &[[u32; 3]],
    path: impl AsRef<Path>,
) -> Result<(), MeshIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in vertices {
        writeln!(w, "v {} {} {}", v.x.as_f64(), v.y.as_f64(), v.z.as_f64())?;
    }
    for f in faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_obj<S: Scalar>(mesh: &TriMesh<S>, path: impl AsRef<Path>) -> Result<(), MeshIoError> {
    write_obj_raw(mesh.vertices(), mesh.faces(), path)
}

/// Write an ASCII PLY with one extra per-vertex property `quality`.
pub fn write_ply<S: Scalar>(
    mesh: &TriMesh<S>,
    quality: &[S],
    path: impl AsRef<Path>,
) -> Result<(), MeshIoError> {
    write_ply_raw(mesh.vertices(), mesh.faces(), quality, path)
}

pub fn write_ply_raw<S: Scalar>(
    vertices: &[Vector3<S>],
    faces: &[[u32; 3]],
    quality: &[S],
    path: impl AsRef<Path>,
) -> Result<(), MeshIoError> {
    if quality.len() != vertices.len() {
        return Err(MeshIoError::ScalarLengthMismatch {
            expected: vertices.len(),
            got: quality.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", vertices.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "property double quality")?;
    writeln!(w, "element face {}", faces.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (v, q) in vertices.iter().zip(quality) {
        writeln!(
            w,
            "{} {} {} {}",
            v.x.as_f64(),
            v.y.as_f64(),
            v.z.as_f64(),
            q.as_f64()
        )?;
    }
    for f in faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()?;
    Ok(())
}
