//! Line-oriented ASCII format:
//!
//! ```text
//! tetmesh 3
//! vertices N
//! x y z        (N lines)
//! cells M
//! v0 v1 v2 v3  (M lines, 0-based)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::SimplicialMesh;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Raw arrays as read from a file.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshFile {
    pub vertices: Vec<Vec3>,
    pub cells: Vec<[usize; 4]>,
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<SimplicialMesh> {
        SimplicialMesh::new(self.vertices, self.cells)
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn header(lines: &mut impl Iterator<Item = (usize, String)>, key: &str, last: usize) -> Result<(usize, usize)> {
    let (ln, text) = lines.next().ok_or_else(|| perr(last + 1, format!("expected `{key} <count>`")))?;
    let mut it = text.split_whitespace();
    if it.next() != Some(key) {
        return Err(perr(ln, format!("expected `{key} <count>`")));
    }
    let n = it
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| perr(ln, format!("missing or invalid {key} count")))?;
    if it.next().is_some() {
        return Err(perr(ln, "trailing tokens"));
    }
    Ok((ln, n))
}

pub fn read_mesh_str(text: &str) -> Result<MeshFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim().to_string()));
    let (ln, first) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    if first.split_whitespace().collect::<Vec<_>>() != ["tetmesh", "3"] {
        return Err(perr(ln, "expected header `tetmesh 3`"));
    }
    let (mut last, nv) = header(&mut lines, "vertices", ln)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, "unexpected end of file in vertex block"))?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("invalid coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(perr(ln, "vertex line needs 3 finite coordinates"));
        }
        vertices.push(Vec3::new(vals[0], vals[1], vals[2]));
        last = ln;
    }
    let (mut last, nc) = header(&mut lines, "cells", last)?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, "unexpected end of file in cell block"))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| perr(ln, format!("invalid vertex id `{t}`"))))
            .collect::<Result<_>>()?;
        if ids.len() != 4 {
            return Err(perr(ln, "cell line needs 4 vertex ids"));
        }
        if let Some(bad) = ids.iter().find(|&&i| i >= nv) {
            return Err(perr(ln, format!("vertex id {bad} out of range (have {nv} vertices)")));
        }
        cells.push([ids[0], ids[1], ids[2], ids[3]]);
        last = ln;
    }
    for (ln, l) in lines {
        if !l.is_empty() {
            return Err(perr(ln, "unexpected content after cell block"));
        }
    }
    Ok(MeshFile { vertices, cells })
}

pub fn read_mesh(path: &Path) -> Result<MeshFile> {
    read_mesh_str(&std::fs::read_to_string(path)?)
}

pub fn write_mesh_string(vertices: &[Vec3], cells: &[[usize; 4]]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tetmesh 3");
    let _ = writeln!(s, "vertices {}", vertices.len());
    for v in vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "cells {}", cells.len());
    for c in cells {
        let _ = writeln!(s, "{} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    s
}

pub fn write_mesh(path: &Path, mesh: &SimplicialMesh) -> Result<()> {
    std::fs::write(path, write_mesh_string(mesh.vertices(), mesh.cells()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = SimplicialMesh::graded_cube(2, 1.3).unwrap();
        let text = write_mesh_string(m.vertices(), m.cells());
        let f = read_mesh_str(&text).unwrap();
        assert_eq!(f.vertices, m.vertices());
        assert_eq!(f.cells, m.cells());
    }

    #[test]
    fn out_of_range_vertex_reports_line() {
        let text = "tetmesh 3\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n0 1 2 4\n";
        assert_eq!(read_mesh_str(text), Err(Error::Parse { line: 8, msg: "vertex id 4 out of range (have 4 vertices)".into() }));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_mesh_str("tetmesh 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_mesh_str("tetmesh 3\nvertices 1\n0 0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_mesh_str("tetmesh 3\nvertices 1\n0 0 0\n"), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn negative_cell_is_repaired_on_load() {
        let text = "tetmesh 3\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n1 0 2 3\n";
        let m = read_mesh_str(text).unwrap().into_mesh().unwrap();
        assert_eq!(m.repaired_cells(), 1);
        assert!(m.geometry(0).det > 0.0);
    }
}
