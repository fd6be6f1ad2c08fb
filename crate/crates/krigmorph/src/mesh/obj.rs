//! Wavefront OBJ reader and writer.
//!
//! Only `v` records are interpreted; every other non-blank record (faces,
//! normals, texture coordinates, groups, comments, materials) is retained
//! verbatim together with the number of vertices that preceded it, so a
//! round trip reproduces the original interleaving. Vertex indices on
//! `f`/`l`/`p` records are range-checked: positive indices against the
//! final vertex count (forward references are legal OBJ), negative ones
//! against the vertices seen so far.

use super::{fmt17, parse_err, parse_f64, Cells, Mesh};
use crate::error::Result;
use crate::geom::Point3;
use std::fmt::Write as _;

pub(super) fn read(path: &str, id: String, text: &str) -> Result<Mesh> {
    let mut points = Vec::new();
    let mut retained: Vec<(usize, String)> = Vec::new();
    // (line number, field, vertices seen at that line) for deferred
    // validation of forward references
    let mut index_checks: Vec<(usize, i64, usize)> = Vec::new();

    for (off, raw) in text.lines().enumerate() {
        let line_no = off + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let record = fields.next().expect("non-blank line");
        match record {
            "v" => {
                let coords: Vec<&str> = fields.collect();
                if coords.len() != 3 && coords.len() != 4 {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!(
                            "vertex record has {} coordinates, expected 3 (or 3 + w)",
                            coords.len()
                        ),
                    ));
                }
                let x = parse_f64(path, line_no, coords[0])?;
                let y = parse_f64(path, line_no, coords[1])?;
                let z = parse_f64(path, line_no, coords[2])?;
                if coords.len() == 4 {
                    parse_f64(path, line_no, coords[3])?;
                }
                points.push(Point3::new(x, y, z));
            }
            "f" | "l" | "p" => {
                for field in fields {
                    // "i", "i/t", "i//n", "i/t/n": the vertex index leads
                    let vertex = field.split('/').next().unwrap_or("");
                    let idx: i64 = vertex.parse().map_err(|_| {
                        parse_err(path, line_no, format!("invalid vertex reference '{field}'"))
                    })?;
                    if idx == 0 {
                        return Err(parse_err(
                            path,
                            line_no,
                            "vertex index 0 is not valid (OBJ indices are 1-based)",
                        ));
                    }
                    if idx < 0 {
                        let back = (-idx) as usize;
                        if back > points.len() {
                            return Err(parse_err(
                                path,
                                line_no,
                                format!("relative vertex index {idx} reaches before the first vertex ({} seen so far)", points.len()),
                            ));
                        }
                    } else {
                        index_checks.push((line_no, idx, points.len()));
                    }
                }
                retained.push((points.len(), line.to_string()));
            }
            _ => retained.push((points.len(), line.to_string())),
        }
    }

    for (line_no, idx, _) in index_checks {
        if idx as usize > points.len() {
            return Err(parse_err(
                path,
                line_no,
                format!(
                    "vertex index {idx} out of range (mesh has {} vertices)",
                    points.len()
                ),
            ));
        }
    }
    if points.is_empty() {
        return Err(parse_err(
            path,
            text.lines().count().max(1),
            "no vertex records found",
        ));
    }

    Ok(Mesh {
        id,
        points,
        cells: if retained.is_empty() {
            None
        } else {
            Some(Cells::Obj { lines: retained })
        },
        point_fields: Vec::new(),
    })
}

pub(super) fn write(mesh: &Mesh) -> String {
    let lines: &[(usize, String)] = match &mesh.cells {
        Some(Cells::Obj { lines }) => lines,
        Some(Cells::Vtk { .. }) => {
            log::warn!(
                "mesh '{}': VTK connectivity has no OBJ representation, writing vertices only",
                mesh.id
            );
            &[]
        }
        None => &[],
    };

    let mut out = String::new();
    let mut li = 0;
    for i in 0..=mesh.points.len() {
        while li < lines.len() && lines[li].0 == i {
            out.push_str(&lines[li].1);
            out.push('\n');
            li += 1;
        }
        if let Some(p) = mesh.points.get(i) {
            let _ = writeln!(out, "v {} {} {}", fmt17(p.x()), fmt17(p.y()), fmt17(p.z()));
        }
    }
    out
}
