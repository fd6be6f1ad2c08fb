//! Plain XYZ point lists: three whitespace-separated coordinates per
//! line, `#` starting a comment (whole-line or trailing), blank lines
//! ignored. The format carries nothing but points.

use super::{fmt17, parse_err, parse_f64, Mesh};
use crate::error::Result;
use crate::geom::Point3;
use std::fmt::Write as _;

pub(super) fn read(path: &str, id: String, text: &str) -> Result<Mesh> {
    let mut points = Vec::new();
    for (off, raw) in text.lines().enumerate() {
        let line_no = off + 1;
        let data = raw.split('#').next().unwrap_or("").trim();
        if data.is_empty() {
            continue;
        }
        let fields: Vec<&str> = data.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        points.push(Point3::new(
            parse_f64(path, line_no, fields[0])?,
            parse_f64(path, line_no, fields[1])?,
            parse_f64(path, line_no, fields[2])?,
        ));
    }
    if points.is_empty() {
        return Err(parse_err(
            path,
            text.lines().count().max(1),
            "no points found",
        ));
    }
    Ok(Mesh {
        id,
        points,
        cells: None,
        point_fields: Vec::new(),
    })
}

pub(super) fn write(mesh: &Mesh) -> String {
    if mesh.cells.is_some() {
        log::warn!(
            "mesh '{}': XYZ carries no connectivity, writing points only",
            mesh.id
        );
    }
    let mut out = String::new();
    for p in &mesh.points {
        let _ = writeln!(out, "{} {} {}", fmt17(p.x()), fmt17(p.y()), fmt17(p.z()));
    }
    out
}
