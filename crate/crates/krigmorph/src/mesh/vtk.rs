//! Legacy-VTK ASCII reader and writer.
//!
//! Only the ASCII legacy flavor is handled, and only the two dataset types
//! that cover surface and volume meshes in practice: POLYDATA and
//! UNSTRUCTURED_GRID. Cell sections are validated (row structure, index
//! range) but stored opaquely; per-point SCALARS become mesh fields.
//! Anything else (binary data, cell data, vector attributes) is rejected
//! with the offending line number rather than silently skipped.

use super::{fmt17, parse_err, parse_f64, Cells, Mesh, VtkDataset, VtkSection};
use crate::error::Result;
use crate::geom::Point3;
use std::fmt::Write as _;

/// Cell sections whose body is rows of `npts i1 .. i_npts`, prefixed by a
/// `(rows, total values)` header pair. CELL_TYPES is the odd one out: a
/// single count and one type code per cell, no vertex indices.
const ROW_SECTIONS: [&str; 5] = ["CELLS", "POLYGONS", "VERTICES", "LINES", "TRIANGLE_STRIPS"];

struct Tokens<'a> {
    path: &'a str,
    /// (1-based line, token) pairs in file order.
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(path: &'a str, text: &'a str, first_line: usize) -> Tokens<'a> {
        let mut items = Vec::new();
        for (off, line) in text.lines().enumerate() {
            for tok in line.split_whitespace() {
                items.push((first_line + off, tok));
            }
        }
        Tokens {
            path,
            items,
            pos: 0,
        }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    /// Line of the most recently consumed token (for end-of-file errors).
    fn last_line(&self) -> usize {
        if self.pos == 0 {
            1
        } else {
            self.items[self.pos - 1].0
        }
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| {
            parse_err(
                self.path,
                self.last_line(),
                format!("unexpected end of file, expected {what}"),
            )
        })
    }

    fn expect_usize(&mut self, what: &str) -> Result<(usize, usize)> {
        let (line, tok) = self.expect(what)?;
        let v = tok
            .parse()
            .map_err(|_| parse_err(self.path, line, format!("invalid {what} '{tok}'")))?;
        Ok((line, v))
    }

    fn expect_i64(&mut self, what: &str) -> Result<(usize, i64)> {
        let (line, tok) = self.expect(what)?;
        let v = tok
            .parse()
            .map_err(|_| parse_err(self.path, line, format!("invalid {what} '{tok}'")))?;
        Ok((line, v))
    }

    fn expect_f64(&mut self, what: &str) -> Result<f64> {
        let (line, tok) = self.expect(what)?;
        parse_f64(self.path, line, tok)
    }
}

pub(super) fn read(path: &str, id: String, text: &str) -> Result<Mesh> {
    // Four line-oriented header lines, then free-form tokens.
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if !header.trim_start().starts_with("# vtk DataFile") {
        return Err(parse_err(
            path,
            line,
            format!("not a legacy VTK file (header line is '{}')", header.trim()),
        ));
    }
    // Title line: content is irrelevant, absence is not.
    lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing title line"))?;
    let (line, encoding) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(path, 3, "missing ASCII/BINARY line"))?;
    match encoding.trim().to_ascii_uppercase().as_str() {
        "ASCII" => {}
        "BINARY" => {
            return Err(parse_err(
                path,
                line,
                "binary legacy VTK is not supported, expected ASCII",
            ))
        }
        other => {
            return Err(parse_err(
                path,
                line,
                format!("expected ASCII or BINARY, found '{other}'"),
            ))
        }
    }
    let (line, dataset_line) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(path, line, "missing DATASET line"))?;
    let mut parts = dataset_line.split_whitespace();
    if parts.next() != Some("DATASET") {
        return Err(parse_err(
            path,
            line,
            format!("expected 'DATASET <type>', found '{}'", dataset_line.trim()),
        ));
    }
    let dataset = match parts.next() {
        Some("POLYDATA") => VtkDataset::PolyData,
        Some("UNSTRUCTURED_GRID") => VtkDataset::UnstructuredGrid,
        Some(other) => {
            return Err(parse_err(
                path,
                line,
                format!("unsupported VTK dataset type '{other}' (only POLYDATA and UNSTRUCTURED_GRID are read)"),
            ))
        }
        None => return Err(parse_err(path, line, "DATASET line is missing its type")),
    };

    let body_start = line + 1;
    let body_offset: usize = text
        .lines()
        .take(line)
        .map(|l| l.len() + 1)
        .sum::<usize>()
        .min(text.len());
    let mut tokens = Tokens::new(path, &text[body_offset..], body_start);

    // POINTS n dataType
    let (pline, keyword) = tokens.expect("POINTS section")?;
    if !keyword.eq_ignore_ascii_case("POINTS") {
        return Err(parse_err(
            path,
            pline,
            format!("expected POINTS, found '{keyword}'"),
        ));
    }
    let (_, n) = tokens.expect_usize("point count")?;
    if n == 0 {
        return Err(parse_err(path, pline, "POINTS count must be at least 1"));
    }
    tokens.expect("point data type")?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x = tokens.expect_f64("coordinate")?;
        let y = tokens.expect_f64("coordinate")?;
        let z = tokens.expect_f64("coordinate")?;
        points.push(Point3::new(x, y, z));
    }

    let mut sections: Vec<VtkSection> = Vec::new();
    let mut point_fields: Vec<(String, Vec<f64>)> = Vec::new();
    let mut in_point_data = false;

    while let Some((line, keyword)) = tokens.next() {
        let upper = keyword.to_ascii_uppercase();
        match upper.as_str() {
            _ if ROW_SECTIONS.contains(&upper.as_str()) => {
                if in_point_data {
                    return Err(parse_err(
                        path,
                        line,
                        format!("'{keyword}' after POINT_DATA"),
                    ));
                }
                let (_, rows) = tokens.expect_usize("row count")?;
                let (sline, total) = tokens.expect_usize("value count")?;
                let mut values = Vec::with_capacity(total);
                let mut remaining = total;
                for _ in 0..rows {
                    if remaining == 0 {
                        return Err(parse_err(
                            path,
                            sline,
                            format!("{keyword} section declares {total} values, too few for {rows} rows"),
                        ));
                    }
                    let (cline, npts) = tokens.expect_i64("cell point count")?;
                    if npts < 1 {
                        return Err(parse_err(
                            path,
                            cline,
                            format!("invalid cell point count {npts}"),
                        ));
                    }
                    values.push(npts);
                    remaining -= 1;
                    for _ in 0..npts {
                        if remaining == 0 {
                            return Err(parse_err(
                                path,
                                cline,
                                format!("{keyword} section ran out of declared values"),
                            ));
                        }
                        let (iline, idx) = tokens.expect_i64("vertex index")?;
                        if idx < 0 || idx as usize >= n {
                            return Err(parse_err(
                                path,
                                iline,
                                format!("vertex index {idx} out of range (mesh has {n} points)"),
                            ));
                        }
                        values.push(idx);
                        remaining -= 1;
                    }
                }
                if remaining != 0 {
                    return Err(parse_err(
                        path,
                        sline,
                        format!(
                            "{keyword} section declares {total} values but its {rows} rows use {}",
                            total - remaining
                        ),
                    ));
                }
                sections.push(VtkSection {
                    keyword: upper,
                    counts: vec![rows, total],
                    values,
                });
            }
            "CELL_TYPES" => {
                if in_point_data {
                    return Err(parse_err(path, line, "'CELL_TYPES' after POINT_DATA"));
                }
                let (_, rows) = tokens.expect_usize("cell type count")?;
                let mut values = Vec::with_capacity(rows);
                for _ in 0..rows {
                    values.push(tokens.expect_i64("cell type")?.1);
                }
                sections.push(VtkSection {
                    keyword: upper,
                    counts: vec![rows],
                    values,
                });
            }
            "POINT_DATA" => {
                let (cline, count) = tokens.expect_usize("POINT_DATA count")?;
                if count != n {
                    return Err(parse_err(
                        path,
                        cline,
                        format!("POINT_DATA count {count} does not match point count {n}"),
                    ));
                }
                in_point_data = true;
            }
            "SCALARS" if in_point_data => {
                let (_, name) = tokens.expect("scalar field name")?;
                let (tline, _dtype) = tokens.expect("scalar data type")?;
                // Optional component count lives on the SCALARS line.
                if let Some((l, tok)) = tokens.peek() {
                    if l == tline {
                        if let Ok(comps) = tok.parse::<u32>() {
                            tokens.next();
                            if comps != 1 {
                                return Err(parse_err(
                                    path,
                                    l,
                                    format!("only single-component scalars are supported, '{name}' has {comps}"),
                                ));
                            }
                        }
                    }
                }
                if let Some((_, tok)) = tokens.peek() {
                    if tok.eq_ignore_ascii_case("LOOKUP_TABLE") {
                        tokens.next();
                        tokens.expect("lookup table name")?;
                    }
                }
                let mut values = Vec::with_capacity(n);
                for _ in 0..n {
                    values.push(tokens.expect_f64("scalar value")?);
                }
                point_fields.push((name.to_string(), values));
            }
            "CELL_DATA" => {
                return Err(parse_err(path, line, "CELL_DATA is not supported"));
            }
            other => {
                let context = if in_point_data {
                    "unsupported point-data attribute"
                } else {
                    "unsupported section"
                };
                return Err(parse_err(path, line, format!("{context} '{other}'")));
            }
        }
    }

    Ok(Mesh {
        id,
        points,
        cells: Some(Cells::Vtk { dataset, sections }),
        point_fields,
    })
}

pub(super) fn write(mesh: &Mesh) -> String {
    let (dataset, sections): (VtkDataset, &[VtkSection]) = match &mesh.cells {
        Some(Cells::Vtk { dataset, sections }) => (*dataset, sections),
        Some(Cells::Obj { .. }) => {
            log::warn!(
                "mesh '{}': OBJ connectivity has no VTK representation, writing points only",
                mesh.id
            );
            (VtkDataset::PolyData, &[])
        }
        None => (VtkDataset::PolyData, &[]),
    };

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(&mesh.id);
    out.push('\n');
    out.push_str("ASCII\n");
    let _ = writeln!(out, "DATASET {}", dataset.keyword());
    let _ = writeln!(out, "POINTS {} double", mesh.points.len());
    for p in &mesh.points {
        let _ = writeln!(out, "{} {} {}", fmt17(p.x()), fmt17(p.y()), fmt17(p.z()));
    }
    for section in sections {
        out.push_str(&section.keyword);
        for c in &section.counts {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
        if ROW_SECTIONS.contains(&section.keyword.as_str()) {
            let mut i = 0;
            while i < section.values.len() {
                let npts = section.values[i] as usize;
                let row = &section.values[i..=i + npts];
                let text: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&text.join(" "));
                out.push('\n');
                i += npts + 1;
            }
        } else {
            for v in &section.values {
                let _ = writeln!(out, "{v}");
            }
        }
    }
    if !mesh.point_fields.is_empty() {
        let _ = writeln!(out, "POINT_DATA {}", mesh.points.len());
        for (name, values) in &mesh.point_fields {
            let _ = writeln!(out, "SCALARS {name} double");
            out.push_str("LOOKUP_TABLE default\n");
            for v in values {
                out.push_str(&fmt17(*v));
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn parse(text: &str) -> Result<Mesh> {
        read("test.vtk", "test".into(), text)
    }

    const TWO_POINTS: &str = "# vtk DataFile Version 3.0\n\
        sample\n\
        ASCII\n\
        DATASET POLYDATA\n\
        POINTS 2 float\n\
        0 0 0\n\
        1 0 0\n";

    #[test]
    fn minimal_polydata_reads() {
        let m = parse(TWO_POINTS).unwrap();
        assert_eq!(m.points.len(), 2);
        assert_eq!(m.points[0], Point3::new(0.0, 0.0, 0.0));
        assert_eq!(m.points[1], Point3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            m.cells,
            Some(Cells::Vtk { dataset: VtkDataset::PolyData, ref sections }) if sections.is_empty()
        ));
    }

    #[test]
    fn unstructured_grid_with_cells() {
        let text = "# vtk DataFile Version 2.0\n\
            vol\n\
            ASCII\n\
            DATASET UNSTRUCTURED_GRID\n\
            POINTS 4 double\n\
            0 0 0  1 0 0\n\
            0 1 0  0 0 1\n\
            CELLS 1 5\n\
            4 0 1 2 3\n\
            CELL_TYPES 1\n\
            10\n";
        let m = parse(text).unwrap();
        assert_eq!(m.points.len(), 4);
        match m.cells.as_ref().unwrap() {
            Cells::Vtk { dataset, sections } => {
                assert_eq!(*dataset, VtkDataset::UnstructuredGrid);
                assert_eq!(sections.len(), 2);
                assert_eq!(sections[0].keyword, "CELLS");
                assert_eq!(sections[0].counts, vec![1, 5]);
                assert_eq!(sections[0].values, vec![4, 0, 1, 2, 3]);
                assert_eq!(sections[1].keyword, "CELL_TYPES");
                assert_eq!(sections[1].values, vec![10]);
            }
            _ => panic!("expected VTK cells"),
        }
    }

    #[test]
    fn point_data_scalars_read() {
        let text = "# vtk DataFile Version 3.0\n\
            t\n\
            ASCII\n\
            DATASET POLYDATA\n\
            POINTS 2 float\n\
            0 0 0\n\
            1 0 0\n\
            POINT_DATA 2\n\
            SCALARS variance double 1\n\
            LOOKUP_TABLE default\n\
            0.25\n\
            1\n";
        let m = parse(text).unwrap();
        assert_eq!(m.point_fields.len(), 1);
        assert_eq!(m.point_fields[0].0, "variance");
        assert_eq!(m.point_fields[0].1, vec![0.25, 1.0]);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let cases: &[(&str, usize, &str)] = &[
            ("plain text\n", 1, "not a legacy VTK"),
            (
                "# vtk DataFile Version 3.0\nt\nBINARY\nDATASET POLYDATA\n",
                3,
                "binary",
            ),
            (
                "# vtk DataFile Version 3.0\nt\nASCII\nDATASET STRUCTURED_POINTS\n",
                4,
                "unsupported VTK dataset type",
            ),
            (
                "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 1 float\n0 0 bad\n",
                6,
                "invalid number",
            ),
            (
                "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 2 float\n0 0 0\n1 0 0\nPOLYGONS 1 4\n3 0 1 2\n",
                9,
                "out of range",
            ),
            (
                "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 1 float\n0 0 0\nPOINT_DATA 2\n",
                7,
                "does not match point count",
            ),
            (
                "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 1 float\n0 0 0\nCELL_DATA 1\n",
                7,
                "CELL_DATA",
            ),
            (
                "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 1 float\n0 0 0\nPOINT_DATA 1\nVECTORS v double\n",
                8,
                "unsupported point-data attribute",
            ),
        ];
        for (text, line, needle) in cases {
            match parse(text) {
                Err(Error::MeshParse { line: l, msg, .. }) => {
                    assert_eq!(l, *line, "line for {needle}: {msg}");
                    assert!(msg.contains(needle), "'{msg}' lacks '{needle}'");
                }
                other => panic!("expected parse error containing '{needle}', got {other:?}"),
            }
        }
    }

    #[test]
    fn truncated_points_reports_eof() {
        let text =
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 2 float\n0 0 0\n";
        let err = parse(text).unwrap_err();
        assert!(
            matches!(&err, Error::MeshParse { msg, .. } if msg.contains("end of file")),
            "{err}"
        );
    }

    #[test]
    fn multi_component_scalars_rejected() {
        let text = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 1 float\n0 0 0\nPOINT_DATA 1\nSCALARS rgb double 3\nLOOKUP_TABLE default\n1 2 3\n";
        let err = parse(text).unwrap_err();
        assert!(
            matches!(&err, Error::MeshParse { msg, .. } if msg.contains("single-component")),
            "{err}"
        );
    }

    #[test]
    fn write_emits_required_structure() {
        let m = Mesh::new("surf", vec![Point3::new(0.1, 0.2, 0.3)])
            .unwrap()
            .with_field("variance", vec![0.5])
            .unwrap();
        let text = write(&m);
        assert!(text.starts_with("# vtk DataFile Version 3.0\nsurf\nASCII\nDATASET POLYDATA\n"));
        assert!(text.contains("POINTS 1 double"));
        assert!(text.contains("POINT_DATA 1"));
        assert!(text.contains("SCALARS variance double"));
        // 17 significant digits for a coordinate that needs them
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
    }

    #[test]
    fn round_trip_preserves_everything() {
        let text = "# vtk DataFile Version 3.0\n\
            shape\n\
            ASCII\n\
            DATASET POLYDATA\n\
            POINTS 3 double\n\
            0.1 -0.25 7e-12\n\
            1 2 3\n\
            -4.5 0 0.125\n\
            POLYGONS 1 4\n\
            3 0 1 2\n\
            LINES 1 3\n\
            2 0 2\n\
            POINT_DATA 3\n\
            SCALARS variance double\n\
            LOOKUP_TABLE default\n\
            0.1 0.2 0.3\n\
            SCALARS temp double\n\
            4 5 6\n";
        let m = parse(text).unwrap();
        assert_eq!(m.point_fields.len(), 2);
        let m2 = parse(&write(&m)).unwrap();
        assert_eq!(m.points, m2.points);
        assert_eq!(m.cells, m2.cells);
        assert_eq!(m.point_fields, m2.point_fields);
    }
}
