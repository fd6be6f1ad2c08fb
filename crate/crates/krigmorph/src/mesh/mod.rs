//! Mesh input and output.
//!
//! Three formats are supported: legacy-VTK ASCII (`.vtk`,
//! UNSTRUCTURED_GRID and POLYDATA datasets), Wavefront OBJ (`.obj`), and
//! plain XYZ point lists (`.xyz`). Points keep their file order in both
//! directions, because everything downstream (weight columns, displacement
//! rows, variance values) is aligned by point index.
//!
//! Connectivity is carried opaquely: VTK cell sections and OBJ non-vertex
//! records are validated for index range on read and reproduced on write,
//! but never interpreted. Writing to a format that cannot represent the
//! stored connectivity drops it with a warning; scalar fields only exist
//! in VTK output and writing them elsewhere is an error.

mod obj;
mod vtk;
mod xyz;

use crate::error::{Error, Result};
use crate::geom::Point3;
use ndarray::ArrayView2;
use std::path::Path;

/// On-disk mesh format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    VtkLegacyAscii,
    Obj,
    Xyz,
}

impl MeshFormat {
    /// Infer the format from a path's extension (case-insensitive).
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<MeshFormat> {
        let path = path.as_ref();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "vtk" => Ok(MeshFormat::VtkLegacyAscii),
            "obj" => Ok(MeshFormat::Obj),
            "xyz" => Ok(MeshFormat::Xyz),
            _ => Err(Error::UnknownFormat(path.display().to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeshFormat::VtkLegacyAscii => "legacy-VTK ASCII",
            MeshFormat::Obj => "OBJ",
            MeshFormat::Xyz => "XYZ",
        }
    }
}

/// VTK dataset variant. Writing mirrors the input; meshes built in memory
/// default to POLYDATA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtkDataset {
    UnstructuredGrid,
    PolyData,
}

impl VtkDataset {
    pub(crate) fn keyword(&self) -> &'static str {
        match self {
            VtkDataset::UnstructuredGrid => "UNSTRUCTURED_GRID",
            VtkDataset::PolyData => "POLYDATA",
        }
    }
}

/// One VTK cell section (CELLS, CELL_TYPES, POLYGONS, VERTICES, LINES,
/// TRIANGLE_STRIPS), held as its header counts plus the flat integer body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VtkSection {
    pub keyword: String,
    pub counts: Vec<usize>,
    pub values: Vec<i64>,
}

/// Opaque connectivity, tagged by the format it came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Cells {
    Vtk {
        dataset: VtkDataset,
        sections: Vec<VtkSection>,
    },
    /// Retained OBJ records other than `v`, each with the number of
    /// vertices that preceded it in the original file so interleaving
    /// (and thus relative `-n` index references) survives a round trip.
    Obj { lines: Vec<(usize, String)> },
}

/// An ordered point set with optional connectivity and named per-point
/// scalar fields. Immutable once built; [`Mesh::displaced`] returns a new
/// mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub id: String,
    pub points: Vec<Point3>,
    pub cells: Option<Cells>,
    pub point_fields: Vec<(String, Vec<f64>)>,
}

impl Mesh {
    /// A bare point cloud. Fails on an empty or non-finite point list.
    pub fn new(id: impl Into<String>, points: Vec<Point3>) -> Result<Mesh> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point {i} has non-finite coordinates"
            )));
        }
        Ok(Mesh {
            id: id.into(),
            points,
            cells: None,
            point_fields: Vec::new(),
        })
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Attach a per-point scalar field; its length must match the points.
    pub fn with_field(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Mesh> {
        if values.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                context: "point field length",
                expected: self.points.len(),
                got: values.len(),
            });
        }
        self.point_fields.push((name.into(), values));
        Ok(self)
    }

    /// New mesh with `points[i] += displacement.row(i)`; connectivity and
    /// fields carry over unchanged.
    pub fn displaced(&self, displacement: ArrayView2<f64>) -> Result<Mesh> {
        if displacement.nrows() != self.points.len() {
            return Err(Error::DimensionMismatch {
                context: "displacement rows",
                expected: self.points.len(),
                got: displacement.nrows(),
            });
        }
        if displacement.ncols() != 3 {
            return Err(Error::DimensionMismatch {
                context: "displacement columns",
                expected: 3,
                got: displacement.ncols(),
            });
        }
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Point3::new(
                    p.x() + displacement[(i, 0)],
                    p.y() + displacement[(i, 1)],
                    p.z() + displacement[(i, 2)],
                )
            })
            .collect();
        Ok(Mesh {
            id: self.id.clone(),
            points,
            cells: self.cells.clone(),
            point_fields: self.point_fields.clone(),
        })
    }
}

/// Read a mesh, inferring the format from the extension.
pub fn read_mesh<P: AsRef<Path>>(path: P) -> Result<Mesh> {
    let format = MeshFormat::from_path(&path)?;
    read_mesh_as(path, format)
}

/// Read a mesh in an explicit format.
pub fn read_mesh_as<P: AsRef<Path>>(path: P, format: MeshFormat) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".to_string());
    let display = path.display().to_string();
    match format {
        MeshFormat::VtkLegacyAscii => vtk::read(&display, id, &text),
        MeshFormat::Obj => obj::read(&display, id, &text),
        MeshFormat::Xyz => xyz::read(&display, id, &text),
    }
}

/// Write a mesh, inferring the format from the extension.
pub fn write_mesh<P: AsRef<Path>>(mesh: &Mesh, path: P) -> Result<()> {
    let format = MeshFormat::from_path(&path)?;
    write_mesh_as(mesh, path, format)
}

/// Write a mesh in an explicit format. Scalar fields require VTK output;
/// connectivity the format cannot express is dropped with a warning.
pub fn write_mesh_as<P: AsRef<Path>>(mesh: &Mesh, path: P, format: MeshFormat) -> Result<()> {
    if !mesh.point_fields.is_empty() && format != MeshFormat::VtkLegacyAscii {
        return Err(Error::UnsupportedWrite {
            id: mesh.id.clone(),
            format: format.name(),
            msg: format!(
                "point fields ({}) can only be written to VTK",
                mesh.point_fields
                    .iter()
                    .map(|(n, _)| n.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        });
    }
    let text = match format {
        MeshFormat::VtkLegacyAscii => vtk::write(mesh),
        MeshFormat::Obj => obj::write(mesh),
        MeshFormat::Xyz => xyz::write(mesh),
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Format a coordinate with 17 significant digits, enough for the decimal
/// text to map back to the identical 64-bit float.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(path: &str, line: usize, token: &str) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::MeshParse {
        path: path.to_string(),
        line,
        msg: format!("invalid number '{token}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::MeshParse {
            path: path.to_string(),
            line,
            msg: format!("non-finite coordinate '{token}'"),
        });
    }
    Ok(v)
}

pub(crate) fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::MeshParse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}
