//! The `.mprm` parametrization file: a JSON document that captures the
//! kernel, the fixing geometry, the selected nodes with their selection
//! trace, and one base64 weight payload per registered mesh.
//!
//! Weight payloads are the row-major `(m, point_count)` matrix as
//! little-endian `f64` bytes, so saving and loading round-trips weights
//! bit for bit regardless of how JSON would print the values.

use crate::error::{Error, Result};
use crate::fixed::FixedGeometry;
use crate::geom::Point3;
use crate::kernel::{KernelFamily, KernelSpec};
use crate::param::{Parametrization, TraceStep};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Version written by this build; loading rejects any other value.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct FileKernel {
    family: KernelFamily,
    theta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileTraceStep {
    index: usize,
    variance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileMesh {
    id: String,
    point_count: usize,
    weights_b64: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileRoot {
    format_version: u32,
    kernel: FileKernel,
    fixed: Option<FixedGeometry>,
    nodes: Vec<[f64; 3]>,
    selection_trace: Vec<FileTraceStep>,
    meshes: Vec<FileMesh>,
}

fn encode_weights(w: &Array2<f64>) -> String {
    let mut bytes = Vec::with_capacity(w.len() * 8);
    for v in w.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_weights(mesh: &FileMesh, rows: usize) -> Result<Array2<f64>> {
    let bytes = BASE64
        .decode(mesh.weights_b64.as_bytes())
        .map_err(|e| Error::ParamFile(format!("mesh '{}': invalid base64: {e}", mesh.id)))?;
    let expected = rows * mesh.point_count * 8;
    if bytes.len() != expected {
        return Err(Error::ParamFile(format!(
            "mesh '{}': weight payload is {} bytes, expected {} ({} nodes x {} points x 8)",
            mesh.id,
            bytes.len(),
            expected,
            rows,
            mesh.point_count
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Array2::from_shape_vec((rows, mesh.point_count), values)
        .map_err(|e| Error::ParamFile(format!("mesh '{}': {e}", mesh.id)))
}

/// Serialize a parametrization as pretty-printed JSON.
pub fn save<W: Write>(param: &Parametrization, writer: W) -> Result<()> {
    let root = FileRoot {
        format_version: FORMAT_VERSION,
        kernel: FileKernel {
            family: param.kernel().family(),
            theta: param.kernel().theta(),
        },
        fixed: param.kernel().fixed().cloned(),
        nodes: param.nodes().iter().map(|p| p.0).collect(),
        selection_trace: param
            .selection_trace()
            .iter()
            .map(|t| FileTraceStep {
                index: t.index,
                variance: t.variance,
            })
            .collect(),
        meshes: param
            .meshes()
            .iter()
            .map(|m| FileMesh {
                id: m.id().to_string(),
                point_count: m.point_count(),
                weights_b64: encode_weights(m.weights()),
            })
            .collect(),
    };
    let mut w = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut w, &root)
        .map_err(|e| Error::ParamFile(format!("serialization failed: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Write a parametrization to `path`.
pub fn save_path<P: AsRef<Path>>(param: &Parametrization, path: P) -> Result<()> {
    save(param, std::fs::File::create(path)?)
}

/// Deserialize a parametrization, validating the format version, kernel,
/// and every weight payload, and refactorizing `K(M,M)`.
pub fn load<R: Read>(reader: R) -> Result<Parametrization> {
    let root: FileRoot = serde_json::from_reader(BufReader::new(reader))
        .map_err(|e| Error::ParamFile(format!("invalid JSON: {e}")))?;
    if root.format_version != FORMAT_VERSION {
        return Err(Error::ParamFile(format!(
            "unsupported format_version {} (this build reads {})",
            root.format_version, FORMAT_VERSION
        )));
    }
    let kernel = KernelSpec::new(root.kernel.family, root.kernel.theta, root.fixed)?;
    let nodes: Vec<Point3> = root.nodes.into_iter().map(Point3).collect();
    let trace: Vec<TraceStep> = root
        .selection_trace
        .iter()
        .map(|t| TraceStep {
            index: t.index,
            variance: t.variance,
        })
        .collect();
    let mut meshes = Vec::with_capacity(root.meshes.len());
    for mesh in &root.meshes {
        meshes.push((mesh.id.clone(), decode_weights(mesh, nodes.len())?));
    }
    let param = Parametrization::from_parts(kernel, nodes, trace, meshes)?;
    if param.chol().jitter() > 0.0 {
        log::info!(
            "node covariance matrix needed jitter {:e} to factorize",
            param.chol().jitter()
        );
    }
    Ok(param)
}

/// Read a parametrization from `path`.
pub fn load_path<P: AsRef<Path>>(path: P) -> Result<Parametrization> {
    load(std::fs::File::open(path)?)
}
