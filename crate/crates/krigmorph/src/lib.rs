//! Kriging-based mesh morphing: pick a small set of morphing nodes on a
//! surface mesh by greedily maximizing the Gaussian-process posterior
//! variance, precompute the weight matrix that maps node displacements to
//! smooth displacements of whole meshes, and apply those displacements to
//! surface and volume meshes.
//!
//! The pieces, in pipeline order:
//!
//! - [`kernel`]: stationary covariance kernels (Gaussian, Matérn 3/2 and
//!   5/2) with an optional fixing factor that pins chosen regions of space
//!   to zero displacement.
//! - [`fixed`]: the fixing geometry itself, a union of spheres, boxes and
//!   halfspaces with exact distance functions.
//! - [`param`]: node selection (incremental pivoted-Cholesky form of the
//!   greedy loop), posterior variance, weight assembly and displacement
//!   fitting; [`Parametrization`] bundles the results.
//! - [`mprm`]: the `.mprm` JSON file that persists a parametrization with
//!   bit-exact weights.
//! - [`mesh`]: legacy-VTK ASCII, OBJ and XYZ readers/writers.
//! - [`spd`]: the dense Cholesky factorization everything leans on.
//!
//! A minimal round trip:
//!
//! ```
//! use krigmorph::{KernelFamily, KernelSpec, Point3, StopRule};
//!
//! let kernel = KernelSpec::new(KernelFamily::Gaussian, 1.0, None)?;
//! let surface = vec![
//!     Point3::new(0.0, 0.0, 0.0),
//!     Point3::new(1.0, 0.0, 0.0),
//!     Point3::new(2.0, 0.0, 0.0),
//! ];
//! let (state, nodes) = krigmorph::select_nodes(&kernel, &surface, StopRule::max_nodes(2))?;
//! assert_eq!(nodes.len(), 2);
//!
//! let mut param = krigmorph::Parametrization::from_selection(state)?;
//! param.add_mesh("surface", &surface, 4096)?;
//! let d = krigmorph::DisplacementVector::from_rows(&[[0.1, 0.0, 0.0], [0.1, 0.0, 0.0]])?;
//! let moved = param.displace("surface", &d)?;
//! assert_eq!(moved.nrows(), surface.len());
//! # Ok::<(), krigmorph::Error>(())
//! ```

pub mod error;
pub mod fixed;
pub mod geom;
pub mod kernel;
pub mod mesh;
pub mod mprm;
pub mod param;
pub mod spd;

pub use error::{Error, Result};
pub use fixed::{FixedGeometry, Primitive};
pub use geom::Point3;
pub use kernel::{KernelFamily, KernelSpec};
pub use mesh::{read_mesh, read_mesh_as, write_mesh, write_mesh_as, Mesh, MeshFormat};
pub use param::{
    build_weights, fit_displacements, posterior_variance, select_nodes, DisplacementVector,
    MeshWeights, Parametrization, SelectionState, StopRule, TraceStep,
};
