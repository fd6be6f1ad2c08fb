//! Analytic primitives describing the fixed (non-morphable) region.
//!
//! The fixed region is a union of primitives with exact Euclidean distance
//! functions. Distance is zero inside or on the boundary of any primitive,
//! positive outside, and the union distance is the minimum over primitives.

use crate::error::{Error, Result};
use crate::geom::Point3;
use serde::{Deserialize, Serialize};

/// How far a normal's length may stray from 1 before we reject it.
const UNIT_NORMAL_TOL: f64 = 1e-6;

/// A single fixed-region primitive.
///
/// JSON form is a tagged object, e.g.
/// `{"type": "sphere", "center": [0,0,0], "radius": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Primitive {
    Sphere {
        center: Point3,
        radius: f64,
    },
    /// Axis-aligned box spanning `min..=max` componentwise.
    Box {
        min: Point3,
        max: Point3,
    },
    /// The half-space on the opposite side of `normal`: a point `x` is
    /// inside when `(x - point) . normal <= 0`. `normal` must be a unit
    /// vector (the JSON key `outward-normal` is accepted as an alias).
    Halfspace {
        point: Point3,
        #[serde(alias = "outward-normal")]
        normal: Point3,
    },
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        let finite = |p: &Point3, what: &str| {
            if p.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidPrimitive(format!("{what} must be finite")))
            }
        };
        match self {
            Primitive::Sphere { center, radius } => {
                finite(center, "sphere center")?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidPrimitive(format!(
                        "sphere radius must be positive, got {radius}"
                    )));
                }
            }
            Primitive::Box { min, max } => {
                finite(min, "box min")?;
                finite(max, "box max")?;
                if min.0.iter().zip(max.0.iter()).any(|(lo, hi)| lo > hi) {
                    return Err(Error::InvalidPrimitive(
                        "box min must not exceed max on any axis".to_string(),
                    ));
                }
            }
            Primitive::Halfspace { point, normal } => {
                finite(point, "halfspace point")?;
                finite(normal, "halfspace normal")?;
                if (normal.norm() - 1.0).abs() > UNIT_NORMAL_TOL {
                    return Err(Error::InvalidPrimitive(format!(
                        "halfspace normal must be a unit vector, got length {}",
                        normal.norm()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact Euclidean distance to this primitive; 0 inside or on the boundary.
    pub fn distance(&self, x: &Point3) -> f64 {
        match self {
            Primitive::Sphere { center, radius } => (x.dist(center) - radius).max(0.0),
            Primitive::Box { min, max } => {
                let mut sq = 0.0;
                for a in 0..3 {
                    let d = (min.0[a] - x.0[a]).max(x.0[a] - max.0[a]).max(0.0);
                    sq += d * d;
                }
                sq.sqrt()
            }
            Primitive::Halfspace { point, normal } => x.sub(point).dot(normal).max(0.0),
        }
    }
}

/// A union of [`Primitive`]s. Serializes as a bare JSON array, which is the
/// document format used by the CLI's `--fixed` file and embedded inside
/// parametrization files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Primitive>", into = "Vec<Primitive>")]
pub struct FixedGeometry {
    primitives: Vec<Primitive>,
}

impl TryFrom<Vec<Primitive>> for FixedGeometry {
    type Error = Error;

    fn try_from(primitives: Vec<Primitive>) -> Result<Self> {
        FixedGeometry::new(primitives)
    }
}

impl From<FixedGeometry> for Vec<Primitive> {
    fn from(geometry: FixedGeometry) -> Self {
        geometry.primitives
    }
}

impl FixedGeometry {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::EmptyFixedGeometry);
        }
        for p in &primitives {
            p.validate()?;
        }
        Ok(FixedGeometry { primitives })
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Distance to the union: minimum over primitives, 0 inside.
    pub fn distance(&self, x: &Point3) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.distance(x))
            .fold(f64::INFINITY, f64::min)
    }
}
