//! Small 3D point/vector type shared across the crate.

use serde::{Deserialize, Serialize};

/// A point (or displacement) in `R^3`, stored as `[x, y, z]`.
///
/// Serializes as a bare three-element JSON array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point3(pub [f64; 3]);

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn add(&self, other: &Point3) -> Point3 {
        Point3([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ])
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3([
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ])
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean distance. Symmetric to the last bit: the squared
    /// differences are identical under argument swap.
    pub fn dist(&self, other: &Point3) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Bit-pattern key for exact-coordinate deduplication. Folds `-0.0`
    /// into `0.0` so the key agrees with `==` on coordinates.
    pub(crate) fn dedup_key(&self) -> [u64; 3] {
        let fold = |c: f64| if c == 0.0 { 0.0f64 } else { c }.to_bits();
        [fold(self.0[0]), fold(self.0[1]), fold(self.0[2])]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(c: [f64; 3]) -> Self {
        Point3(c)
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.0
    }
}
