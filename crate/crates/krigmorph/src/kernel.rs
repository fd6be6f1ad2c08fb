//! Covariance kernels over 3D points, with optional fixed-region damping.
//!
//! The base covariance is an isotropic positive-definite function
//! `kappa(d)` of the Euclidean distance, normalized so `kappa(0) = 1`.
//! When a [`FixedGeometry`] is attached, the point covariance becomes the
//! product `kappa(|x - y|) * f(x) * f(y)` with `f(x) = 1 - kappa(d_F(x))`,
//! which vanishes exactly on the fixed region and keeps the matrix
//! positive semi-definite (it is a diagonal congruence of the base kernel).

use crate::error::{Error, Result};
use crate::fixed::FixedGeometry;
use crate::geom::Point3;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Base covariance family. All families are normalized to `kappa(0) = 1`
/// and decay monotonically to 0 with distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `exp(-d^2 / (2 theta^2))`
    Gaussian,
    /// Matérn nu = 3/2: `(1 + sqrt(3) d/theta) exp(-sqrt(3) d/theta)`
    Matern32,
    /// Matérn nu = 5/2: `(1 + sqrt(5) d/theta + 5 d^2/(3 theta^2)) exp(-sqrt(5) d/theta)`
    Matern52,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::Gaussian,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }

    /// Evaluate at the scaled distance `u = d / theta >= 0`.
    fn eval_scaled(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => (-0.5 * u * u).exp(),
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * u;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * u;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "matern32" => Ok(KernelFamily::Matern32),
            "matern52" => Ok(KernelFamily::Matern52),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel family '{other}' (expected gaussian, matern32, or matern52)"
            ))),
        }
    }
}

/// A validated covariance specification: family, length scale, and an
/// optional fixed region.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    theta: f64,
    fixed: Option<FixedGeometry>,
}

impl KernelSpec {
    /// `theta` is the influence radius; it has no sensible default and must
    /// be chosen by the user in mesh length units.
    pub fn new(family: KernelFamily, theta: f64, fixed: Option<FixedGeometry>) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::NonPositiveTheta(theta));
        }
        Ok(KernelSpec {
            family,
            theta,
            fixed,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn fixed(&self) -> Option<&FixedGeometry> {
        self.fixed.as_ref()
    }

    /// Base covariance at distance `d`, ignoring any fixed region.
    /// Errors on negative `d`; the result is in `(0, 1]`.
    pub fn kappa(&self, d: f64) -> Result<f64> {
        if d < 0.0 || d.is_nan() {
            return Err(Error::NegativeDistance(d));
        }
        Ok(self.family.eval_scaled(d / self.theta))
    }

    /// Fixed-region damping factor `f(x) = 1 - kappa(d_F(x))`, or 1 when no
    /// fixed geometry is attached. Lies in `[0, 1)` with a fixed region,
    /// equals 0 exactly on it, and approaches 1 far away.
    pub fn fix_factor(&self, x: &Point3) -> f64 {
        match &self.fixed {
            None => 1.0,
            Some(f) => 1.0 - self.family.eval_scaled(f.distance(x) / self.theta),
        }
    }

    /// Point covariance `kappa(|x - y|)`, damped by `f(x) f(y)` when a fixed
    /// region is attached. Exactly symmetric in its arguments.
    pub fn cov(&self, x: &Point3, y: &Point3) -> f64 {
        let base = self.family.eval_scaled(x.dist(y) / self.theta);
        match &self.fixed {
            None => base,
            // grouping f(x)f(y) first keeps cov(x,y) == cov(y,x) bit-exact
            Some(_) => base * (self.fix_factor(x) * self.fix_factor(y)),
        }
    }

    /// Prior variance `cov(x, x)`: 1 without fixing, `f(x)^2` with it.
    pub fn prior_variance(&self, x: &Point3) -> f64 {
        match &self.fixed {
            None => 1.0,
            Some(_) => {
                let f = self.fix_factor(x);
                f * f
            }
        }
    }

    /// The covariance block `[cov(x_i, y_j)]` of shape `(|xs|, |ys|)`.
    pub fn cov_matrix(&self, xs: &[Point3], ys: &[Point3]) -> Result<Array2<f64>> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        // Precompute the damping factors once per point; for the self block
        // this also guarantees exact symmetry of the result.
        let fx: Option<Vec<f64>> = self
            .fixed
            .as_ref()
            .map(|_| xs.iter().map(|x| self.fix_factor(x)).collect());
        let fy: Option<Vec<f64>> = self
            .fixed
            .as_ref()
            .map(|_| ys.iter().map(|y| self.fix_factor(y)).collect());
        let mut k = Array2::zeros((xs.len(), ys.len()));
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                let mut v = self.family.eval_scaled(x.dist(y) / self.theta);
                if let (Some(fx), Some(fy)) = (&fx, &fy) {
                    v *= fx[i] * fy[j];
                }
                k[(i, j)] = v;
            }
        }
        Ok(k)
    }
}
