//! Synthetic geometry for the benchmarks: deterministic, duplicate-free
//! point sets that look like the meshes the tool actually sees (a wavy
//! surface band and a scattered volume cloud), with no RNG dependency so
//! benchmark runs are comparable across machines.

use krigmorph::Point3;

/// Points along a wavy band, the stand-in for a surface mesh.
pub fn surface_band(count: usize) -> Vec<Point3> {
    (0..count)
        .map(|i| {
            let t = i as f64 / count as f64;
            let u = (i % 347) as f64 / 347.0;
            Point3::new(
                10.0 * t,
                2.0 * (20.0 * std::f64::consts::TAU * t).sin() + u,
                (7.0 * std::f64::consts::TAU * u).cos(),
            )
        })
        .collect()
}

/// A low-discrepancy cloud filling a box, the stand-in for a volume mesh.
pub fn volume_cloud(count: usize) -> Vec<Point3> {
    // additive recurrence with three irrational strides; cheap and uniform
    let stride = [0.754877666246693, 0.569840290998053, 0.402905928527854];
    (0..count)
        .map(|i| {
            let f = |a: f64| ((i + 1) as f64 * a).fract();
            Point3::new(
                12.0 * f(stride[0]) - 1.0,
                6.0 * f(stride[1]) - 3.0,
                4.0 * f(stride[2]) - 2.0,
            )
        })
        .collect()
}
