use std::f64::consts::FRAC_1_SQRT_2;

use super::Patch;
use crate::error::{arg, Result};
use crate::splines::KnotVector;

/// Bilinear identity map of the unit square.
pub fn unit_square() -> Patch {
    affine_box(&[1.0, 1.0]).expect("unit box is valid")
}

/// Multilinear patch mapping `[0,1]^d` onto `[0, s_1] x ... x [0, s_d]`.
pub fn affine_box(scales: &[f64]) -> Result<Patch> {
    if scales.iter().any(|&s| !(s > 0.0)) {
        return arg("box side lengths must be positive");
    }
    let d = scales.len();
    let kvs = vec![KnotVector::open_uniform(1, 1)?; d];
    let points = (0..1usize << d)
        .map(|flat| {
            (0..d)
                .map(|k| {
                    let bit = (flat >> (d - 1 - k)) & 1;
                    bit as f64 * scales[k]
                })
                .collect()
        })
        .collect();
    Patch::new(kvs, points, None)
}

fn arc_net(r_in: f64, r_out: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    // direction 0: radial (linear), direction 1: angular 90 degree arc
    let arc = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let arc_w = [1.0, FRAC_1_SQRT_2, 1.0];
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for r in [r_in, r_out] {
        for (c, w) in arc.iter().zip(arc_w) {
            points.push(vec![r * c[0], r * c[1]]);
            weights.push(w);
        }
    }
    (points, weights)
}

fn check_radii(r_in: f64, r_out: f64) -> Result<()> {
    if !(r_in > 0.0 && r_out > r_in && r_out.is_finite()) {
        return arg(format!("invalid radii r_in={r_in}, r_out={r_out}"));
    }
    Ok(())
}

/// Exact quarter annulus `r_in <= |x| <= r_out`, `0 <= angle <= pi/2`, as a
/// biquadratic NURBS patch. Direction 0 is radial, direction 1 angular.
pub fn quarter_annulus(r_in: f64, r_out: f64) -> Result<Patch> {
    check_radii(r_in, r_out)?;
    let (points, weights) = arc_net(r_in, r_out);
    let kvs = vec![
        KnotVector::open_uniform(1, 1)?,
        KnotVector::open_uniform(2, 1)?,
    ];
    Patch::new(kvs, points, Some(weights))?.elevate_to(2)
}

/// Quarter annulus extruded over `0 <= z <= height`. Degrees are (1, 2, 1);
/// spaces built on it elevate the linear directions.
pub fn thick_quarter_ring(r_in: f64, r_out: f64, height: f64) -> Result<Patch> {
    check_radii(r_in, r_out)?;
    if !(height > 0.0 && height.is_finite()) {
        return arg(format!("invalid height {height}"));
    }
    let (planar, planar_w) = arc_net(r_in, r_out);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // row-major (radial, angular, z): z fastest
    for (p, w) in planar.iter().zip(&planar_w) {
        for z in [0.0, height] {
            points.push(vec![p[0], p[1], z]);
            weights.push(*w);
        }
    }
    let kvs = vec![
        KnotVector::open_uniform(1, 1)?,
        KnotVector::open_uniform(2, 1)?,
        KnotVector::open_uniform(1, 1)?,
    ];
    Patch::new(kvs, points, Some(weights))
}
