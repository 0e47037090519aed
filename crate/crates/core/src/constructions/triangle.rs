//! Spherical triangle with sides `r`, `r` and base `x1` whose angles are
//! steered along a path until the side opposite `θ0` has `sin z = sin 2r`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{invalid, ConstructionError};
use crate::verify::bisect_param;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTriangle {
    pub r: f64,
    /// Path parameter in `[0, 1]` of the solution.
    pub u: f64,
    pub theta0: f64,
    pub theta_r: f64,
    pub theta1: f64,
    pub z: f64,
    pub x1: f64,
    /// `|sin z - sin 2r|`
    pub residual: f64,
}

/// `(θ0, θr)` along the path from `(π/2, π)` at `u = 0` to `(π/2, π/2)` at
/// `u = 1`; `θ0` dips below `π/2` in between.
pub fn angle_path(u: f64) -> (f64, f64) {
    (FRAC_PI_2 - 0.25 * (PI * u).sin(), PI - u * FRAC_PI_2)
}

/// `(θ1, sin z)` for the angles `(θ0, θr)`.
pub fn sin_z(r: f64, theta0: f64, theta_r: f64) -> (f64, f64) {
    let cos_t1 = -theta_r.cos() * theta0.cos() + theta_r.sin() * theta0.sin() * r.cos();
    let theta1 = cos_t1.clamp(-1.0, 1.0).acos();
    (theta1, theta0.sin() * r.sin() / theta1.sin())
}

pub fn solve_geodesic_triangle(r: f64) -> Result<GeodesicTriangle, ConstructionError> {
    if !(r > 0.0 && r < PI / 4.0) {
        return Err(invalid("r", format!("must lie in (0, π/4), got {r}")));
    }
    let goal = (2.0 * r).sin();
    let reached = |u: f64| {
        let (t0, tr) = angle_path(u);
        sin_z(r, t0, tr).1 >= goal
    };
    let u = bisect_param(reached, 0.0, 1.0, 1e-15).map_err(|_| ConstructionError::NoBracket { what: "sin z - sin 2r" })?;
    let (theta0, theta_r) = angle_path(u);
    let (theta1, s) = sin_z(r, theta0, theta_r);
    let z = s.min(1.0).asin();
    let cos_x1 = r.cos() * z.cos() + r.sin() * z.sin() * theta_r.cos();
    Ok(GeodesicTriangle {
        r,
        u,
        theta0,
        theta_r,
        theta1,
        z,
        x1: cos_x1.clamp(-1.0, 1.0).acos(),
        residual: (s - goal).abs(),
    })
}
