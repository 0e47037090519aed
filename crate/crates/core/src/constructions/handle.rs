//! The handle `D^n × S^m` as `dt² + f_ν(t)² g_m + (2R)² sin²(t/2R) g_{n-1}`
//! on `[0, πR/3]`, closing the `(n-1)`-sphere at `t = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{invalid, ConstructionError};
use crate::jetcurve::{Expr, Jet3Curve};
use crate::warped::{DoublyWarpedMetric, EndKind};

/// Profile of `f_ν(t) = 1 + ν A q(t/L)` with `L = πR/3`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnuShape {
    /// `q(u) = u⁴`
    Quartic { amplitude: f64 },
    /// `q(u) = 1 - cos(ω u)`; concave for `ω u > π/2`.
    Cosine { amplitude: f64, frequency: f64 },
}

impl FnuShape {
    /// `f_ν` on `[0, length]`.
    pub fn expr(&self, nu: f64, length: f64) -> Expr<f64> {
        match *self {
            FnuShape::Quartic { amplitude } => {
                let c = nu * amplitude / length.powi(4);
                Expr::poly(vec![1.0, 0.0, 0.0, 0.0, c])
            }
            FnuShape::Cosine { amplitude, frequency } => Expr::Sum {
                terms: vec![
                    Expr::constant(1.0 + nu * amplitude),
                    Expr::Cos { a: -nu * amplitude, b: frequency / length, c: 0.0 },
                ],
            },
        }
    }

    /// `sup (f_ν - 1) / ν` on the interval.
    pub fn excess_per_nu(&self) -> f64 {
        match *self {
            FnuShape::Quartic { amplitude } => amplitude,
            FnuShape::Cosine { amplitude, frequency } => {
                amplitude * if frequency >= PI { 2.0 } else { 1.0 - frequency.cos() }
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandleParams {
    pub radius: f64,
    pub nu: f64,
    pub m: usize,
    pub n: usize,
    pub fnu_shape: FnuShape,
}

impl HandleParams {
    /// Quartic profile with amplitude `L`, so `f_ν'(L) = 4ν`.
    pub fn new(radius: f64, nu: f64, m: usize, n: usize) -> Self {
        Self { radius, nu, m, n, fnu_shape: FnuShape::Quartic { amplitude: PI * radius / 3.0 } }
    }

    pub fn length(&self) -> f64 {
        PI * self.radius / 3.0
    }

    /// `f_ν` after checking its defining properties.
    pub fn warp(&self) -> Result<Jet3Curve<f64>, ConstructionError> {
        if !(self.radius > 1.0) {
            return Err(invalid("radius", format!("must exceed 1, got {}", self.radius)));
        }
        // ν = 0 is admitted as the limit member f ≡ 1.
        if !(self.nu >= 0.0 && self.nu < 1.0) {
            return Err(invalid("nu", format!("must lie in [0, 1), got {}", self.nu)));
        }
        let length = self.length();
        let f = Jet3Curve::single(0.0, length, self.fnu_shape.expr(self.nu, length))?;
        let at0 = f.eval_right(0.0)?;
        if (at0.value - 1.0).abs() > 1e-12 {
            return Err(invalid("fnu_shape", format!("f(0) = {}", at0.value)));
        }
        if at0.d1.abs() > 1e-12 || at0.d3.abs() > 1e-12 {
            return Err(invalid("fnu_shape", "odd derivatives at 0 do not vanish"));
        }
        let slope = f.eval_left(length)?.d1;
        if self.nu > 0.0 && !(slope > self.nu) {
            return Err(invalid("fnu_shape", format!("f'(πR/3) = {slope} does not exceed ν = {}", self.nu)));
        }
        Ok(f)
    }
}

/// `2R sin(t / 2R)` on `[0, length]`.
pub fn handle_sphere_factor(radius: f64, length: f64) -> Result<Jet3Curve<f64>, ConstructionError> {
    Ok(Jet3Curve::single(0.0, length, Expr::Sin { a: 2.0 * radius, b: 0.5 / radius, c: 0.0 })?)
}

pub fn make_handle(p: &HandleParams) -> Result<DoublyWarpedMetric<f64>, ConstructionError> {
    let k = p.warp()?;
    let h = handle_sphere_factor(p.radius, p.length())?;
    Ok(DoublyWarpedMetric::new(k, h, p.m, p.n, EndKind::ClosedH, EndKind::Boundary)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_limit_curvatures() {
        let g = make_handle(&HandleParams::new(2.0, 0.0, 3, 4)).unwrap();
        for s in [0.0, 0.5, 1.0, PI * 2.0 / 3.0] {
            let c = g.sectional(s).unwrap();
            assert!((c.ric_s - 3.0 / 16.0).abs() < 1e-12, "{c:?}");
            assert!((c.ric_k - 2.0).abs() < 1e-12);
            assert!((c.ric_h - 3.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_is_convex_in_fiber_direction() {
        for shape in [FnuShape::Quartic { amplitude: 2.0 }, FnuShape::Cosine { amplitude: 2.0, frequency: 0.8 * PI }] {
            let p = HandleParams { fnu_shape: shape, ..HandleParams::new(2.0, 0.1, 3, 3) };
            let g = make_handle(&p).unwrap();
            let (kk, hh) = g.level_set_second_form(p.length()).unwrap();
            assert!(kk > 0.0 && hh > 0.0);
            assert!(g.k.eval_left(p.length()).unwrap().d1 > p.nu);
        }
    }

    #[test]
    fn uniform_convergence_is_linear() {
        let mut prev: Option<f64> = None;
        for nu in [0.1, 0.05, 0.025] {
            let p = HandleParams::new(2.0, nu, 3, 3);
            let f = p.warp().unwrap();
            let dev = (0..=200)
                .map(|i| (f.value(p.length() * i as f64 / 200.0).unwrap() - 1.0).abs())
                .fold(0.0, f64::max);
            assert!((dev - nu * p.fnu_shape.excess_per_nu()).abs() < 1e-12);
            if let Some(d) = prev {
                assert!((d / dev - 2.0f64).abs() < 1e-9);
            }
            prev = Some(dev);
        }
    }

    #[test]
    fn rejects_bad_families() {
        let weak = HandleParams { fnu_shape: FnuShape::Quartic { amplitude: 0.1 }, ..HandleParams::new(2.0, 0.1, 3, 3) };
        assert!(matches!(make_handle(&weak), Err(ConstructionError::InvalidParameter { name: "fnu_shape", .. })));
        assert!(make_handle(&HandleParams::new(0.5, 0.1, 3, 3)).is_err());
        assert!(make_handle(&HandleParams::new(2.0, 1.0, 3, 3)).is_err());
    }
}
