//! Warping functions `(k, h)` of the boundary sphere after the handle and the
//! docking piece are glued at `s = πR/3` and the seam is smoothed.
//!
//! Handle side: `k = cos(b1) f_ν`, `h = 2R sin(s/2R)`. Docking side: `h = R`
//! and `k' = -sin φ`, where `φ` starts at `-η` with slope of order `ν`, holds
//! that slope past the smoothing window and then bends up to `π/2` along a
//! monomial ramp. So `k` is concave, starts with slope `sin η < ν cos b1`
//! and closes with slope `-1`; its curvature near the seam is of order `ν` on
//! both sides, which keeps the quintic overshoot from flipping its sign.
//!
//! `k` is smoothed by the cubic and quintic bridges. `h` is bridged over all
//! of `[T0, T3]` by one degree-7 polynomial, which stays concave where the
//! quintic stage would overshoot to `h'' > 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::handle::{handle_sphere_factor, FnuShape, HandleParams};
use super::{invalid, ConditionReport, ConstructionError};
use crate::jetcurve::{Expr, Jet3, Jet3Curve, Piece};
use crate::verify::bisect_param;
use crate::spline::{hermite_septic, two_stage_smooth};
use crate::warped::{DoublyWarpedMetric, EndKind};

/// Tolerance for the exact identities at the two closed ends.
const END_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsphereShape {
    /// Half-width of the cubic bridge.
    pub eps: f64,
    /// Half-width of the two quintic bridges.
    pub delta: f64,
    /// Handle warping; `None` selects a cosine profile of amplitude `πR/3`
    /// and frequency `0.8π`, concave on the last 37% of the handle.
    pub fnu: Option<FnuShape>,
    /// Exponent of the final docking ramp of `φ`; at least 2.
    pub docking_power: u32,
    /// Initial docking slope as a fraction of `ν cos b1`.
    pub docking_slope: f64,
    /// `φ' = docking_bend · ν` before the final ramp.
    pub docking_bend: f64,
    /// Length of the slow stretch in units of `eps + delta`; above 1.
    pub docking_hold: f64,
    /// `T1 = T0 + t1_offset * delta`.
    pub t1_offset: f64,
    /// `T2` sits this many `delta` before the first inflection of `h` past
    /// the seam.
    pub t2_backoff: f64,
    /// `|k - cos b1| <= near_constant * ν` before `T0`.
    pub near_constant: f64,
    /// `|h - R| <= h_closeness * R` after `T2`.
    pub h_closeness: f64,
    /// Samples per interval in the condition checks.
    pub samples: usize,
}

impl Default for EsphereShape {
    fn default() -> Self {
        Self {
            eps: 0.6,
            delta: 0.12,
            fnu: None,
            docking_power: 2,
            docking_slope: 0.5,
            docking_bend: 1.0,
            docking_hold: 1.5,
            t1_offset: 0.02,
            t2_backoff: 0.01,
            near_constant: 5.0,
            h_closeness: 1e-3,
            samples: 4000,
        }
    }
}

/// Synthesized profile together with its condition report, whether or not
/// every condition holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsphereDraft {
    pub k: Jet3Curve<f64>,
    pub h: Jet3Curve<f64>,
    /// `[T0, T1, T2, T3]`
    pub breakpoints: [f64; 4],
    pub length: f64,
    pub seam: f64,
    pub radius: f64,
    pub nu: f64,
    pub b1: f64,
    pub m: usize,
    pub n: usize,
    pub report: ConditionReport,
}

/// A draft whose conditions all hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsphereProfile(EsphereDraft);

impl EsphereProfile {
    pub fn draft(&self) -> &EsphereDraft {
        &self.0
    }

    pub fn k(&self) -> &Jet3Curve<f64> {
        &self.0.k
    }

    pub fn h(&self) -> &Jet3Curve<f64> {
        &self.0.h
    }

    pub fn breakpoints(&self) -> [f64; 4] {
        self.0.breakpoints
    }

    pub fn length(&self) -> f64 {
        self.0.length
    }

    pub fn report(&self) -> &ConditionReport {
        &self.0.report
    }

    pub fn metric(&self) -> Result<DoublyWarpedMetric<f64>, ConstructionError> {
        self.0.metric()
    }
}

impl EsphereDraft {
    pub fn metric(&self) -> Result<DoublyWarpedMetric<f64>, ConstructionError> {
        Ok(DoublyWarpedMetric::new(
            self.k.clone(),
            self.h.clone(),
            self.m,
            self.n,
            EndKind::ClosedH,
            EndKind::ClosedK,
        )?)
    }
}

/// Builds the profile and fails with the list of violated conditions.
pub fn make_esphere_profile(
    radius: f64,
    nu: f64,
    b1: f64,
    m: usize,
    n: usize,
    shape: &EsphereShape,
) -> Result<EsphereProfile, ConstructionError> {
    let draft = esphere_draft(radius, nu, b1, m, n, shape)?;
    if draft.report.passed() {
        Ok(EsphereProfile(draft))
    } else {
        Err(ConstructionError::Conditions { what: "esphere profile", failed: draft.report.failures(), report: draft.report })
    }
}

/// Builds the profile and evaluates every condition without enforcing them.
pub fn esphere_draft(
    radius: f64,
    nu: f64,
    b1: f64,
    m: usize,
    n: usize,
    shape: &EsphereShape,
) -> Result<EsphereDraft, ConstructionError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid("nu", format!("must lie in (0, 1), got {nu}")));
    }
    if !(b1 > 0.0 && b1 < FRAC_PI_2) {
        return Err(invalid("b1", format!("must lie in (0, π/2), got {b1}")));
    }
    if !(shape.eps > 0.0 && shape.delta > 0.0 && shape.delta < shape.eps) {
        return Err(invalid("shape", "need 0 < delta < eps"));
    }
    if shape.docking_power < 2 || !(shape.docking_slope > 0.0 && shape.docking_slope < 1.0) {
        return Err(invalid("shape", "docking ramp needs power >= 2 and slope fraction in (0, 1)"));
    }
    if !(shape.docking_hold > 1.0 && shape.docking_bend > 0.0) {
        return Err(invalid("shape", "docking hold must exceed 1 and bend must be positive"));
    }
    if shape.samples < 16 {
        return Err(invalid("shape", "too few samples"));
    }
    let seam = PI * radius / 3.0;
    if !(seam > shape.eps + shape.delta) {
        return Err(invalid("shape", format!("smoothing window eps + delta = {} exceeds the handle", shape.eps + shape.delta)));
    }
    let fnu = shape.fnu.unwrap_or(FnuShape::Cosine { amplitude: seam, frequency: 0.8 * PI });
    let handle = HandleParams { radius, nu, m, n, fnu_shape: fnu };
    let c0 = b1.cos();
    let f = handle.warp()?;
    let k_handle = Jet3Curve::single(0.0, seam, Expr::scaled(c0, f.pieces()[0].expr.clone()))?;
    let h_handle = handle_sphere_factor(radius, seam)?;

    let start = k_handle.eval_left(seam)?.value;
    let eta = (shape.docking_slope * nu * c0).asin();
    let bend = shape.docking_bend * nu;
    let hold = shape.docking_hold * (shape.eps + shape.delta);
    let p = shape.docking_power as usize;
    let descent = |coeffs: Vec<f64>, lower: f64, offset: f64| Expr::Integral {
        integrand: Box::new(Expr::compose(
            Expr::Sin { a: -1.0, b: 1.0, c: 0.0 },
            Expr::Poly { coeffs, center: lower },
        )),
        lower,
        offset,
    };
    let slow = descent(vec![-eta, bend], seam, start);
    let held = slow.eval(seam + hold).value;
    let ramp = |span: f64| {
        let mut coeffs = vec![0.0; p + 1];
        coeffs[0] = -eta + bend * hold;
        coeffs[1] = bend;
        coeffs[p] += (FRAC_PI_2 + eta - bend * span) / (span - hold).powi(p as i32);
        coeffs
    };
    let closes = |span: f64| descent(ramp(span), seam + hold, held).eval(seam + span).value <= 0.0;
    let mut upper = 2.0 * hold;
    while !closes(upper) {
        upper *= 2.0;
        if upper > 1e3 * (seam + hold) {
            return Err(ConstructionError::NoBracket { what: "docking length" });
        }
    }
    let docking = bisect_param(closes, hold * (1.0 + 1e-3), upper, 1e-13)?;
    let length = seam + docking;
    let k_dock = Jet3Curve::from_pieces(vec![
        Piece { start: seam, end: seam + hold, expr: slow },
        Piece { start: seam + hold, end: length, expr: descent(ramp(docking), seam + hold, held) },
    ])?;
    let h_dock = Jet3Curve::constant(seam, length, radius)?;

    let k = two_stage_smooth(&Jet3Curve::join(&k_handle, &k_dock)?, seam, shape.eps, shape.delta)?;
    let t0 = seam - shape.eps - shape.delta;
    let t3 = seam + shape.eps + shape.delta;
    let bridge = hermite_septic(h_handle.eval_left(t0)?, Jet3::constant(radius), 0.5 * (t3 - t0))?.centered_at(seam);
    let h = Jet3Curve::join(&h_handle, &h_dock)?.splice(t0, t3, bridge.to_expr())?;
    let t1 = t0 + shape.t1_offset * shape.delta;
    let t2 = first_inflection(&h, seam + shape.eps - shape.delta, t3, shape.samples)? - shape.t2_backoff * shape.delta;

    let mut draft = EsphereDraft {
        k,
        h,
        breakpoints: [t0, t1, t2, t3],
        length,
        seam,
        radius,
        nu,
        b1,
        m,
        n,
        report: ConditionReport::default(),
    };
    draft.report = check_conditions(&draft, shape)?;
    Ok(draft)
}

/// First point of `[lo, hi]` where `h''` stops being negative, or `hi`.
fn first_inflection(h: &Jet3Curve<f64>, lo: f64, hi: f64, samples: usize) -> Result<f64, ConstructionError> {
    let d2 = |s: f64| h.eval_right(s).map(|j| j.d2);
    let step = (hi - lo) / samples as f64;
    let mut prev = lo;
    for i in 1..=samples {
        let s = lo + step * i as f64;
        if d2(s)? >= 0.0 {
            let (mut a, mut b) = (prev, s);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if d2(mid)? >= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return Ok(a);
        }
        prev = s;
    }
    Ok(hi)
}

/// Minimum of `f` over `samples + 1` equispaced points of `[lo, hi]`.
pub(crate) fn sampled_min(
    lo: f64,
    hi: f64,
    samples: usize,
    f: impl Fn(f64) -> Result<f64, ConstructionError>,
) -> Result<f64, ConstructionError> {
    let mut best = f64::INFINITY;
    for i in 0..=samples {
        let s = if i == samples { hi } else { lo + (hi - lo) * i as f64 / samples as f64 };
        let v = f(s)?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        best = best.min(v);
    }
    Ok(best)
}

fn check_conditions(d: &EsphereDraft, shape: &EsphereShape) -> Result<ConditionReport, ConstructionError> {
    let [t0, t1, t2, t3] = d.breakpoints;
    let (k, h, r, big_t) = (&d.k, &d.h, d.radius, d.length);
    let c0 = d.b1.cos();
    let guard = big_t * 1e-6;
    let n = shape.samples;
    let mut rep = ConditionReport::default();

    let k0 = k.eval_right(0.0)?;
    rep.push("k_start", END_TOL - (k0.value - c0).abs());
    rep.push("k_odd_start", END_TOL - k0.d1.abs().max(k0.d3.abs()));
    rep.push(
        "k_near_constant",
        shape.near_constant * d.nu - -sampled_min(0.0, t0, n, |s| Ok(-(k.value(s)? - c0).abs()))?,
    );
    rep.push(
        "k_concave_after_t1",
        sampled_min(t1, big_t - guard, n, |s| {
            let j = k.eval_right(s)?;
            Ok(-j.d2 / j.value)
        })?,
    );
    let kt = k.eval_left(big_t)?;
    rep.push("k_closed_end", END_TOL - kt.value.abs().max((kt.d1 + 1.0).abs()).max(kt.d2.abs()));

    let h0 = h.eval_right(0.0)?;
    rep.push("h_closed_start", END_TOL - h0.value.abs().max((h0.d1 - 1.0).abs()).max(h0.d2.abs()));
    let curvature = |s: f64| -> Result<f64, ConstructionError> {
        let j = h.eval_right(s)?;
        Ok(-j.d2 / j.value)
    };
    rep.push("h_concave_start", sampled_min(guard, t0, n, curvature)?);
    rep.push("h11", sampled_min(guard, t1, n, curvature)? - 1.0 / (5.0 * r * r));
    rep.push("h22", sampled_min(guard, t2, n, curvature)?);
    rep.push(
        "h32",
        shape.h_closeness * r - -sampled_min(t2, big_t, n, |s| Ok(-(h.value(s)? - r).abs()))?,
    );
    rep.push("h_constant_after_t3", END_TOL - -sampled_min(t3, big_t, n, |s| Ok(-(h.value(s)? - r).abs()))?);
    rep.push("breakpoint_order", t0.min(t1 - t0).min(t2 - t1).min(t3 - t2).min(big_t - t3));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft(nu: f64) -> EsphereDraft {
        esphere_draft(2.0, nu, PI / 6.0, 3, 3, &EsphereShape::default()).unwrap()
    }

    #[test]
    fn closed_ends_are_exact() {
        let d = draft(0.01);
        d.metric().unwrap();
        let kt = d.k.eval_left(d.length).unwrap();
        assert!(kt.value.abs() < 1e-12 && (kt.d1 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_windows_matches_pieces() {
        let d = draft(0.01);
        let [t0, .., t3] = d.breakpoints;
        let s = 0.5 * t0;
        assert!((d.h.value(s).unwrap() - 4.0 * (s / 4.0).sin()).abs() < 1e-15);
        assert_eq!(d.h.value(t3 + 0.1).unwrap(), 2.0);
    }

    #[test]
    fn breakpoints_are_ordered() {
        let d = draft(0.01);
        let [t0, t1, t2, t3] = d.breakpoints;
        assert!(0.0 < t0 && t0 < t1 && t1 < t2 && t2 < t3 && t3 < d.length);
    }

    #[test]
    fn rejects_windows_that_do_not_fit() {
        let shape = EsphereShape { eps: 2.0, delta: 0.5, ..EsphereShape::default() };
        assert!(esphere_draft(2.0, 0.01, PI / 6.0, 3, 3, &shape).is_err());
        assert!(esphere_draft(2.0, 0.0, PI / 6.0, 3, 3, &EsphereShape::default()).is_err());
    }
}
