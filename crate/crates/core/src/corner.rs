//! Corner charts `da² + μ(a)² db² + H(a, b)² g_Z` of a region `b ≤ φ(a)`
//! whose boundary face meets the glue face `{a = 0}` in a codimension-two
//! corner, with `Z` a round sphere and nothing depending on `Z`.
//!
//! Two charts, one on `a ≤ 0` and one on `a ≥ 0`, are glued along `a = 0` and
//! the resulting kink of the face is removed by smoothing every scalar
//! ingredient in `a`. `H` is kept separable, `H = Σ A_i(a) B_i(b)`, so
//! smoothing each `A_i` is the same as smoothing `a ↦ H(a, b)` for every `b`:
//! the spline coefficients are linear in the endpoint jets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jetcurve::{BiJet, CurveError, Expr, Jet3, Jet3Curve, SMOOTH};
use crate::spline::{two_stage_smooth, SplineError};
use crate::verify::{bisect_param, grid_min, GridSpec, PositivityCertificate, VerifyError};

type Curve = Jet3Curve<f64>;

type FacePoint = (Jet3<f64>, Jet3<f64>, BiJet<f64>);

const NORMAL_TOL: f64 = 1e-12;
const MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CornerError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("chart not normalized: {what} = {value} at a = 0")]
    NotNormalized { what: &'static str, value: f64 },
    #[error("a-range [{lo}, {hi}] must contain 0 and lie in every curve domain")]
    Range { lo: f64, hi: f64 },
    #[error("face point b = {b} at a = {a} leaves the chart's b-range")]
    FaceExitsChart { a: f64, b: f64 },
    #[error("H = {value} is not positive at ({a}, {b})")]
    NonPositiveWarp { a: f64, b: f64, value: f64 },
    #[error("interior dihedral angle {angle} exceeds π")]
    AngleNotConvex { angle: f64 },
    #[error("boundary metrics differ at b = {b}: H_left = {left}, H_right = {right}")]
    BoundaryMismatch { b: f64, left: f64, right: f64 },
    #[error("charts cannot be glued: {0}")]
    Structure(String),
    #[error("glue face second forms sum to {sum} < 0 in the {block} block")]
    GlueFaceConcave { block: &'static str, sum: f64 },
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("no smoothing window in eps range [{lo}, {hi}] passes the {target:?} certificate")]
    NoWindow { lo: f64, hi: f64, target: SmoothingTarget },
}

/// Which side of the glue face a chart covers.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartSide {
    Left,
    Right,
    Glued,
}

/// One product term `A(a) B(b)` of the fiber warping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableTerm {
    pub a: Curve,
    pub b: Curve,
}

/// Fiber warping `H(a, b) = Σ A_i(a) B_i(b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberWarp {
    pub terms: Vec<SeparableTerm>,
}

impl FiberWarp {
    pub fn product(a: Curve, b: Curve) -> Self {
        Self { terms: vec![SeparableTerm { a, b }] }
    }

    pub fn eval(&self, a: f64, b: f64) -> Result<BiJet<f64>, CurveError> {
        let mut acc = BiJet::default();
        for t in &self.terms {
            acc = acc + BiJet::product(curvature_jet(&t.a, a)?, curvature_jet(&t.b, b)?);
        }
        Ok(acc)
    }
}

/// Jet with reliable second derivative; fails only where it jumps.
fn curvature_jet(c: &Curve, x: f64) -> Result<Jet3<f64>, CurveError> {
    let order = c.order_at(x);
    if order < 3 {
        return Err(CurveError::AtKink { x, order });
    }
    c.eval_right(x)
}

/// Face second form in the unit tangent `τ` and along the corner sphere `Z`,
/// together with their positive-denominator-free numerators.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceSecondForm {
    pub a: f64,
    pub ii_tau: f64,
    pub ii_z: f64,
    pub tau_clear: f64,
    pub zed_clear: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerChart {
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub mu: Curve,
    pub h: FiberWarp,
    pub phi: Curve,
    pub fiber_dim: usize,
    pub side: ChartSide,
}

impl CornerChart {
    /// Checks `μ(0) = 1`, `φ(0) = 0`, the ranges, and `H > 0` on a sample of
    /// the chart rectangle.
    pub fn new(
        a_range: (f64, f64),
        b_range: (f64, f64),
        mu: Curve,
        h: FiberWarp,
        phi: Curve,
        fiber_dim: usize,
        side: ChartSide,
    ) -> Result<Self, CornerError> {
        let chart = Self { a_range, b_range, mu, h, phi, fiber_dim, side };
        chart.validate()?;
        Ok(chart)
    }

    pub fn validate(&self) -> Result<(), CornerError> {
        let (lo, hi) = self.a_range;
        let inside = |c: &Curve| {
            let (dlo, dhi) = c.domain();
            dlo <= lo && hi <= dhi
        };
        let terms_ok = self.h.terms.iter().all(|t| {
            let (blo, bhi) = t.b.domain();
            inside(&t.a) && blo <= self.b_range.0 && self.b_range.1 <= bhi
        });
        if !(lo <= 0.0 && 0.0 <= hi && lo < hi) || !inside(&self.mu) || !inside(&self.phi) || !terms_ok {
            return Err(CornerError::Range { lo, hi });
        }
        if self.h.terms.is_empty() || self.fiber_dim < 2 {
            return Err(CornerError::Structure("need at least one H term and fiber dimension >= 2".into()));
        }
        // Smoothing moves the face off b = 0, so only the two halves are normalized.
        if self.side != ChartSide::Glued {
            let side = if hi == 0.0 { crate::Side::Left } else { crate::Side::Right };
            let mu0 = self.mu.eval_side(0.0, side)?.value;
            if (mu0 - 1.0).abs() > NORMAL_TOL {
                return Err(CornerError::NotNormalized { what: "mu", value: mu0 });
            }
            let phi0 = self.phi.eval_side(0.0, side)?.value;
            if phi0.abs() > NORMAL_TOL {
                return Err(CornerError::NotNormalized { what: "phi", value: phi0 });
            }
        }
        let (blo, bhi) = self.b_range;
        for i in 0..=32 {
            let a = lo + (hi - lo) * i as f64 / 32.0;
            for j in 0..=32 {
                let b = blo + (bhi - blo) * j as f64 / 32.0;
                let v = self.h_value(a, b)?;
                if !(v > 0.0) {
                    return Err(CornerError::NonPositiveWarp { a, b, value: v });
                }
            }
        }
        Ok(())
    }

    fn h_value(&self, a: f64, b: f64) -> Result<f64, CurveError> {
        let mut v = 0.0;
        for t in &self.h.terms {
            v += t.a.value(a)? * t.b.value(b)?;
        }
        Ok(v)
    }

    /// `(μ, φ, H)` jets at the face point over `a`.
    fn face_point(&self, a: f64) -> Result<FacePoint, CornerError> {
        let mu = curvature_jet(&self.mu, a)?;
        let phi = curvature_jet(&self.phi, a)?;
        let b = phi.value;
        if !(b >= self.b_range.0 && b <= self.b_range.1) {
            return Err(CornerError::FaceExitsChart { a, b });
        }
        let h = self.h.eval(a, b)?;
        if !(h.value > 0.0) {
            return Err(CornerError::NonPositiveWarp { a, b, value: h.value });
        }
        Ok((mu, phi, h))
    }

    /// Second fundamental form of the face `b = φ(a)` with respect to the
    /// outward normal of `b ≤ φ(a)`.
    pub fn face_second_form(&self, a: f64) -> Result<FaceSecondForm, CornerError> {
        let (mu, phi, h) = self.face_point(a)?;
        let (m, ma) = (mu.value, mu.d1);
        let (pa, paa) = (phi.d1, phi.d2);
        let q = 1.0 + m * m * pa * pa;
        let tau_clear = -m * paa - pa * ma * (m * m * pa * pa + 2.0);
        let h2 = h.value * h.value;
        let h2_a = 2.0 * h.value * h.da;
        let h2_b = 2.0 * h.value * h.db;
        let zed_clear = -pa * h2_a * m * m + h2_b;
        Ok(FaceSecondForm {
            a,
            ii_tau: tau_clear / (q * q.sqrt()),
            ii_z: zed_clear / (2.0 * m * h2 * q.sqrt()),
            tau_clear,
            zed_clear,
        })
    }

    /// Second arclength derivative of `H²` along the face, arclength taken in
    /// `da² + μ² db²`.
    pub fn face_profile_hessian(&self, a: f64) -> Result<f64, CornerError> {
        let (mu, phi, h) = self.face_point(a)?;
        let (m, ma) = (mu.value, mu.d1);
        let (pa, paa) = (phi.d1, phi.d2);
        let speed = (1.0 + m * m * pa * pa).sqrt();
        let speed_a = (m * ma * pa * pa + m * m * pa * paa) / speed;
        let a1 = 1.0 / speed;
        let a2 = -speed_a / (speed * speed * speed);
        let b1 = pa * a1;
        let b2 = paa * a1 * a1 + pa * a2;
        let g_a = 2.0 * h.value * h.da;
        let g_b = 2.0 * h.value * h.db;
        let g_aa = 2.0 * (h.da * h.da + h.value * h.daa);
        let g_ab = 2.0 * (h.da * h.db + h.value * h.dab);
        let g_bb = 2.0 * (h.db * h.db + h.value * h.dbb);
        Ok(g_aa * a1 * a1 + 2.0 * g_ab * a1 * b1 + g_bb * b1 * b1 + g_a * a2 + g_b * b2)
    }

    /// Certifies `min(tau_clear, zed_clear) > threshold` on a grid in `a`.
    pub fn convexity_certificate(&self, grid: &GridSpec, threshold: f64) -> Result<PositivityCertificate, VerifyError> {
        grid_min(
            "face_convexity",
            |p: &[f64]| self.face_second_form(p[0]).map(|f| f.tau_clear.min(f.zed_clear)),
            grid,
            threshold,
        )
    }

    /// Certifies `-∂s²(H²) > threshold` along the face on a grid in `a`.
    pub fn concavity_certificate(&self, grid: &GridSpec, threshold: f64) -> Result<PositivityCertificate, VerifyError> {
        grid_min(
            "profile_concavity",
            |p: &[f64]| self.face_profile_hessian(p[0]).map(|v| -v),
            grid,
            threshold,
        )
    }

    /// Grid spanning the chart's `a`-range.
    pub fn a_grid(&self, count: usize, depth: u32) -> GridSpec {
        GridSpec::line(self.a_range.0, self.a_range.1, count, depth)
    }
}

/// Slope of `φ` at the glue side.
fn glue_slope(c: &CornerChart) -> Result<f64, CornerError> {
    let side = if c.a_range.1 == 0.0 { crate::Side::Left } else { crate::Side::Right };
    Ok(c.phi.eval_side(0.0, side)?.d1)
}

/// Interior angle at the corner of the glued region `b ≤ φ`.
pub fn dihedral_angle(left: &CornerChart, right: &CornerChart) -> Result<f64, CornerError> {
    let p1 = glue_slope(left)?;
    let p2 = glue_slope(right)?;
    Ok(PI / 2.0 + (1.0 + p1 * p2).atan2(p1 - p2))
}

/// Joins two curves at 0 and smooths the join if any jet entry jumps there.
fn glue_component(l: &Curve, r: &Curve, lo: f64, hi: f64, eps: f64, delta: f64) -> Result<Curve, CornerError> {
    let l = restrict(l, lo, 0.0)?;
    let r = restrict(r, 0.0, hi)?;
    let joined = Jet3Curve::join(&l, &r)?;
    if joined.order_at(0.0) >= SMOOTH {
        return Ok(joined);
    }
    if joined.order_at(0.0) == 0 {
        return Err(CornerError::Structure("component values differ at the glue face".into()));
    }
    Ok(two_stage_smooth(&joined, 0.0, eps, delta)?)
}

/// Restriction of `c` to `[lo, hi]`; pieces are trimmed, expressions kept.
fn restrict(c: &Curve, lo: f64, hi: f64) -> Result<Curve, CurveError> {
    let (dlo, dhi) = c.domain();
    if dlo == lo && dhi == hi {
        return Ok(c.clone());
    }
    let mut pieces = Vec::new();
    let mut continuity = Vec::new();
    for (i, p) in c.pieces().iter().enumerate() {
        let (s, e) = (p.start.max(lo), p.end.min(hi));
        if s < e {
            if !pieces.is_empty() {
                continuity.push(c.continuity()[i - 1]);
            }
            pieces.push(crate::Piece { start: s, end: e, expr: p.expr.clone() });
        }
    }
    Jet3Curve::with_continuity(pieces, continuity)
}

/// Summary of the glue-face checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub dihedral_angle: f64,
    /// Sum of the glue-face second forms of the two charts (outward normals).
    pub glue_face_sum_mu: f64,
    pub glue_face_sum_h: f64,
    pub max_boundary_mismatch: f64,
}

/// Validates the gluing hypotheses and reports the glue-face data.
pub fn glue_report(left: &CornerChart, right: &CornerChart) -> Result<GlueReport, CornerError> {
    if left.a_range.1 != 0.0 || right.a_range.0 != 0.0 {
        return Err(CornerError::Structure("left chart must end and right chart start at a = 0".into()));
    }
    if left.fiber_dim != right.fiber_dim {
        return Err(CornerError::Structure("fiber dimensions differ".into()));
    }
    if left.h.terms.len() != right.h.terms.len()
        || left.h.terms.iter().zip(&right.h.terms).any(|(l, r)| l.b != r.b)
    {
        return Err(CornerError::Structure("H terms must share their b-factors".into()));
    }
    let angle = dihedral_angle(left, right)?;
    // A straight face (angle exactly π) has no corner to smooth.
    if !(angle <= PI) {
        return Err(CornerError::AngleNotConvex { angle });
    }
    let (blo, bhi) = (left.b_range.0.max(right.b_range.0), left.b_range.1.min(right.b_range.1));
    let mut worst: f64 = 0.0;
    for j in 0..=200 {
        let b = blo + (bhi - blo) * j as f64 / 200.0;
        let hl = side_h(left, crate::Side::Left, b)?;
        let hr = side_h(right, crate::Side::Right, b)?;
        let diff = (hl.value - hr.value).abs();
        if diff > MATCH_TOL * (1.0 + hl.value.abs()) {
            return Err(CornerError::BoundaryMismatch { b, left: hl.value, right: hr.value });
        }
        worst = worst.max(diff);
    }
    // Outward normals are +∂a on the left chart and -∂a on the right one.
    let mu_l = left.mu.eval_left(0.0)?.d1;
    let mu_r = right.mu.eval_right(0.0)?.d1;
    let b0 = 0.0f64.clamp(blo, bhi);
    let hl = side_h(left, crate::Side::Left, b0)?;
    let hr = side_h(right, crate::Side::Right, b0)?;
    let report = GlueReport {
        dihedral_angle: angle,
        glue_face_sum_mu: mu_l - mu_r,
        glue_face_sum_h: (hl.da - hr.da) / hl.value,
        max_boundary_mismatch: worst,
    };
    for (block, sum) in [("mu", report.glue_face_sum_mu), ("h", report.glue_face_sum_h)] {
        if sum < -MATCH_TOL {
            return Err(CornerError::GlueFaceConcave { block, sum });
        }
    }
    Ok(report)
}

fn side_h(c: &CornerChart, side: crate::Side, b: f64) -> Result<BiJet<f64>, CurveError> {
    let mut acc = BiJet::default();
    for t in &c.h.terms {
        acc = acc + BiJet::product(t.a.eval_side(0.0, side)?, t.b.eval_right(b)?);
    }
    Ok(acc)
}

/// Glues `left` and `right` along `a = 0` and smooths every component with a
/// cubic window of half-width `eps` and quintic windows of half-width `delta`.
pub fn glue_and_smooth(left: &CornerChart, right: &CornerChart, eps: f64, delta: f64) -> Result<CornerChart, CornerError> {
    glue_report(left, right)?;
    let (lo, hi) = (left.a_range.0, right.a_range.1);
    let mu = glue_component(&left.mu, &right.mu, lo, hi, eps, delta)?;
    let phi = glue_component(&left.phi, &right.phi, lo, hi, eps, delta)?;
    let mut terms = Vec::with_capacity(left.h.terms.len());
    for (l, r) in left.h.terms.iter().zip(&right.h.terms) {
        terms.push(SeparableTerm { a: glue_component(&l.a, &r.a, lo, hi, eps, delta)?, b: l.b.clone() });
    }
    let b_range = (left.b_range.0.max(right.b_range.0), left.b_range.1.min(right.b_range.1));
    CornerChart::new((lo, hi), b_range, mu, FiberWarp { terms }, phi, left.fiber_dim, ChartSide::Glued)
}

/// Mirror image `a ↦ -a` of a chart.
pub fn reflect(chart: &CornerChart) -> Result<CornerChart, CornerError> {
    let flip = |c: &Curve| -> Result<Curve, CurveError> {
        let pieces = c
            .pieces()
            .iter()
            .rev()
            .map(|p| crate::Piece {
                start: -p.end,
                end: -p.start,
                expr: Expr::compose(p.expr.clone(), Expr::poly(vec![0.0, -1.0])),
            })
            .collect();
        let mut cont = c.continuity().to_vec();
        cont.reverse();
        Jet3Curve::with_continuity(pieces, cont)
    };
    let side = match chart.side {
        ChartSide::Left => ChartSide::Right,
        ChartSide::Right => ChartSide::Left,
        ChartSide::Glued => ChartSide::Glued,
    };
    let terms = chart
        .h
        .terms
        .iter()
        .map(|t| Ok(SeparableTerm { a: flip(&t.a)?, b: t.b.clone() }))
        .collect::<Result<Vec<_>, CurveError>>()?;
    CornerChart::new(
        (-chart.a_range.1, -chart.a_range.0),
        chart.b_range,
        flip(&chart.mu)?,
        FiberWarp { terms },
        flip(&chart.phi)?,
        chart.fiber_dim,
        side,
    )
}

/// Fiber warping of a [`ModelPair`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelProfile {
    /// `H = (1 ± w a) e^b`: the face is convex in the `Z` directions.
    Exponential,
    /// `H = cos(a/2 ± w) / cos w`: `H²` is concave along the face.
    Cosine,
}

/// Two charts on `[-1, 0]` and `[0, 1]` whose faces
/// `φ = ±p a - bend a² / 2` meet at the given interior angle, with
/// `p = tan((π - angle) / 2)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPair {
    pub angle: f64,
    pub bend: f64,
    pub warp_slope: f64,
    pub profile: ModelProfile,
    pub fiber_dim: usize,
}

impl ModelPair {
    pub fn charts(&self) -> Result<(CornerChart, CornerChart), CornerError> {
        if !(self.angle > 0.0 && self.angle <= PI) {
            return Err(CornerError::AngleNotConvex { angle: self.angle });
        }
        if !(self.warp_slope.abs() < 0.5) {
            return Err(CornerError::Structure(format!("warp slope {} outside (-0.5, 0.5)", self.warp_slope)));
        }
        let p = ((PI - self.angle) / 2.0).tan();
        let w = self.warp_slope;
        let b_range = (-2.0, 2.0);
        let one = |lo: f64, hi: f64| Jet3Curve::constant(lo, hi, 1.0);
        let chart = |lo: f64, hi: f64, sign: f64, side: ChartSide| -> Result<CornerChart, CornerError> {
            let phi = Jet3Curve::single(lo, hi, Expr::poly(vec![0.0, -sign * p, -0.5 * self.bend]))?;
            let (a, b) = match self.profile {
                ModelProfile::Exponential => (
                    Jet3Curve::single(lo, hi, Expr::poly(vec![1.0, -sign * w]))?,
                    Jet3Curve::single(b_range.0, b_range.1, Expr::Exp { a: 1.0, b: 1.0, c: 0.0 })?,
                ),
                ModelProfile::Cosine => (
                    Jet3Curve::single(lo, hi, Expr::Cos { a: 1.0 / w.cos(), b: 0.5, c: sign * w })?,
                    one(b_range.0, b_range.1)?,
                ),
            };
            CornerChart::new((lo, hi), b_range, one(lo, hi)?, FiberWarp::product(a, b), phi, self.fiber_dim, side)
        };
        Ok((chart(-1.0, 0.0, -1.0, ChartSide::Left)?, chart(0.0, 1.0, 1.0, ChartSide::Right)?))
    }
}

/// Certificate demanded of the smoothed chart.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingTarget {
    Convexity,
    Concavity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSearch {
    /// `delta = delta_ratio * eps`
    pub delta_ratio: f64,
    pub eps_range: (f64, f64),
    pub eps_tol: f64,
    pub count: usize,
    pub depth: u32,
    pub threshold: f64,
    /// Factor applied to the smallest certifying `eps`; at least 1.
    pub safety: f64,
}

impl Default for WindowSearch {
    fn default() -> Self {
        Self {
            delta_ratio: 0.2,
            eps_range: (1e-3, 0.5),
            eps_tol: 1e-4,
            count: 201,
            depth: 3,
            threshold: crate::verify::DEFAULT_THRESHOLD,
            safety: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCorner {
    pub eps: f64,
    pub delta: f64,
    pub glue: GlueReport,
    pub chart: CornerChart,
    pub certificate: PositivityCertificate,
}

/// Smooths the glued pair and certifies `target` on the whole `a`-range and
/// on the smoothing window; the certificate with the smaller margin is kept.
pub fn certify_smoothing(
    left: &CornerChart,
    right: &CornerChart,
    eps: f64,
    delta: f64,
    target: SmoothingTarget,
    opts: &WindowSearch,
) -> Result<SmoothedCorner, CornerError> {
    let glue = glue_report(left, right)?;
    let chart = glue_and_smooth(left, right, eps, delta)?;
    let window = GridSpec::line(-(eps + delta), eps + delta, opts.count, opts.depth);
    let mut worst: Option<PositivityCertificate> = None;
    // The windows are far narrower than the chart, so they get their own grid.
    for grid in [chart.a_grid(opts.count, opts.depth), window] {
        let cert = match target {
            SmoothingTarget::Convexity => chart.convexity_certificate(&grid, opts.threshold)?,
            SmoothingTarget::Concavity => chart.concavity_certificate(&grid, opts.threshold)?,
        };
        if worst.as_ref().is_none_or(|w| cert.min_margin < w.min_margin) {
            worst = Some(cert);
        }
    }
    let certificate = worst.expect("two grids were scanned");
    Ok(SmoothedCorner { eps, delta, glue, chart, certificate })
}

/// Smallest certifying `eps` of the range, located by bisection above a
/// failing one, then widened by `safety` while it still certifies.
pub fn search_window(
    left: &CornerChart,
    right: &CornerChart,
    target: SmoothingTarget,
    opts: &WindowSearch,
) -> Result<SmoothedCorner, CornerError> {
    let (lo, hi) = opts.eps_range;
    if !(0.0 < lo && lo < hi && opts.delta_ratio > 0.0 && opts.delta_ratio < 1.0 && opts.safety >= 1.0) {
        return Err(CornerError::Structure(format!(
            "bad eps range ({lo}, {hi}), delta ratio {} or safety {}",
            opts.delta_ratio, opts.safety
        )));
    }
    let run = |eps: f64| certify_smoothing(left, right, eps, opts.delta_ratio * eps, target, opts);
    let passes = |eps: f64| run(eps).map(|c| c.certificate.passed).unwrap_or(false);
    let edge = if passes(lo) {
        lo
    } else {
        bisect_param(passes, lo, hi, opts.eps_tol).map_err(|_| CornerError::NoWindow { lo, hi, target })?
    };
    let wide = (opts.safety * edge).min(hi);
    let found = run(wide)?;
    if found.certificate.passed {
        Ok(found)
    } else {
        run(edge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(lo: f64, hi: f64, e: Expr<f64>) -> Curve {
        Jet3Curve::single(lo, hi, e).unwrap()
    }

    fn chart(mu: Expr<f64>, phi: Expr<f64>, ha: Expr<f64>, hb: Expr<f64>) -> CornerChart {
        CornerChart::new(
            (-1.0, 1.0),
            (-3.0, 3.0),
            c(-1.0, 1.0, mu),
            FiberWarp::product(c(-1.0, 1.0, ha), c(-3.0, 3.0, hb)),
            c(-1.0, 1.0, phi),
            2,
            ChartSide::Glued,
        )
        .unwrap()
    }

    fn one() -> Expr<f64> {
        Expr::constant(1.0)
    }

    #[test]
    fn flat_face_in_product_coordinates() {
        let ch = chart(one(), Expr::constant(0.0), one(), Expr::Exp { a: 1.0, b: 0.7, c: 0.0 });
        let f = ch.face_second_form(0.3).unwrap();
        assert_eq!(f.ii_tau, 0.0);
        assert!((f.ii_z - 0.7).abs() < 1e-15);
    }

    #[test]
    fn parabolic_face() {
        let ch = chart(one(), Expr::poly(vec![0.0, 0.0, -0.5]), one(), one());
        let f = ch.face_second_form(0.0).unwrap();
        assert_eq!((f.ii_tau, f.ii_z), (1.0, 0.0));
    }

    #[test]
    fn tilted_face_with_growing_mu() {
        let ch = chart(Expr::poly(vec![1.0, 1.0]), Expr::poly(vec![0.0, -1.0]), one(), one());
        let f = ch.face_second_form(0.0).unwrap();
        assert!((f.ii_tau - 3.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(f.tau_clear, 3.0);
    }

    #[test]
    fn profile_hessian_examples() {
        let geodesic = chart(one(), Expr::constant(0.0), Expr::Cos { a: 1.0, b: 1.0, c: 0.0 }, one());
        assert!((geodesic.face_profile_hessian(0.0).unwrap() + 2.0).abs() < 1e-14);
        let flat = chart(one(), Expr::poly(vec![0.0, 0.3, -0.2]), one(), one());
        assert_eq!(flat.face_profile_hessian(0.4).unwrap(), 0.0);
        let tilted = chart(one(), Expr::poly(vec![0.0, -1.0]), one(), Expr::Exp { a: 1.0, b: 1.0, c: 0.0 });
        assert!((tilted.face_profile_hessian(0.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn certificates_on_simple_charts() {
        let convex = chart(one(), Expr::poly(vec![0.0, 0.0, -0.5]), one(), Expr::Exp { a: 1.0, b: 1.0, c: 0.0 });
        assert!(convex.convexity_certificate(&convex.a_grid(41, 2), 1e-6).unwrap().passed);
        let flat = chart(one(), Expr::constant(0.0), one(), one());
        let cert = flat.convexity_certificate(&flat.a_grid(41, 1), 1e-6).unwrap();
        assert_eq!(cert.min_margin, 0.0);
        assert!(!cert.passed);
        let geodesic = chart(one(), Expr::constant(0.0), Expr::Cos { a: 1.0, b: 1.0, c: 0.0 }, one());
        let cert = geodesic.concavity_certificate(&GridSpec::line(-0.5, 0.5, 21, 1), 1e-6).unwrap();
        assert!((cert.min_margin - 2.0 * 1f64.cos()).abs() < 1e-12);
    }

    fn half(lo: f64, hi: f64, slope: f64) -> CornerChart {
        CornerChart::new(
            (lo, hi),
            (-3.0, 3.0),
            c(lo, hi, one()),
            FiberWarp::product(c(lo, hi, one()), c(-3.0, 3.0, one())),
            c(lo, hi, Expr::poly(vec![0.0, slope])),
            2,
            if lo < 0.0 { ChartSide::Left } else { ChartSide::Right },
        )
        .unwrap()
    }

    #[test]
    fn dihedral_examples() {
        let pi = std::f64::consts::PI;
        assert!((dihedral_angle(&half(-1.0, 0.0, 0.0), &half(0.0, 1.0, 0.0)).unwrap() - pi).abs() < 1e-15);
        assert!((dihedral_angle(&half(-1.0, 0.0, 1.0), &half(0.0, 1.0, -1.0)).unwrap() - pi / 2.0).abs() < 1e-15);
        assert!(dihedral_angle(&half(-1.0, 0.0, -1.0), &half(0.0, 1.0, 1.0)).unwrap() > pi);
        assert!(matches!(
            glue_and_smooth(&half(-1.0, 0.0, -1.0), &half(0.0, 1.0, 1.0), 0.1, 0.02),
            Err(CornerError::AngleNotConvex { .. })
        ));
    }

    #[test]
    fn normalization_enforced() {
        let r = CornerChart::new(
            (-1.0, 0.0),
            (-1.0, 1.0),
            c(-1.0, 0.0, Expr::constant(2.0)),
            FiberWarp::product(c(-1.0, 0.0, one()), c(-1.0, 1.0, one())),
            c(-1.0, 0.0, Expr::constant(0.0)),
            2,
            ChartSide::Left,
        );
        assert!(matches!(r, Err(CornerError::NotNormalized { what: "mu", .. })));
    }

    #[test]
    fn flat_plateau_needs_no_smoothing() {
        // A plateau φ ≡ b1 in the normalized coordinate b - b1.
        let b1 = 0.4;
        let mk = |lo: f64, hi: f64, side| {
            CornerChart::new(
                (lo, hi),
                (-1.0, 1.0),
                c(lo, hi, one()),
                FiberWarp::product(c(lo, hi, one()), c(-1.0, 1.0, Expr::Exp { a: 1.0, b: 1.0, c: b1 })),
                c(lo, hi, Expr::constant(0.0)),
                2,
                side,
            )
            .unwrap()
        };
        let g = glue_and_smooth(&mk(-1.0, 0.0, ChartSide::Left), &mk(0.0, 1.0, ChartSide::Right), 0.2, 0.05).unwrap();
        for a in [-0.9, -0.1, 0.0, 0.15, 0.7] {
            assert_eq!(g.phi.value(a).unwrap() + b1, b1);
        }
        assert_eq!(g.phi.pieces().len(), 2);
        assert!(g.phi.kinks().is_empty());
    }
    fn model(profile: ModelProfile, bend: f64) -> (CornerChart, CornerChart) {
        ModelPair { angle: 2.0 * PI / 3.0, bend, warp_slope: 0.2, profile, fiber_dim: 2 }.charts().unwrap()
    }

    #[test]
    fn model_pair_has_requested_angle() {
        let (l, r) = model(ModelProfile::Exponential, 1.0);
        assert!((dihedral_angle(&l, &r).unwrap() - 2.0 * PI / 3.0).abs() < 1e-14);
        let rep = glue_report(&l, &r).unwrap();
        assert!(rep.glue_face_sum_h > 0.0 && rep.max_boundary_mismatch == 0.0);
    }

    #[test]
    fn narrow_windows_overshoot_and_search_avoids_them() {
        let (l, r) = model(ModelProfile::Exponential, 1.0);
        let opts = WindowSearch::default();
        let narrow = certify_smoothing(&l, &r, 0.005, 0.001, SmoothingTarget::Convexity, &opts).unwrap();
        assert!(!narrow.certificate.passed);
        let found = search_window(&l, &r, SmoothingTarget::Convexity, &opts).unwrap();
        assert!(found.certificate.passed && found.eps > 0.005 && found.eps < 0.5);
    }
}
