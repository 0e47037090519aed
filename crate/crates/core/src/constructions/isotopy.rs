//! Two affine paths of boundary metrics: from the synthesized profile
//! `(k0, h0)` to a target `(k1, h1)` with `k1, h1` concave and `h1 ≡ R` on
//! the docking side, then from the target to a round sphere.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::esphere::{make_esphere_profile, sampled_min, EsphereProfile, EsphereShape};
use super::{invalid, ConditionReport, ConstructionError, MetricPath};
use crate::jetcurve::{Expr, Jet3, Jet3Curve, Piece};
use crate::spline::hermite_septic;
use crate::verify::{bisect_param, PositivityCertificate, DEFAULT_THRESHOLD};
use crate::warped::{DoublyWarpedMetric, EndKind};

const END_TOL: f64 = 1e-9;

/// Shape of the target `k1`: `k1' = -sin φ` with `φ(s) = a s` up to a
/// switch point `s_c > T2` and `φ(s) = a s + B ((s - s_c)/(T - s_c))^p`
/// after it, `B` chosen so that `φ(T) = π/2` and `s_c` solved for so that
/// `k1(T1) = k0(T1)` and `k1(T) = 0`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KandhShape {
    /// `p >= 2`; the join at `s_c` has continuity order `p + 1`.
    pub ramp_power: u32,
    /// `a T2 = tilt · asin(ν cos b1)`.
    pub tilt: f64,
    /// `max |h1 - h0| <= closeness · R`.
    pub closeness: f64,
    pub samples: usize,
}

impl Default for KandhShape {
    fn default() -> Self {
        Self { ramp_power: 2, tilt: 0.25, closeness: 0.05, samples: 4000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KandhTarget {
    pub k1: Jet3Curve<f64>,
    pub h1: Jet3Curve<f64>,
    /// Start of the final bend of `k1`.
    pub switch: f64,
    pub shape: KandhShape,
    pub report: ConditionReport,
}

impl KandhTarget {
    pub fn metric(&self, profile: &EsphereProfile) -> Result<DoublyWarpedMetric<f64>, ConstructionError> {
        let d = profile.draft();
        Ok(DoublyWarpedMetric::new(self.k1.clone(), self.h1.clone(), d.m, d.n, EndKind::ClosedH, EndKind::ClosedK)?)
    }
}

/// Builds `(k1, h1)` for `profile` and fails with the violated conditions.
pub fn make_kandh_target(profile: &EsphereProfile, shape: &KandhShape) -> Result<KandhTarget, ConstructionError> {
    let d = profile.draft();
    let [t0, t1, t2, t3] = d.breakpoints;
    let big_t = d.length;
    if shape.ramp_power < 2 || !(shape.tilt > 0.0 && shape.tilt < 1.0) {
        return Err(invalid("kandh shape", "need ramp_power >= 2 and tilt in (0, 1)"));
    }
    let p = shape.ramp_power as usize;
    let slope = shape.tilt * (d.nu * d.b1.cos()).asin() / t2;
    // `k1 = top + (cos(a s) - 1) / a` before the switch.
    let top = d.k.value(t1)? + (1.0 - (slope * t1).cos()) / slope;
    let straight = |s: f64| top + ((slope * s).cos() - 1.0) / slope;
    let bend = |switch: f64, offset: f64| {
        let mut coeffs = vec![0.0; p + 1];
        coeffs[0] = slope * switch;
        coeffs[1] = slope;
        coeffs[p] += (FRAC_PI_2 - slope * big_t) / (big_t - switch).powi(p as i32);
        Expr::Integral {
            integrand: Box::new(Expr::compose(
                Expr::Sin { a: -1.0, b: 1.0, c: 0.0 },
                Expr::Poly { coeffs, center: switch },
            )),
            lower: switch,
            offset,
        }
    };
    let closes = |switch: f64| bend(switch, straight(switch)).eval(big_t).value <= 0.0;
    let switch = bisect_param(closes, t2, big_t, 1e-13)
        .map_err(|_| ConstructionError::NoBracket { what: "k1 switch point" })?;
    let k1 = Jet3Curve::from_pieces(vec![
        Piece {
            start: 0.0,
            end: switch,
            expr: Expr::Sum {
                terms: vec![Expr::constant(top - 1.0 / slope), Expr::Cos { a: 1.0 / slope, b: slope, c: 0.0 }],
            },
        },
        Piece { start: switch, end: big_t, expr: bend(switch, straight(switch)) },
    ])?;

    let seg = hermite_septic(d.h.eval_left(t0)?, Jet3::constant(d.radius), 0.5 * (t3 - t0))?.centered_at(0.5 * (t0 + t3));
    let h1 = d.h.splice(t0, t3, seg.to_expr())?;

    let report = kandh_report(profile, &k1, &h1, shape)?;
    let target = KandhTarget { k1, h1, switch, shape: *shape, report };
    if target.report.passed() {
        Ok(target)
    } else {
        Err(ConstructionError::Conditions {
            what: "kandh target",
            failed: target.report.failures(),
            report: target.report,
        })
    }
}

/// Conditions on `(k1, h1)` relative to `profile`.
pub fn kandh_report(
    profile: &EsphereProfile,
    k1: &Jet3Curve<f64>,
    h1: &Jet3Curve<f64>,
    shape: &KandhShape,
) -> Result<ConditionReport, ConstructionError> {
    let d = profile.draft();
    let [t0, t1, t2, t3] = d.breakpoints;
    let (big_t, r, n) = (d.length, d.radius, shape.samples);
    let guard = 1e-3 * big_t;
    let band = d.nu * d.b1.cos();
    if k1.domain() != (0.0, big_t) || h1.domain() != (0.0, big_t) {
        return Err(invalid("kandh target", "domain differs from the profile's"));
    }
    let mut rep = ConditionReport::default();

    let a = k1.eval_right(0.0)?;
    rep.push("k1_odd_start", END_TOL - a.d1.abs().max(a.d3.abs()));
    let b = k1.eval_left(big_t)?;
    rep.push("k1_even_end", END_TOL - b.value.abs().max(b.d2.abs()));
    rep.push("k1_closing_slope", END_TOL - (b.d1 + 1.0).abs());
    rep.push("k1_matches_at_t1", END_TOL - (k1.value(t1)? - d.k.value(t1)?).abs());
    rep.push("k1_concave", sampled_min(guard, big_t - guard, n, |s| Ok(-k1.eval_right(s)?.d2))?);
    // The band is open at s = 0, where k1' vanishes.
    rep.push(
        "k1_slope_band",
        sampled_min(guard, t2, n, |s| {
            let slope = k1.eval_right(s)?.d1;
            Ok((-slope).min(slope + band))
        })?,
    );

    rep.push(
        "h1_matches_before_t0",
        END_TOL - -sampled_min(0.0, t0, n, |s| Ok(-(h1.value(s)? - d.h.value(s)?).abs()))?,
    );
    rep.push("h1_constant_after_t3", END_TOL - -sampled_min(t3, big_t, n, |s| Ok(-(h1.value(s)? - r).abs()))?);
    rep.push("h1_concave", sampled_min(guard, t3 - guard, n, |s| Ok(-h1.eval_right(s)?.d2))?);
    rep.push(
        "h1_close_to_h0",
        shape.closeness * r - -sampled_min(0.0, big_t, n, |s| Ok(-(h1.value(s)? - d.h.value(s)?).abs()))?,
    );
    Ok(rep)
}

/// `λ ∈ [0, 1]` path from the profile to the target, after re-verifying the
/// target's conditions.
pub fn isotopy_stage1(profile: &EsphereProfile, target: &KandhTarget) -> Result<MetricPath, ConstructionError> {
    kandh_report(profile, &target.k1, &target.h1, &target.shape)?.require("kandh target")?;
    MetricPath::affine(profile.metric()?, target.metric(profile)?, (0.0, 1.0))
}

/// `λ ∈ [1, 2]` path from `(k1, h1)` to the round metric of radius `radius`
/// on `[0, πR/2]`.
pub fn isotopy_stage2(
    k1: &Jet3Curve<f64>,
    h1: &Jet3Curve<f64>,
    radius: f64,
    m: usize,
    n: usize,
) -> Result<MetricPath, ConstructionError> {
    let (lo, hi) = k1.domain();
    if lo != 0.0 || (hi - PI * radius / 2.0).abs() > 1e-12 * hi {
        return Err(invalid("domain", format!("[{lo}, {hi}] is not [0, πR/2] for R = {radius}")));
    }
    for (name, curve) in [("k1", k1), ("h1", h1)] {
        let worst = -sampled_min(lo, hi, 4000, |s| Ok(-curve.eval_right(s)?.d2))?;
        if worst > 1e-12 {
            return Err(invalid(name, format!("second derivative reaches {worst} > 0")));
        }
    }
    let start = DoublyWarpedMetric::new(k1.clone(), h1.clone(), m, n, EndKind::ClosedH, EndKind::ClosedK)?;
    let round = DoublyWarpedMetric::new(
        Jet3Curve::single(lo, hi, Expr::Cos { a: radius, b: 1.0 / radius, c: 0.0 })?,
        Jet3Curve::single(lo, hi, Expr::Sin { a: radius, b: 1.0 / radius, c: 0.0 })?,
        m,
        n,
        EndKind::ClosedH,
        EndKind::ClosedK,
    )?;
    MetricPath::affine(start, round, (1.0, 2.0))
}

/// Radius of the round metric whose quarter great circle has length `length`.
pub fn round_radius_for(length: f64) -> f64 {
    2.0 * length / PI
}

/// Inputs of the full isotopy run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsotopyParams {
    pub radius: f64,
    pub b1: f64,
    pub m: usize,
    pub n: usize,
    pub esphere: EsphereShape,
    pub kandh: KandhShape,
    pub lambda_count: usize,
    pub s_count: usize,
    pub depth: u32,
    /// Bracket and tolerance of the bisection on `ν`.
    pub nu_range: (f64, f64),
    pub nu_tol: f64,
}

impl Default for IsotopyParams {
    fn default() -> Self {
        Self {
            radius: 2.0,
            b1: PI / 6.0,
            m: 3,
            n: 3,
            esphere: EsphereShape::default(),
            kandh: KandhShape::default(),
            lambda_count: 64,
            s_count: 256,
            depth: 2,
            nu_range: (1e-3, 0.2),
            nu_tol: 1e-4,
        }
    }
}

/// Everything built for one `ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotopyAtNu {
    pub nu: f64,
    pub profile: EsphereProfile,
    pub target: KandhTarget,
    pub stage1: MetricPath,
    pub certificate: PositivityCertificate,
}

/// Builds the profile, target and stage-1 path for `nu` and certifies the path.
pub fn isotopy_at(p: &IsotopyParams, nu: f64) -> Result<IsotopyAtNu, ConstructionError> {
    let profile = make_esphere_profile(p.radius, nu, p.b1, p.m, p.n, &p.esphere)?;
    let target = make_kandh_target(&profile, &p.kandh)?;
    let stage1 = isotopy_stage1(&profile, &target)?;
    let certificate = stage1.min_ricci(&stage1.grid(p.lambda_count, p.s_count, p.depth), DEFAULT_THRESHOLD)?;
    Ok(IsotopyAtNu { nu, profile, target, stage1, certificate })
}

/// Largest `ν` in the bracket, to the bisection tolerance, at which
/// [`isotopy_at`] succeeds and certifies.
pub fn find_nu_star(p: &IsotopyParams) -> Result<IsotopyAtNu, ConstructionError> {
    let (lo, hi) = p.nu_range;
    let ok = |nu: f64| isotopy_at(p, nu).map(|r| r.certificate.passed).unwrap_or(false);
    if !ok(lo) {
        return Err(ConstructionError::NoBracket { what: "isotopy nu" });
    }
    let nu = if ok(hi) { hi } else { bisect_param(ok, lo, hi, p.nu_tol)? };
    isotopy_at(p, nu)
}

/// Outcome of both stages at the bisected `ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotopyOutcome {
    pub nu_star: f64,
    pub esphere_report: ConditionReport,
    pub kandh_report: ConditionReport,
    pub stage1: PositivityCertificate,
    pub round_radius: f64,
    pub stage2: PositivityCertificate,
    /// `max |K - 1/R²|` over all sectional curvatures of the round endpoint.
    pub endpoint_deviation: f64,
}

pub fn run_isotopy(p: &IsotopyParams) -> Result<(IsotopyOutcome, IsotopyAtNu, MetricPath), ConstructionError> {
    let at = find_nu_star(p)?;
    let d = at.profile.draft();
    let round_radius = round_radius_for(d.length);
    let stage2 = isotopy_stage2(&at.target.k1, &at.target.h1, round_radius, d.m, d.n)?;
    let cert2 = stage2.min_ricci(&stage2.grid(p.lambda_count, p.s_count, p.depth), DEFAULT_THRESHOLD)?;
    let round = stage2.at(2.0)?;
    let expected = 1.0 / (round_radius * round_radius);
    let mut deviation: f64 = 0.0;
    for i in 0..=1000 {
        let s = d.length * i as f64 / 1000.0;
        for k in round.sectional(s)?.sectionals() {
            deviation = deviation.max((k - expected).abs());
        }
    }
    let outcome = IsotopyOutcome {
        nu_star: at.nu,
        esphere_report: at.profile.report().clone(),
        kandh_report: at.target.report.clone(),
        stage1: at.certificate.clone(),
        round_radius,
        stage2: cert2,
        endpoint_deviation: deviation,
    };
    Ok((outcome, at, stage2))
}
