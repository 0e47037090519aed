//! Named metric families and the two multi-step procedures built on them:
//! the boundary isotopy to the round metric and the concordance cylinder.

pub mod concordance;
pub mod esphere;
pub mod handle;
pub mod isotopy;
pub mod triangle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jetcurve::{CurveError, Jet3, Jet3Curve};
use crate::spline::SplineError;
use crate::verify::{grid_min, GridSpec, PositivityCertificate, VerifyError};
use crate::warped::{curvature_from_jets, Collapse, CurvatureSample, DoublyWarpedMetric, EndKind, WarpedError};

pub use concordance::{
    concordance_schedule, concordance_search, estimate_c, ConcordanceOutcome, ConcordanceParams, CurvatureBound,
    FiberPath, SearchOptions, SlabTerms,
};
pub use esphere::{esphere_draft, make_esphere_profile, EsphereDraft, EsphereProfile, EsphereShape};
pub use handle::{make_handle, FnuShape, HandleParams};
pub use isotopy::{
    find_nu_star, isotopy_at, isotopy_stage1, isotopy_stage2, make_kandh_target, run_isotopy, IsotopyAtNu, IsotopyOutcome,
    IsotopyParams, KandhShape, KandhTarget,
};
pub use triangle::{solve_geodesic_triangle, GeodesicTriangle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Warped(#[from] WarpedError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("{what} violates {}", .failed.join(", "))]
    Conditions { what: &'static str, failed: Vec<String>, report: ConditionReport },
    #[error("no sign change of {what} on the search path")]
    NoBracket { what: &'static str },
    #[error("search stopped after {iterations} steps; last failing bound {bound} with margin {margin}")]
    SearchExhausted { iterations: usize, bound: String, margin: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ConstructionError {
    ConstructionError::InvalidParameter { name, reason: reason.into() }
}

/// One named inequality with its signed margin; positive means satisfied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub margin: f64,
    pub passed: bool,
}

/// Machine-checkable list of the conditions a construction promises.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    /// Records `margin > 0`; NaN margins fail.
    pub fn push(&mut self, id: &str, margin: f64) {
        self.conditions.push(Condition { id: id.to_string(), margin, passed: margin > 0.0 });
    }

    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.conditions.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect()
    }

    pub fn margin(&self, id: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.id == id).map(|c| c.margin)
    }

    pub(crate) fn require(self, what: &'static str) -> Result<Self, ConstructionError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(ConstructionError::Conditions { what, failed: self.failures(), report: self })
        }
    }
}

/// Affine family of doubly warped metrics over `lambda.0 ..= lambda.1`,
/// equal to `start` and `end` exactly at the two ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPath {
    pub start: DoublyWarpedMetric<f64>,
    pub end: DoublyWarpedMetric<f64>,
    pub lambda: (f64, f64),
}

impl MetricPath {
    pub fn affine(
        start: DoublyWarpedMetric<f64>,
        end: DoublyWarpedMetric<f64>,
        lambda: (f64, f64),
    ) -> Result<Self, ConstructionError> {
        if !(lambda.0 < lambda.1) {
            return Err(invalid("lambda", format!("empty range {lambda:?}")));
        }
        if start.domain() != end.domain() {
            return Err(WarpedError::DomainMismatch.into());
        }
        if (start.m, start.n, start.start, start.end) != (end.m, end.n, end.start, end.end) {
            return Err(invalid("path", "endpoint metrics differ in dimensions or end kinds"));
        }
        Ok(Self { start, end, lambda })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.start.domain()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.start.m, self.start.n)
    }

    pub fn ends(&self) -> (EndKind, EndKind) {
        (self.start.start, self.start.end)
    }

    fn weight(&self, lambda: f64) -> Result<f64, ConstructionError> {
        let (lo, hi) = self.lambda;
        if !(lambda >= lo && lambda <= hi) {
            return Err(invalid("lambda", format!("{lambda} outside [{lo}, {hi}]")));
        }
        Ok((lambda - lo) / (hi - lo))
    }

    /// Member metric; the endpoints are returned unchanged.
    pub fn at(&self, lambda: f64) -> Result<DoublyWarpedMetric<f64>, ConstructionError> {
        let w = self.weight(lambda)?;
        if w == 0.0 {
            return Ok(self.start.clone());
        }
        if w == 1.0 {
            return Ok(self.end.clone());
        }
        let k = Jet3Curve::affine_combine(&self.start.k, &self.end.k, w)?;
        let h = Jet3Curve::affine_combine(&self.start.h, &self.end.h, w)?;
        let (m, n) = self.dims();
        let (a, b) = self.ends();
        Ok(DoublyWarpedMetric::new(k, h, m, n, a, b)?)
    }

    /// Jets of `k_λ`, `h_λ` and of their `λ`-derivatives at `s`, with the
    /// closed-end substitution of [`DoublyWarpedMetric::jets_at`].
    pub fn jets(&self, lambda: f64, s: f64) -> Result<PathJets, ConstructionError> {
        let w = self.weight(lambda)?;
        let (at, k0, h0, collapse) = self.start.jets_at(s)?;
        let (_, k1, h1, _) = self.end.jets_at(s)?;
        let rate = 1.0 / (self.lambda.1 - self.lambda.0);
        Ok(PathJets {
            at,
            k: k0.scale(1.0 - w) + k1.scale(w),
            h: h0.scale(1.0 - w) + h1.scale(w),
            k_rate: (k1 - k0).scale(rate),
            h_rate: (h1 - h0).scale(rate),
            collapse,
        })
    }

    pub fn sectional(&self, lambda: f64, s: f64) -> Result<CurvatureSample<f64>, ConstructionError> {
        let j = self.jets(lambda, s)?;
        let (m, n) = self.dims();
        Ok(curvature_from_jets(j.at, j.k, j.h, m, n, j.collapse)?)
    }

    /// Certifies the minimum Ricci value over a `(λ, s)` grid.
    pub fn min_ricci(&self, grid: &GridSpec, threshold: f64) -> Result<PositivityCertificate, VerifyError> {
        grid_min(
            "path_min_ricci",
            |p: &[f64]| self.sectional(p[0], p[1]).map(|c| c.min_ricci()),
            grid,
            threshold,
        )
    }

    /// `(λ, s)` grid spanning the path.
    pub fn grid(&self, lambda_count: usize, s_count: usize, depth: u32) -> GridSpec {
        let (lo, hi) = self.domain();
        GridSpec::new(
            vec![
                crate::verify::Axis::new(self.lambda.0, self.lambda.1, lambda_count),
                crate::verify::Axis::new(lo, hi, s_count),
            ],
            depth,
            2,
        )
    }
}

/// Jets of a path member and of its `λ`-derivative at one point.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PathJets {
    pub at: f64,
    pub k: Jet3<f64>,
    pub h: Jet3<f64>,
    pub k_rate: Jet3<f64>,
    pub h_rate: Jet3<f64>,
    pub collapse: Collapse,
}

/// Uniform samples of a curve's value and first two derivatives, one row per
/// point: `s, value, d1, d2`.
pub fn sample_curve(curve: &Jet3Curve<f64>, count: usize) -> Result<Vec<[f64; 4]>, CurveError> {
    let (lo, hi) = curve.domain();
    (0..count)
        .map(|i| {
            let s = if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 };
            curve.eval_right(s).map(|j| [s, j.value, j.d1, j.d2])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcurve::Expr;
    use std::f64::consts::PI;

    fn round(r: f64) -> DoublyWarpedMetric<f64> {
        let t = PI * r / 2.0;
        DoublyWarpedMetric::new(
            Jet3Curve::single(0.0, t, Expr::Cos { a: r, b: 1.0 / r, c: 0.0 }).unwrap(),
            Jet3Curve::single(0.0, t, Expr::Sin { a: r, b: 1.0 / r, c: 0.0 }).unwrap(),
            2,
            3,
            EndKind::ClosedH,
            EndKind::ClosedK,
        )
        .unwrap()
    }

    fn squashed() -> DoublyWarpedMetric<f64> {
        let t = PI / 2.0;
        DoublyWarpedMetric::new(
            Jet3Curve::single(0.0, t, Expr::Cos { a: 0.5, b: 1.0, c: 0.0 }).unwrap(),
            Jet3Curve::single(0.0, t, Expr::Sin { a: 1.0, b: 1.0, c: 0.0 }).unwrap(),
            2,
            3,
            EndKind::ClosedH,
            EndKind::Boundary,
        )
        .unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        let a = round(1.0);
        let b = DoublyWarpedMetric { k: a.k.clone(), h: a.h.clone(), ..a.clone() };
        let path = MetricPath::affine(a.clone(), b.clone(), (1.0, 2.0)).unwrap();
        assert_eq!(path.at(1.0).unwrap(), a);
        assert_eq!(path.at(2.0).unwrap(), b);
        assert!(path.at(2.5).is_err());
    }

    #[test]
    fn jets_combine_linearly() {
        let a = round(1.0);
        let mut b = a.clone();
        b.k = Jet3Curve::single(0.0, PI / 2.0, Expr::Cos { a: 0.5, b: 1.0, c: 0.0 }).unwrap();
        b.end = EndKind::Boundary;
        let mut a2 = a.clone();
        a2.end = EndKind::Boundary;
        let path = MetricPath::affine(a2.clone(), b.clone(), (0.0, 1.0)).unwrap();
        let j = path.jets(0.25, 0.7).unwrap();
        let direct = path.at(0.25).unwrap().k.eval_jet(0.7).unwrap();
        assert!((j.k.value - direct.value).abs() < 1e-15);
        assert!((j.k.d2 - direct.d2).abs() < 1e-15);
        assert!((j.k_rate.value - (0.5 - 1.0) * 0.7f64.cos()).abs() < 1e-15);
        let via_metric = path.at(0.25).unwrap().sectional(0.7).unwrap();
        let via_path = path.sectional(0.25, 0.7).unwrap();
        assert!((via_metric.ric_k - via_path.ric_k).abs() < 1e-12);
    }

    #[test]
    fn mismatched_ends_rejected() {
        assert!(MetricPath::affine(round(1.0), squashed(), (0.0, 1.0)).is_err());
    }

    #[test]
    fn report_lists_failures() {
        let mut r = ConditionReport::default();
        r.push("a", 1.0);
        r.push("b", -1.0);
        r.push("c", f64::NAN);
        assert_eq!(r.failures(), vec!["b".to_string(), "c".to_string()]);
        assert!(matches!(r.require("thing"), Err(ConstructionError::Conditions { .. })));
    }
}
