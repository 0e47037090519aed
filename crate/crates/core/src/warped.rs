//! Curvature of doubly warped products `ds² + k(s)² g_m + h(s)² g_{n-1}` over
//! unit round sphere fibers.
//!
//! In the orthonormal frame `(∂s, θ, φ)` with `θ` tangent to the `m`-sphere
//! and `φ` tangent to the `(n-1)`-sphere the curvature operator is diagonal,
//! so five sectional values determine everything and the Ricci tensor is
//! diagonal with three distinct entries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jetcurve::{CurveError, Jet3, Jet3Curve, Side};
use crate::scalar::{close, lit, Real};
use crate::verify::{grid_min, GridSpec, PositivityCertificate, VerifyError};

/// Closed-end detection window as a fraction of the interval length.
pub const GUARD_FRACTION: f64 = 1e-6;

const END_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpedError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("fiber dimensions must satisfy m >= 2 and n >= 2, got m = {m}, n = {n}")]
    Dimension { m: usize, n: usize },
    #[error("k and h have different domains")]
    DomainMismatch,
    #[error("warping function {which} is not positive at s = {s} (value {value})")]
    NonPositiveWarping { which: &'static str, s: f64, value: f64 },
    #[error("{end} end declared {kind:?} but {reason}")]
    ClosedEnd { end: &'static str, kind: EndKind, reason: String },
    #[error("s = {s} is outside the domain")]
    OutOfDomain { s: f64 },
}

/// Behaviour of the metric at one end of the interval.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    /// The `m`-sphere factor collapses smoothly.
    ClosedK,
    /// The `(n-1)`-sphere factor collapses smoothly.
    ClosedH,
    /// Both factors stay positive; the end is a boundary component.
    Boundary,
}

/// Which factor collapses at the evaluation point.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Collapse {
    None,
    K,
    H,
}

/// Sectional and Ricci values at one parameter.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample<T> {
    pub s: T,
    /// `K(∂s, θ)`
    pub k_sk: T,
    /// `K(∂s, φ)`
    pub k_sh: T,
    /// `K(θ_i, θ_j)`
    pub k_kk: T,
    /// `K(φ_i, φ_j)`
    pub k_hh: T,
    /// `K(θ, φ)`
    pub k_kh: T,
    pub ric_s: T,
    pub ric_k: T,
    pub ric_h: T,
}

impl<T: Real> CurvatureSample<T> {
    #[allow(clippy::too_many_arguments)]
    fn assemble(s: T, k_sk: T, k_sh: T, k_kk: T, k_hh: T, k_kh: T, m: usize, n: usize) -> Self {
        let mf = lit::<T>(m as f64);
        let nm1 = lit::<T>((n - 1) as f64);
        Self {
            s,
            k_sk,
            k_sh,
            k_kk,
            k_hh,
            k_kh,
            ric_s: mf * k_sk + nm1 * k_sh,
            ric_k: k_sk + (mf - T::one()) * k_kk + nm1 * k_kh,
            ric_h: k_sh + (nm1 - T::one()) * k_hh + mf * k_kh,
        }
    }

    pub fn min_ricci(&self) -> T {
        self.ric_s.min(self.ric_k).min(self.ric_h)
    }

    pub fn sectionals(&self) -> [T; 5] {
        [self.k_sk, self.k_sh, self.k_kk, self.k_hh, self.k_kh]
    }
}

fn fx<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Curvature from the jets of `k` and `h` at `s`. With `collapse` set, the
/// named factor is taken to vanish at `s` and its 0/0 quotients are replaced
/// by their limits `-σ f'''` where `σ = f'(s) = ±1`.
pub fn curvature_from_jets<T: Real>(
    s: T,
    k: Jet3<T>,
    h: Jet3<T>,
    m: usize,
    n: usize,
    collapse: Collapse,
) -> Result<CurvatureSample<T>, WarpedError> {
    let positive = |which: &'static str, j: &Jet3<T>| {
        if j.value > T::zero() {
            Ok(())
        } else {
            Err(WarpedError::NonPositiveWarping { which, s: fx(s), value: fx(j.value) })
        }
    };
    let one = T::one();
    let sectional_side = |f: &Jet3<T>| (-f.d2 / f.value, (one - f.d1 * f.d1) / (f.value * f.value));
    let limit_side = |f: &Jet3<T>| {
        let sigma = f.d1.signum();
        let v = -sigma * f.d3;
        (v, v)
    };
    let (k_sk, k_kk, k_sh, k_hh, k_kh) = match collapse {
        Collapse::None => {
            positive("k", &k)?;
            positive("h", &h)?;
            let (sk, kk) = sectional_side(&k);
            let (sh, hh) = sectional_side(&h);
            (sk, kk, sh, hh, -(k.d1 * h.d1) / (k.value * h.value))
        }
        Collapse::H => {
            positive("k", &k)?;
            let (sk, kk) = sectional_side(&k);
            let (sh, hh) = limit_side(&h);
            (sk, kk, sh, hh, -k.d2 / k.value)
        }
        Collapse::K => {
            positive("h", &h)?;
            let (sk, kk) = limit_side(&k);
            let (sh, hh) = sectional_side(&h);
            (sk, kk, sh, hh, -h.d2 / h.value)
        }
    };
    Ok(CurvatureSample::assemble(s, k_sk, k_sh, k_kk, k_hh, k_kh, m, n))
}

/// `ds² + k² g_m + h² g_{n-1}` on the common domain of `k` and `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct DoublyWarpedMetric<T: Real> {
    pub k: Jet3Curve<T>,
    pub h: Jet3Curve<T>,
    pub m: usize,
    pub n: usize,
    pub start: EndKind,
    pub end: EndKind,
}

impl<T: Real> DoublyWarpedMetric<T> {
    /// Validates dimensions, domains and the smoothness conditions at closed
    /// ends: the collapsing factor has value 0, slope ±1 (pointing into the
    /// interval) and vanishing second derivative, the other factor has
    /// vanishing slope.
    pub fn new(
        k: Jet3Curve<T>,
        h: Jet3Curve<T>,
        m: usize,
        n: usize,
        start: EndKind,
        end: EndKind,
    ) -> Result<Self, WarpedError> {
        if m < 2 || n < 2 {
            return Err(WarpedError::Dimension { m, n });
        }
        if k.domain() != h.domain() {
            return Err(WarpedError::DomainMismatch);
        }
        let g = Self { k, h, m, n, start, end };
        let (lo, hi) = g.domain();
        g.check_end("start", start, g.k.eval_right(lo)?, g.h.eval_right(lo)?, T::one())?;
        g.check_end("end", end, g.k.eval_left(hi)?, g.h.eval_left(hi)?, -T::one())?;
        Ok(g)
    }

    fn check_end(&self, end: &'static str, kind: EndKind, k: Jet3<T>, h: Jet3<T>, sigma: T) -> Result<(), WarpedError> {
        let (collapsing, other, name) = match kind {
            EndKind::Boundary => return Ok(()),
            EndKind::ClosedK => (k, h, "k"),
            EndKind::ClosedH => (h, k, "h"),
        };
        let tol = lit::<T>(END_TOL);
        let fail = |reason: String| Err(WarpedError::ClosedEnd { end, kind, reason });
        if collapsing.value.abs() > tol {
            return fail(format!("{name} = {} there", fx(collapsing.value)));
        }
        if !close(collapsing.d1, sigma, tol) {
            return fail(format!("{name}' = {} instead of {}", fx(collapsing.d1), fx(sigma)));
        }
        if collapsing.d2.abs() > tol {
            return fail(format!("{name}'' = {} instead of 0", fx(collapsing.d2)));
        }
        if other.d1.abs() > tol {
            return fail(format!("the other warping has slope {}", fx(other.d1)));
        }
        Ok(())
    }

    pub fn domain(&self) -> (T, T) {
        self.k.domain()
    }

    fn guard(&self) -> T {
        let (lo, hi) = self.domain();
        (hi - lo) * lit::<T>(GUARD_FRACTION)
    }

    /// Curvature at `s`; within the guard distance of a closed end the limit
    /// values at that end are returned. At a breakpoint where second
    /// derivatives jump the evaluation fails; use [`Self::sectional_side`].
    pub fn sectional(&self, s: T) -> Result<CurvatureSample<T>, WarpedError> {
        let (at, k, h, collapse) = self.jets_at(s)?;
        curvature_from_jets(at, k, h, self.m, self.n, collapse)
    }

    /// Jets entering the curvature at `s`: within the guard of a closed end
    /// the one-sided jets at that end together with its collapse mode.
    pub fn jets_at(&self, s: T) -> Result<(T, Jet3<T>, Jet3<T>, Collapse), WarpedError> {
        if let Some((at, side, collapse)) = self.closed_end_near(s)? {
            return Ok((at, self.k.eval_side(at, side)?, self.h.eval_side(at, side)?, collapse));
        }
        Ok((s, jet_for_curvature(&self.k, s)?, jet_for_curvature(&self.h, s)?, Collapse::None))
    }

    /// One-sided curvature, defined at every breakpoint.
    pub fn sectional_side(&self, s: T, side: Side) -> Result<CurvatureSample<T>, WarpedError> {
        if let Some((at, end_side, collapse)) = self.closed_end_near(s)? {
            let k = self.k.eval_side(at, end_side)?;
            let h = self.h.eval_side(at, end_side)?;
            return curvature_from_jets(at, k, h, self.m, self.n, collapse);
        }
        let k = self.k.eval_side(s, side)?;
        let h = self.h.eval_side(s, side)?;
        curvature_from_jets(s, k, h, self.m, self.n, Collapse::None)
    }

    fn closed_end_near(&self, s: T) -> Result<Option<(T, Side, Collapse)>, WarpedError> {
        let (lo, hi) = self.domain();
        if !(s >= lo && s <= hi) {
            return Err(WarpedError::OutOfDomain { s: fx(s) });
        }
        let guard = self.guard();
        let (at, kind, side) = if s - lo <= guard && self.start != EndKind::Boundary {
            (lo, self.start, Side::Right)
        } else if hi - s <= guard && self.end != EndKind::Boundary {
            (hi, self.end, Side::Left)
        } else {
            return Ok(None);
        };
        let collapse = if kind == EndKind::ClosedK { Collapse::K } else { Collapse::H };
        Ok(Some((at, side, collapse)))
    }

    /// Principal curvatures `(k'/k, h'/h)` of the slice `{s}` with respect to `+∂s`.
    pub fn level_set_second_form(&self, s: T) -> Result<(T, T), WarpedError> {
        let k = self.k.eval_right(s)?;
        let h = self.h.eval_right(s)?;
        for (which, j) in [("k", &k), ("h", &h)] {
            if !(j.value > T::zero()) {
                return Err(WarpedError::NonPositiveWarping { which, s: fx(s), value: fx(j.value) });
            }
        }
        Ok((k.d1 / k.value, h.d1 / h.value))
    }

    /// Certifies `min(Ric_s, Ric_k, Ric_h) > threshold` over a grid in `s`.
    pub fn min_ricci(&self, grid: &GridSpec, threshold: f64) -> Result<PositivityCertificate, VerifyError> {
        grid_min(
            "min_ricci",
            |p: &[f64]| self.sectional(lit::<T>(p[0])).map(|c| fx(c.min_ricci())),
            grid,
            threshold,
        )
    }
}

/// Jet whose first two derivatives are reliable at `s`: fails only where
/// the second derivative jumps.
fn jet_for_curvature<T: Real>(curve: &Jet3Curve<T>, s: T) -> Result<Jet3<T>, CurveError> {
    let order = curve.order_at(s);
    if order < 3 {
        return Err(CurveError::AtKink { x: fx(s), order });
    }
    curve.eval_right(s)
}
