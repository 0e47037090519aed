//! Odd-degree Hermite splines on symmetric windows and the two-stage kink
//! smoothing built from them.
//!
//! A cubic matches value and slope at both window ends, a quintic additionally
//! matches the second derivative. Smoothing a kink first bridges it with a
//! cubic (leaving second-derivative jumps at the window ends) and then bridges
//! each of those jumps with a quintic on a narrower window.

use num_traits::{Num, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jetcurve::{CurveError, Expr, Jet3, Jet3Curve};
use crate::scalar::Real;

/// Exact-arithmetic friendly scalar for the Hermite solve.
pub trait Field: Num + Signed + Copy + PartialOrd {}

impl<T: Num + Signed + Copy + PartialOrd> Field for T {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("window half-width must be positive")]
    NonPositiveWidth,
    #[error("smoothing window [{lo}, {hi}] leaves the domain")]
    WindowOutsideDomain { lo: f64, hi: f64 },
    #[error("smoothing window [{lo}, {hi}] contains another kink at {other}")]
    OverlappingKink { lo: f64, hi: f64, other: f64 },
    #[error("smoothing windows overlap: half-width {delta} for kinks {left} and {right}")]
    OverlappingWindows { left: f64, right: f64, delta: f64 },
    #[error("expected continuity of order at least {expected} at {at}, found {found}")]
    Regularity { at: f64, expected: u8, found: u8 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Polynomial on `[center - half_width, center + half_width]` with
/// coefficients in the local variable `x - center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineSegment<T> {
    pub center: T,
    pub half_width: T,
    pub degree: usize,
    pub coefficients: Vec<T>,
}

impl<T: Field> SplineSegment<T> {
    pub fn centered_at(mut self, center: T) -> Self {
        self.center = center;
        self
    }

    /// Derivative of order `k` at the local coordinate `a`.
    pub fn derivative_local(&self, k: usize, a: T) -> T {
        let mut acc = T::zero();
        for i in (k..self.coefficients.len()).rev() {
            acc = acc * a + self.coefficients[i] * falling::<T>(i, k);
        }
        acc
    }

    /// Jet at the global point `x`.
    pub fn jet(&self, x: T) -> Jet3<T> {
        let a = x - self.center;
        Jet3 {
            value: self.derivative_local(0, a),
            d1: self.derivative_local(1, a),
            d2: self.derivative_local(2, a),
            d3: self.derivative_local(3, a),
        }
    }
}

impl<T: Real> SplineSegment<T> {
    pub fn to_expr(&self) -> Expr<T> {
        Expr::Poly { coeffs: self.coefficients.clone(), center: self.center }
    }
}

fn falling<T: Field>(i: usize, k: usize) -> T {
    let mut out = T::one();
    for t in 0..k {
        out = out * from_usize::<T>(i - t);
    }
    out
}

fn from_usize<T: Field>(n: usize) -> T {
    (0..n).fold(T::zero(), |acc, _| acc + T::one())
}

/// Solves `m x = rhs` in place with partial pivoting; `m` is row-major.
#[allow(clippy::needless_range_loop)]
fn solve<T: Field>(mut m: Vec<Vec<T>>, mut rhs: Vec<T>) -> Vec<T> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("ordered pivots"))
            .expect("non-empty column");
        m.swap(col, piv);
        rhs.swap(col, piv);
        let p = m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / p;
            if factor == T::zero() {
                continue;
            }
            for c in col..n {
                let v = m[col][c];
                m[row][c] = m[row][c] - factor * v;
            }
            rhs[row] = rhs[row] - factor * rhs[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc = acc - m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    x
}

/// Hermite interpolant of order `order` (1 to 3) on `[-w, w]`, solved in the
/// unit variable `u = a / w` and rescaled.
fn hermite<T: Field>(left: &Jet3<T>, right: &Jet3<T>, w: T, order: usize) -> Result<SplineSegment<T>, SplineError> {
    if !(w > T::zero()) {
        return Err(SplineError::NonPositiveWidth);
    }
    let n = 2 * order + 2;
    let mut m = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    let entry = |j: usize, jet: &Jet3<T>| match j {
        0 => jet.value,
        1 => jet.d1,
        2 => jet.d2,
        _ => jet.d3,
    };
    for (sign, jet) in [(-T::one(), left), (T::one(), right)] {
        let mut wpow = T::one();
        for j in 0..=order {
            let row: Vec<T> = (0..n)
                .map(|i| {
                    if i < j {
                        T::zero()
                    } else {
                        let mut s = T::one();
                        for _ in 0..(i - j) {
                            s = s * sign;
                        }
                        falling::<T>(i, j) * s
                    }
                })
                .collect();
            m.push(row);
            rhs.push(entry(j, jet) * wpow);
            wpow = wpow * w;
        }
    }
    let unit = solve(m, rhs);
    let mut coefficients = Vec::with_capacity(n);
    let mut wpow = T::one();
    for d in unit {
        coefficients.push(d / wpow);
        wpow = wpow * w;
    }
    Ok(SplineSegment { center: T::zero(), half_width: w, degree: n - 1, coefficients })
}

/// Cubic matching value and slope of `left` at `-eps` and `right` at `eps`.
pub fn hermite_cubic<T: Field>(left: Jet3<T>, right: Jet3<T>, eps: T) -> Result<SplineSegment<T>, SplineError> {
    hermite(&left, &right, eps, 1)
}

/// Quintic matching value, slope and second derivative at `-delta` and `delta`.
pub fn hermite_quintic<T: Field>(left: Jet3<T>, right: Jet3<T>, delta: T) -> Result<SplineSegment<T>, SplineError> {
    hermite(&left, &right, delta, 2)
}

/// Degree-7 polynomial matching the full jets at `-half_width` and `half_width`.
pub fn hermite_septic<T: Field>(left: Jet3<T>, right: Jet3<T>, half_width: T) -> Result<SplineSegment<T>, SplineError> {
    hermite(&left, &right, half_width, 3)
}

/// Signed blend coordinate of the quintic's second derivative: for data with
/// piecewise quadratic profile, `p''(a) = (2 - w)/4 F''(-delta) + (2 + w)/4 F''(delta)`.
/// The weights leave `[0, 1]` near `|a| = 0.77 delta`.
pub fn quintic_blend_weight<T: Real>(a: T, delta: T) -> T {
    let u = a / delta;
    let half = T::from_f64(0.5).unwrap();
    (T::from_f64(9.0).unwrap() * u - T::from_f64(5.0).unwrap() * u * u * u) * half
}

fn fx<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn check_window<T: Real>(curve: &Jet3Curve<T>, center: T, lo: T, hi: T) -> Result<(), SplineError> {
    let (dlo, dhi) = curve.domain();
    if !(lo >= dlo && hi <= dhi) {
        return Err(SplineError::WindowOutsideDomain { lo: fx(lo), hi: fx(hi) });
    }
    // Third-derivative jumps are below the regularity the smoothing targets.
    for k in curve.kinks().into_iter().filter(|k| k.order < 3) {
        if k.location != center && k.location >= lo && k.location <= hi {
            return Err(SplineError::OverlappingKink { lo: fx(lo), hi: fx(hi), other: fx(k.location) });
        }
    }
    Ok(())
}

/// Replaces `[kink - eps, kink + eps]` by the cubic bridge of the outer jets.
pub fn smooth_c1<T: Real>(curve: &Jet3Curve<T>, kink: T, eps: T) -> Result<Jet3Curve<T>, SplineError> {
    if !(eps > T::zero()) {
        return Err(SplineError::NonPositiveWidth);
    }
    let order = curve.order_at(kink);
    if order < 1 {
        return Err(SplineError::Regularity { at: fx(kink), expected: 1, found: order });
    }
    let (lo, hi) = (kink - eps, kink + eps);
    check_window(curve, kink, lo, hi)?;
    let seg = hermite_cubic(curve.eval_left(lo)?, curve.eval_right(hi)?, eps)?.centered_at(kink);
    Ok(curve.splice(lo, hi, seg.to_expr())?)
}

/// Replaces a `delta` window around each of the two second-order kinks by a
/// quintic bridge.
pub fn smooth_c2<T: Real>(curve: &Jet3Curve<T>, kinks: (T, T), delta: T) -> Result<Jet3Curve<T>, SplineError> {
    if !(delta > T::zero()) {
        return Err(SplineError::NonPositiveWidth);
    }
    let (x1, x2) = if kinks.0 <= kinks.1 { kinks } else { (kinks.1, kinks.0) };
    if x2 - x1 <= delta + delta {
        return Err(SplineError::OverlappingWindows { left: fx(x1), right: fx(x2), delta: fx(delta) });
    }
    let mut out = curve.clone();
    for x in [x1, x2] {
        let order = curve.order_at(x);
        if order < 2 {
            return Err(SplineError::Regularity { at: fx(x), expected: 2, found: order });
        }
        let (lo, hi) = (x - delta, x + delta);
        check_window(curve, x, lo, hi)?;
        let seg = hermite_quintic(out.eval_left(lo)?, out.eval_right(hi)?, delta)?.centered_at(x);
        out = out.splice(lo, hi, seg.to_expr())?;
    }
    Ok(out)
}

/// Cubic bridge on `[kink - eps, kink + eps]` followed by quintic bridges of
/// half-width `delta` at both cubic edges.
pub fn two_stage_smooth<T: Real>(curve: &Jet3Curve<T>, kink: T, eps: T, delta: T) -> Result<Jet3Curve<T>, SplineError> {
    if !(delta > T::zero()) {
        return Err(SplineError::NonPositiveWidth);
    }
    if !(delta < eps) {
        return Err(SplineError::OverlappingWindows { left: fx(kink - eps), right: fx(kink + eps), delta: fx(delta) });
    }
    let (lo, hi) = (kink - eps - delta, kink + eps + delta);
    check_window(curve, kink, lo, hi)?;
    let stage1 = smooth_c1(curve, kink, eps)?;
    smooth_c2(&stage1, (kink - eps, kink + eps), delta)
}
