//! Piecewise analytic scalar curves evaluated together with their first three
//! derivatives.
//!
//! A [`Jet3Curve`] is a list of contiguous pieces, each carrying an [`Expr`].
//! Every interior breakpoint records the lowest derivative order at which the
//! two adjacent pieces disagree; orders `0..=3` are kinks, `4` means the jets
//! agree through order three and the breakpoint is invisible to evaluation.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{close, lit, Real};

/// Continuity order meaning "jets agree through order three".
pub const SMOOTH: u8 = 4;

const JOIN_TOL: f64 = 1e-9;
const EDGE: u8 = u8::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("point {x} is a kink of order {order}; use a one-sided evaluation")]
    AtKink { x: f64, order: u8 },
    #[error("non-finite jet at {x}")]
    NonFinite { x: f64 },
    #[error("curve has no pieces")]
    Empty,
    #[error("pieces are not contiguous near {at}")]
    Gap { at: f64 },
    #[error("piece [{start}, {end}] is empty or reversed")]
    BadPiece { start: f64, end: f64 },
    #[error("expected {expected} continuity entries, got {got}")]
    ContinuityLength { expected: usize, got: usize },
    #[error("breakpoint {at} declared continuous through order {declared} but derivative {order} jumps")]
    Continuity { at: f64, declared: u8, order: u8 },
    #[error("domains differ: [{lo1}, {hi1}] vs [{lo2}, {hi2}]")]
    DomainMismatch { lo1: f64, hi1: f64, lo2: f64, hi2: f64 },
    #[error("window [{lo}, {hi}] is not inside the domain")]
    Window { lo: f64, hi: f64 },
}

fn f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Value and derivatives through order three.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Jet3<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
}

impl<T: Real> Jet3<T> {
    pub fn new(value: T, d1: T, d2: T, d3: T) -> Self {
        Self { value, d1, d2, d3 }
    }

    pub fn constant(value: T) -> Self {
        Self::new(value, T::zero(), T::zero(), T::zero())
    }

    /// The identity jet at `x`.
    pub fn variable(x: T) -> Self {
        Self::new(x, T::one(), T::zero(), T::zero())
    }

    pub fn scale(self, w: T) -> Self {
        Self::new(self.value * w, self.d1 * w, self.d2 * w, self.d3 * w)
    }

    /// Entry of order `k`.
    pub fn get(&self, k: usize) -> T {
        match k {
            0 => self.value,
            1 => self.d1,
            2 => self.d2,
            3 => self.d3,
            _ => panic!("jet order {k} exceeds 3"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }

    /// Chain rule: `self` holds the outer function and its derivatives at
    /// `inner.value`.
    pub fn compose(self, inner: Self) -> Self {
        let (g1, g2, g3) = (inner.d1, inner.d2, inner.d3);
        let three = lit::<T>(3.0);
        Self::new(
            self.value,
            self.d1 * g1,
            self.d2 * g1 * g1 + self.d1 * g2,
            self.d3 * g1 * g1 * g1 + three * self.d2 * g1 * g2 + self.d1 * g3,
        )
    }

    pub fn recip(self) -> Self {
        let u = self.value;
        let u2 = u * u;
        let outer = Self::new(
            T::one() / u,
            -T::one() / u2,
            lit::<T>(2.0) / (u2 * u),
            lit::<T>(-6.0) / (u2 * u2),
        );
        outer.compose(self)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        Self::new(s, c, -s, -c).compose(self)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        Self::new(c, -s, -c, s).compose(self)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Self::new(e, e, e, e).compose(self)
    }

    pub fn ln(self) -> Self {
        let u = self.value;
        Self::new(u.ln(), T::one() / u, -T::one() / (u * u), lit::<T>(2.0) / (u * u * u)).compose(self)
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        let s = T::one() - t * t;
        let two = lit::<T>(2.0);
        Self::new(t, s, -two * t * s, -two * s * (T::one() - lit::<T>(3.0) * t * t)).compose(self)
    }
}

impl<T: Real> Add for Jet3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
    }
}

impl<T: Real> Sub for Jet3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
    }
}

impl<T: Real> Neg for Jet3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Jet3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let three = lit::<T>(3.0);
        let two = lit::<T>(2.0);
        Self::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + two * self.d1 * o.d1 + self.value * o.d2,
            self.d3 * o.value + three * (self.d2 * o.d1 + self.d1 * o.d2) + self.value * o.d3,
        )
    }
}

/// Value and partials through order two of a function of `(a, b)`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BiJet<T> {
    pub value: T,
    pub da: T,
    pub db: T,
    pub daa: T,
    pub dab: T,
    pub dbb: T,
}

impl<T: Real> BiJet<T> {
    /// Tensor product of a jet in `a` with a jet in `b`.
    pub fn product(a: Jet3<T>, b: Jet3<T>) -> Self {
        Self {
            value: a.value * b.value,
            da: a.d1 * b.value,
            db: a.value * b.d1,
            daa: a.d2 * b.value,
            dab: a.d1 * b.d1,
            dbb: a.value * b.d2,
        }
    }
}

impl<T: Real> Add for BiJet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            value: self.value + o.value,
            da: self.da + o.da,
            db: self.db + o.db,
            daa: self.daa + o.daa,
            dab: self.dab + o.dab,
            dbb: self.dbb + o.dbb,
        }
    }
}

/// Analytic primitive or combinator. Trig, exponential, logarithmic and
/// hyperbolic primitives are `a * f(b x + c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Default"))]
pub enum Expr<T> {
    Const { value: T },
    /// `sum coeffs[i] * (x - center)^i`
    Poly { coeffs: Vec<T>, #[serde(default)] center: T },
    Cos { a: T, b: T, #[serde(default)] c: T },
    Sin { a: T, b: T, #[serde(default)] c: T },
    Exp { a: T, b: T, #[serde(default)] c: T },
    Ln { a: T, b: T, #[serde(default)] c: T },
    Tanh { a: T, b: T, #[serde(default)] c: T },
    Scaled { weight: T, expr: Box<Expr<T>> },
    Sum { terms: Vec<Expr<T>> },
    Product { factors: Vec<Expr<T>> },
    /// `outer(inner(x))`
    Compose { outer: Box<Expr<T>>, inner: Box<Expr<T>> },
    Recip { expr: Box<Expr<T>> },
    /// `offset + integral from lower to x of integrand`
    Integral { integrand: Box<Expr<T>>, lower: T, #[serde(default)] offset: T },
}

impl<T: Real> Expr<T> {
    pub fn constant(value: T) -> Self {
        Expr::Const { value }
    }

    pub fn poly(coeffs: Vec<T>) -> Self {
        Expr::Poly { coeffs, center: T::zero() }
    }

    pub fn scaled(weight: T, e: Expr<T>) -> Self {
        Expr::Scaled { weight, expr: Box::new(e) }
    }

    pub fn compose(outer: Expr<T>, inner: Expr<T>) -> Self {
        Expr::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    /// Jet of the expression at `x`.
    pub fn eval(&self, x: T) -> Jet3<T> {
        self.jet(Jet3::variable(x))
    }

    /// Jet of `self ∘ x` where `x` is an arbitrary input jet.
    pub fn jet(&self, x: Jet3<T>) -> Jet3<T> {
        match self {
            Expr::Const { value } => Jet3::constant(*value),
            Expr::Poly { coeffs, center } => poly_outer(coeffs, x.value - *center).compose(x),
            Expr::Cos { a, b, c } => affine(x, *b, *c).cos().scale(*a),
            Expr::Sin { a, b, c } => affine(x, *b, *c).sin().scale(*a),
            Expr::Exp { a, b, c } => affine(x, *b, *c).exp().scale(*a),
            Expr::Ln { a, b, c } => affine(x, *b, *c).ln().scale(*a),
            Expr::Tanh { a, b, c } => affine(x, *b, *c).tanh().scale(*a),
            Expr::Scaled { weight, expr } => expr.jet(x).scale(*weight),
            Expr::Sum { terms } => terms.iter().fold(Jet3::constant(T::zero()), |acc, t| acc + t.jet(x)),
            Expr::Product { factors } => {
                factors.iter().fold(Jet3::constant(T::one()), |acc, t| acc * t.jet(x))
            }
            Expr::Compose { outer, inner } => outer.jet(inner.jet(x)),
            Expr::Recip { expr } => expr.jet(x).recip(),
            Expr::Integral { integrand, lower, offset } => {
                let d = integrand.eval(x.value);
                let value = *offset + integrate(integrand, *lower, x.value);
                Jet3::new(value, d.value, d.d1, d.d2).compose(x)
            }
        }
    }
}

fn affine<T: Real>(x: Jet3<T>, b: T, c: T) -> Jet3<T> {
    let mut j = x.scale(b);
    j.value = j.value + c;
    j
}

fn poly_outer<T: Real>(coeffs: &[T], u: T) -> Jet3<T> {
    let mut out = [T::zero(); 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for i in (k..coeffs.len()).rev() {
            let mut fall = T::one();
            for t in 0..k {
                fall = fall * lit::<T>((i - t) as f64);
            }
            acc = acc * u + coeffs[i] * fall;
        }
        *slot = acc;
    }
    Jet3::new(out[0], out[1], out[2], out[3])
}

#[allow(clippy::excessive_precision)]
const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real>(e: &Expr<T>, a: T, b: T) -> (T, T) {
    let half = (b - a) * lit::<T>(0.5);
    let mid = (a + b) * lit::<T>(0.5);
    let fc = e.eval(mid).value;
    let mut kron = fc * lit::<T>(GK_WK[7]);
    let mut gauss = fc * lit::<T>(GK_WG[3]);
    for i in 0..7 {
        let dx = half * lit::<T>(GK_X[i]);
        let s = e.eval(mid - dx).value + e.eval(mid + dx).value;
        kron = kron + s * lit::<T>(GK_WK[i]);
        if i % 2 == 1 {
            gauss = gauss + s * lit::<T>(GK_WG[i / 2]);
        }
    }
    (kron * half, (kron - gauss).abs() * half)
}

fn integrate<T: Real>(e: &Expr<T>, a: T, b: T) -> T {
    if a == b {
        return T::zero();
    }
    let tol = T::epsilon() * lit::<T>(64.0);
    adapt(e, a, b, tol, 0)
}

fn adapt<T: Real>(e: &Expr<T>, a: T, b: T, tol: T, depth: u32) -> T {
    let (v, err) = gk15(e, a, b);
    if depth >= 40 || !v.is_finite() || err <= tol * (T::one() + v.abs()) {
        return v;
    }
    let m = (a + b) * lit::<T>(0.5);
    adapt(e, a, m, tol, depth + 1) + adapt(e, m, b, tol, depth + 1)
}

/// One analytic piece of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Default"))]
pub struct Piece<T> {
    pub start: T,
    pub end: T,
    pub expr: Expr<T>,
}

/// A breakpoint whose jets disagree at some order `<= 3`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kink<T> {
    pub location: T,
    pub order: u8,
}

/// Which neighbouring piece to evaluate at a breakpoint.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Serialized form: pieces plus optional declared continuity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Default"))]
pub struct CurveSpec<T> {
    pub pieces: Vec<Piece<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuity: Option<Vec<u8>>,
}

/// Piecewise analytic function on a closed interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveSpec<T>", into = "CurveSpec<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Jet3Curve<T: Real> {
    pieces: Vec<Piece<T>>,
    continuity: Vec<u8>,
}

impl<T: Real> TryFrom<CurveSpec<T>> for Jet3Curve<T> {
    type Error = CurveError;
    fn try_from(spec: CurveSpec<T>) -> Result<Self, CurveError> {
        match spec.continuity {
            Some(c) => Jet3Curve::with_continuity(spec.pieces, c),
            None => Jet3Curve::from_pieces(spec.pieces),
        }
    }
}

impl<T: Real> From<Jet3Curve<T>> for CurveSpec<T> {
    fn from(c: Jet3Curve<T>) -> Self {
        CurveSpec { pieces: c.pieces, continuity: Some(c.continuity) }
    }
}

impl<T: Real> Jet3Curve<T> {
    /// Single analytic piece on `[lo, hi]`.
    pub fn single(lo: T, hi: T, expr: Expr<T>) -> Result<Self, CurveError> {
        Self::from_pieces(vec![Piece { start: lo, end: hi, expr }])
    }

    pub fn constant(lo: T, hi: T, value: T) -> Result<Self, CurveError> {
        Self::single(lo, hi, Expr::Const { value })
    }

    /// Builds a curve and infers the continuity order at every breakpoint.
    pub fn from_pieces(pieces: Vec<Piece<T>>) -> Result<Self, CurveError> {
        check_layout(&pieces)?;
        let continuity = (1..pieces.len()).map(|i| measured_order(&pieces, i)).collect();
        Ok(Self { pieces, continuity })
    }

    /// Builds a curve with declared continuity; each declaration must not
    /// exceed the measured agreement of the adjacent jets.
    pub fn with_continuity(pieces: Vec<Piece<T>>, continuity: Vec<u8>) -> Result<Self, CurveError> {
        check_layout(&pieces)?;
        if continuity.len() + 1 != pieces.len() {
            return Err(CurveError::ContinuityLength {
                expected: pieces.len() - 1,
                got: continuity.len(),
            });
        }
        for (i, &declared) in continuity.iter().enumerate() {
            let measured = measured_order(&pieces, i + 1);
            if declared.min(SMOOTH) > measured {
                return Err(CurveError::Continuity {
                    at: f(pieces[i].end),
                    declared,
                    order: measured,
                });
            }
        }
        let continuity = continuity.into_iter().map(|c| c.min(SMOOTH)).collect();
        Ok(Self { pieces, continuity })
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    pub fn continuity(&self) -> &[u8] {
        &self.continuity
    }

    pub fn domain(&self) -> (T, T) {
        (self.pieces[0].start, self.pieces[self.pieces.len() - 1].end)
    }

    /// Interior breakpoints with their continuity orders.
    pub fn breakpoints(&self) -> Vec<Kink<T>> {
        self.continuity
            .iter()
            .enumerate()
            .map(|(i, &order)| Kink { location: self.pieces[i].end, order })
            .collect()
    }

    /// Breakpoints where some jet entry jumps.
    pub fn kinks(&self) -> Vec<Kink<T>> {
        self.breakpoints().into_iter().filter(|k| k.order < SMOOTH).collect()
    }

    /// Continuity order at `x` (`SMOOTH` away from breakpoints).
    pub fn order_at(&self, x: T) -> u8 {
        self.breakpoints()
            .into_iter()
            .find(|k| k.location == x)
            .map(|k| k.order)
            .unwrap_or(SMOOTH)
    }

    fn out_of_domain(&self, x: T) -> CurveError {
        let (lo, hi) = self.domain();
        CurveError::OutOfDomain { x: f(x), lo: f(lo), hi: f(hi) }
    }

    fn checked(&self, i: usize, x: T) -> Result<Jet3<T>, CurveError> {
        let j = self.pieces[i].expr.eval(x);
        if j.is_finite() {
            Ok(j)
        } else {
            Err(CurveError::NonFinite { x: f(x) })
        }
    }

    /// Full jet at `x`; fails at kinks.
    pub fn eval_jet(&self, x: T) -> Result<Jet3<T>, CurveError> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(self.out_of_domain(x));
        }
        for (i, &order) in self.continuity.iter().enumerate() {
            if self.pieces[i].end == x && order < SMOOTH {
                return Err(CurveError::AtKink { x: f(x), order });
            }
        }
        self.eval_side(x, Side::Right)
    }

    pub fn eval_left(&self, x: T) -> Result<Jet3<T>, CurveError> {
        self.eval_side(x, Side::Left)
    }

    pub fn eval_right(&self, x: T) -> Result<Jet3<T>, CurveError> {
        self.eval_side(x, Side::Right)
    }

    /// One-sided jet; at the domain ends the only available side is used.
    pub fn eval_side(&self, x: T, side: Side) -> Result<Jet3<T>, CurveError> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(self.out_of_domain(x));
        }
        let n = self.pieces.len();
        let idx = match side {
            Side::Right => self.pieces.partition_point(|p| p.end <= x).min(n - 1),
            Side::Left => self.pieces.partition_point(|p| p.end < x).min(n - 1),
        };
        self.checked(idx, x)
    }

    /// Value only; at kinks the right-hand piece is used.
    pub fn value(&self, x: T) -> Result<T, CurveError> {
        self.eval_right(x).map(|j| j.value)
    }

    /// Pointwise `(1 - w) * c1 + w * c2` on a shared domain.
    pub fn affine_combine(c1: &Self, c2: &Self, w: T) -> Result<Self, CurveError> {
        let (lo1, hi1) = c1.domain();
        let (lo2, hi2) = c2.domain();
        if lo1 != lo2 || hi1 != hi2 {
            return Err(CurveError::DomainMismatch {
                lo1: f(lo1),
                hi1: f(hi1),
                lo2: f(lo2),
                hi2: f(hi2),
            });
        }
        if w == T::zero() {
            return Ok(c1.clone());
        }
        if w == T::one() {
            return Ok(c2.clone());
        }
        let mut cuts: Vec<T> = c1
            .breakpoints()
            .iter()
            .chain(c2.breakpoints().iter())
            .map(|k| k.location)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        cuts.dedup();
        let mut edges = vec![lo1];
        edges.extend(cuts.iter().copied());
        edges.push(hi1);
        let mut pieces = Vec::with_capacity(edges.len() - 1);
        for win in edges.windows(2) {
            let mid = (win[0] + win[1]) * lit::<T>(0.5);
            let e1 = c1.piece_at(mid).expr.clone();
            let e2 = c2.piece_at(mid).expr.clone();
            pieces.push(Piece {
                start: win[0],
                end: win[1],
                expr: Expr::Sum {
                    terms: vec![Expr::scaled(T::one() - w, e1), Expr::scaled(w, e2)],
                },
            });
        }
        let continuity = cuts.iter().map(|&x| c1.order_at(x).min(c2.order_at(x))).collect();
        Ok(Self { pieces, continuity })
    }

    fn piece_at(&self, x: T) -> &Piece<T> {
        let i = self.pieces.partition_point(|p| p.end <= x).min(self.pieces.len() - 1);
        &self.pieces[i]
    }

    /// Replaces `[lo, hi]` by `expr`; pieces outside the window keep their
    /// expressions untouched and continuity at the window edges is measured.
    pub fn splice(&self, lo: T, hi: T, expr: Expr<T>) -> Result<Self, CurveError> {
        let (dlo, dhi) = self.domain();
        if !(lo < hi && lo >= dlo && hi <= dhi) {
            return Err(CurveError::Window { lo: f(lo), hi: f(hi) });
        }
        let mut pieces = Vec::new();
        let mut continuity = Vec::new();
        let mut inserted = false;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.end <= lo {
                if i > 0 {
                    continuity.push(self.continuity[i - 1]);
                }
                pieces.push(p.clone());
                continue;
            }
            if p.start < lo {
                if i > 0 {
                    continuity.push(self.continuity[i - 1]);
                }
                pieces.push(Piece { start: p.start, end: lo, expr: p.expr.clone() });
            }
            if !inserted {
                if !pieces.is_empty() {
                    continuity.push(EDGE);
                }
                pieces.push(Piece { start: lo, end: hi, expr: expr.clone() });
                inserted = true;
            }
            if p.end > hi {
                let start = if p.start > hi { p.start } else { hi };
                if start == hi {
                    continuity.push(EDGE);
                } else {
                    continuity.push(self.continuity[i - 1]);
                }
                pieces.push(Piece { start, end: p.end, expr: p.expr.clone() });
            }
        }
        for (i, order) in continuity.iter_mut().enumerate() {
            if *order == EDGE {
                *order = measured_order(&pieces, i + 1);
            }
        }
        Ok(Self { pieces, continuity })
    }

    /// Concatenates two curves sharing an endpoint; continuity at the join is
    /// measured.
    pub fn join(left: &Self, right: &Self) -> Result<Self, CurveError> {
        let (_, lhi) = left.domain();
        let (rlo, _) = right.domain();
        if lhi != rlo {
            return Err(CurveError::Gap { at: f(lhi) });
        }
        let mut pieces = left.pieces.clone();
        pieces.extend(right.pieces.iter().cloned());
        let mut continuity = left.continuity.clone();
        continuity.push(measured_order(&pieces, left.pieces.len()));
        continuity.extend(right.continuity.iter().copied());
        Ok(Self { pieces, continuity })
    }
}

fn check_layout<T: Real>(pieces: &[Piece<T>]) -> Result<(), CurveError> {
    if pieces.is_empty() {
        return Err(CurveError::Empty);
    }
    for p in pieces {
        if !(p.start < p.end) || !p.start.is_finite() || !p.end.is_finite() {
            return Err(CurveError::BadPiece { start: f(p.start), end: f(p.end) });
        }
    }
    for w in pieces.windows(2) {
        if w[0].end != w[1].start {
            return Err(CurveError::Gap { at: f(w[0].end) });
        }
    }
    Ok(())
}

/// Lowest order at which the jets of pieces `i - 1` and `i` disagree.
fn measured_order<T: Real>(pieces: &[Piece<T>], i: usize) -> u8 {
    let x = pieces[i].start;
    let l = pieces[i - 1].expr.eval(x);
    let r = pieces[i].expr.eval(x);
    let tol = lit::<T>(JOIN_TOL);
    for k in 0..4 {
        if !close(l.get(k), r.get(k), tol) {
            return k as u8;
        }
    }
    SMOOTH
}
