//! Warped-product metrics with positive Ricci curvature: jet-carrying curves,
//! Hermite kink smoothing, curvature kernels, corner smoothing and grid
//! certificates.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod constructions;
pub mod corner;
pub mod jetcurve;
pub mod scalar;
pub mod spline;
pub mod verify;
pub mod warped;

pub use jetcurve::{BiJet, CurveError, Expr, Jet3, Jet3Curve, Kink, Piece, Side, SMOOTH};
pub use scalar::Real;
pub use spline::{SplineError, SplineSegment};
pub use verify::{Axis, GridSpec, PositivityCertificate, VerifyError};
pub use warped::{CurvatureSample, DoublyWarpedMetric, EndKind, WarpedError};

pub type Curve = Jet3Curve<f64>;
pub type Jet = Jet3<f64>;
pub type Metric = DoublyWarpedMetric<f64>;
pub type Sample = CurvatureSample<f64>;
pub type Segment = SplineSegment<f64>;
