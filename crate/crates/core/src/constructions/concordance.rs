//! Cylinder metric `dt² + t² ρ(t)² g_{λ(t)}` on `[t0, t0²]` built from a
//! path `g_σ`, `σ ∈ [0, 1]`, of Ricci-positive metrics, and the search for
//! parameters at which explicit lower bounds certify positive Ricci curvature
//! and the boundary conditions.
//!
//! `t0` grows past the range of `f64` long before the bounds are slack, so
//! every quantity is carried in `L = ln t`. With `t1 = t0²`,
//! `λ = 2 - 2 L0 / L` and `ln ρ = ln r1 - ℓ λ` where `ℓ = ln r1 - ln r0`.

use serde::{Deserialize, Serialize};

use super::{invalid, ConditionReport, ConstructionError, MetricPath};
use crate::jetcurve::{Expr, Jet3Curve};
use crate::verify::{bisect_param, grid_min, Axis, GridSpec, PositivityCertificate, VerifyError, DEFAULT_THRESHOLD};

const SAFETY: f64 = 1.1;
const C_FLOOR: f64 = 1e-6;
const END_TOL: f64 = 1e-9;

/// Path of fiber metrics over `σ ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberPath {
    /// `r(σ)² ds_n²`
    Round { n: usize, radius: Jet3Curve<f64> },
    /// Affine path of doubly warped metrics, reparametrized to `[0, 1]`.
    Warped { path: MetricPath },
}

/// Curvature quantities of the slab `dσ² + g_σ` at one point.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabTerms {
    /// Largest `|principal curvature|` of the slice `σ = const`.
    pub second_form: f64,
    /// Bound on the `σ`-derivative of the second fundamental form.
    pub second_form_rate: f64,
    /// `Ric(∂σ, ∂s)`, the only mixed Ricci entry of the slab.
    pub mixed: f64,
}

impl FiberPath {
    pub fn round(n: usize, radius: Jet3Curve<f64>) -> Result<Self, ConstructionError> {
        if n < 2 {
            return Err(invalid("n", format!("fiber sphere dimension {n} < 2")));
        }
        if radius.domain() != (0.0, 1.0) {
            return Err(invalid("radius", "must be defined on [0, 1]"));
        }
        Ok(FiberPath::Round { n, radius })
    }

    /// Fiber dimension.
    pub fn dim(&self) -> usize {
        match self {
            FiberPath::Round { n, .. } => *n,
            FiberPath::Warped { path } => {
                let (m, n) = path.dims();
                m + n
            }
        }
    }

    fn lambda(path: &MetricPath, sigma: f64) -> (f64, f64) {
        let (lo, hi) = path.lambda;
        let span = hi - lo;
        let l = if sigma >= 1.0 { hi } else { lo + sigma * span };
        (l, span)
    }

    /// `(σ)` grid for round paths, `(σ, s)` grid for warped ones; `interior`
    /// keeps `s` off the closed ends by `1e-4` of the interval.
    pub fn grid(&self, sigma_count: usize, s_count: usize, depth: u32, interior: bool) -> GridSpec {
        match self {
            FiberPath::Round { .. } => GridSpec::line(0.0, 1.0, sigma_count, depth),
            FiberPath::Warped { path } => {
                let (lo, hi) = path.domain();
                let pad = if interior { 1e-4 * (hi - lo) } else { 0.0 };
                GridSpec::new(
                    vec![Axis::new(0.0, 1.0, sigma_count), Axis::new(lo + pad, hi - pad, s_count)],
                    depth,
                    2,
                )
            }
        }
    }

    /// Minimum Ricci curvature of the fiber metric at a grid point.
    pub fn min_ricci_at(&self, p: &[f64]) -> Result<f64, ConstructionError> {
        match self {
            FiberPath::Round { n, radius } => {
                let r = radius.value(p[0])?;
                Ok((*n as f64 - 1.0) / (r * r))
            }
            FiberPath::Warped { path } => {
                let (l, _) = Self::lambda(path, p[0]);
                Ok(path.sectional(l, p[1])?.min_ricci())
            }
        }
    }

    /// Slab terms at `(σ)` or `(σ, s)`.
    pub fn slab_terms(&self, p: &[f64]) -> Result<SlabTerms, ConstructionError> {
        match self {
            FiberPath::Round { radius, .. } => {
                let j = radius.eval_right(p[0])?;
                let a = j.d1 / j.value;
                Ok(SlabTerms { second_form: a, second_form_rate: j.d2 / j.value - a * a, mixed: 0.0 })
            }
            FiberPath::Warped { path } => {
                let (l, span) = Self::lambda(path, p[0]);
                let j = path.jets(l, p[1])?;
                let (m, n) = path.dims();
                let (m, n1) = (m as f64, n as f64 - 1.0);
                let (k, kd) = (j.k, j.k_rate.scale(span));
                let (h, hd) = (j.h, j.h_rate.scale(span));
                // Principal curvatures of the slice along the `k` and `h` factors.
                let a = kd.value / k.value;
                let b = hd.value / h.value;
                let da = (kd.d1 * k.value - kd.value * k.d1) / (k.value * k.value);
                let db = (hd.d1 * h.value - hd.value * h.d1) / (h.value * h.value);
                let mixed = -m * a * k.d1 / k.value - n1 * b * h.d1 / h.value - m * da - n1 * db;
                // The path is affine in σ, so the second σ-derivatives vanish.
                let rate = (a * a).max(b * b);
                Ok(SlabTerms { second_form: a.abs().max(b.abs()), second_form_rate: rate, mixed })
            }
        }
    }
}

/// Suprema entering the constant `C`, and `C` itself.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBound {
    pub second_form: f64,
    pub second_form_rate: f64,
    pub mixed: f64,
    /// `1.1 ×` the largest supremum, floored at `1e-6`.
    pub c: f64,
}

/// Grid estimate of the bound on the slab `dσ² + g_σ`.
pub fn estimate_c(path: &FiberPath, grid: &GridSpec) -> Result<CurvatureBound, ConstructionError> {
    let sup = |id: &str, pick: fn(&SlabTerms) -> f64| -> Result<f64, VerifyError> {
        let cert = grid_min(id, |p: &[f64]| path.slab_terms(p).map(|t| -pick(&t).abs()), grid, f64::NEG_INFINITY)?;
        Ok(-cert.min_margin)
    };
    let second_form = sup("sup_second_form", |t| t.second_form)?;
    let second_form_rate = sup("sup_second_form_rate", |t| t.second_form_rate)?;
    let mixed = sup("sup_mixed_ricci", |t| t.mixed)?;
    let c = (SAFETY * second_form.max(second_form_rate).max(mixed)).max(C_FLOOR);
    Ok(CurvatureBound { second_form, second_form_rate, mixed, c })
}

/// Parameters of the cylinder metric with `t1 = t0²`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceParams {
    pub fiber_dim: usize,
    pub nu: f64,
    /// Lower bound of the fiber Ricci curvature along the path.
    pub ric_min: f64,
    pub c: f64,
    pub ln_t0: f64,
    pub ln_t1: f64,
    pub r0: f64,
    pub r1: f64,
    /// `ln r1 - ln r0`
    pub ell: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `ln R` with `R = t0 r0 / r1` the scale of the far end.
    pub ln_radius: f64,
    /// Angle below which the time direction dominates the mixed term.
    pub theta0: f64,
}

impl ConcordanceParams {
    pub fn new(
        fiber_dim: usize,
        nu: f64,
        ric_min: f64,
        c: f64,
        ln_t0: f64,
        r0: f64,
        r1: f64,
    ) -> Result<Self, ConstructionError> {
        if !(ln_t0 > 0.0) {
            return Err(invalid("t0", "must exceed 1"));
        }
        if !(0.0 < r0 && r0 < r1 && r1 < 1.0) {
            return Err(invalid("r", format!("need 0 < r0 < r1 < 1, got {r0}, {r1}")));
        }
        let ln_t1 = 2.0 * ln_t0;
        let ell = r1.ln() - r0.ln();
        let alpha = 1.0 / ln_t0 - 1.0 / ln_t1;
        let beta = alpha / ell;
        let n = fiber_dim as f64;
        let coefficient = |th: f64| {
            let (s, co) = th.sin_cos();
            co * co * n * (ell - c) - 2.0 * s * co * c / r0 - (ell - c)
        };
        let theta0 = if ell > c {
            bisect_param(|th| coefficient(th) > 0.0, 0.0, std::f64::consts::FRAC_PI_2, 1e-12).unwrap_or(0.0)
        } else {
            0.0
        };
        Ok(Self {
            fiber_dim,
            nu,
            ric_min,
            c,
            ln_t0,
            ln_t1,
            r0,
            r1,
            ell,
            alpha,
            beta,
            ln_radius: ln_t0 + r0.ln() - r1.ln(),
            theta0,
        })
    }

    /// `t0`, infinite once it leaves the range of `f64`.
    pub fn t0(&self) -> f64 {
        self.ln_t0.exp()
    }

    pub fn lambda_at(&self, ln_t: f64) -> f64 {
        (1.0 / self.ln_t0 - 1.0 / ln_t) / self.alpha
    }

    pub fn ln_rho_at(&self, ln_t: f64) -> f64 {
        self.r1.ln() - (1.0 / self.ln_t0 - 1.0 / ln_t) / self.beta
    }

    fn a_coef(&self) -> f64 {
        (self.ell + self.c) / self.alpha
    }

    fn b_coef(&self) -> f64 {
        (self.ell - self.c) / self.alpha
    }

    /// Lower bound of `Ric(∂t, ∂t)` times `t² L² / (2 L0)`.
    pub fn time_margin(&self, ln_t: f64) -> f64 {
        let (n, l, l0) = (self.fiber_dim as f64, ln_t, self.ln_t0);
        let s = self.ell + self.c;
        n * (self.ell - self.c) * (1.0 - 2.0 / l) - 8.0 * n * s * s * l0 / (l * l)
    }

    /// Lower bound of `Ric(Y, Y)` times `t²`.
    pub fn space_margin(&self, ln_t: f64) -> f64 {
        let (n, l) = (self.fiber_dim as f64, ln_t);
        let rho2 = (2.0 * self.ln_rho_at(l)).exp();
        let (a, b) = (self.a_coef(), self.b_coef());
        let l2 = l * l;
        let top = 1.0 + a / l2;
        self.ric_min / rho2 - (n - 1.0) * top * top + b * (l - 2.0) / (l2 * l) - 4.0 * a * a / (l2 * l2)
    }

    /// Upper bound of `|Ric(∂t, Y)|` in the units of [`Self::time_margin`].
    pub fn mixed_bound(&self, ln_t: f64) -> f64 {
        self.c / self.ln_rho_at(ln_t).exp()
    }

    /// Smallest eigenvalue of the bounding quadratic form in `(∂t, Y)`, in
    /// the units of [`Self::time_margin`].
    pub fn split_margin(&self, ln_t: f64) -> f64 {
        let t = self.time_margin(ln_t);
        let s = self.space_margin(ln_t) * ln_t * ln_t / (2.0 * self.ln_t0);
        let m = self.mixed_bound(ln_t);
        0.5 * (t + s) - (0.25 * (t - s) * (t - s) + m * m).sqrt()
    }

    /// Lower bound of the principal curvatures at the near end, after
    /// scaling by `1 / (t0 r1)²`.
    pub fn near_end_curvature(&self) -> f64 {
        -self.r1 * (1.0 + 2.0 * (self.ell + self.c) / self.ln_t0)
    }

    /// Lower bound of the principal curvatures at the far end, after scaling,
    /// divided by `r1 / t0`.
    pub fn far_end_curvature_scaled(&self) -> f64 {
        1.0 - (self.ell + self.c) / (2.0 * self.ln_t0)
    }

    /// `ln` of the ratio between the induced metric at each end and `g_0`,
    /// respectively `R² g_1`, after scaling; both vanish.
    pub fn end_scale_residuals(&self) -> (f64, f64) {
        let scale = self.ln_t0 + self.r1.ln();
        let near = self.ln_t0 + self.ln_rho_at(self.ln_t0) - scale;
        let far = self.ln_t1 + self.ln_rho_at(self.ln_t1) - scale - self.ln_radius;
        (near, far)
    }

    pub fn boundary_report(&self) -> ConditionReport {
        let mut rep = ConditionReport::default();
        let (near, far) = self.end_scale_residuals();
        rep.push("near_end_isometric", END_TOL - near.abs());
        rep.push("near_end_curvature_above_minus_nu", self.near_end_curvature() + self.nu);
        rep.push("far_end_isometric_to_scaled", END_TOL - far.abs());
        rep.push("far_end_convex", self.far_end_curvature_scaled());
        rep
    }
}

/// `(ρ, λ)` as curves on `[t0, t1]`; requires `t1` to be finite.
pub fn concordance_schedule(p: &ConcordanceParams) -> Result<(Jet3Curve<f64>, Jet3Curve<f64>), ConstructionError> {
    let (t0, t1) = (p.ln_t0.exp(), p.ln_t1.exp());
    if !t1.is_finite() {
        return Err(invalid("t0", format!("t1 = exp({}) is not representable", p.ln_t1)));
    }
    let inv_ln = Expr::Recip { expr: Box::new(Expr::Ln { a: 1.0, b: 1.0, c: 0.0 }) };
    let lambda = Expr::Sum {
        terms: vec![Expr::constant(1.0 / (p.alpha * p.ln_t0)), Expr::scaled(-1.0 / p.alpha, inv_ln.clone())],
    };
    let ln_rho = Expr::Sum {
        terms: vec![Expr::constant(p.r1.ln() - 1.0 / (p.beta * p.ln_t0)), Expr::scaled(1.0 / p.beta, inv_ln)],
    };
    let rho = Expr::compose(Expr::Exp { a: 1.0, b: 1.0, c: 0.0 }, ln_rho);
    Ok((Jet3Curve::single(t0, t1, rho)?, Jet3Curve::single(t0, t1, lambda)?))
}

/// `1 / (t ln² t)`
pub fn gamma(t: f64) -> f64 {
    let l = t.ln();
    1.0 / (t * l * l)
}

/// Grid sizes and caps of the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    pub sigma_count: usize,
    pub s_count: usize,
    pub log_count: usize,
    pub depth: u32,
    pub max_doublings: usize,
    pub threshold: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { sigma_count: 65, s_count: 129, log_count: 513, depth: 3, max_doublings: 400, threshold: DEFAULT_THRESHOLD }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceOutcome {
    pub params: ConcordanceParams,
    pub bound: CurvatureBound,
    pub fiber_ricci: PositivityCertificate,
    pub time: PositivityCertificate,
    pub space: PositivityCertificate,
    pub split: PositivityCertificate,
    pub boundary: ConditionReport,
    pub doublings: usize,
}

/// Chooses `r1`, `r0` and then doubles `t0` until every bound certifies.
pub fn concordance_search(path: &FiberPath, nu: f64, opts: &SearchOptions) -> Result<ConcordanceOutcome, ConstructionError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid("nu", format!("need 0 < 2 r1 < ν < 1, got ν = {nu}")));
    }
    let fiber_ricci = grid_min(
        "fiber_min_ricci",
        |p: &[f64]| path.min_ricci_at(p),
        &path.grid(opts.sigma_count, opts.s_count, opts.depth, false),
        opts.threshold,
    )?;
    if !fiber_ricci.passed {
        return Err(ConstructionError::Conditions {
            what: "fiber path",
            failed: vec!["fiber_min_ricci".into()],
            report: ConditionReport { conditions: vec![] },
        });
    }
    let ric_min = fiber_ricci.min_margin;
    let bound = estimate_c(path, &path.grid(opts.sigma_count, opts.s_count, opts.depth, true))?;
    let n = path.dim() as f64;
    let r1 = 0.9 * (0.5 * nu).min((0.5 * ric_min).sqrt()).min((ric_min / (n - 1.0)).sqrt());
    let ell = bound.c + (2.0 * bound.c).max(1.0);
    let r0 = r1 * (-ell).exp();

    let mut last = (String::new(), f64::NAN);
    for doubling in 1..=opts.max_doublings {
        let ln_t0 = doubling as f64 * std::f64::consts::LN_2;
        let p = ConcordanceParams::new(path.dim(), nu, ric_min, bound.c, ln_t0, r0, r1)?;
        let boundary = p.boundary_report();
        if !boundary.passed() {
            let worst = boundary.conditions.iter().find(|c| !c.passed).expect("a failing condition");
            last = (worst.id.clone(), worst.margin);
            continue;
        }
        let grid = GridSpec::line(p.ln_t0, p.ln_t1, opts.log_count, opts.depth);
        let certify = |id: &str, f: &(dyn Fn(f64) -> f64 + Sync)| {
            grid_min(id, |x: &[f64]| Ok::<f64, VerifyError>(f(x[0])), &grid, opts.threshold)
        };
        let time = certify("time_ricci", &|l| p.time_margin(l))?;
        let space = certify("space_ricci", &|l| p.space_margin(l))?;
        let split = certify("split_ricci", &|l| p.split_margin(l))?;
        if let Some(bad) = [&time, &space, &split].into_iter().find(|c| !c.passed) {
            last = (bad.quantity_id.clone(), bad.min_margin);
            continue;
        }
        return Ok(ConcordanceOutcome { params: p, bound, fiber_ricci, time, space, split, boundary, doublings: doubling });
    }
    Err(ConstructionError::SearchExhausted { iterations: opts.max_doublings, bound: last.0, margin: last.1 })
}
