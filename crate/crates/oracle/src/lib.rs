//! Reference curvature of a metric given only as a matrix-valued function of
//! coordinates. Derivatives of the metric come from fourth-order central
//! stencils; Christoffel symbols, the Riemann tensor and the Ricci tensor are
//! then assembled by the coordinate formulas. Nothing here knows about warped
//! products except the helpers that write such metrics in coordinates.

use nalgebra::{DMatrix, SymmetricEigen};

/// Default stencil step; truncation `O(h⁴)` and rounding `O(ε / h²)` balance
/// near `1e-3` for metrics with entries of order one.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Weights of the fourth-order first-derivative stencil at offsets
/// `-2h, -h, h, 2h`, before division by `h`.
const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
/// Fourth-order second-derivative stencil at offsets `-2h..2h`, before
/// division by `h²`.
const D2: [(f64, f64); 5] =
    [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

/// Metric tensor and its curvature at one point.
#[derive(Clone, Debug)]
pub struct FdCurvature {
    pub dim: usize,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `R_{abcd}` in row-major order, with `R_{abab} > 0` on round spheres.
    riemann: Vec<f64>,
}

impl FdCurvature {
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    pub fn riemann(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riemann[self.idx(a, b, c, d)]
    }

    /// Sectional curvature of the plane of two coordinate directions.
    pub fn sectional(&self, a: usize, b: usize) -> f64 {
        let area = self.g[(a, a)] * self.g[(b, b)] - self.g[(a, b)] * self.g[(a, b)];
        self.riemann(a, b, a, b) / area
    }

    /// `Ric_{bd} = g^{ac} R_{abcd}`
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |b, d| {
            let mut acc = 0.0;
            for a in 0..n {
                for c in 0..n {
                    acc += self.g_inv[(a, c)] * self.riemann(a, b, c, d);
                }
            }
            acc
        })
    }

    /// `Ric(∂a, ∂a) / g(∂a, ∂a)`
    pub fn ricci_unit(&self, a: usize) -> f64 {
        self.ricci()[(a, a)] / self.g[(a, a)]
    }

    /// Eigenvalues of the Ricci tensor relative to the metric, ascending.
    pub fn ricci_eigenvalues(&self) -> Vec<f64> {
        let chol = self.g.clone().cholesky().expect("metric is positive definite");
        let l_inv = chol.l().try_inverse().expect("cholesky factor is invertible");
        let normalized = &l_inv * self.ricci() * l_inv.transpose();
        let sym = (&normalized + normalized.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Curvature of `metric` at `x` with stencil step `step`.
pub fn fd_curvature(metric: impl Fn(&[f64]) -> DMatrix<f64>, x: &[f64], step: f64) -> FdCurvature {
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in shifts {
            y[i] += d * step;
        }
        metric(&y)
    };
    let g = metric(x);
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|i| D1.iter().fold(DMatrix::zeros(n, n), |acc, &(o, w)| acc + at(&[(i, o)]) * w) / step)
        .collect();
    let mut ddg = vec![DMatrix::<f64>::zeros(n, n); n * n];
    for i in 0..n {
        ddg[i * n + i] = D2.iter().fold(DMatrix::zeros(n, n), |acc, &(o, w)| acc + at(&[(i, o)]) * w) / (step * step);
        for j in 0..i {
            let mut acc = DMatrix::zeros(n, n);
            for &(oi, wi) in &D1 {
                for &(oj, wj) in &D1 {
                    acc += at(&[(i, oi), (j, oj)]) * (wi * wj);
                }
            }
            acc /= step * step;
            ddg[j * n + i] = acc.clone();
            ddg[i * n + j] = acc;
        }
    }
    let g_inv = g.clone().try_inverse().expect("metric is invertible");
    // First-kind symbols [bc, a] = ½(∂b g_ac + ∂c g_ab - ∂a g_bc), then raised.
    let first = |a: usize, b: usize, c: usize| 0.5 * (dg[b][(a, c)] + dg[c][(a, b)] - dg[a][(b, c)]);
    let mut gamma = vec![0.0; n * n * n];
    for p in 0..n {
        for b in 0..n {
            for c in 0..n {
                gamma[(p * n + b) * n + c] = (0..n).map(|a| g_inv[(p, a)] * first(a, b, c)).sum();
            }
        }
    }
    let gam = |p: usize, b: usize, c: usize| gamma[(p * n + b) * n + c];
    let d2 = |i: usize, j: usize, a: usize, b: usize| ddg[i * n + j][(a, b)];
    let mut riemann = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let second = 0.5 * (d2(b, c, a, d) + d2(a, d, b, c) - d2(b, d, a, c) - d2(a, c, b, d));
                    let mut quad = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            quad += g[(p, q)] * (gam(p, b, c) * gam(q, a, d) - gam(p, b, d) * gam(q, a, c));
                        }
                    }
                    riemann[((a * n + b) * n + c) * n + d] = second + quad;
                }
            }
        }
    }
    FdCurvature { dim: n, g, g_inv, riemann }
}

/// Diagonal of the round metric on `S^d` in hyperspherical angles
/// `(x_1, …, x_d)`: `1, sin² x_1, sin² x_1 sin² x_2, …`.
pub fn round_sphere_diagonal(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut w = 1.0;
    for &a in angles {
        out.push(w);
        w *= a.sin().powi(2);
    }
    out
}

/// `ds² + k(s)² g_{S^m} + h(s)² g_{S^{n-1}}` in coordinates
/// `(s, θ_1..θ_m, φ_1..φ_{n-1})`.
pub fn doubly_warped(
    k: impl Fn(f64) -> f64,
    h: impl Fn(f64) -> f64,
    m: usize,
    n: usize,
) -> impl Fn(&[f64]) -> DMatrix<f64> {
    move |x: &[f64]| {
        let dim = 1 + m + (n - 1);
        let (kv, hv) = (k(x[0]), h(x[0]));
        let mut diag = vec![1.0];
        diag.extend(round_sphere_diagonal(&x[1..=m]).into_iter().map(|w| kv * kv * w));
        diag.extend(round_sphere_diagonal(&x[1 + m..dim]).into_iter().map(|w| hv * hv * w));
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    }
}

/// `dt² + F(t)² g_{S^n}` in coordinates `(t, x_1..x_n)`.
pub fn singly_warped(f: impl Fn(f64) -> f64, n: usize) -> impl Fn(&[f64]) -> DMatrix<f64> {
    move |x: &[f64]| {
        let fv = f(x[0]);
        let mut diag = vec![1.0];
        diag.extend(round_sphere_diagonal(&x[1..=n]).into_iter().map(|w| fv * fv * w));
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    }
}

/// Generic interior point of the angle chart of `S^d`, away from its poles.
pub fn interior_angles(d: usize) -> Vec<f64> {
    (0..d).map(|i| 0.9 + 0.17 * i as f64).collect()
}
