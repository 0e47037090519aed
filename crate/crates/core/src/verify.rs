//! Grid certification of positivity margins and monotone parameter bisection.
//!
//! [`grid_min`] scans a tensor grid, then repeatedly refines around the worst
//! 5% of the newest samples. Samples are evaluated in parallel but reduced in
//! a fixed order, so certificates do not depend on the worker count.

use std::collections::HashSet;
use std::fmt::Display;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default strict-positivity threshold for certificates.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("margin evaluation failed at {point:?}: {message}")]
    Evaluation { point: Vec<f64>, message: String },
    #[error("margin is NaN at {point:?}")]
    NanMargin { point: Vec<f64> },
    #[error("predicate agrees at both ends of [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Self { lo, hi, count }
    }

    fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    fn node(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }
}

/// Tensor grid with local refinement parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    pub depth: u32,
    pub factor: u32,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>, depth: u32, factor: u32) -> Self {
        Self { axes, depth, factor }
    }

    pub fn line(lo: f64, hi: f64, count: usize, depth: u32) -> Self {
        Self::new(vec![Axis::new(lo, hi, count)], depth, 2)
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.axes.is_empty() {
            return Err(VerifyError::InvalidGrid("no axes".into()));
        }
        if self.factor < 2 {
            return Err(VerifyError::InvalidGrid(format!("refinement factor {} < 2", self.factor)));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.count < 2 {
                return Err(VerifyError::InvalidGrid(format!("axis {i} has count {} < 2", a.count)));
            }
            if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(VerifyError::InvalidGrid(format!("axis {i} range [{}, {}]", a.lo, a.hi)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub depth: u32,
    pub min_margin: f64,
    pub evaluations: usize,
}

/// Outcome of a grid certification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub quantity_id: String,
    pub grid: GridSpec,
    pub threshold: f64,
    pub min_margin: f64,
    pub argmin: Vec<f64>,
    pub refinement_trace: Vec<TraceEntry>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
struct Sample {
    point: Vec<f64>,
    margin: f64,
}

fn worse(a: &Sample, b: &Sample) -> std::cmp::Ordering {
    a.margin.total_cmp(&b.margin).then_with(|| {
        a.point
            .iter()
            .zip(&b.point)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| x.to_bits()).collect()
}

fn evaluate<F, E>(f: &F, points: Vec<Vec<f64>>) -> Result<Vec<Sample>, VerifyError>
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    E: Display,
{
    points
        .into_par_iter()
        .map(|point| match f(&point) {
            Ok(m) if m.is_nan() => Err(VerifyError::NanMargin { point }),
            Ok(margin) => Ok(Sample { point, margin }),
            Err(e) => Err(VerifyError::Evaluation { point, message: e.to_string() }),
        })
        .collect()
}

fn tensor(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for nodes in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Minimizes `f` over the grid and certifies `min > threshold`.
pub fn grid_min<F, E>(
    quantity_id: &str,
    f: F,
    grid: &GridSpec,
    threshold: f64,
) -> Result<PositivityCertificate, VerifyError>
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    E: Display,
{
    grid.validate()?;
    let coarse: Vec<Vec<f64>> = grid.axes.iter().map(|a| (0..a.count).map(|i| a.node(i)).collect()).collect();
    let points = tensor(&coarse);
    let mut seen: HashSet<Vec<u64>> = points.iter().map(|p| key(p)).collect();
    let mut newest = evaluate(&f, points)?;
    let mut best = newest.iter().min_by(|a, b| worse(a, b)).cloned().expect("non-empty grid");
    let mut trace = vec![TraceEntry { depth: 0, min_margin: best.margin, evaluations: newest.len() }];

    let mut step: Vec<f64> = grid.axes.iter().map(Axis::spacing).collect();
    let factor = grid.factor as i64;
    for depth in 1..=grid.depth {
        for h in step.iter_mut() {
            *h /= grid.factor as f64;
        }
        newest.sort_by(worse);
        let seeds = ((newest.len() as f64 * 0.05).ceil() as usize).max(1).min(newest.len());
        let offsets: Vec<Vec<f64>> = step
            .iter()
            .map(|&h| (-factor..=factor).map(|j| j as f64 * h).collect())
            .collect();
        let local = tensor(&offsets);
        let mut fresh = Vec::new();
        for s in &newest[..seeds] {
            for off in &local {
                let p: Vec<f64> = s
                    .point
                    .iter()
                    .zip(off)
                    .zip(&grid.axes)
                    .map(|((x, d), a)| (x + d).clamp(a.lo, a.hi))
                    .collect();
                if seen.insert(key(&p)) {
                    fresh.push(p);
                }
            }
        }
        newest = evaluate(&f, fresh)?;
        if let Some(m) = newest.iter().min_by(|a, b| worse(a, b)) {
            if worse(m, &best).is_lt() {
                best = m.clone();
            }
        }
        trace.push(TraceEntry { depth, min_margin: best.margin, evaluations: newest.len() });
        if newest.is_empty() {
            break;
        }
    }

    Ok(PositivityCertificate {
        quantity_id: quantity_id.to_string(),
        grid: grid.clone(),
        threshold,
        min_margin: best.margin,
        argmin: best.point,
        refinement_trace: trace,
        passed: best.margin > threshold,
    })
}

/// Locates the switch of a monotone predicate on `[lo, hi]` to within `tol`
/// and returns the endpoint of the final bracket on the passing side.
pub fn bisect_param<P>(mut pred: P, lo: f64, hi: f64, tol: f64) -> Result<f64, VerifyError>
where
    P: FnMut(f64) -> bool,
{
    let at_lo = pred(lo);
    let at_hi = pred(hi);
    if at_lo == at_hi {
        return Err(VerifyError::NoCrossing { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    while (b - a).abs() > tol {
        let mid = 0.5 * (a + b);
        if pred(mid) == at_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(if at_lo { a } else { b })
}

/// Runs `job` on a dedicated pool with `threads` workers.
pub fn with_threads<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> Result<R, VerifyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| VerifyError::ThreadPool(e.to_string()))?;
    Ok(pool.install(job))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(f: impl Fn(f64) -> f64 + Sync) -> impl Fn(&[f64]) -> Result<f64, Infallible> + Sync {
        move |p: &[f64]| Ok(f(p[0]))
    }

    #[test]
    fn parabola_minimum() {
        let c = grid_min("parabola", ok(|x| 1.0 + x * x), &GridSpec::line(-1.0, 1.0, 11, 2), 1e-6).unwrap();
        assert_eq!(c.min_margin, 1.0);
        assert_eq!(c.argmin, vec![0.0]);
        assert!(c.passed);
    }

    #[test]
    fn boundary_minimum_of_sine() {
        let c = grid_min("sine", ok(f64::sin), &GridSpec::line(0.1, 3.0, 30, 3), 1e-6).unwrap();
        assert!((c.min_margin - 0.1f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn interior_dip_fails() {
        let c = grid_min("dip", ok(|x| (x - 0.37).powi(2) * 50.0 - 0.01), &GridSpec::line(0.0, 1.0, 9, 4), 1e-6)
            .unwrap();
        assert!(!c.passed);
        assert!((c.argmin[0] - 0.37).abs() < 0.02);
    }

    #[test]
    fn trace_is_non_increasing() {
        let c = grid_min("wiggle", ok(|x| (13.0 * x).sin() + x), &GridSpec::line(-2.0, 2.0, 7, 5), 0.0).unwrap();
        for w in c.refinement_trace.windows(2) {
            assert!(w[1].min_margin <= w[0].min_margin);
        }
        assert_eq!(c.refinement_trace.len(), 6);
    }

    #[test]
    fn two_dimensional_grid() {
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 5), Axis::new(-1.0, 1.0, 5)], 2, 2);
        let c = grid_min("bowl", |p: &[f64]| Ok::<_, Infallible>((p[0] - 0.3).powi(2) + p[1] * p[1]), &g, -1.0)
            .unwrap();
        assert!(c.min_margin < 0.01);
    }

    #[test]
    fn nan_and_errors_are_reported() {
        let g = GridSpec::line(0.0, 1.0, 3, 0);
        assert!(matches!(
            grid_min("nan", ok(|_| f64::NAN), &g, 0.0),
            Err(VerifyError::NanMargin { .. })
        ));
        let failing = |p: &[f64]| if p[0] > 0.6 { Err("boom") } else { Ok(1.0) };
        match grid_min("err", failing, &g, 0.0) {
            Err(VerifyError::Evaluation { point, message }) => {
                assert_eq!(point, vec![1.0]);
                assert_eq!(message, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(GridSpec::line(0.0, 1.0, 1, 0).validate().is_err());
        assert!(GridSpec::new(vec![Axis::new(0.0, 1.0, 3)], 0, 1).validate().is_err());
        assert!(GridSpec::line(1.0, 1.0, 3, 0).validate().is_err());
    }

    #[test]
    fn bisection_threshold() {
        let x = bisect_param(|x| x < 0.3, 0.0, 1.0, 1e-4).unwrap();
        assert!(x < 0.3 && 0.3 - x <= 1e-4);
        let y = bisect_param(|x| x > 0.3, 0.0, 1.0, 1e-4).unwrap();
        assert!(y > 0.3 && y - 0.3 <= 1e-4);
        assert!(matches!(bisect_param(|_| true, 0.0, 1.0, 1e-3), Err(VerifyError::NoCrossing { .. })));
    }

    #[test]
    fn worker_count_does_not_change_certificate() {
        let g = GridSpec::new(vec![Axis::new(0.0, 3.0, 40), Axis::new(0.0, 2.0, 30)], 3, 3);
        let f = |p: &[f64]| Ok::<_, Infallible>((p[0] * 7.0).sin() * (p[1] * 5.0).cos() + 0.1 * p[0]);
        let one = with_threads(1, || grid_min("w", f, &g, 0.0)).unwrap().unwrap();
        let many = with_threads(8, || grid_min("w", f, &g, 0.0)).unwrap().unwrap();
        assert_eq!(one, many);
        assert_eq!(one.min_margin.to_bits(), many.min_margin.to_bits());
    }
}
