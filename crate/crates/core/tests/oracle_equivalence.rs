//! Closed-form curvature of doubly warped metrics against a finite-difference
//! Riemann tensor of the full coordinate metric.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricciwarp::constructions::{FiberPath, MetricPath};
use ricciwarp::{Curve, EndKind, Expr, Metric};
use ricciwarp_oracle::{doubly_warped, fd_curvature, interior_angles, DEFAULT_STEP};

const LO: f64 = 0.0;
const HI: f64 = 2.0;

/// `a0 + a1 cos(b s + c) + a2 s` with `a0 > |a1| + 2|a2|`, so positive on `[0, 2]`.
fn random_warping(rng: &mut ChaCha8Rng) -> Curve {
    let a1 = rng.gen_range(-0.5..0.5);
    let a2 = rng.gen_range(-0.2..0.2);
    let a0 = rng.gen_range(1.0..2.0) + f64::abs(a1) + 2.0 * f64::abs(a2);
    let expr = Expr::Sum {
        terms: vec![
            Expr::poly(vec![a0, a2]),
            Expr::Cos { a: a1, b: rng.gen_range(0.5..2.0), c: rng.gen_range(0.0..6.0) },
        ],
    };
    Curve::single(LO, HI, expr).unwrap()
}

fn random_metric(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Metric {
    Metric::new(random_warping(rng), random_warping(rng), m, n, EndKind::Boundary, EndKind::Boundary).unwrap()
}

fn close(closed: f64, fd: f64) -> bool {
    (closed - fd).abs() <= 1e-5 * fd.abs() + 1e-9
}

#[test]
fn sectionals_and_ricci_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m, n) = (3, 3);
    for _ in 0..5 {
        let g = random_metric(&mut rng, m, n);
        let s = rng.gen_range(0.2..1.8);
        let closed = g.sectional(s).unwrap();
        let k = |x: f64| g.k.value(x).unwrap();
        let h = |x: f64| g.h.value(x).unwrap();
        let x: Vec<f64> = std::iter::once(s).chain(interior_angles(m)).chain(interior_angles(n - 1)).collect();
        let fd = fd_curvature(doubly_warped(k, h, m, n), &x, DEFAULT_STEP);
        let (t, p) = (1, 1 + m);
        let pairs = [
            (closed.k_sk, fd.sectional(0, t)),
            (closed.k_sh, fd.sectional(0, p)),
            (closed.k_kk, fd.sectional(t, t + 1)),
            (closed.k_hh, fd.sectional(p, p + 1)),
            (closed.k_kh, fd.sectional(t, p)),
            (closed.ric_s, fd.ricci_unit(0)),
            (closed.ric_k, fd.ricci_unit(t)),
            (closed.ric_h, fd.ricci_unit(p)),
        ];
        for (i, (c, f)) in pairs.iter().enumerate() {
            assert!(close(*c, *f), "metric at s = {s}, entry {i}: closed {c} vs oracle {f}");
        }
        // The radial weight counts all m directions of the k-sphere.
        let lighter = (m as f64 - 1.0) * closed.k_sk + (n as f64 - 1.0) * closed.k_sh;
        assert!(!close(lighter, fd.ricci_unit(0)) || closed.k_sk.abs() < 1e-6);
    }
}

#[test]
fn slab_mixed_term_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (m, n) = (2, 2);
    for _ in 0..3 {
        let path = MetricPath::affine(random_metric(&mut rng, m, n), random_metric(&mut rng, m, n), (0.0, 1.5)).unwrap();
        let fiber = FiberPath::Warped { path: path.clone() };
        let sigma = rng.gen_range(0.2..0.8);
        let s = rng.gen_range(0.2..1.8);
        let terms = fiber.slab_terms(&[sigma, s]).unwrap();
        let lambda = |sg: f64| 1.5 * sg;
        let k = |sg: f64, x: f64| path.at(lambda(sg)).unwrap().k.value(x).unwrap();
        let h = |sg: f64, x: f64| path.at(lambda(sg)).unwrap().h.value(x).unwrap();
        let metric = |x: &[f64]| {
            let (kv, hv) = (k(x[0], x[1]), h(x[0], x[1]));
            let w = ricciwarp_oracle::round_sphere_diagonal(&x[2..4]);
            nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                1.0,
                1.0,
                kv * kv * w[0],
                kv * kv * w[1],
                hv * hv,
            ]))
        };
        let x = [sigma, s, 0.9, 1.1, 0.4];
        let fd = fd_curvature(metric, &x, DEFAULT_STEP);
        let mixed = fd.ricci()[(0, 1)];
        assert!(close(terms.mixed, mixed), "closed {} vs oracle {mixed}", terms.mixed);
    }
}
