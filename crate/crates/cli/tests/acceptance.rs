//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without the test harness so the lines are always printed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use ricciwarp::constructions::{
    find_nu_star, isotopy_at, isotopy_stage2, ConcordanceParams, IsotopyAtNu, IsotopyParams,
};
use ricciwarp::constructions::isotopy::round_radius_for;
use ricciwarp::spline::{hermite_cubic, hermite_quintic, quintic_blend_weight, smooth_c1, two_stage_smooth};
use ricciwarp::verify::DEFAULT_THRESHOLD;
use ricciwarp::{Curve, EndKind, Expr, Jet, Metric, Piece};
use ricciwarp_oracle::{doubly_warped, fd_curvature, interior_angles, singly_warped, DEFAULT_STEP};

/// Bisected `ν*` of the default isotopy scenario.
const NU_STAR: f64 = 1.3729003906250002e-2;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn cli(path: &Path, threads: usize) -> Result<(Vec<u8>, Value), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ricciwarp"))
        .arg(path)
        .args(["--json", "--threads", &threads.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    let report = serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("{e}; stderr {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok((out.stdout, report))
}

fn check<'a>(report: &'a Value, id: &str) -> Result<&'a Value, String> {
    report["checks"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["id"] == id))
        .ok_or_else(|| format!("report lacks check {id}"))
}

fn margin(report: &Value, id: &str) -> Result<f64, String> {
    check(report, id)?["margin"].as_f64().ok_or_else(|| format!("{id} has no margin"))
}

fn piecewise(left: Expr<f64>, right: Expr<f64>, half: f64) -> Curve {
    Curve::from_pieces(vec![
        Piece { start: -half, end: 0.0, expr: left },
        Piece { start: 0.0, end: half, expr: right },
    ])
    .unwrap()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn decades() -> Vec<f64> {
    (0..=6).map(|i| 1e-1 * 10f64.powf(-0.5 * i as f64)).collect()
}

fn hermite_bridges() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut jet = || Jet::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0);
    let mut worst: f64 = 0.0;
    for w in [1.0, 0.1, 0.01] {
        let (l, r) = (jet(), jet());
        let c = hermite_cubic(l, r, w).map_err(|e| e.to_string())?;
        let q = hermite_quintic(l, r, w).map_err(|e| e.to_string())?;
        for (x, target) in [(-w, l), (w, r)] {
            let (cj, qj) = (c.jet(x), q.jet(x));
            worst = worst.max((cj.value - target.value).abs()).max((cj.d1 - target.d1).abs());
            worst = worst
                .max((qj.value - target.value).abs())
                .max((qj.d1 - target.d1).abs())
                .max((qj.d2 - target.d2).abs());
        }
    }
    let abs = piecewise(Expr::poly(vec![0.0, -1.0]), Expr::poly(vec![0.0, 1.0]), 2.0);
    let mut jump: f64 = 0.0;
    for eps in [1.0, 0.1, 0.01] {
        let p = smooth_c1(&abs, 0.0, eps).map_err(|e| e.to_string())?;
        jump = jump.max((2.0 * eps * p.eval_right(0.0).map_err(|e| e.to_string())?.d2 - 2.0).abs());
    }

    // First order: `e^a + |a|` against its cubic bridge.
    let kinked = piecewise(
        Expr::Sum { terms: vec![Expr::Exp { a: 1.0, b: 1.0, c: 0.0 }, Expr::poly(vec![0.0, -1.0])] },
        Expr::Sum { terms: vec![Expr::Exp { a: 1.0, b: 1.0, c: 0.0 }, Expr::poly(vec![0.0, 1.0])] },
        2.0,
    );
    let mut first = Vec::new();
    for eps in decades() {
        let p = smooth_c1(&kinked, 0.0, eps).map_err(|e| e.to_string())?;
        let err = (0..=200)
            .map(|i| {
                let a = -eps + 2.0 * eps * i as f64 / 200.0;
                (p.value(a).unwrap() - kinked.value(a).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        first.push((eps, err));
    }

    // Second order: the quintic's second derivative against the blend of
    // the outer second derivatives, at the right edge of a cubic bridge of
    // `sin a + |a|`.
    let c1 = piecewise(
        Expr::Sum { terms: vec![Expr::Sin { a: 1.0, b: 1.0, c: 0.0 }, Expr::poly(vec![0.0, -1.0])] },
        Expr::Sum { terms: vec![Expr::Sin { a: 1.0, b: 1.0, c: 0.0 }, Expr::poly(vec![0.0, 1.0])] },
        2.0,
    );
    let eps = 0.5;
    let stage1 = smooth_c1(&c1, 0.0, eps).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    for delta in decades() {
        let p = two_stage_smooth(&c1, 0.0, eps, delta).map_err(|e| e.to_string())?;
        let lo = stage1.eval_left(eps - delta).unwrap().d2;
        let hi = stage1.eval_right(eps + delta).unwrap().d2;
        let err = (0..=200)
            .map(|i| {
                let a = -delta + 2.0 * delta * i as f64 / 200.0;
                let w = quintic_blend_weight(a, delta);
                let blend = (2.0 - w) / 4.0 * lo + (2.0 + w) / 4.0 * hi;
                (p.eval_right(eps + a).unwrap().d2 - blend).abs()
            })
            .fold(0.0, f64::max);
        second.push((delta, err));
    }
    let (s1, s2) = (loglog_slope(&first), loglog_slope(&second));
    ensure(
        worst < 1e-9 && jump < 1e-9 && s1 >= 0.9 && s2 >= 0.9,
        format!("jet error {worst:.2e}, jump error {jump:.2e}, slopes {s1:.3} and {s2:.3}"),
    )
}

fn random_warping(rng: &mut ChaCha8Rng) -> Curve {
    let a1 = rng.gen_range(-0.5..0.5);
    let a2 = rng.gen_range(-0.2..0.2);
    let a0 = rng.gen_range(1.0..2.0) + f64::abs(a1) + 2.0 * f64::abs(a2);
    let expr = Expr::Sum {
        terms: vec![Expr::poly(vec![a0, a2]), Expr::Cos { a: a1, b: rng.gen_range(0.5..2.0), c: rng.gen_range(0.0..6.0) }],
    };
    Curve::single(0.0, 2.0, expr).unwrap()
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (m, n) = (3, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let g = Metric::new(random_warping(&mut rng), random_warping(&mut rng), m, n, EndKind::Boundary, EndKind::Boundary)
            .map_err(|e| e.to_string())?;
        let s = rng.gen_range(0.2..1.8);
        let c = g.sectional(s).map_err(|e| e.to_string())?;
        let x: Vec<f64> = std::iter::once(s).chain(interior_angles(m)).chain(interior_angles(n - 1)).collect();
        let fd = fd_curvature(doubly_warped(|t| g.k.value(t).unwrap(), |t| g.h.value(t).unwrap(), m, n), &x, DEFAULT_STEP);
        let (t, p) = (1, 1 + m);
        for (closed, oracle) in [
            (c.k_sk, fd.sectional(0, t)),
            (c.k_sh, fd.sectional(0, p)),
            (c.k_kk, fd.sectional(t, t + 1)),
            (c.k_hh, fd.sectional(p, p + 1)),
            (c.k_kh, fd.sectional(t, p)),
            (c.ric_s, fd.ricci_unit(0)),
            (c.ric_k, fd.ricci_unit(t)),
            (c.ric_h, fd.ricci_unit(p)),
        ] {
            worst = worst.max((closed - oracle).abs() / oracle.abs().max(1e-4));
        }
    }
    ensure(worst < 1e-5, format!("largest relative deviation {worst:.2e}"))
}

fn round_sphere() -> Outcome {
    let mut worst: f64 = 0.0;
    for radius in [1.0, 2.0] {
        let end = PI * radius / 2.0;
        let k = Curve::single(0.0, end, Expr::Cos { a: radius, b: 1.0 / radius, c: 0.0 }).unwrap();
        let h = Curve::single(0.0, end, Expr::Sin { a: radius, b: 1.0 / radius, c: 0.0 }).unwrap();
        let g = Metric::new(k, h, 3, 3, EndKind::ClosedH, EndKind::ClosedK).map_err(|e| e.to_string())?;
        for i in 0..1000 {
            let s = end * i as f64 / 999.0;
            for sec in g.sectional(s).map_err(|e| e.to_string())?.sectionals() {
                worst = worst.max((sec - 1.0 / (radius * radius)).abs());
            }
        }
    }
    ensure(worst < 1e-8, format!("largest deviation from 1/R² is {worst:.2e}"))
}

fn corner_convexity(report: &Value) -> Outcome {
    let smoothed = margin(report, "smoothed")?;
    let exact = check(report, "unchanged_outside_window")?["passed"] == true;
    let depth = report["result"]["certificate"]["grid"]["depth"].as_u64();
    let eps = report["result"]["eps"].as_f64().unwrap_or(f64::NAN);
    let delta = report["result"]["delta"].as_f64().unwrap_or(f64::NAN);
    ensure(
        report["passed"] == true && smoothed > 1e-6 && exact && depth == Some(3),
        format!("eps {eps:.4e}, delta {delta:.4e}, margin {smoothed:.3e}, bit-exact outside {exact}"),
    )
}

fn corner_concavity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("concave.toml");
    std::fs::write(
        &path,
        "command = \"glue-corner\"\ntarget = \"concavity\"\n[model]\nangle = 2.0943951023931957\nbend = 0.3\n\
         warp_slope = 0.2\nprofile = \"cosine\"\nfiber_dim = 2\n",
    )
    .map_err(|e| e.to_string())?;
    let (_, report) = cli(&path, 1)?;
    // The concavity margin is `-∂s²(H²)`, so an input margin above 1e-3 is a Hessian below -1e-3.
    let inputs = margin(&report, "input_left")?.min(margin(&report, "input_right")?) + DEFAULT_THRESHOLD;
    let smoothed = margin(&report, "smoothed")?;
    ensure(
        report["passed"] == true && inputs > 1e-3 && smoothed > 1e-6,
        format!("input Hessian at most {:.3e}, smoothed margin {smoothed:.3e}", -inputs),
    )
}

struct Isotopy {
    params: IsotopyParams,
    at: IsotopyAtNu,
}

fn isotopy_stage_one() -> (Outcome, Option<Isotopy>) {
    let params = IsotopyParams::default();
    let at = match find_nu_star(&params) {
        Ok(at) => at,
        Err(e) => return (Err(e.to_string()), None),
    };
    let mut lowest = at.certificate.min_margin;
    let mut all = at.certificate.passed;
    for f in [0.05, 0.25, 0.5, 0.75] {
        match isotopy_at(&params, f * at.nu) {
            Ok(r) => {
                lowest = lowest.min(r.certificate.min_margin);
                all &= r.certificate.passed;
            }
            Err(e) => return (Err(e.to_string()), None),
        }
    }
    let grid = &at.certificate.grid;
    let shape = (grid.axes[0].count, grid.axes[1].count, grid.depth);
    let outcome = ensure(
        at.profile.report().passed()
            && all
            && shape == (64, 256, 2)
            && (at.nu - NU_STAR).abs() <= params.nu_tol,
        format!("ν* = {:.6e}, lowest stage-1 margin {lowest:.3e}", at.nu),
    );
    (outcome, Some(Isotopy { params, at }))
}

fn isotopy_stage_two(run: &Isotopy) -> Outcome {
    let d = run.at.profile.draft();
    let radius = round_radius_for(d.length);
    let path = isotopy_stage2(&run.at.target.k1, &run.at.target.h1, radius, d.m, d.n).map_err(|e| e.to_string())?;
    let p = &run.params;
    let cert = path.min_ricci(&path.grid(p.lambda_count, p.s_count, p.depth), DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let round = path.at(2.0).map_err(|e| e.to_string())?;
    let mut deviation: f64 = 0.0;
    for i in 0..=1000 {
        for k in round.sectional(d.length * i as f64 / 1000.0).map_err(|e| e.to_string())?.sectionals() {
            deviation = deviation.max((k - 1.0 / (radius * radius)).abs());
        }
    }
    ensure(
        cert.passed && deviation < 1e-8,
        format!("min margin {:.3e}, endpoint deviation {deviation:.2e}", cert.min_margin),
    )
}

/// Ricci eigenvalues of the cylinder over the bump path, by finite
/// differences in `x` with `t = t* (1 + x)`, after scaling the metric by `1/t*²`.
fn cylinder_spot_check(p: &ConcordanceParams) -> Result<f64, String> {
    let radius = |sigma: f64| 1.0 + 0.1 * (PI * sigma).sin();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut lowest = f64::INFINITY;
    for _ in 0..20 {
        let ln_t = rng.gen_range(p.ln_t0..p.ln_t1);
        let warp = move |x: f64| {
            let l = ln_t + (1.0 + x).ln();
            (1.0 + x) * p.ln_rho_at(l).exp() * radius(p.lambda_at(l))
        };
        let x: Vec<f64> = std::iter::once(0.0).chain(interior_angles(p.fiber_dim)).collect();
        let fd = fd_curvature(singly_warped(warp, p.fiber_dim), &x, DEFAULT_STEP);
        lowest = lowest.min(fd.ricci_eigenvalues()[0]);
    }
    Ok(lowest)
}

fn concordance(report: &Value) -> Outcome {
    let passed = ["fiber_ricci", "time", "space", "split"]
        .iter()
        .chain(&[
            "boundary.near_end_isometric",
            "boundary.near_end_curvature_above_minus_nu",
            "boundary.far_end_isometric_to_scaled",
            "boundary.far_end_convex",
            "schedule_residual",
        ])
        .map(|id| check(report, id).map(|c| c["passed"] == true))
        .collect::<Result<Vec<_>, _>>()?;
    let residual = report["result"]["schedule_residual"].as_f64().unwrap_or(f64::NAN);
    let params: ConcordanceParams =
        serde_json::from_value(report["result"]["params"].clone()).map_err(|e| e.to_string())?;
    let spot = cylinder_spot_check(&params)?;
    ensure(
        passed.iter().all(|p| *p) && residual < 1e-10 && spot > 0.0,
        format!("schedule residual {residual:.2e}, lowest FD Ricci eigenvalue {spot:.3e}"),
    )
}

fn triangle(report: &Value) -> Outcome {
    let solutions = report["result"]["solutions"].as_array().ok_or("no solutions")?;
    let rs: Vec<f64> = solutions.iter().filter_map(|s| s["r"].as_f64()).collect();
    let wanted = [PI / 16.0, PI / 8.0, PI / 6.0];
    let same = rs.len() == 3 && rs.iter().zip(wanted).all(|(a, b)| (a - b).abs() < 1e-15);
    let worst = solutions.iter().filter_map(|s| s["residual"].as_f64()).fold(0.0, f64::max);
    ensure(same && report["passed"] == true, format!("largest residual {worst:.2e} over r = {rs:?}"))
}

fn thread_invariance(pairs: &[(&str, Vec<u8>)]) -> Outcome {
    let mut differing = Vec::new();
    for (name, single) in pairs {
        let (many, _) = cli(&scenario(name), 8)?;
        if &many != single {
            differing.push(*name);
        }
    }
    ensure(differing.is_empty(), format!("reports differing between 1 and 8 threads: {differing:?}"))
}

/// Runs `criterion` and fails it when it takes longer than `limit` seconds.
fn timed(limit: u64, criterion: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let outcome = criterion();
    let elapsed = start.elapsed();
    let within = elapsed < Duration::from_secs(limit);
    let note = |d: String| format!("{d}; {:.2}s of {limit}s", elapsed.as_secs_f64());
    match outcome {
        Ok(d) if within => Ok(note(d)),
        Ok(d) | Err(d) => Err(note(d)),
    }
}

fn main() {
    let mut failures = 0;
    let mut report = |id: &str, outcome: Outcome| {
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {id}: {detail}");
    };

    report("hermite_bridges", timed(1, hermite_bridges));
    report("oracle_agreement", timed(10, oracle_agreement));
    report("round_sphere_curvature", timed(1, round_sphere));

    let mut corner = Err(String::new());
    report(
        "corner_convexity",
        timed(30, || {
            corner = cli(&scenario("glue_corner.toml"), 1);
            corner.as_ref().map_err(Clone::clone).and_then(|(_, r)| corner_convexity(r))
        }),
    );
    report("corner_concavity", timed(30, corner_concavity));

    let mut run = None;
    report(
        "isotopy_stage_one",
        timed(120, || {
            let (outcome, done) = isotopy_stage_one();
            run = done;
            outcome
        }),
    );
    report(
        "isotopy_stage_two",
        timed(60, || run.as_ref().map_or(Err("stage one did not finish".into()), isotopy_stage_two)),
    );

    let mut conc = Err(String::new());
    report(
        "concordance",
        timed(120, || {
            conc = cli(&scenario("concordance.toml"), 1);
            conc.as_ref().map_err(Clone::clone).and_then(|(_, r)| concordance(r))
        }),
    );
    report("geodesic_triangle", timed(1, || cli(&scenario("triangle.toml"), 1).and_then(|(_, r)| triangle(&r))));

    let invariance = (|| {
        let (iso, _) = cli(&scenario("isotopy.toml"), 1)?;
        let pairs = [
            ("glue_corner.toml", corner.clone()?.0),
            ("isotopy.toml", iso),
            ("concordance.toml", conc.clone()?.0),
        ];
        thread_invariance(&pairs)
    })();
    report("thread_invariance", invariance);

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
