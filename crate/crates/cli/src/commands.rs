//! One runner per scenario command. Each returns the report and the CSV
//! tables of the run.

use serde_json::json;

use ricciwarp::constructions::concordance::gamma;
use ricciwarp::constructions::triangle::{angle_path, sin_z};
use ricciwarp::constructions::{
    concordance_search, isotopy_at, run_isotopy, solve_geodesic_triangle, ConditionReport, EsphereProfile,
};
use ricciwarp::corner::{certify_smoothing, search_window, CornerChart, SmoothingTarget};
use ricciwarp::spline::two_stage_smooth;
use ricciwarp::verify::{GridSpec, PositivityCertificate};
use ricciwarp::{Curve, Expr, Metric, SMOOTH};

use crate::error::CliError;
use crate::output::{Check, Report, Table};
use crate::scenario::{Concordance, Curvature, GlueCorner, Isotopy, Scenario, SplineDemo, Triangle};

pub struct Run {
    pub report: Report,
    pub tables: Vec<Table>,
}

pub fn run(scenario: &Scenario) -> Result<Run, CliError> {
    match scenario {
        Scenario::SplineDemo(s) => spline_demo(s),
        Scenario::Curvature(c) => curvature(c),
        Scenario::GlueCorner(g) => glue_corner(g),
        Scenario::Isotopy(i) => isotopy(i),
        Scenario::Concordance(c) => concordance(c),
        Scenario::Triangle(t) => triangle(t),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn cert_check(id: &str, c: &PositivityCertificate) -> Check {
    Check::with_status(id, c.min_margin - c.threshold, c.passed)
}

fn condition_checks<'a>(prefix: &str, rep: &'a ConditionReport) -> impl Iterator<Item = Check> + 'a {
    let prefix = prefix.to_string();
    rep.conditions.iter().map(move |c| Check::with_status(format!("{prefix}.{}", c.id), c.margin, c.passed))
}

/// Uniform nodes including both ends exactly.
fn nodes(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
}

/// Number of sample points outside `window` where the two curves disagree
/// in any bit of the value or first two derivatives.
fn mismatches(a: &Curve, b: &Curve, window: (f64, f64), count: usize) -> Result<usize, CliError> {
    let (lo, hi) = a.domain();
    let mut bad = 0;
    for s in nodes(lo, hi, count).filter(|s| *s < window.0 || *s > window.1) {
        let (x, y) = (a.eval_right(s)?, b.eval_right(s)?);
        if [x.value, x.d1, x.d2].iter().zip([y.value, y.d1, y.d2]).any(|(p, q)| p.to_bits() != q.to_bits()) {
            bad += 1;
        }
    }
    Ok(bad)
}

fn exact_check(id: &str, bad: usize) -> Check {
    Check::with_status(id, if bad == 0 { 0.0 } else { -(bad as f64) }, bad == 0)
}

fn spline_demo(s: &SplineDemo) -> Result<Run, CliError> {
    let smooth = two_stage_smooth(&s.curve, s.kink, s.eps, s.delta)?;
    let window = (s.kink - s.eps - s.delta, s.kink + s.eps + s.delta);
    let (lo, hi) = s.curve.domain();
    if window.0 <= lo || window.1 >= hi {
        return Err(CliError::Precondition(format!("window [{}, {}] leaves the domain", window.0, window.1)));
    }
    let order = [window.0, s.kink - s.eps + s.delta, s.kink + s.eps - s.delta, window.1]
        .iter()
        .map(|x| smooth.order_at(*x))
        .min()
        .unwrap_or(SMOOTH);
    let checks = vec![
        Check::with_status("c2_at_window_joints", order as f64 - 2.0, order >= 3),
        exact_check("unchanged_outside_window", mismatches(&s.curve, &smooth, window, 4 * s.samples)?),
    ];
    let mut table = Table::new("spline", vec!["s", "input", "input_d1", "input_d2", "smooth", "smooth_d1", "smooth_d2"]);
    for x in nodes(lo, hi, s.samples) {
        let (a, b) = (s.curve.eval_right(x)?, smooth.eval_right(x)?);
        table.push(vec![x, a.value, a.d1, a.d2, b.value, b.d1, b.d2]);
    }
    let result = json!({ "window": window, "kink_value": smooth.value(s.kink)?, "min_joint_order": order });
    Ok(Run { report: Report::new("spline-demo", checks, result), tables: vec![table] })
}

fn curvature_table(name: &str, metric: &Metric, samples: usize) -> Result<Table, CliError> {
    let mut table = Table::new(
        name,
        vec!["s", "k_sk", "k_sh", "k_kk", "k_hh", "k_kh", "ric_s", "ric_k", "ric_h"],
    );
    let (lo, hi) = metric.domain();
    for s in nodes(lo, hi, samples) {
        let c = metric.sectional(s)?;
        table.push(vec![s, c.k_sk, c.k_sh, c.k_kk, c.k_hh, c.k_kh, c.ric_s, c.ric_k, c.ric_h]);
    }
    Ok(table)
}

fn curvature(c: &Curvature) -> Result<Run, CliError> {
    let metric = Metric::new(c.k.clone(), c.h.clone(), c.m, c.n, c.start, c.end)?;
    let (lo, hi) = metric.domain();
    let cert = metric.min_ricci(&GridSpec::line(lo, hi, c.count, c.depth), ricciwarp::verify::DEFAULT_THRESHOLD)?;
    let table = curvature_table("curvature", &metric, c.samples)?;
    let (mut low, mut high) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &table.rows {
        for k in &row[1..6] {
            low = low.min(*k);
            high = high.max(*k);
        }
    }
    let result = json!({ "certificate": to_value(&cert), "sectional_range": [low, high] });
    Ok(Run { report: Report::new("curvature", vec![cert_check("min_ricci", &cert)], result), tables: vec![table] })
}

fn target_certificate(chart: &CornerChart, target: SmoothingTarget, g: &GlueCorner) -> Result<PositivityCertificate, CliError> {
    let grid = chart.a_grid(g.search.count, g.search.depth);
    Ok(match target {
        SmoothingTarget::Convexity => chart.convexity_certificate(&grid, g.search.threshold)?,
        SmoothingTarget::Concavity => chart.concavity_certificate(&grid, g.search.threshold)?,
    })
}

fn glue_corner(g: &GlueCorner) -> Result<Run, CliError> {
    let (left, right) = match (&g.model, &g.left, &g.right) {
        (Some(model), _, _) => model.charts()?,
        (None, Some(l), Some(r)) => (l.clone(), r.clone()),
        _ => return Err(CliError::Precondition("model: give either `model` or both `left` and `right`".into())),
    };
    let mut checks = Vec::new();
    let mut inputs = Vec::new();
    for (name, chart) in [("left", &left), ("right", &right)] {
        let cert = target_certificate(chart, g.target, g)?;
        checks.push(cert_check(&format!("input_{name}"), &cert));
        inputs.push(cert);
    }
    let smoothed = match g.window {
        Some((eps, delta)) => certify_smoothing(&left, &right, eps, delta, g.target, &g.search)?,
        None => search_window(&left, &right, g.target, &g.search)?,
    };
    checks.push(cert_check("smoothed", &smoothed.certificate));
    let reach = smoothed.eps + smoothed.delta;
    let chart = &smoothed.chart;
    let mut bad = 0;
    for (side, window) in [(&left, (-reach, f64::INFINITY)), (&right, (f64::NEG_INFINITY, reach))] {
        bad += mismatches(&side.phi, &chart.phi, window, g.samples)?;
        bad += mismatches(&side.mu, &chart.mu, window, g.samples)?;
        for (x, y) in side.h.terms.iter().zip(&chart.h.terms) {
            bad += mismatches(&x.a, &y.a, window, g.samples)?;
        }
    }
    checks.push(exact_check("unchanged_outside_window", bad));

    let mut table = Table::new("face", vec!["a", "phi", "ii_tau", "ii_z", "profile_hessian"]);
    for a in nodes(chart.a_range.0, chart.a_range.1, g.samples) {
        let f = chart.face_second_form(a)?;
        table.push(vec![a, chart.phi.value(a)?, f.ii_tau, f.ii_z, chart.face_profile_hessian(a)?]);
    }
    let result = json!({
        "eps": smoothed.eps,
        "delta": smoothed.delta,
        "glue": to_value(&smoothed.glue),
        "input_certificates": to_value(&inputs),
        "certificate": to_value(&smoothed.certificate),
    });
    Ok(Run { report: Report::new("glue-corner", checks, result), tables: vec![table] })
}

fn profile_table(profile: &EsphereProfile, samples: usize) -> Result<Table, CliError> {
    let mut table = Table::new("profile", vec!["s", "k", "k_d1", "k_d2", "h", "h_d1", "h_d2"]);
    let (lo, hi) = profile.k().domain();
    for s in nodes(lo, hi, samples) {
        let (k, h) = (profile.k().eval_right(s)?, profile.h().eval_right(s)?);
        table.push(vec![s, k.value, k.d1, k.d2, h.value, h.d1, h.d2]);
    }
    Ok(table)
}

fn isotopy(i: &Isotopy) -> Result<Run, CliError> {
    let (outcome, at, _) = run_isotopy(&i.params)?;
    let mut checks: Vec<Check> = condition_checks("esphere", &outcome.esphere_report)
        .chain(condition_checks("kandh", &outcome.kandh_report))
        .collect();
    checks.push(cert_check("stage1", &outcome.stage1));
    let mut confirmations = Vec::new();
    for f in &i.confirm {
        let nu = f * outcome.nu_star;
        let cert = isotopy_at(&i.params, nu)?.certificate;
        checks.push(cert_check(&format!("stage1_at_{f}_nu_star"), &cert));
        confirmations.push(json!({ "fraction": f, "nu": nu, "min_margin": cert.min_margin }));
    }
    checks.push(cert_check("stage2", &outcome.stage2));
    checks.push(Check::new("endpoint_round", 1e-8 - outcome.endpoint_deviation));
    let metric = at.profile.metric()?;
    let tables = vec![profile_table(&at.profile, i.samples)?, curvature_table("profile_curvature", &metric, i.samples)?];
    let result = json!({
        "nu_star": outcome.nu_star,
        "round_radius": outcome.round_radius,
        "endpoint_deviation": outcome.endpoint_deviation,
        "breakpoints": at.profile.breakpoints(),
        "length": at.profile.length(),
        "stage1": to_value(&outcome.stage1),
        "stage2": to_value(&outcome.stage2),
        "confirmations": confirmations,
    });
    Ok(Run { report: Report::new("isotopy", checks, result), tables })
}

/// Largest residual of the schedule's end values and of its two ODEs, both
/// written in `L = ln t`, where `t γ(t) = 1 / L²`.
fn schedule_residual(p: &ricciwarp::constructions::ConcordanceParams, samples: usize) -> f64 {
    let inv = Expr::Recip { expr: Box::new(Expr::poly(vec![0.0, 1.0])) };
    let lambda = Expr::Sum { terms: vec![Expr::constant(1.0 / (p.alpha * p.ln_t0)), Expr::scaled(-1.0 / p.alpha, inv.clone())] };
    let ln_rho = Expr::Sum {
        terms: vec![Expr::constant(p.r1.ln() - 1.0 / (p.beta * p.ln_t0)), Expr::scaled(1.0 / p.beta, inv)],
    };
    let mut worst = [
        p.lambda_at(p.ln_t0).abs(),
        (p.lambda_at(p.ln_t1) - 1.0).abs(),
        (p.ln_rho_at(p.ln_t0) - p.r1.ln()).abs(),
        (p.ln_rho_at(p.ln_t1) - p.r0.ln()).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    for l in nodes(p.ln_t0, p.ln_t1, samples) {
        let rate = 1.0 / (l * l);
        let (lj, rj) = (lambda.eval(l), ln_rho.eval(l));
        worst = worst
            .max((p.alpha * lj.d1 - rate).abs())
            .max((p.beta * rj.d1 + rate).abs())
            .max((lj.value - p.lambda_at(l)).abs())
            .max((rj.value - p.ln_rho_at(l)).abs());
    }
    worst
}

fn concordance(c: &Concordance) -> Result<Run, CliError> {
    let out = concordance_search(&c.path, c.nu, &c.search)?;
    let p = &out.params;
    let residual = schedule_residual(p, c.samples);
    let mut checks = vec![
        cert_check("fiber_ricci", &out.fiber_ricci),
        cert_check("time", &out.time),
        cert_check("space", &out.space),
        cert_check("split", &out.split),
    ];
    checks.extend(condition_checks("boundary", &out.boundary));
    checks.push(Check::new("schedule_residual", 1e-10 - residual));
    let mut table = Table::new(
        "schedule",
        vec!["ln_t", "lambda", "ln_rho", "time_margin", "space_margin", "split_margin"],
    );
    for l in nodes(p.ln_t0, p.ln_t1, c.samples) {
        table.push(vec![l, p.lambda_at(l), p.ln_rho_at(l), p.time_margin(l), p.space_margin(l), p.split_margin(l)]);
    }
    let t_gamma = if p.ln_t0.exp().is_finite() { gamma(p.ln_t0.exp()) * p.ln_t0.exp() } else { 1.0 / (p.ln_t0 * p.ln_t0) };
    let result = json!({
        "params": to_value(p),
        "bound": to_value(&out.bound),
        "doublings": out.doublings,
        "schedule_residual": residual,
        "t0_gamma_t0": t_gamma,
    });
    Ok(Run { report: Report::new("concordance", checks, result), tables: vec![table] })
}

fn triangle(t: &Triangle) -> Result<Run, CliError> {
    let mut checks = Vec::new();
    let mut solutions = Vec::new();
    let mut table = Table::new("triangle_path", vec!["r", "u", "theta0", "theta_r", "sin_z"]);
    for &r in &t.r {
        let tri = solve_geodesic_triangle(r)?;
        let (a, b) = angle_path(0.0);
        let start = (sin_z(r, a, b).1 - r.sin()).abs();
        let (a, b) = angle_path(1.0);
        let end = (sin_z(r, a, b).1 - 1.0).abs();
        checks.push(Check::new(format!("r={r}.residual"), 1e-10 - tri.residual));
        checks.push(Check::new(format!("r={r}.base_exceeds_side"), tri.x1 - r));
        checks.push(Check::new(format!("r={r}.start_limit"), 1e-6 - start));
        checks.push(Check::new(format!("r={r}.end_limit"), 1e-6 - end));
        for u in nodes(0.0, 1.0, t.samples) {
            let (a, b) = angle_path(u);
            table.push(vec![r, u, a, b, sin_z(r, a, b).1]);
        }
        solutions.push(to_value(&tri));
    }
    Ok(Run { report: Report::new("triangle", checks, json!({ "solutions": solutions })), tables: vec![table] })
}
