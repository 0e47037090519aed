//! Scenario files: one TOML document per run, tagged by `command`.

use serde::Deserialize;

use ricciwarp::constructions::{FiberPath, IsotopyParams, SearchOptions};
use ricciwarp::corner::{CornerChart, ModelPair, SmoothingTarget, WindowSearch};
use ricciwarp::{Curve, EndKind};

use crate::error::CliError;

/// Dispatched on the top-level `command` key; the remaining keys form the
/// command's own table.
#[derive(Clone, Debug)]
pub enum Scenario {
    SplineDemo(SplineDemo),
    Curvature(Curvature),
    GlueCorner(GlueCorner),
    Isotopy(Isotopy),
    Concordance(Concordance),
    Triangle(Triangle),
}

/// Two-stage smoothing of one kink.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineDemo {
    pub curve: Curve,
    pub kink: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

/// Curvature table and Ricci certificate of one doubly warped metric.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curvature {
    pub m: usize,
    pub n: usize,
    pub k: Curve,
    pub h: Curve,
    #[serde(default = "boundary")]
    pub start: EndKind,
    #[serde(default = "boundary")]
    pub end: EndKind,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_depth")]
    pub depth: u32,
}

/// Corner gluing of either a model pair or two explicit charts.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueCorner {
    #[serde(default)]
    pub model: Option<ModelPair>,
    #[serde(default)]
    pub left: Option<CornerChart>,
    #[serde(default)]
    pub right: Option<CornerChart>,
    #[serde(default = "convexity")]
    pub target: SmoothingTarget,
    #[serde(default)]
    pub search: WindowSearch,
    /// Fixed `(eps, delta)`; skips the search.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Isotopy {
    #[serde(default)]
    pub params: IsotopyParams,
    /// Fractions of the found `ν*` at which stage 1 is certified again.
    #[serde(default = "default_fractions")]
    pub confirm: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Concordance {
    pub path: FiberPath,
    pub nu: f64,
    #[serde(default)]
    pub search: SearchOptions,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Triangle {
    pub r: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    201
}

fn default_count() -> usize {
    257
}

fn default_depth() -> u32 {
    2
}

fn default_fractions() -> Vec<f64> {
    vec![0.1, 0.5, 0.9]
}

fn boundary() -> EndKind {
    EndKind::Boundary
}

fn convexity() -> SmoothingTarget {
    SmoothingTarget::Convexity
}

fn parse_error(path: &str, message: &str) -> CliError {
    CliError::Parse { path: path.into(), message: message.into() }
}

fn body_of<T: serde::de::DeserializeOwned>(body: toml::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(body).map_err(|e| CliError::Parse {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text)
            .map_err(|e| CliError::Parse { path: String::new(), message: e.message().to_string() })?;
        let command = match table.remove("command") {
            Some(toml::Value::String(c)) => c,
            Some(_) => return Err(parse_error("command", "expected a string")),
            None => return Err(parse_error("command", "missing field `command`")),
        };
        let body = toml::Value::Table(table);
        Ok(match command.as_str() {
            "spline-demo" => Scenario::SplineDemo(body_of(body)?),
            "curvature" => Scenario::Curvature(body_of(body)?),
            "glue-corner" => Scenario::GlueCorner(body_of(body)?),
            "isotopy" => Scenario::Isotopy(body_of(body)?),
            "concordance" => Scenario::Concordance(body_of(body)?),
            "triangle" => Scenario::Triangle(body_of(body)?),
            other => return Err(parse_error("command", &format!("unknown command `{other}`"))),
        })
    }

    /// Replaces every refinement depth in the scenario.
    pub fn override_depth(&mut self, depth: u32) {
        match self {
            Scenario::Curvature(c) => c.depth = depth,
            Scenario::GlueCorner(g) => g.search.depth = depth,
            Scenario::Isotopy(i) => i.params.depth = depth,
            Scenario::Concordance(c) => c.search.depth = depth,
            Scenario::SplineDemo(_) | Scenario::Triangle(_) => {}
        }
    }

    /// Preconditions that can be checked without evaluating anything.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, reason: String| Err(CliError::Precondition(format!("{field}: {reason}")));
        let positive = |field: &str, x: f64| if x > 0.0 { Ok(()) } else { fail(field, format!("must be positive, got {x}")) };
        let samples = |s: usize| if s >= 2 { Ok(()) } else { fail("samples", format!("need at least 2, got {s}")) };
        match self {
            Scenario::SplineDemo(s) => {
                positive("eps", s.eps)?;
                positive("delta", s.delta)?;
                if s.delta >= s.eps {
                    return fail("delta", format!("must be below eps = {}", s.eps));
                }
                samples(s.samples)
            }
            Scenario::Curvature(c) => {
                if c.m < 2 || c.n < 2 {
                    return fail("m, n", format!("need m, n >= 2, got {}, {}", c.m, c.n));
                }
                samples(c.samples)?;
                samples(c.count)
            }
            Scenario::GlueCorner(g) => {
                match (&g.model, &g.left, &g.right) {
                    (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                    _ => return fail("model", "give either `model` or both `left` and `right`".into()),
                }
                if let Some((eps, delta)) = g.window {
                    positive("window.eps", eps)?;
                    positive("window.delta", delta)?;
                }
                samples(g.samples)
            }
            Scenario::Isotopy(i) => {
                let p = &i.params;
                if p.m < 2 || p.n < 2 {
                    return fail("params.m, params.n", format!("need m, n >= 2, got {}, {}", p.m, p.n));
                }
                positive("params.radius", p.radius)?;
                let (lo, hi) = p.nu_range;
                if !(0.0 < lo && lo < hi && hi < 1.0) {
                    return fail("params.nu_range", format!("need 0 < lo < hi < 1, got ({lo}, {hi})"));
                }
                if let Some(f) = i.confirm.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                    return fail("confirm", format!("fractions lie in (0, 1], got {f}"));
                }
                samples(i.samples)
            }
            Scenario::Concordance(c) => {
                if !(c.nu > 0.0 && c.nu < 1.0) {
                    return fail("nu", format!("must lie in (0, 1), got {}", c.nu));
                }
                samples(c.samples)
            }
            Scenario::Triangle(t) => {
                if t.r.is_empty() {
                    return fail("r", "empty list".into());
                }
                samples(t.samples)
            }
        }
    }
}
