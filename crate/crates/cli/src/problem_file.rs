//! Problem files: the JSON documents `teq` consumes.
//!
//! One file describes one equation `y(s+k) = F(s, y(s), ..., y(s+k-1))`: the
//! order `k`, the right-hand side `F` (expression grammar over `s` and
//! `z1..zk`), the strip half-height, a left-cutoff hint, the value domain
//! with its anchor, optional seed parameters, optional tolerance overrides,
//! and an optional asymptotic model expression in `s` used by `verify`.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::json;
use teq_core::{parse, DomainSpec, Expr, LeftCutoff, Problem64, Strip, Tolerances, C64};

use crate::CliError;

/// On-disk problem description. Unknown keys are rejected so a typo fails
/// loudly instead of silently meaning its default.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Equation order `k >= 1`.
    pub order: usize,
    /// Right-hand side `F` as an expression in `s` and `z1..zk`.
    pub expression: String,
    /// Horizontal strip `|Im s| < half_height`.
    pub strip: StripField,
    /// Starting left cutoff `J`; the solver doubles it until contractive.
    #[serde(default = "default_cutoff_hint")]
    pub cutoff_hint: f64,
    /// Value domain `G` and the anchor point `A` strictly inside it.
    pub domain: DomainField,
    /// The `k-1` seed parameters as `[re, im]` pairs; defaults to the anchor.
    #[serde(default)]
    pub parameters: Option<Vec<[f64; 2]>>,
    /// Optional overrides of the order-dependent tolerance defaults.
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
    /// Optional model `m(s)`; `verify` reports `y(s)/m(s)` far to the left.
    #[serde(default)]
    pub asymptotic_model: Option<String>,
}

fn default_cutoff_hint() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripField {
    pub half_height: f64,
}

/// Domain geometry: `type` is `"disk"` (center + radius) or `"rect"`
/// (lo + hi corners). Every point field is an `[re, im]` pair.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainField {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub lo: Option<[f64; 2]>,
    #[serde(default)]
    pub hi: Option<[f64; 2]>,
    pub anchor: [f64; 2],
}

/// Optional per-field overrides; anything absent keeps its default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub tail_eps: Option<f64>,
    pub iter_eps: Option<f64>,
    pub residual_tol: Option<f64>,
    pub max_trunc: Option<usize>,
    pub max_levels: Option<usize>,
    pub far_left_margin: Option<f64>,
    pub lipschitz_target: Option<f64>,
}

/// A validated problem plus the optional asymptotic model.
#[derive(Debug)]
pub struct BuiltProblem {
    pub problem: Problem64,
    pub model: Option<Expr<f64>>,
    pub model_text: Option<String>,
}

fn point(xy: [f64; 2]) -> C64 {
    C64::new(xy[0], xy[1])
}

/// Problem-construction failures are file-content mistakes: exit code 2.
fn invalid(e: teq_core::Error64) -> CliError {
    CliError::parse(e.to_string(), None)
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::parse(format!("problem file {}: {e}", path.display()), None))
    }

    /// Validate every field and convert into a solver problem.
    pub fn build(self) -> Result<BuiltProblem, CliError> {
        let expr = parse(&self.expression, self.order).map_err(|e| {
            CliError::parse(format!("expression: {e}"), Some(json!({ "position": e.position })))
        })?;
        let model = match &self.asymptotic_model {
            Some(text) => Some(parse(text, 0).map_err(|e| {
                CliError::parse(
                    format!("asymptotic_model: {e}"),
                    Some(json!({ "position": e.position })),
                )
            })?),
            None => None,
        };
        let strip = Strip::new(self.strip.half_height).map_err(invalid)?;
        let cutoff = LeftCutoff::new(self.cutoff_hint).map_err(invalid)?;
        let domain = self.domain.build()?;
        let parameters: Vec<C64> = self.parameters.iter().flatten().copied().map(point).collect();
        let mut tolerances = Tolerances::for_order(self.order);
        if let Some(overrides) = &self.tolerances {
            overrides.apply(&mut tolerances);
        }
        let problem = Problem64::new(self.order, expr, strip, cutoff, domain, parameters, tolerances)
            .map_err(invalid)?;
        Ok(BuiltProblem { problem, model, model_text: self.asymptotic_model })
    }
}

impl DomainField {
    fn build(&self) -> Result<DomainSpec<f64>, CliError> {
        let anchor = point(self.anchor);
        match self.kind.as_str() {
            "disk" => {
                let (Some(center), Some(radius)) = (self.center, self.radius) else {
                    return Err(CliError::parse(
                        "disk domain needs \"center\" and \"radius\"".into(),
                        None,
                    ));
                };
                if self.lo.is_some() || self.hi.is_some() {
                    return Err(CliError::parse(
                        "disk domain does not take \"lo\"/\"hi\"".into(),
                        None,
                    ));
                }
                DomainSpec::disk(point(center), radius, anchor).map_err(invalid)
            }
            "rect" => {
                let (Some(lo), Some(hi)) = (self.lo, self.hi) else {
                    return Err(CliError::parse(
                        "rect domain needs \"lo\" and \"hi\"".into(),
                        None,
                    ));
                };
                if self.center.is_some() || self.radius.is_some() {
                    return Err(CliError::parse(
                        "rect domain does not take \"center\"/\"radius\"".into(),
                        None,
                    ));
                }
                DomainSpec::rect(point(lo), point(hi), anchor).map_err(invalid)
            }
            other => Err(CliError::parse(
                format!("unknown domain type {other:?} (expected \"disk\" or \"rect\")"),
                None,
            )),
        }
    }
}

impl ToleranceOverrides {
    fn apply(&self, t: &mut Tolerances<f64>) {
        if let Some(x) = self.tail_eps {
            t.tail_eps = x;
        }
        if let Some(x) = self.iter_eps {
            t.iter_eps = x;
        }
        if let Some(x) = self.residual_tol {
            t.residual_tol = x;
        }
        if let Some(x) = self.max_trunc {
            t.max_trunc = x;
        }
        if let Some(x) = self.max_levels {
            t.max_levels = x;
        }
        if let Some(x) = self.far_left_margin {
            t.far_left_margin = x;
        }
        if let Some(x) = self.lipschitz_target {
            t.lipschitz_target = x;
        }
    }
}
