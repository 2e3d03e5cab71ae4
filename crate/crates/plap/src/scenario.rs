//! Scenario files: one JSON object naming a shape, an operator, a task and
//! the task's parameters.
//!
//! ```json
//! {
//!   "name": "disk-dirichlet",
//!   "shape": { "dim": 2, "root": { "type": "ball", "center": [0, 0], "radius": 1 } },
//!   "operator": { "kind": "pLaplace", "t": 3 },
//!   "task": "dirichlet",
//!   "params": { "h": 0.03125, "boundary": "x1^2 - x2^2" }
//! }
//! ```

use serde::{Deserialize, Serialize};

use plap_core::capacity::{BarrierConfig, Verdict, WienerProbeConfig};
use plap_core::solver::{Mollifier, Sign, SolverConfig};
use plap_core::{OperatorSpec, Shape, ShapeSpec};

use crate::expr::Expr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub shape: ShapeSpec,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub seed: u64,
    /// Output directory used when the command line gives none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(flatten)]
    pub task: Task,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", content = "params", rename_all = "kebab-case")]
pub enum Task {
    Dirichlet(DirichletParams),
    Obstacle(ObstacleParams),
    WienerProbe(WienerProbeConfig),
    Barrier(BarrierParams),
    DegiorgiInstrument(DegiorgiParams),
    Locality(LocalityParams),
}

pub const TASKS: [(&str, &str); 6] = [
    (
        "dirichlet",
        "Dirichlet problem with expression data, optional exact solution and mollified sequence",
    ),
    (
        "obstacle",
        "obstacle problem on the shape with a constraint region, optional radial closed form",
    ),
    (
        "wiener-probe",
        "capacitary potentials of complement caps over refinement levels and a regularity verdict",
    ),
    (
        "barrier",
        "barrier pair V, U with data ±m|x-y|²/ρ² and the barrier conditions",
    ),
    (
        "degiorgi-instrument",
        "level sets, Caccioppoli ratios, ψ recursion and oscillation decay of an obstacle solution",
    ),
    ("locality", "Wiener probes on two shapes that agree near y"),
];

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Dirichlet(_) => "dirichlet",
            Task::Obstacle(_) => "obstacle",
            Task::WienerProbe(_) => "wiener-probe",
            Task::Barrier(_) => "barrier",
            Task::DegiorgiInstrument(_) => "degiorgi-instrument",
            Task::Locality(_) => "locality",
        }
    }
}

/// Optional assertions; a run fails when one does not hold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expect {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    /// Bound on the error against the exact or closed-form solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jj_trend: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedParams {
    pub levels: usize,
    #[serde(default = "hat")]
    pub kind: Mollifier,
}

fn hat() -> Mollifier {
    Mollifier::Hat
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub h: f64,
    pub boundary: String,
    /// Treat the data as smooth (no mollification).
    #[serde(default = "yes")]
    pub smooth: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Exact solution; its maximal nodal error is reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generalized: Option<GeneralizedParams>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn yes() -> bool {
    true
}

fn plus() -> Sign {
    Sign::Plus
}

/// The closed-form radial obstacle solution on `I(c, outer) ∖ I(c, inner)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialOracle {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    /// Compare on `inner ≤ |x − c| ≤ r_max`.
    pub r_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleParams {
    pub h: f64,
    /// Interior nodes in this closed region carry the constraint.
    pub region: Shape,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "plus")]
    pub sign: Sign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<RadialOracle>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub h: f64,
    #[serde(flatten)]
    pub barrier: BarrierConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelQuery {
    pub k: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliQuery {
    pub k: f64,
    pub rho: f64,
    pub big_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub r0: f64,
    pub k0: f64,
    /// Trial drop used to fit `ĉ`.
    pub d: f64,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationParams {
    pub r0: f64,
    #[serde(default = "four")]
    pub ratio: f64,
    pub count: usize,
    /// `σ(2 r_k)` per radius; enables the decay envelope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default)]
    pub lower_order: bool,
}

fn four() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegiorgiParams {
    /// Spacings at which the obstacle solution is computed and instrumented.
    pub levels: Vec<f64>,
    pub region: Shape,
    #[serde(default = "one")]
    pub m: f64,
    pub y: Vec<f64>,
    #[serde(default)]
    pub level_stats: Vec<LevelQuery>,
    #[serde(default)]
    pub caccioppoli: Vec<CaccioppoliQuery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<OscillationParams>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityParams {
    pub lambda: ShapeSpec,
    pub r: f64,
    pub probe: WienerProbeConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
}

fn field(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be a positive number, got {v}")))
    }
}

fn decreasing(name: &str, levels: &[f64]) -> Result<(), ConfigError> {
    if levels.is_empty() {
        return Err(field(name, "must list at least one spacing"));
    }
    for &h in levels {
        positive(name, h)?;
    }
    if levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(field(name, "spacings must be strictly decreasing"));
    }
    Ok(())
}

fn point(name: &str, v: &[f64], dim: usize) -> Result<(), ConfigError> {
    if v.len() != dim {
        return Err(field(
            name,
            format!("has {} coordinates, expected {dim}", v.len()),
        ));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(field(name, "coordinates must be finite"));
    }
    Ok(())
}

fn solver(name: &str, s: &SolverConfig) -> Result<(), ConfigError> {
    positive(&format!("{name}.tol_u"), s.tol_u)?;
    positive(&format!("{name}.tol_r"), s.tol_r)?;
    if s.max_sweeps == 0 {
        return Err(field(&format!("{name}.max_sweeps"), "must be positive"));
    }
    if let Some(w) = s.omega {
        if !(w > 0.0 && w < 2.0) {
            return Err(field(
                &format!("{name}.omega"),
                format!("must lie in (0, 2), got {w}"),
            ));
        }
    }
    Ok(())
}

fn region(name: &str, shape: &Shape, dim: usize) -> Result<(), ConfigError> {
    ShapeSpec::new(dim, shape.clone())
        .map(|_| ())
        .map_err(|e| field(name, e.0))
}

fn probe(name: &str, p: &WienerProbeConfig, dim: usize) -> Result<(), ConfigError> {
    decreasing(&format!("{name}.levels"), &p.levels)?;
    solver(&format!("{name}.solver"), &p.solver)?;
    p.validate(dim).map_err(|e| field(name, e.to_string()))
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Canonical serialization; the manifest hashes these bytes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// Applies a seed override to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(field("name", "must not be empty"));
        }
        if self.name.contains(['/', '\\']) || self.name == "." || self.name == ".." {
            return Err(field("name", "must be usable as a directory name"));
        }
        self.shape.validate().map_err(|e| field("shape", e.0))?;
        self.operator
            .validate()
            .map_err(|e| field("operator", e.to_string()))?;
        if !self.operator.is_potential() {
            return Err(field(
                "operator.kind",
                "the solvers need a potential operator; custom fields are residual-only",
            ));
        }
        let dim = self.shape.dim;
        if let Some(b) = self.expect.max_error {
            positive("expect.max_error", b)?;
        }
        match &self.task {
            Task::Dirichlet(p) => {
                positive("params.h", p.h)?;
                solver("params.solver", &p.solver)?;
                let data = Expr::parse(&p.boundary)
                    .map_err(|e| field("params.boundary", e.to_string()))?;
                let mut exprs = vec![("params.boundary", data)];
                if let Some(ex) = &p.exact {
                    exprs.push((
                        "params.exact",
                        Expr::parse(ex).map_err(|e| field("params.exact", e.to_string()))?,
                    ));
                }
                for (name, e) in &exprs {
                    if e.max_var() > dim {
                        return Err(field(
                            name,
                            format!("uses x{} in dimension {dim}", e.max_var()),
                        ));
                    }
                    if e.uses_dist() && p.y.is_none() {
                        return Err(field(
                            "params.y",
                            format!("required because {name} uses |x-y|"),
                        ));
                    }
                }
                if let Some(y) = &p.y {
                    point("params.y", y, dim)?;
                }
                if let Some(g) = &p.generalized {
                    if g.levels == 0 {
                        return Err(field("params.generalized.levels", "must be positive"));
                    }
                }
            }
            Task::Obstacle(p) => {
                positive("params.h", p.h)?;
                positive("params.m", p.m)?;
                solver("params.solver", &p.solver)?;
                region("params.region", &p.region, dim)?;
                if let Some(o) = &p.radial {
                    point("params.radial.center", &o.center, dim)?;
                    positive("params.radial.inner", o.inner)?;
                    if !(o.outer > o.inner) {
                        return Err(field("params.radial.outer", "must exceed inner"));
                    }
                    if !(o.r_max > o.inner && o.r_max <= o.outer) {
                        return Err(field("params.radial.r_max", "must lie in (inner, outer]"));
                    }
                }
            }
            Task::WienerProbe(p) => probe("params", p, dim)?,
            Task::Barrier(p) => {
                positive("params.h", p.h)?;
                point("params.y", &p.barrier.y, dim)?;
                positive("params.rho", p.barrier.rho)?;
                positive("params.m", p.barrier.m)?;
                decreasing("params.deltas", &p.barrier.deltas)?;
                solver("params.solver", &p.barrier.solver)?;
            }
            Task::DegiorgiInstrument(p) => {
                decreasing("params.levels", &p.levels)?;
                positive("params.m", p.m)?;
                point("params.y", &p.y, dim)?;
                region("params.region", &p.region, dim)?;
                solver("params.solver", &p.solver)?;
                for (i, q) in p.level_stats.iter().enumerate() {
                    positive(&format!("params.level_stats[{i}].rho"), q.rho)?;
                }
                for (i, q) in p.caccioppoli.iter().enumerate() {
                    let name = format!("params.caccioppoli[{i}]");
                    positive(&format!("{name}.rho"), q.rho)?;
                    if !(q.big_r > q.rho) {
                        return Err(field(&format!("{name}.big_r"), "must exceed rho"));
                    }
                }
                if let Some(s) = &p.schedule {
                    positive("params.schedule.r0", s.r0)?;
                    positive("params.schedule.d", s.d)?;
                    if s.levels == 0 {
                        return Err(field("params.schedule.levels", "must be positive"));
                    }
                }
                if let Some(o) = &p.oscillation {
                    positive("params.oscillation.r0", o.r0)?;
                    if !(o.ratio > 1.0) {
                        return Err(field("params.oscillation.ratio", "must exceed 1"));
                    }
                    if let Some(s) = &o.sigma {
                        if s.len() != o.count + 1 {
                            return Err(field(
                                "params.oscillation.sigma",
                                format!("needs {} values", o.count + 1),
                            ));
                        }
                        if s.iter().any(|v| !(0.0..=1.0).contains(v)) {
                            return Err(field(
                                "params.oscillation.sigma",
                                "values must lie in [0, 1]",
                            ));
                        }
                    }
                }
            }
            Task::Locality(p) => {
                p.lambda
                    .validate()
                    .map_err(|e| field("params.lambda", e.0))?;
                if p.lambda.dim != dim {
                    return Err(field("params.lambda.dim", "must match shape.dim"));
                }
                positive("params.r", p.r)?;
                probe("params.probe", &p.probe, dim)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIRICHLET: &str = r#"{
        "name": "d",
        "shape": { "dim": 2, "root": { "type": "box", "min": [0, 0], "max": [1, 1] } },
        "operator": { "kind": "pLaplace", "t": 2 },
        "task": "dirichlet",
        "params": { "h": 0.125, "boundary": "x1" }
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::from_json(DIRICHLET).unwrap();
        assert_eq!(s.task.name(), "dirichlet");
        let again = Scenario::from_json(&s.canonical_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = DIRICHLET.replace("\"x1\"", "\"x1 +\"");
        let e = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(e.starts_with("params.boundary"), "{e}");
        let bad = DIRICHLET.replace("\"x1\"", "\"r\"");
        assert!(Scenario::from_json(&bad)
            .unwrap_err()
            .to_string()
            .starts_with("params.y"));
        let bad = DIRICHLET.replace("0.125", "-1");
        assert!(Scenario::from_json(&bad)
            .unwrap_err()
            .to_string()
            .starts_with("params.h"));
        let bad = DIRICHLET.replace("\"dirichlet\"", "\"nonsense\"");
        assert!(Scenario::from_json(&bad).is_err());
        let bad = DIRICHLET.replace("\"h\": 0.125,", "");
        assert!(Scenario::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("h"));
        let bad = DIRICHLET.replace("pLaplace", "custom");
        assert!(Scenario::from_json(&bad)
            .unwrap_err()
            .to_string()
            .starts_with("operator"));
    }
}
