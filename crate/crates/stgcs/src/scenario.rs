//! Scenario files.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "mode": "spacetime",
//!   "bounds": { "min": [0, 0], "max": [1, 1] },
//!   "time": { "start": 0, "end": 1 },
//!   "start": [0.5, 0], "goal": [0.5, 1],
//!   "v_max": 2.0,
//!   "obstacles": [{ "vertices_start": [[0.3, 0.2], [0.6, 0.2], [0.6, 0.4], [0.3, 0.4]] }],
//!   "iris": { "samples": 80, "seed": 0 }
//! }
//! ```
//!
//! `epsilon`, `spline_order`, `iris` fields and `solver` are optional.
//! Obstacles without `vertices_end` are static. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stgcs_core::formulation::{FormulationParams, Relaxation};
use stgcs_core::geometry::{extrude_obstacle, ConvexPolygon2D, HPolytope, Point, SpaceTimeObstacle};
use stgcs_core::iris::{Environment, IrisError, IrisParams};
use stgcs_core::solver::BnBOptions;
use stgcs_core::Mode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    Static,
    Spacetime,
}

impl From<ScenarioMode> for Mode {
    fn from(m: ScenarioMode) -> Self {
        match m {
            ScenarioMode::Static => Mode::Static2D,
            ScenarioMode::Spacetime => Mode::SpaceTime3D,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpan {
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub vertices_start: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices_end: Option<Vec<[f64; 2]>>,
}

impl ObstacleSpec {
    pub fn is_static(&self) -> bool {
        self.vertices_end.as_ref().map_or(true, |v| *v == self.vertices_start)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrisSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_growth")]
    pub termination_growth: f64,
}

fn default_samples() -> usize {
    80
}

fn default_max_iterations() -> usize {
    IrisParams::default().max_iterations
}

fn default_growth() -> f64 {
    IrisParams::default().termination_growth
}

impl Default for IrisSpec {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: 0,
            max_iterations: default_max_iterations(),
            termination_growth: default_growth(),
        }
    }
}

/// Which convex relaxation branch-and-bound works on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationSpec {
    Aggregated,
    #[default]
    PerEdge,
}

impl From<RelaxationSpec> for Relaxation {
    fn from(r: RelaxationSpec) -> Self {
        match r {
            RelaxationSpec::Aggregated => Relaxation::Aggregated,
            RelaxationSpec::PerEdge => Relaxation::PerEdge,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub relaxation: RelaxationSpec,
    #[serde(default = "default_integrality")]
    pub integrality_tol: f64,
    #[serde(default = "default_gap")]
    pub gap_tol: f64,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

fn default_integrality() -> f64 {
    BnBOptions::default().integrality_tol
}

fn default_gap() -> f64 {
    BnBOptions::default().gap_tol
}

fn default_max_nodes() -> usize {
    BnBOptions::default().max_nodes
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            relaxation: RelaxationSpec::default(),
            integrality_tol: default_integrality(),
            gap_tol: default_gap(),
            max_nodes: default_max_nodes(),
        }
    }
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_order() -> usize {
    3
}

fn default_time() -> TimeSpan {
    TimeSpan { start: 0.0, end: 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mode: ScenarioMode,
    pub bounds: Bounds,
    #[serde(default = "default_time")]
    pub time: TimeSpan,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_order")]
    pub spline_order: usize,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub iris: IrisSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

fn finite(field: &str, values: &[f64]) -> Result<(), ScenarioError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn polygon(field: &str, vertices: &[[f64; 2]]) -> Result<ConvexPolygon2D, ScenarioError> {
    let pts: Vec<Point> = vertices.iter().map(|v| Point::xy(v[0], v[1])).collect();
    ConvexPolygon2D::new(pts).map_err(|e| invalid(field, e.to_string()))
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks every invariant the planner relies on.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        finite("bounds", &[self.bounds.min[0], self.bounds.min[1], self.bounds.max[0], self.bounds.max[1]])?;
        if !(self.bounds.min[0] < self.bounds.max[0] && self.bounds.min[1] < self.bounds.max[1]) {
            return Err(invalid("bounds", "min must be below max in every coordinate"));
        }
        finite("time", &[self.time.start, self.time.end])?;
        finite("start", &self.start)?;
        finite("goal", &self.goal)?;
        if self.start == self.goal {
            return Err(invalid("goal", "must differ from start"));
        }
        for (name, p) in [("start", self.start), ("goal", self.goal)] {
            let inside = (0..2).all(|k| p[k] >= self.bounds.min[k] && p[k] <= self.bounds.max[k]);
            if !inside {
                return Err(invalid(name, "must lie inside bounds"));
            }
        }
        if self.spline_order < 1 {
            return Err(invalid("spline_order", "must be at least 1"));
        }
        match self.mode {
            ScenarioMode::Spacetime => {
                if !(self.time.end > self.time.start) {
                    return Err(invalid("time", "end must be after start"));
                }
                match self.v_max {
                    None => return Err(invalid("v_max", "required in spacetime mode")),
                    Some(v) if !(v > 0.0 && v.is_finite()) => return Err(invalid("v_max", "must be positive")),
                    _ => {}
                }
                if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
                    return Err(invalid("epsilon", "must be positive"));
                }
            }
            ScenarioMode::Static => {
                if let Some(i) = self.obstacles.iter().position(|o| !o.is_static()) {
                    return Err(invalid(format!("obstacles[{i}].vertices_end"), "static mode requires stationary obstacles"));
                }
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let a = polygon(&format!("obstacles[{i}].vertices_start"), &o.vertices_start)?;
            if let Some(end) = &o.vertices_end {
                let field = format!("obstacles[{i}].vertices_end");
                let b = polygon(&field, end)?;
                if a.len() != b.len() {
                    return Err(invalid(field, "must have as many vertices as vertices_start"));
                }
                if self.mode == ScenarioMode::Spacetime {
                    extrude_obstacle(a, b, self.time.start, self.time.end).map_err(|e| invalid(field, e.to_string()))?;
                }
            }
        }
        if self.iris.max_iterations < 1 {
            return Err(invalid("iris.max_iterations", "must be at least 1"));
        }
        if !(self.iris.termination_growth > 0.0) {
            return Err(invalid("iris.termination_growth", "must be positive"));
        }
        if !(self.solver.integrality_tol > 0.0) || !(self.solver.gap_tol >= 0.0) {
            return Err(invalid("solver", "tolerances must be positive"));
        }
        Ok(())
    }

    /// Non-fatal problems, such as a goal that the speed limit cannot reach.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let (ScenarioMode::Spacetime, Some(v)) = (self.mode, self.v_max) {
            let dist = (self.goal[0] - self.start[0]).hypot(self.goal[1] - self.start[1]);
            if v * (self.time.end - self.time.start) < dist {
                out.push(format!(
                    "v_max {v} cannot cover the start-goal distance {dist:.6} within the time horizon"
                ));
            }
        }
        out
    }

    pub fn core_mode(&self) -> Mode {
        self.mode.into()
    }

    /// Start point in configuration space.
    pub fn start_point(&self) -> Point {
        match self.mode {
            ScenarioMode::Static => Point::xy(self.start[0], self.start[1]),
            ScenarioMode::Spacetime => Point::xyt(self.start[0], self.start[1], self.time.start),
        }
    }

    pub fn goal_point(&self) -> Point {
        match self.mode {
            ScenarioMode::Static => Point::xy(self.goal[0], self.goal[1]),
            ScenarioMode::Spacetime => Point::xyt(self.goal[0], self.goal[1], self.time.end),
        }
    }

    /// Obstacles over the time horizon; static ones are stationary prisms.
    pub fn spacetime_obstacles(&self) -> Vec<SpaceTimeObstacle> {
        self.obstacles
            .iter()
            .map(|o| {
                let a = polygon("", &o.vertices_start).expect("validated");
                let b = match &o.vertices_end {
                    Some(v) => polygon("", v).expect("validated"),
                    None => a.clone(),
                };
                extrude_obstacle(a, b, self.time.start, self.time.end).expect("validated")
            })
            .collect()
    }

    pub fn environment(&self) -> Result<Environment, IrisError> {
        let (lo, hi) = (self.bounds.min, self.bounds.max);
        match self.mode {
            ScenarioMode::Static => {
                let bounds = HPolytope::from_box(&Point::xy(lo[0], lo[1]), &Point::xy(hi[0], hi[1]))?;
                let polys = self
                    .obstacles
                    .iter()
                    .map(|o| polygon("", &o.vertices_start).expect("validated"))
                    .collect::<Vec<_>>();
                Environment::planar(bounds, &polys)
            }
            ScenarioMode::Spacetime => {
                let bounds = HPolytope::from_box(
                    &Point::xyt(lo[0], lo[1], self.time.start),
                    &Point::xyt(hi[0], hi[1], self.time.end),
                )?;
                Environment::spacetime(bounds, &self.spacetime_obstacles())
            }
        }
    }

    pub fn formulation_params(&self) -> FormulationParams {
        let params = match self.mode {
            ScenarioMode::Static => FormulationParams::static_2d(self.spline_order),
            ScenarioMode::Spacetime => {
                FormulationParams::spacetime(self.spline_order, self.v_max.unwrap_or(f64::INFINITY), self.epsilon)
            }
        };
        params.with_relaxation(self.solver.relaxation.into())
    }

    pub fn iris_params(&self) -> IrisParams {
        IrisParams {
            max_iterations: self.iris.max_iterations,
            termination_growth: self.iris.termination_growth,
            ..IrisParams::default()
        }
    }

    pub fn bnb_options(&self) -> BnBOptions {
        BnBOptions {
            integrality_tol: self.solver.integrality_tol,
            gap_tol: self.solver.gap_tol,
            max_nodes: self.solver.max_nodes,
            ..BnBOptions::default()
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_json(&text)
}
