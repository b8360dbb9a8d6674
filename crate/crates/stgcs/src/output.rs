//! Solution files: `solution.json`, `trajectory.csv` and `plot.svg`.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stgcs_core::geometry::{HPolytope, Point};
use stgcs_core::solver::Termination;
use stgcs_core::spline::{position_at_time, BezierSegment, SplineError, Trajectory};
use stgcs_core::validation::{CollisionEvent, ValidationReport};
use thiserror::Error;

use crate::pipeline::Plan;
use crate::scenario::{Bounds, ObstacleSpec, Scenario, ScenarioMode, TimeSpan};
use crate::svg;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trajectory: {0}")]
    Trajectory(#[from] SplineError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionRecord {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl RegionRecord {
    pub fn from_polytope(h: &HPolytope) -> Self {
        let d = h.dim();
        Self { normals: h.normals().chunks(d).map(<[f64]>::to_vec).collect(), offsets: h.offsets().to_vec() }
    }

    pub fn to_polytope(&self) -> Option<HPolytope> {
        let d = self.normals.first()?.len();
        HPolytope::new(d, self.normals.concat(), self.offsets.clone()).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub regions: Vec<RegionRecord>,
    pub edges: Vec<[usize; 2]>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsRecord {
    pub nodes: usize,
    pub relaxations: usize,
    pub restrictions: usize,
    pub sets: usize,
    pub edges: usize,
}

/// Wall-clock seconds; the only nondeterministic part of a solution file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingRecord {
    pub regions: f64,
    pub graph: f64,
    pub optimization: f64,
    pub total: f64,
    pub relaxation_solver: f64,
    pub restriction_solver: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionRecord {
    pub t: f64,
    pub position: [f64; 2],
    pub obstacle: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub passed: bool,
    pub collision_events: Vec<CollisionRecord>,
    pub max_speed: f64,
    pub max_junction_continuity_residual: f64,
    pub max_junction_diff_residual: f64,
    pub terminal_errors: [f64; 2],
    pub time_monotone: bool,
}

impl From<&ValidationReport> for ReportRecord {
    fn from(r: &ValidationReport) -> Self {
        Self {
            passed: r.passed,
            collision_events: r
                .collision_events
                .iter()
                .map(|&CollisionEvent { t, position, obstacle }| CollisionRecord { t, position, obstacle })
                .collect(),
            max_speed: r.max_speed,
            max_junction_continuity_residual: r.max_junction_continuity_residual,
            max_junction_diff_residual: r.max_junction_diff_residual,
            terminal_errors: r.terminal_errors,
            time_monotone: r.time_monotone,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationRecord {
    Optimal,
    NodeLimit,
}

/// Everything `solution.json` holds. Enough to re-validate against a
/// scenario and to redraw the figure without re-planning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub mode: ScenarioMode,
    pub bounds: Bounds,
    pub time: TimeSpan,
    pub path: Vec<usize>,
    /// One list of control points per segment.
    pub control_points: Vec<Vec<Vec<f64>>>,
    pub cost: f64,
    pub lower_bound: f64,
    pub root_bound: f64,
    pub termination: TerminationRecord,
    pub inexact: bool,
    pub stats: StatsRecord,
    pub graph: GraphRecord,
    pub obstacles: Vec<ObstacleSpec>,
    pub validation: ReportRecord,
    pub timing: TimingRecord,
}

impl SolutionFile {
    pub fn new(scenario: &Scenario, plan: &Plan) -> Self {
        let sol = &plan.solution;
        Self {
            mode: scenario.mode,
            bounds: scenario.bounds.clone(),
            time: scenario.time.clone(),
            path: sol.path.clone(),
            control_points: sol
                .trajectory
                .segments()
                .iter()
                .map(|s| s.control_points().iter().map(|p| p.as_slice().to_vec()).collect())
                .collect(),
            cost: sol.cost,
            lower_bound: sol.lower_bound,
            root_bound: sol.root_bound,
            termination: match sol.termination {
                Termination::Optimal => TerminationRecord::Optimal,
                Termination::NodeLimit => TerminationRecord::NodeLimit,
            },
            inexact: sol.inexact,
            stats: StatsRecord {
                nodes: sol.stats.nodes,
                relaxations: sol.stats.relaxations,
                restrictions: sol.stats.restrictions,
                sets: plan.graph.num_vertices(),
                edges: plan.graph.num_edges(),
            },
            graph: GraphRecord {
                regions: plan.graph.regions().iter().map(RegionRecord::from_polytope).collect(),
                edges: plan.graph.edges().iter().map(|&(a, b)| [a, b]).collect(),
                source: plan.terminals.source,
                sink: plan.terminals.sink,
            },
            obstacles: scenario.obstacles.clone(),
            validation: (&plan.report).into(),
            timing: TimingRecord {
                regions: plan.timings.regions,
                graph: plan.timings.graph,
                optimization: plan.timings.optimization,
                total: plan.timings.total,
                relaxation_solver: sol.stats.relaxation_time,
                restriction_solver: sol.stats.restriction_time,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, OutputError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, OutputError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn trajectory(&self) -> Result<Trajectory, OutputError> {
        let segments = self
            .control_points
            .iter()
            .map(|seg| {
                let pts = seg
                    .iter()
                    .map(|c| Point::new(c).map_err(|_| SplineError::MixedDimensions))
                    .collect::<Result<Vec<_>, _>>()?;
                BezierSegment::new(pts)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory::new(segments, self.mode.into())?)
    }
}

/// C `printf` `%.*g` formatting.
pub fn format_g(x: f64, precision: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `(t, x, y)` rows at `steps + 1` uniform times over the horizon. A planar
/// path is timed uniformly in its curve parameter.
pub fn sample_trajectory(traj: &Trajectory, horizon: (f64, f64), steps: usize) -> Result<Vec<[f64; 3]>, SplineError> {
    let (t0, tf) = traj.time_span().unwrap_or(horizon);
    let steps = steps.max(1);
    (0..=steps)
        .map(|k| {
            let t = if k == steps { tf } else { t0 + (tf - t0) * k as f64 / steps as f64 };
            let p = if traj.time_span().is_some() {
                position_at_time(traj, t)?
            } else {
                let r = traj.len() as f64 * k as f64 / steps as f64;
                traj.eval(r.min(traj.len() as f64))?
            };
            Ok([t, p.x(), p.y()])
        })
        .collect()
}

pub fn write_trajectory_csv(path: &Path, rows: &[[f64; 3]]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y"])?;
    for r in rows {
        w.write_record(r.iter().map(|v| format_g(*v, 9)))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes `trajectory.csv`, `solution.json` and `plot.svg` into `out_dir`,
/// creating it if needed. The CSV holds 1001 uniform samples.
pub fn write_outputs(file: &SolutionFile, out_dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let traj = file.trajectory()?;
    let rows = sample_trajectory(&traj, (file.time.start, file.time.end), 1000)?;
    write_trajectory_csv(&out_dir.join("trajectory.csv"), &rows)?;
    let json = out_dir.join("solution.json");
    fs::write(&json, file.to_json() + "\n").map_err(io_err(&json))?;
    let plot = out_dir.join("plot.svg");
    fs::write(&plot, svg::render(file, None)?).map_err(io_err(&plot))?;
    Ok(())
}
