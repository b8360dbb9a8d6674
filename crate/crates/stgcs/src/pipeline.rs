//! Scenario to validated trajectory.

use std::time::Instant;

use stgcs_core::conic::ConicSolver;
use stgcs_core::geometry::HPolytope;
use stgcs_core::graph::{build_graph, locate_terminals, GcsGraph, GraphError, Terminals, TOUCH_TOL};
use stgcs_core::iris::{generate_regions, IrisError};
use stgcs_core::solver::{solve_gcs, Solution, SolverError};
use stgcs_core::validation::{validate_solution, ValidationOptions, ValidationReport, ValidationTarget};
use thiserror::Error;

use crate::scenario::Scenario;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("region generation failed: {0}")]
    Iris(#[from] IrisError),
    #[error("graph construction failed: {0}")]
    Graph(#[from] GraphError),
    #[error("optimization failed: {0}")]
    Solver(#[from] SolverError),
}

impl PlanError {
    /// True when the scenario simply admits no trajectory through the
    /// generated regions, as opposed to a malformed input or solver fault.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            PlanError::Solver(SolverError::Infeasible)
                | PlanError::Solver(SolverError::NodeLimitExceeded)
                | PlanError::Graph(GraphError::NoContainingSet(_))
                | PlanError::Iris(IrisError::TerminalInCollision(_))
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub regions: f64,
    pub graph: f64,
    pub optimization: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub graph: GcsGraph,
    pub terminals: Terminals,
    pub solution: Solution,
    pub report: ValidationReport,
    pub timings: Timings,
}

/// Regions and graph only, without optimizing.
pub fn build_scenario_graph(scenario: &Scenario, solver: &dyn ConicSolver) -> Result<(GcsGraph, Timings), PlanError> {
    let clock = Instant::now();
    let env = scenario.environment()?;
    let regions: Vec<HPolytope> = generate_regions(
        &env,
        &scenario.start_point(),
        &scenario.goal_point(),
        scenario.iris.samples,
        scenario.iris.seed,
        &scenario.iris_params(),
        solver,
    )?;
    let regions_time = clock.elapsed().as_secs_f64();
    let graph = build_graph(regions, TOUCH_TOL, solver)?;
    let total = clock.elapsed().as_secs_f64();
    Ok((graph, Timings { regions: regions_time, graph: total - regions_time, optimization: 0.0, total }))
}

pub fn validate_against(scenario: &Scenario, solution: &Solution, opts: &ValidationOptions) -> ValidationReport {
    let obstacles = scenario.spacetime_obstacles();
    let target = ValidationTarget {
        obstacles: &obstacles,
        start: scenario.start_point(),
        goal: scenario.goal_point(),
        horizon: (scenario.time.start, scenario.time.end),
        v_max: scenario.v_max,
    };
    validate_solution(&solution.trajectory, &target, opts)
}

/// Generates regions, builds the graph, solves and validates.
pub fn plan(scenario: &Scenario, solver: &dyn ConicSolver) -> Result<Plan, PlanError> {
    let clock = Instant::now();
    let (graph, mut timings) = build_scenario_graph(scenario, solver)?;
    let terminals = locate_terminals(&graph, scenario.start_point(), scenario.goal_point())?;
    let solve_clock = Instant::now();
    let solution = solve_gcs(&graph, &terminals, &scenario.formulation_params(), &scenario.bnb_options(), solver)?;
    timings.optimization = solve_clock.elapsed().as_secs_f64();
    timings.total = clock.elapsed().as_secs_f64();
    let report = validate_against(scenario, &solution, &ValidationOptions::default());
    Ok(Plan { graph, terminals, solution, report, timings })
}
