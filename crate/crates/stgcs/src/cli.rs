//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 no feasible trajectory,
//! 3 a trajectory that fails validation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stgcs_core::conic::ClarabelSolver;
use stgcs_core::validation::{validate_solution, ValidationOptions, ValidationTarget};

use crate::cluttered::{cluttered_scenario, ClutterSpec};
use crate::output::{write_outputs, ReportRecord, SolutionFile};
use crate::pipeline::{plan, PlanError};
use crate::scenario::{load_scenario, Scenario};
use crate::svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stgcs", version, about = "Collision-free trajectories through space-time graphs of convex sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate regions, solve, validate and write outputs.
    Plan(PlanArgs),
    /// Re-check a solution file against a scenario.
    Validate {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
    /// Mean graph size, cost and time over repeated planning runs.
    Sweep(SweepArgs),
    /// Draw a solution file as SVG.
    Render {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Show regions and obstacles at this time only.
        #[arg(long)]
        cross_section: Option<f64>,
    },
    /// Print a scenario in canonical form with all defaults filled in.
    DumpScenario {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of random region seeds.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bézier order of each segment.
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, required_unless_present = "cluttered", conflicts_with = "cluttered")]
    scenario: Option<PathBuf>,
    /// Use a fresh random cluttered environment for every repeat.
    #[arg(long)]
    cluttered: bool,
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',', required = true)]
    samples: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// First seed; repeat `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn fail(io: &mut Io<'_>, code: i32, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(io.err, "error: {msg}");
    code
}

fn read_scenario(io: &mut Io<'_>, path: &PathBuf) -> Result<Scenario, i32> {
    let s = load_scenario(path).map_err(|e| fail(io, EXIT_USAGE, format!("{}: {e}", path.display())))?;
    for w in s.warnings() {
        let _ = writeln!(io.err, "warning: {w}");
    }
    Ok(s)
}

fn plan_error(io: &mut Io<'_>, e: PlanError) -> i32 {
    let code = if e.is_infeasible() { EXIT_INFEASIBLE } else { EXIT_USAGE };
    fail(io, code, e)
}

fn cmd_plan(io: &mut Io<'_>, args: PlanArgs) -> Result<i32, i32> {
    let mut scenario = read_scenario(io, &args.scenario)?;
    if let Some(n) = args.samples {
        scenario.iris.samples = n;
    }
    if let Some(s) = args.seed {
        scenario.iris.seed = s;
    }
    if let Some(k) = args.order {
        scenario.spline_order = k;
    }
    scenario.validate().map_err(|e| fail(io, EXIT_USAGE, e))?;
    let solver = ClarabelSolver::default();
    let p = plan(&scenario, &solver).map_err(|e| plan_error(io, e))?;
    let file = SolutionFile::new(&scenario, &p);
    write_outputs(&file, &args.out).map_err(|e| fail(io, EXIT_USAGE, e))?;
    let _ = writeln!(
        io.out,
        "cost {:.6} m  bound {:.6}  sets {}  edges {}  nodes {}  time {:.3} s  validation {}",
        file.cost,
        file.lower_bound,
        file.stats.sets,
        file.stats.edges,
        file.stats.nodes,
        file.timing.total,
        if file.validation.passed { "passed" } else { "FAILED" }
    );
    Ok(if file.validation.passed { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_validate(io: &mut Io<'_>, solution: PathBuf, scenario: PathBuf, dt: f64, margin: f64) -> Result<i32, i32> {
    if !(dt > 0.0) || !(margin >= 0.0) {
        return Err(fail(io, EXIT_USAGE, "dt must be positive and margin nonnegative"));
    }
    let scenario = read_scenario(io, &scenario)?;
    let file = SolutionFile::load(&solution).map_err(|e| fail(io, EXIT_USAGE, e))?;
    let traj = file.trajectory().map_err(|e| fail(io, EXIT_USAGE, e))?;
    if traj.mode() != scenario.core_mode() {
        return Err(fail(io, EXIT_USAGE, "solution and scenario modes differ"));
    }
    let obstacles = scenario.spacetime_obstacles();
    let target = ValidationTarget {
        obstacles: &obstacles,
        start: scenario.start_point(),
        goal: scenario.goal_point(),
        horizon: (scenario.time.start, scenario.time.end),
        v_max: scenario.v_max,
    };
    let report = validate_solution(&traj, &target, &ValidationOptions { dt, margin, ..ValidationOptions::default() });
    let record = ReportRecord::from(&report);
    let _ = writeln!(io.out, "{}", serde_json::to_string_pretty(&record).expect("report serializes"));
    Ok(if report.passed { EXIT_OK } else { EXIT_INVALID })
}

#[derive(Default)]
struct Tally {
    runs: usize,
    solved: usize,
    sets: f64,
    edges: f64,
    cost: f64,
    time: f64,
}

fn cmd_sweep(io: &mut Io<'_>, args: SweepArgs) -> Result<i32, i32> {
    let template = match &args.scenario {
        Some(p) => Some(read_scenario(io, p)?),
        None => None,
    };
    let solver = ClarabelSolver::default();
    let mut w = csv::Writer::from_path(&args.out).map_err(|e| fail(io, EXIT_USAGE, e))?;
    w.write_record(["samples", "sets", "edges", "cost", "time"]).map_err(|e| fail(io, EXIT_USAGE, e))?;
    for &samples in &args.samples {
        let mut t = Tally::default();
        for r in 0..args.repeats {
            let seed = args.seed + r;
            let scenario = match &template {
                Some(s) => {
                    let mut s = s.clone();
                    s.iris.samples = samples;
                    s.iris.seed = seed;
                    s
                }
                None => cluttered_scenario(&ClutterSpec::default(), seed, samples),
            };
            t.runs += 1;
            match plan(&scenario, &solver) {
                Ok(p) => {
                    t.solved += 1;
                    t.sets += p.graph.num_vertices() as f64;
                    t.edges += p.graph.num_edges() as f64;
                    t.cost += p.solution.cost;
                    t.time += p.timings.total;
                    if !p.report.passed {
                        let _ = writeln!(io.err, "warning: samples {samples} seed {seed}: validation failed");
                    }
                }
                Err(e) if e.is_infeasible() => {
                    let _ = writeln!(io.err, "samples {samples} seed {seed}: {e}");
                }
                Err(e) => return Err(plan_error(io, e)),
            }
        }
        let mean = |x: f64| if t.solved > 0 { x / t.solved as f64 } else { f64::NAN };
        let row = [
            samples.to_string(),
            format!("{:.2}", mean(t.sets)),
            format!("{:.2}", mean(t.edges)),
            format!("{:.4}", mean(t.cost)),
            format!("{:.3}", mean(t.time)),
        ];
        w.write_record(&row).map_err(|e| fail(io, EXIT_USAGE, e))?;
        let _ = writeln!(io.out, "samples {samples}: solved {}/{}  {}", t.solved, t.runs, row[1..].join("  "));
    }
    w.flush().map_err(|e| fail(io, EXIT_USAGE, e))?;
    Ok(EXIT_OK)
}

fn cmd_render(io: &mut Io<'_>, solution: PathBuf, out: PathBuf, cross_section: Option<f64>) -> Result<i32, i32> {
    let file = SolutionFile::load(&solution).map_err(|e| fail(io, EXIT_USAGE, e))?;
    let doc = svg::render(&file, cross_section).map_err(|e| fail(io, EXIT_USAGE, e))?;
    std::fs::write(&out, doc).map_err(|e| fail(io, EXIT_USAGE, format!("{}: {e}", out.display())))?;
    Ok(EXIT_OK)
}

/// Runs the command line `args` (program name first), writing to the given
/// streams, and returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(io.err, "{text}") } else { write!(io.out, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(&mut io, a),
        Command::Validate { solution, scenario, dt, margin } => cmd_validate(&mut io, solution, scenario, dt, margin),
        Command::Sweep(a) => cmd_sweep(&mut io, a),
        Command::Render { solution, out, cross_section } => cmd_render(&mut io, solution, out, cross_section),
        Command::DumpScenario { scenario } => read_scenario(&mut io, &scenario).map(|s| {
            let _ = writeln!(io.out, "{}", s.to_json());
            EXIT_OK
        }),
    };
    result.unwrap_or_else(|code| code)
}
