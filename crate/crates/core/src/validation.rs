//! Sampling-based certification of a planned trajectory.
//!
//! The checks here use none of the planner's convex machinery: positions are
//! sampled on a uniform time grid and tested against obstacle cross-sections
//! directly.

use alloc::vec::Vec;

use crate::geometry::{polygon_signed_distance, Point, SpaceTimeObstacle};
use crate::spline::{position_at_time, Trajectory};
use crate::Mode;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Time step of the sampling grid, seconds.
    pub dt: f64,
    /// Required clearance from obstacles, meters.
    pub margin: f64,
    pub tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { dt: 1e-3, margin: 0.0, tol: 1e-6 }
    }
}

/// What the trajectory is checked against.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationTarget<'a> {
    pub obstacles: &'a [SpaceTimeObstacle],
    pub start: Point,
    pub goal: Point,
    /// Time horizon. A planar trajectory is mapped onto it uniformly in the
    /// curve parameter.
    pub horizon: (f64, f64),
    /// Speed limit; ignored for planar trajectories.
    pub v_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollisionEvent {
    pub t: f64,
    pub position: [f64; 2],
    pub obstacle: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub collision_events: Vec<CollisionEvent>,
    /// Largest central finite-difference speed, m/s. Zero for planar paths.
    pub max_speed: f64,
    pub max_junction_continuity_residual: f64,
    pub max_junction_diff_residual: f64,
    /// Distance of the trajectory's first and last points from the start and
    /// goal.
    pub terminal_errors: [f64; 2],
    pub time_monotone: bool,
    pub passed: bool,
}

fn time_grid(t0: f64, tf: f64, dt: f64) -> Vec<f64> {
    let steps = libm::ceil((tf - t0) / dt - 1e-9).max(1.0) as usize;
    (0..=steps).map(|k| if k == steps { tf } else { t0 + k as f64 * dt }).collect()
}

// positive time slope on every derivative control point
fn strictly_increasing_time(traj: &Trajectory) -> bool {
    traj.segments().iter().all(|s| s.control_points().windows(2).all(|w| w[1].t() > w[0].t()))
}

/// Checks collisions, speed, causality, continuity, differentiability and
/// terminal attainment. Failures are recorded in the report, never raised.
///
/// # Panics
///
/// If `opts.dt` is not positive.
pub fn validate_solution(traj: &Trajectory, target: &ValidationTarget<'_>, opts: &ValidationOptions) -> ValidationReport {
    assert!(opts.dt > 0.0, "dt must be positive");
    let spacetime = traj.mode() == Mode::SpaceTime3D;
    let time_monotone = !spacetime || strictly_increasing_time(traj);
    let (t0, tf) = match traj.time_span() {
        Some(span) if spacetime => span,
        _ => target.horizon,
    };

    let times = time_grid(t0, tf, opts.dt);
    let length = traj.len() as f64;
    let positions: Vec<Option<Point>> = times
        .iter()
        .map(|&t| {
            if spacetime {
                if time_monotone {
                    position_at_time(traj, t).ok()
                } else {
                    None
                }
            } else {
                let r = if tf > t0 { length * (t - t0) / (tf - t0) } else { 0.0 };
                traj.eval(r.clamp(0.0, length)).ok()
            }
        })
        .collect();

    let mut collision_events = Vec::new();
    for (&t, p) in times.iter().zip(&positions) {
        let Some(p) = p else { continue };
        for (i, o) in target.obstacles.iter().enumerate() {
            if t < o.t_start() || t > o.t_end() {
                continue;
            }
            let poly = o.cross_section(t).expect("time inside obstacle lifetime");
            if polygon_signed_distance(&poly, p) < opts.margin - opts.tol {
                collision_events.push(CollisionEvent { t, position: [p.x(), p.y()], obstacle: i });
            }
        }
    }

    let mut max_speed = 0.0_f64;
    if spacetime {
        for k in 1..positions.len().saturating_sub(1) {
            if let (Some(a), Some(b)) = (&positions[k - 1], &positions[k + 1]) {
                let h = times[k + 1] - times[k - 1];
                max_speed = max_speed.max(a.distance_xy(b) / h);
            }
        }
    }

    let samples_missing = positions.iter().any(Option::is_none);
    let terminal_errors = [
        dist_checked(traj.start(), &target.start),
        dist_checked(traj.end(), &target.goal),
    ];
    let continuity = traj.max_continuity_residual();
    let diff = traj.max_differentiability_residual();
    let speed_ok = match target.v_max {
        Some(v) if spacetime => max_speed <= v * (1.0 + opts.tol),
        _ => true,
    };
    let passed = collision_events.is_empty()
        && !samples_missing
        && speed_ok
        && continuity <= opts.tol
        && diff <= opts.tol
        && terminal_errors.iter().all(|&e| e <= opts.tol)
        && time_monotone;
    ValidationReport {
        collision_events,
        max_speed,
        max_junction_continuity_residual: continuity,
        max_junction_diff_residual: diff,
        terminal_errors,
        time_monotone,
        passed,
    }
}

fn dist_checked(a: &Point, b: &Point) -> f64 {
    if a.dim() == b.dim() {
        a.distance(b)
    } else {
        f64::INFINITY
    }
}
