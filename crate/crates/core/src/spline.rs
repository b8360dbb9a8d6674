//! Bézier segments and piecewise trajectories.
//!
//! A trajectory with `L` segments is parameterized by `r ∈ [0, L]`; segment
//! `j` covers `[j, j + 1]`. In space-time mode the last coordinate of every
//! point is time, which the planner keeps strictly increasing, so a
//! trajectory can be indexed by time through bisection.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::Point;
use crate::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("a segment needs at least 2 control points, got {0}")]
    TooFewPoints(usize),
    #[error("control points have mixed dimensions")]
    MixedDimensions,
    #[error("trajectory has no segments")]
    Empty,
    #[error("segment dimension {found} does not match the trajectory mode (expected {expected})")]
    ModeMismatch { expected: usize, found: usize },
    #[error("parameter {0} outside the valid range")]
    ParameterOutOfRange(f64),
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("time indexing requires a space-time trajectory")]
    NotSpaceTime,
    #[error("arc length bounds need at least 2 samples")]
    TooFewSamples,
}

/// Bézier curve of order `n` with `n + 1` control points.
#[derive(Clone, Debug, PartialEq)]
pub struct BezierSegment {
    points: Vec<Point>,
}

impl BezierSegment {
    pub fn new(points: Vec<Point>) -> Result<Self, SplineError> {
        if points.len() < 2 {
            return Err(SplineError::TooFewPoints(points.len()));
        }
        let d = points[0].dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(SplineError::MixedDimensions);
        }
        Ok(Self { points })
    }

    pub fn control_points(&self) -> &[Point] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn first(&self) -> &Point {
        &self.points[0]
    }

    pub fn last(&self) -> &Point {
        &self.points[self.points.len() - 1]
    }

    /// Point at `s ∈ [0, 1]` by de Casteljau's recursion.
    pub fn eval(&self, s: f64) -> Result<Point, SplineError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(SplineError::ParameterOutOfRange(s));
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> Point {
        if s == 0.0 {
            return self.points[0];
        }
        if s == 1.0 {
            return *self.last();
        }
        let mut work: Vec<Point> = self.points.clone();
        for level in 1..work.len() {
            for k in 0..work.len() - level {
                work[k] = work[k].lerp(&work[k + 1], s);
            }
        }
        work[0]
    }

    /// Hodograph: control points `n (x_{k+1} − x_k)`. The derivative of a
    /// linear segment is returned as a two-point constant segment so the
    /// result is still a valid segment.
    pub fn derivative(&self) -> BezierSegment {
        let n = self.order() as f64;
        let mut points: Vec<Point> = self.points.windows(2).map(|w| (w[1] - w[0]) * n).collect();
        if points.len() == 1 {
            points.push(points[0]);
        }
        BezierSegment { points }
    }

    /// Length of the control polygon measured in the first two coordinates.
    pub fn control_polygon_length_xy(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance_xy(&w[1])).sum()
    }
}

pub fn bezier_eval(seg: &BezierSegment, s: f64) -> Result<Point, SplineError> {
    seg.eval(s)
}

pub fn bezier_derivative(seg: &BezierSegment) -> BezierSegment {
    seg.derivative()
}

/// Ordered Bézier segments.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    segments: Vec<BezierSegment>,
    mode: Mode,
}

impl Trajectory {
    /// Checks only that the segments are nonempty and match the mode's
    /// dimension; junction continuity is left to the validator so that
    /// defective trajectories can still be inspected.
    pub fn new(segments: Vec<BezierSegment>, mode: Mode) -> Result<Self, SplineError> {
        if segments.is_empty() {
            return Err(SplineError::Empty);
        }
        let d = mode.dim();
        if let Some(s) = segments.iter().find(|s| s.dim() != d) {
            return Err(SplineError::ModeMismatch { expected: d, found: s.dim() });
        }
        Ok(Self { segments, mode })
    }

    pub fn segments(&self) -> &[BezierSegment] {
        &self.segments
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn start(&self) -> &Point {
        self.segments[0].first()
    }

    pub fn end(&self) -> &Point {
        self.segments[self.segments.len() - 1].last()
    }

    /// `P(r)` for `r ∈ [0, L]`.
    pub fn eval(&self, r: f64) -> Result<Point, SplineError> {
        let l = self.segments.len() as f64;
        if !(0.0..=l).contains(&r) {
            return Err(SplineError::ParameterOutOfRange(r));
        }
        let j = (libm::floor(r) as usize).min(self.segments.len() - 1);
        Ok(self.segments[j].eval_unchecked(r - j as f64))
    }

    /// Time span of a space-time trajectory.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        (self.mode == Mode::SpaceTime3D).then(|| (self.start().t(), self.end().t()))
    }

    /// Largest `‖(x_{j,n} − x_{j+1,0})‖` over junctions.
    pub fn max_continuity_residual(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| w[0].last().distance(w[1].first()))
            .fold(0.0, f64::max)
    }

    /// Largest `‖(x_{j,n} − x_{j,n−1}) − (x_{j+1,1} − x_{j+1,0})‖` over junctions.
    pub fn max_differentiability_residual(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| {
                let a = w[0].control_points();
                let b = w[1].control_points();
                let da = a[a.len() - 1] - a[a.len() - 2];
                let db = b[1] - b[0];
                (da - db).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Sum of the control-polygon `xy` lengths, the planner's cost.
    pub fn control_polygon_length_xy(&self) -> f64 {
        self.segments.iter().map(BezierSegment::control_polygon_length_xy).sum()
    }
}

/// `xy` position of a space-time trajectory at time `t`.
pub fn position_at_time(traj: &Trajectory, t: f64) -> Result<Point, SplineError> {
    let (t0, tf) = traj.time_span().ok_or(SplineError::NotSpaceTime)?;
    if !(t >= t0 && t <= tf) {
        return Err(SplineError::TimeOutOfRange { t, start: t0, end: tf });
    }
    let segs = traj.segments();
    let seg = segs.iter().find(|s| s.last().t() >= t).unwrap_or(&segs[segs.len() - 1]);
    if t <= seg.first().t() {
        return Ok(seg.first().xy_part());
    }
    if t == seg.last().t() {
        return Ok(seg.last().xy_part());
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut p = seg.eval_unchecked(0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        p = seg.eval_unchecked(mid);
        let err = p.t() - t;
        if err.abs() <= 1e-12 {
            break;
        }
        if err < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    Ok(p.xy_part())
}

/// `(lower, upper)` bounds on the `xy` arc length: the polyline through
/// `n_samples` uniformly spaced parameters, and the control-polygon length.
pub fn arc_length_bounds(traj: &Trajectory, n_samples: usize) -> Result<(f64, f64), SplineError> {
    if n_samples < 2 {
        return Err(SplineError::TooFewSamples);
    }
    let l = traj.len() as f64;
    let mut lower = 0.0;
    let mut prev = *traj.start();
    for k in 1..n_samples {
        let r = l * k as f64 / (n_samples - 1) as f64;
        let p = traj.eval(r.min(l)).expect("sample inside parameter range");
        lower += prev.distance_xy(&p);
        prev = p;
    }
    Ok((lower, traj.control_polygon_length_xy()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quad() -> BezierSegment {
        BezierSegment::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 1.0), Point::xy(2.0, 0.0)]).unwrap()
    }

    #[test]
    fn quadratic_midpoint_and_derivative() {
        let q = quad();
        assert_eq!(q.eval(0.0).unwrap(), Point::xy(0.0, 0.0));
        assert_eq!(q.eval(1.0).unwrap(), Point::xy(2.0, 0.0));
        let m = q.eval(0.5).unwrap();
        assert!((m.x() - 1.0).abs() < 1e-15 && (m.y() - 0.5).abs() < 1e-15);
        let d = q.derivative();
        assert_eq!(d.control_points(), &[Point::xy(2.0, 2.0), Point::xy(2.0, -2.0)]);
        assert!(q.eval(1.5).is_err());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let p = Point::xyt(0.3, 0.4, 0.5);
        let s = BezierSegment::new(vec![p, p, p, p]).unwrap();
        for c in s.derivative().control_points() {
            assert_eq!(c.norm(), 0.0);
        }
        let lin = BezierSegment::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 2.0)]).unwrap();
        assert_eq!(lin.derivative().control_points(), &[Point::xy(1.0, 2.0), Point::xy(1.0, 2.0)]);
    }

    #[test]
    fn arc_length_of_quadratic() {
        let t = Trajectory::new(vec![quad()], Mode::Static2D).unwrap();
        let (lo, hi) = arc_length_bounds(&t, 200).unwrap();
        assert!((hi - 2.0 * core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(lo >= 2.0 && lo <= hi);
        let line = BezierSegment::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0)]).unwrap();
        let t = Trajectory::new(vec![line], Mode::Static2D).unwrap();
        let (lo, hi) = arc_length_bounds(&t, 17).unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn time_indexing_endpoints() {
        let s = BezierSegment::new(vec![
            Point::xyt(0.5, 0.0, 0.0),
            Point::xyt(0.5, 0.3, 0.2),
            Point::xyt(0.6, 0.7, 0.9),
            Point::xyt(0.5, 1.0, 1.0),
        ])
        .unwrap();
        let t = Trajectory::new(vec![s], Mode::SpaceTime3D).unwrap();
        assert_eq!(position_at_time(&t, 0.0).unwrap(), Point::xy(0.5, 0.0));
        assert_eq!(position_at_time(&t, 1.0).unwrap(), Point::xy(0.5, 1.0));
        assert!(matches!(position_at_time(&t, 1.1), Err(SplineError::TimeOutOfRange { .. })));
        let st = Trajectory::new(vec![quad()], Mode::Static2D).unwrap();
        assert_eq!(position_at_time(&st, 0.0), Err(SplineError::NotSpaceTime));
    }

    #[test]
    fn junction_residuals() {
        let a = BezierSegment::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)]).unwrap();
        let b = BezierSegment::new(vec![Point::xy(1.0, 1e-3), Point::xy(2.0, 1e-3)]).unwrap();
        let t = Trajectory::new(vec![a, b], Mode::Static2D).unwrap();
        assert!((t.max_continuity_residual() - 1e-3).abs() < 1e-15);
        assert!(t.max_differentiability_residual() < 1e-15);
        assert!(Trajectory::new(vec![quad()], Mode::SpaceTime3D).is_err());
    }
}
