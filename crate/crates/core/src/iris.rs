//! Convex free-space regions by iterative inflation.
//!
//! Each region grows from a seed point by alternating two steps:
//!
//! 1. With the current ellipsoid `{c + C u : ‖u‖ ≤ 1}` as metric, find the
//!    point of every obstacle closest to `c` and cut with the hyperplane
//!    tangent to the metric ball at that point. Obstacles are visited in
//!    order of increasing distance; one that already lies behind a plane of
//!    this round is skipped.
//! 2. Replace the ellipsoid by the maximum-volume ellipsoid inscribed in the
//!    new polytope.
//!
//! Previously generated regions act as additional obstacles, which keeps
//! region interiors disjoint while letting them share facets.
//!
//! The inscribed ellipsoid is computed by a damped Newton barrier method on
//! `(C, c)` directly. On termination the barrier guarantees `log det C`
//! within `1e-6` of the optimum.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conic::{AffineRow, ConicProgram, ConicSolver, SolveStatus, Tolerances};
use crate::geometry::{ConvexPolygon2D, Ellipsoid, GeometryError, HPolytope, Point, SpaceTimeObstacle};
use crate::graph::Terminal;
use crate::math;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrisError {
    #[error("seed lies inside an obstacle or an existing region")]
    SeedRejected,
    #[error("seed lies outside the environment bounds")]
    SeedOutsideBounds,
    #[error("ellipsoid center lies inside the obstacle")]
    CenterInObstacle,
    #[error("the {0} point is in collision")]
    TerminalInCollision(Terminal),
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("conic solver reported {0:?}")]
    Solver(SolveStatus),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IrisParams {
    pub max_iterations: usize,
    /// Stop once an iteration grows the ellipsoid volume by a smaller
    /// relative amount.
    pub termination_growth: f64,
    /// Containment tolerance for seeds in bounds and existing regions.
    pub boundary_tol: f64,
    /// Seeds within this distance of an obstacle (measured on its facets)
    /// are rejected.
    pub seed_rejection_tol: f64,
}

impl Default for IrisParams {
    fn default() -> Self {
        Self { max_iterations: 10, termination_growth: 0.02, boundary_tol: 1e-9, seed_rejection_tol: 1e-6 }
    }
}

impl IrisParams {
    pub fn validate(&self) -> Result<(), IrisError> {
        if self.max_iterations < 1 {
            return Err(IrisError::InvalidParams("max_iterations must be at least 1"));
        }
        if !(self.termination_growth > 0.0) {
            return Err(IrisError::InvalidParams("termination_growth must be positive"));
        }
        if !(self.boundary_tol >= 0.0) || !(self.seed_rejection_tol >= 0.0) {
            return Err(IrisError::InvalidParams("tolerances must be nonnegative"));
        }
        Ok(())
    }
}

/// An obstacle in vertex form together with its hull.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    vertices: Vec<Point>,
    hull: HPolytope,
}

impl Obstacle {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let hull = HPolytope::from_vertices(&vertices)?;
        Ok(Self { vertices, hull })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn hull(&self) -> &HPolytope {
        &self.hull
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    bounds: HPolytope,
    obstacles: Vec<Obstacle>,
}

impl Environment {
    pub fn new(bounds: HPolytope, obstacles: Vec<Obstacle>) -> Result<Self, IrisError> {
        if !bounds.is_bounded() {
            return Err(GeometryError::Unbounded.into());
        }
        if let Some(o) = obstacles.iter().find(|o| o.hull.dim() != bounds.dim()) {
            return Err(GeometryError::DimensionMismatch { expected: bounds.dim(), found: o.hull.dim() }.into());
        }
        Ok(Self { bounds, obstacles })
    }

    /// Planar environment with static polygons.
    pub fn planar(bounds: HPolytope, polygons: &[ConvexPolygon2D]) -> Result<Self, IrisError> {
        let obstacles = polygons
            .iter()
            .map(|p| Obstacle::new(p.vertices().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bounds, obstacles)
    }

    /// Space-time environment; each obstacle becomes its prism.
    pub fn spacetime(bounds: HPolytope, obstacles: &[SpaceTimeObstacle]) -> Result<Self, IrisError> {
        let obstacles = obstacles
            .iter()
            .map(|o| Obstacle::new(o.prism_vertices().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bounds, obstacles)
    }

    pub fn bounds(&self) -> &HPolytope {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Index of the first obstacle whose hull contains `p` within `tol`.
    pub fn in_collision(&self, p: &Point, tol: f64) -> Option<usize> {
        self.obstacles.iter().position(|o| o.hull.violation(p) <= tol)
    }
}

// ---------------------------------------------------------------------------
// Maximum-volume inscribed ellipsoid

const MVIE_GAP: f64 = 1e-7;

struct Mvie<'a> {
    h: &'a HPolytope,
    d: usize,
    pairs: Vec<(usize, usize)>,
}

struct Eval {
    value: f64,
    grad: [f64; 9],
    hess: [f64; 81],
}

impl<'a> Mvie<'a> {
    fn new(h: &'a HPolytope) -> Self {
        let d = h.dim();
        let mut pairs = Vec::new();
        for j in 0..d {
            for k in j..d {
                pairs.push((j, k));
            }
        }
        Self { h, d, pairs }
    }

    fn nparams(&self) -> usize {
        self.pairs.len() + self.d
    }

    fn shape(&self, theta: &[f64]) -> [f64; 9] {
        let d = self.d;
        let mut c = [0.0; 9];
        for (p, &(j, k)) in self.pairs.iter().enumerate() {
            c[j * d + k] = theta[p];
            c[k * d + j] = theta[p];
        }
        c
    }

    /// `E_p a`, the derivative of `C a` with respect to shape parameter `p`.
    fn basis_apply(&self, p: usize, a: &[f64]) -> [f64; 3] {
        let (j, k) = self.pairs[p];
        let mut out = [0.0; 3];
        out[j] += a[k];
        if j != k {
            out[k] += a[j];
        }
        out
    }

    /// `t·(−log det C) − Σ log sᵢ` with derivatives; `None` outside the domain.
    fn eval(&self, theta: &[f64], t: f64, derivs: bool) -> Option<Eval> {
        let (d, np, nc) = (self.d, self.nparams(), self.pairs.len());
        let c = self.shape(theta);
        let mut l = c;
        if !math::cholesky(&mut l[..d * d], d) {
            return None;
        }
        let mut value = -t * math::cholesky_logdet(&l[..d * d], d);
        let mut grad = [0.0; 9];
        let mut hess = [0.0; 81];
        let center = &theta[nc..nc + d];

        if derivs {
            let inv = math::spd_inverse(&c, d)?;
            // M_p = C⁻¹ E_p
            let mut m = [[0.0; 9]; 6];
            for p in 0..nc {
                let (j, k) = self.pairs[p];
                for r in 0..d {
                    m[p][r * d + k] += inv[r * d + j];
                    if j != k {
                        m[p][r * d + j] += inv[r * d + k];
                    }
                }
                grad[p] = -t * (0..d).map(|r| m[p][r * d + r]).sum::<f64>();
            }
            for p in 0..nc {
                for q in 0..nc {
                    let mut tr = 0.0;
                    for r in 0..d {
                        for s in 0..d {
                            tr += m[p][r * d + s] * m[q][s * d + r];
                        }
                    }
                    hess[p * np + q] = t * tr;
                }
            }
        }

        for i in 0..self.h.num_facets() {
            let a = self.h.normal(i);
            let mut w = [0.0; 3];
            math::mat_vec(&c[..d * d], d, a, &mut w[..d]);
            let nw = math::norm(&w[..d]);
            let s = self.h.offset(i) - math::dot(a, center) - nw;
            if !(s > 0.0) {
                return None;
            }
            value -= math::ln(s);
            if !derivs {
                continue;
            }
            let mut gs = [0.0; 9];
            let mut ea = [[0.0; 3]; 6];
            for p in 0..nc {
                ea[p] = self.basis_apply(p, a);
                gs[p] = -math::dot(&w[..d], &ea[p][..d]) / nw;
            }
            for k in 0..d {
                gs[nc + k] = -a[k];
            }
            for p in 0..np {
                grad[p] -= gs[p] / s;
            }
            for p in 0..np {
                for q in 0..np {
                    hess[p * np + q] += gs[p] * gs[q] / (s * s);
                }
            }
            // −∇²s / s, shape block only: ∇²‖w‖ = (I − ŵŵᵀ)/‖w‖
            for p in 0..nc {
                for q in 0..nc {
                    let wp = math::dot(&w[..d], &ea[p][..d]);
                    let wq = math::dot(&w[..d], &ea[q][..d]);
                    let second = (math::dot(&ea[p][..d], &ea[q][..d]) - wp * wq / (nw * nw)) / nw;
                    hess[p * np + q] += second / s;
                }
            }
        }
        Some(Eval { value, grad, hess })
    }

    fn solve(&self, center: &Point, radius: f64) -> Ellipsoid {
        let (d, np, nc) = (self.d, self.nparams(), self.pairs.len());
        let mut theta = [0.0; 9];
        for (p, &(j, k)) in self.pairs.iter().enumerate() {
            if j == k {
                theta[p] = radius;
            }
        }
        theta[nc..nc + d].copy_from_slice(center.as_slice());
        let m = self.h.num_facets() as f64;
        let mut t = 1.0;
        loop {
            for _ in 0..100 {
                let Some(ev) = self.eval(&theta[..np], t, true) else { break };
                let mut h = ev.hess;
                let mut step = [0.0; 9];
                for p in 0..np {
                    step[p] = -ev.grad[p];
                }
                let mut ridge = 0.0;
                loop {
                    let mut hr = h;
                    for p in 0..np {
                        hr[p * np + p] += ridge;
                    }
                    if math::cholesky(&mut hr[..np * np], np) {
                        h = hr;
                        break;
                    }
                    ridge = if ridge == 0.0 { 1e-12 } else { ridge * 10.0 };
                    if ridge > 1e6 {
                        return self.ellipsoid(&theta);
                    }
                }
                math::cholesky_solve(&h[..np * np], np, &mut step[..np]);
                let slope = math::dot(&ev.grad[..np], &step[..np]);
                if -slope / 2.0 <= 1e-12 {
                    break;
                }
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let mut trial = theta;
                    for p in 0..np {
                        trial[p] += alpha * step[p];
                    }
                    if let Some(e) = self.eval(&trial[..np], t, false) {
                        if e.value <= ev.value + 0.25 * alpha * slope {
                            theta = trial;
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            if m / t <= MVIE_GAP {
                break;
            }
            t *= 8.0;
        }
        self.ellipsoid(&theta)
    }

    fn ellipsoid(&self, theta: &[f64]) -> Ellipsoid {
        let c = self.shape(theta);
        let center = Point::new(&theta[self.pairs.len()..self.pairs.len() + self.d]).expect("finite iterate");
        Ellipsoid::new(center, &c[..self.d * self.d]).expect("iterates stay positive definite")
    }
}

fn mvie_from(h: &HPolytope, center: &Point) -> Ellipsoid {
    let slack = -h.violation(center);
    debug_assert!(slack > 0.0);
    Mvie::new(h).solve(center, 0.5 * slack)
}

/// Maximum-volume ellipsoid inscribed in a bounded polytope with nonempty
/// interior.
pub fn inscribed_ellipsoid(h: &HPolytope) -> Result<Ellipsoid, IrisError> {
    if !h.is_bounded() {
        return Err(GeometryError::Unbounded.into());
    }
    let c = h.interior_point().ok_or(GeometryError::Empty)?;
    Ok(mvie_from(h, &c))
}

// ---------------------------------------------------------------------------
// Separating hyperplanes

fn metric_rows(cinv: &[f64], d: usize, p: &[AffineRow]) -> Vec<AffineRow> {
    (0..d)
        .map(|r| {
            let mut row = AffineRow::new();
            for k in 0..d {
                row.add_scaled(&p[k], cinv[r * d + k]);
            }
            row
        })
        .collect()
}

fn solve_closest(prog: &ConicProgram, solver: &dyn ConicSolver) -> Result<Vec<f64>, IrisError> {
    let sol = solver.solve(prog, &Tolerances::default());
    match sol.status {
        SolveStatus::Optimal => Ok(sol.primal),
        s => Err(IrisError::Solver(s)),
    }
}

/// Point of `conv(vertices)` closest to `c` in the metric `‖C⁻¹(x − c)‖`.
fn closest_in_hull(c: &Point, cinv: &[f64], vertices: &[Point], solver: &dyn ConicSolver) -> Result<(Point, f64), IrisError> {
    let d = c.dim();
    let m = vertices.len();
    let mut prog = ConicProgram::new(m + 1);
    let mut sum = AffineRow::constant(-1.0);
    for j in 0..m {
        sum.push(j, 1.0);
    }
    prog.add_zero(&[sum]);
    prog.add_nonneg(&(0..m).map(|j| AffineRow::var(j, 1.0)).collect::<Vec<_>>());
    let diff: Vec<AffineRow> = (0..d)
        .map(|k| {
            let mut r = AffineRow::constant(-c[k]);
            for (j, v) in vertices.iter().enumerate() {
                r.push(j, v[k]);
            }
            r
        })
        .collect();
    let mut cone = vec_with(AffineRow::var(m, 1.0));
    cone.extend(metric_rows(cinv, d, &diff));
    prog.add_soc(&cone);
    prog.set_objective(m, 1.0);
    let x = solve_closest(&prog, solver)?;
    let mut p = Point::zeros(d);
    for (j, v) in vertices.iter().enumerate() {
        let w = x[j].max(0.0);
        for k in 0..d {
            p.as_mut_slice()[k] += w * v[k];
        }
    }
    Ok((p, x[m]))
}

/// Point of `{A x ≤ b}` closest to `c` in the metric `‖C⁻¹(x − c)‖`.
fn closest_in_hpolytope(c: &Point, cinv: &[f64], h: &HPolytope, solver: &dyn ConicSolver) -> Result<(Point, f64), IrisError> {
    let d = c.dim();
    let mut prog = ConicProgram::new(d + 1);
    let rows: Vec<AffineRow> = (0..h.num_facets())
        .map(|i| {
            let mut r = AffineRow::constant(h.offset(i));
            for k in 0..d {
                r.push(k, -h.normal(i)[k]);
            }
            r
        })
        .collect();
    prog.add_nonneg(&rows);
    let diff: Vec<AffineRow> = (0..d).map(|k| AffineRow::var(k, 1.0).add_const(-c[k])).collect();
    let mut cone = vec_with(AffineRow::var(d, 1.0));
    cone.extend(metric_rows(cinv, d, &diff));
    prog.add_soc(&cone);
    prog.set_objective(d, 1.0);
    let x = solve_closest(&prog, solver)?;
    Ok((Point::new(&x[..d]).expect("finite primal"), x[d]))
}

fn vec_with(r: AffineRow) -> Vec<AffineRow> {
    let mut v = Vec::with_capacity(4);
    v.push(r);
    v
}

/// Unit normal of the plane tangent to the metric ball around `c` at `x`.
fn tangent_normal(c: &Point, cinv: &[f64], x: &Point) -> [f64; 3] {
    let d = c.dim();
    let diff = *x - *c;
    let mut u = [0.0; 3];
    math::mat_vec(cinv, d, diff.as_slice(), &mut u[..d]);
    let mut a = [0.0; 3];
    math::mat_vec(cinv, d, &u[..d], &mut a[..d]);
    let n = math::norm(&a[..d]);
    a.iter_mut().for_each(|v| *v /= n);
    a
}

fn min_along(a: &[f64], pts: &[Point]) -> f64 {
    pts.iter().map(|p| math::dot(a, p.as_slice())).fold(f64::INFINITY, f64::min)
}

/// Halfspace `{x : a·x ≤ b}` containing the ellipsoid center and touching
/// `conv(obstacle_vertices)` at its closest point in the ellipsoid metric.
/// The obstacle lies entirely in `a·x ≥ b`.
pub fn separating_hyperplane(
    e: &Ellipsoid,
    obstacle_vertices: &[Point],
    solver: &dyn ConicSolver,
) -> Result<(Vec<f64>, f64), IrisError> {
    let d = e.dim();
    if let Some(p) = obstacle_vertices.iter().find(|p| p.dim() != d) {
        return Err(GeometryError::DimensionMismatch { expected: d, found: p.dim() }.into());
    }
    let inv = e.inverse_shape();
    let cinv = &inv[..d * d];
    let (x, dist) = closest_in_hull(e.center(), cinv, obstacle_vertices, solver)?;
    if dist <= 1e-9 {
        return Err(IrisError::CenterInObstacle);
    }
    let a = tangent_normal(e.center(), cinv, &x);
    let b = min_along(&a[..d], obstacle_vertices);
    Ok((a[..d].to_vec(), b))
}

// ---------------------------------------------------------------------------
// Region inflation

struct Blocker<'a> {
    vertices: Vec<Point>,
    kind: BlockerKind<'a>,
}

enum BlockerKind<'a> {
    Obstacle(&'a Obstacle),
    Region(&'a HPolytope),
}

fn region_blocker(h: &HPolytope) -> Blocker<'_> {
    Blocker { vertices: h.vertices(), kind: BlockerKind::Region(h) }
}

/// Result of one inflation, with the ellipsoid trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Inflation {
    pub region: HPolytope,
    pub ellipsoid: Ellipsoid,
    /// `log det C` of every accepted iteration; non-decreasing.
    pub log_det_history: Vec<f64>,
}

fn separating_planes(
    c: &Point,
    cinv: &[f64],
    env: &Environment,
    regions: &[Blocker<'_>],
    solver: &dyn ConicSolver,
) -> Result<(Vec<f64>, Vec<f64>), IrisError> {
    let d = c.dim();
    let metric = |p: &Point| {
        let diff = *p - *c;
        let mut u = [0.0; 3];
        math::mat_vec(cinv, d, diff.as_slice(), &mut u[..d]);
        math::norm(&u[..d])
    };
    let obstacles: Vec<Blocker<'_>> = env
        .obstacles
        .iter()
        .map(|o| Blocker { vertices: Vec::new(), kind: BlockerKind::Obstacle(o) })
        .collect();
    let mut order: Vec<(f64, &Blocker<'_>)> = obstacles
        .iter()
        .chain(regions)
        .map(|b| {
            let verts = match b.kind {
                BlockerKind::Obstacle(o) => o.vertices(),
                BlockerKind::Region(_) => &b.vertices,
            };
            (verts.iter().map(&metric).fold(f64::INFINITY, f64::min), b)
        })
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut normals: Vec<f64> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    for (_, b) in order {
        let verts = match b.kind {
            BlockerKind::Obstacle(o) => o.vertices(),
            BlockerKind::Region(_) => &b.vertices,
        };
        let behind = (0..offsets.len()).any(|i| min_along(&normals[i * d..(i + 1) * d], verts) >= offsets[i]);
        if behind {
            continue;
        }
        let (x, dist) = match b.kind {
            BlockerKind::Obstacle(o) => closest_in_hull(c, cinv, o.vertices(), solver)?,
            BlockerKind::Region(h) => closest_in_hpolytope(c, cinv, h, solver)?,
        };
        if dist <= 1e-9 {
            return Err(IrisError::CenterInObstacle);
        }
        let mut a = tangent_normal(c, cinv, &x);
        let mut off = min_along(&a[..d], verts);
        let hull = match b.kind {
            BlockerKind::Obstacle(o) => o.hull(),
            BlockerKind::Region(h) => h,
        };
        // a blocker touched on one of its facets gets that facet exactly
        {
            let h = hull;
            for f in 0..h.num_facets() {
                let n = h.normal(f);
                if math::dot(n, &a[..d]) <= -(1.0 - 1e-6) {
                    for k in 0..d {
                        a[k] = -n[k];
                    }
                    off = -h.offset(f);
                    break;
                }
            }
        }
        normals.extend_from_slice(&a[..d]);
        offsets.push(off);
    }
    Ok((normals, offsets))
}

fn inflate(
    seed: &Point,
    env: &Environment,
    regions: &[Blocker<'_>],
    params: &IrisParams,
    solver: &dyn ConicSolver,
) -> Result<Inflation, IrisError> {
    params.validate()?;
    let d = env.dim();
    if seed.dim() != d {
        return Err(GeometryError::DimensionMismatch { expected: d, found: seed.dim() }.into());
    }
    if !env.bounds.contains(seed, params.boundary_tol) {
        return Err(IrisError::SeedOutsideBounds);
    }
    if env.in_collision(seed, params.seed_rejection_tol).is_some() {
        return Err(IrisError::SeedRejected);
    }
    if regions.iter().any(|b| matches!(b.kind, BlockerKind::Region(h) if h.contains(seed, params.boundary_tol))) {
        return Err(IrisError::SeedRejected);
    }

    let mut center = *seed;
    let mut cinv = [0.0; 9];
    for k in 0..d {
        cinv[k * d + k] = 1.0;
    }
    let mut best: Option<(HPolytope, Ellipsoid)> = None;
    let mut history = Vec::new();
    for iter in 0..params.max_iterations {
        let (normals, offsets) = match separating_planes(&center, &cinv[..d * d], env, regions, solver) {
            Ok(p) => p,
            Err(IrisError::CenterInObstacle) if iter == 0 => return Err(IrisError::SeedRejected),
            Err(IrisError::CenterInObstacle) => break,
            Err(e) => return Err(e),
        };
        let mut all_n = env.bounds.normals().to_vec();
        all_n.extend_from_slice(&normals);
        let mut all_d = env.bounds.offsets().to_vec();
        all_d.extend_from_slice(&offsets);
        let candidate = match HPolytope::with_witness(d, all_n, all_d, seed, params.boundary_tol) {
            Ok(h) => h,
            Err(GeometryError::Empty) => break,
            Err(e) => return Err(e.into()),
        };
        let start = match &best {
            Some((_, e)) if candidate.violation(e.center()) < 0.0 => *e.center(),
            _ if candidate.violation(seed) < 0.0 => *seed,
            _ => match candidate.interior_point() {
                Some(p) => p,
                None => break,
            },
        };
        let ell = mvie_from(&candidate, &start);
        let ld = ell.log_det();
        let grow = match history.last() {
            Some(&prev) if ld < prev => break,
            Some(&prev) => math::exp(ld - prev) - 1.0,
            None => f64::INFINITY,
        };
        history.push(ld);
        center = *ell.center();
        cinv = ell.inverse_shape();
        best = Some((candidate, ell));
        if grow < params.termination_growth {
            break;
        }
    }
    let (region, ellipsoid) = best.ok_or(IrisError::SeedRejected)?;
    Ok(Inflation { region: region.without_redundant(), ellipsoid, log_det_history: history })
}

/// Grows a collision-free region around `seed`. `existing` regions are
/// treated as obstacles so that the result only touches them.
pub fn inflate_region(
    seed: &Point,
    env: &Environment,
    existing: &[HPolytope],
    params: &IrisParams,
    solver: &dyn ConicSolver,
) -> Result<HPolytope, IrisError> {
    inflate_region_detailed(seed, env, existing, params, solver).map(|i| i.region)
}

/// [`inflate_region`] also returning the final ellipsoid and volume trace.
pub fn inflate_region_detailed(
    seed: &Point,
    env: &Environment,
    existing: &[HPolytope],
    params: &IrisParams,
    solver: &dyn ConicSolver,
) -> Result<Inflation, IrisError> {
    let blockers: Vec<Blocker<'_>> = existing.iter().map(region_blocker).collect();
    inflate(seed, env, &blockers, params, solver)
}

/// Covers the free space with regions seeded at `start`, `goal`, then
/// `n_samples` uniform samples of the bounding box drawn from a ChaCha8
/// stream seeded with `rng_seed`. Rejected seeds are skipped, so a run with
/// fewer samples produces a prefix of a run with more.
pub fn generate_regions(
    env: &Environment,
    start: &Point,
    goal: &Point,
    n_samples: usize,
    rng_seed: u64,
    params: &IrisParams,
    solver: &dyn ConicSolver,
) -> Result<Vec<HPolytope>, IrisError> {
    params.validate()?;
    for (which, p) in [(Terminal::Start, start), (Terminal::Goal, goal)] {
        if p.dim() != env.dim() {
            return Err(GeometryError::DimensionMismatch { expected: env.dim(), found: p.dim() }.into());
        }
        if env.in_collision(p, params.seed_rejection_tol).is_some() {
            return Err(IrisError::TerminalInCollision(which));
        }
    }
    let (lo, hi) = env.bounds.bounding_box().ok_or(GeometryError::Empty)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let samples = (0..n_samples).map(move |_| {
        let mut p = lo;
        for k in 0..lo.dim() {
            p.as_mut_slice()[k] = lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>();
        }
        p
    });

    let mut regions: Vec<HPolytope> = Vec::new();
    let mut vertex_cache: Vec<Vec<Point>> = Vec::new();
    for seed in [*start, *goal].into_iter().chain(samples) {
        let blockers: Vec<Blocker<'_>> = regions
            .iter()
            .zip(&vertex_cache)
            .map(|(h, v)| Blocker { vertices: v.clone(), kind: BlockerKind::Region(h) })
            .collect();
        match inflate(&seed, env, &blockers, params, solver) {
            Ok(inf) => {
                drop(blockers);
                vertex_cache.push(inf.region.vertices());
                regions.push(inf.region);
            }
            Err(IrisError::SeedRejected) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mvie_of_square_is_inscribed_ball() {
        let h = HPolytope::from_box(&Point::xy(0.0, 0.0), &Point::xy(1.0, 1.0)).unwrap();
        let e = inscribed_ellipsoid(&h).unwrap();
        assert!(e.center().distance(&Point::xy(0.5, 0.5)) < 1e-6);
        let s = e.shape();
        assert!((s[0] - 0.5).abs() < 1e-6 && (s[3] - 0.5).abs() < 1e-6 && s[1].abs() < 1e-6);
    }

    #[test]
    fn mvie_of_box_is_axis_aligned() {
        let h = HPolytope::from_box(&Point::xy(0.0, 0.0), &Point::xy(2.0, 1.0)).unwrap();
        let e = inscribed_ellipsoid(&h).unwrap();
        assert!(e.center().distance(&Point::xy(1.0, 0.5)) < 1e-6);
        let s = e.shape();
        assert!((s[0] - 1.0).abs() < 1e-6 && (s[3] - 0.5).abs() < 1e-6 && s[1].abs() < 1e-6);
        for i in 0..h.num_facets() {
            assert!(e.facet_margin(h.normal(i), h.offset(i)) >= 0.0);
        }
    }

    #[test]
    fn mvie_of_triangle_matches_affine_image_of_disk() {
        // the maximal ellipse of a triangle is its Steiner inellipse,
        // centered at the centroid with area π/(3√3) of the triangle's area
        let h = HPolytope::from_vertices(&[Point::xy(0.0, 0.0), Point::xy(3.0, 0.0), Point::xy(1.0, 2.0)]).unwrap();
        let e = inscribed_ellipsoid(&h).unwrap();
        assert!(e.center().distance(&Point::xy(4.0 / 3.0, 2.0 / 3.0)) < 1e-5);
        let area = core::f64::consts::PI * libm::exp(e.log_det());
        let expected = 3.0 * core::f64::consts::PI / (3.0 * libm::sqrt(3.0));
        assert!((area - expected).abs() < 1e-5, "{area} vs {expected}");
    }

    #[test]
    fn mvie_in_space_time_box() {
        let h = HPolytope::from_box(&Point::xyt(0.0, 0.0, 0.0), &Point::xyt(1.0, 0.2, 1.0)).unwrap();
        let e = inscribed_ellipsoid(&h).unwrap();
        assert!((e.log_det() - libm::log(0.5 * 0.1 * 0.5)).abs() < 1e-6);
    }

    #[test]
    fn unbounded_polytope_has_no_inscribed_ellipsoid() {
        let h = HPolytope::new(2, vec![-1.0, 0.0], vec![0.0]).unwrap();
        assert!(matches!(inscribed_ellipsoid(&h), Err(IrisError::Geometry(GeometryError::Unbounded))));
    }
}
