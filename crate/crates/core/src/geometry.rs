//! Polytope and obstacle primitives.
//!
//! Safe regions are stored in halfspace form (`A r ≤ d`, unit-length rows)
//! because that is what the trajectory program consumes. Obstacles are kept
//! as vertex lists: a moving polygon becomes a prism in `(x, y, t)` whose
//! bottom face is the polygon at `t_start` and whose top face is the polygon
//! at `t_end`, with vertex `i` of one face joined to vertex `i` of the other.
//! Static obstacles are the special case where both faces coincide in `xy`.
//!
//! Tolerances: geometric predicates use `1e-9` on unit normals; anything
//! that goes through the conic solver uses the caller's tolerance.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, Mul, Sub};

use thiserror::Error;

use crate::conic::{AffineRow, ConicProgram, ConicSolver, SolveStatus, Tolerances};
use crate::math;

/// Largest supported configuration-space dimension (`x, y, t`).
pub const MAX_DIM: usize = 3;

/// Tolerance used by the exact (solver-free) predicates in this module.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0} (expected 1..=3)")]
    UnsupportedDimension(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("halfspace row {row} has a zero normal")]
    ZeroNormal { row: usize },
    #[error("polytope is empty")]
    Empty,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("point set does not span the space")]
    NotFullDimensional,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not strictly convex in counter-clockwise order")]
    NotConvex,
    #[error("start polygon has {start} vertices but end polygon has {end}")]
    VertexCountMismatch { start: usize, end: usize },
    #[error("obstacle duration must be positive")]
    NonPositiveDuration,
    #[error("time {t} outside obstacle lifetime [{start}, {end}]")]
    OutOfLifetime { t: f64, start: f64, end: f64 },
    #[error("interpolated cross-sections lose convexity")]
    NonConvexMotion,
    #[error("ellipsoid shape matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("conic solver failed with status {0:?}")]
    Solver(SolveStatus),
}

// ---------------------------------------------------------------------------
// Point

/// A point in the plane (`d = 2`) or in space-time (`d = 3`, last coordinate
/// is time in seconds).
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self, GeometryError> {
        let dim = coords.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(coords);
        Ok(Self { coords: c, dim })
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        Self { coords: [x, y, 0.0], dim: 2 }
    }

    pub const fn xyt(x: f64, y: f64, t: f64) -> Self {
        Self { coords: [x, y, t], dim: 3 }
    }

    pub(crate) fn zeros(dim: usize) -> Self {
        Self { coords: [0.0; MAX_DIM], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    /// Time component of a space-time point.
    pub fn t(&self) -> f64 {
        debug_assert_eq!(self.dim, 3);
        self.coords[2]
    }

    /// The planar part of the point.
    pub fn xy_part(&self) -> Point {
        Point::xy(self.coords[0], self.coords[1])
    }

    pub fn with_time(&self, t: f64) -> Point {
        Point::xyt(self.coords[0], self.coords[1], t)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        math::dot(self.as_slice(), other.as_slice())
    }

    pub fn norm(&self) -> f64 {
        math::norm(self.as_slice())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    /// Euclidean distance between the `xy` parts.
    pub fn distance_xy(&self, other: &Point) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        math::sqrt(dx * dx + dy * dy)
    }

    pub fn lerp(&self, other: &Point, f: f64) -> Point {
        let mut out = *self;
        for i in 0..self.dim {
            out.coords[i] = (1.0 - f) * self.coords[i] + f * other.coords[i];
        }
        out
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.as_slice()).finish()
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(mut self, s: f64) -> Point {
        for i in 0..self.dim {
            self.coords[i] *= s;
        }
        self
    }
}

// ---------------------------------------------------------------------------
// Fourier–Motzkin feasibility
//
// Exact-in-structure projection for the low dimensions used here (d ≤ 3).
// Derived rows are renormalized so that the tolerance keeps its meaning.

struct Rows {
    stride: usize,
    coef: Vec<f64>,
    rhs: Vec<f64>,
}

impl Rows {
    fn len(&self) -> usize {
        self.rhs.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.coef[i * self.stride..(i + 1) * self.stride]
    }
}

const FM_ZERO: f64 = 1e-12;

/// Eliminates the last variable. Returns `None` if a constant row is violated.
fn fm_eliminate(sys: &Rows, tol: f64) -> Option<Rows> {
    let n = sys.stride;
    let m = n - 1;
    let mut out = Rows { stride: m, coef: Vec::new(), rhs: Vec::new() };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let push = |out: &mut Rows, coef: &[f64], rhs: f64| -> bool {
        let nrm = math::norm(coef);
        if nrm <= FM_ZERO {
            return rhs >= -tol;
        }
        out.coef.extend(coef.iter().map(|c| c / nrm));
        out.rhs.push(rhs / nrm);
        true
    };
    for i in 0..sys.len() {
        let a = sys.row(i)[n - 1];
        if a > FM_ZERO {
            pos.push(i);
        } else if a < -FM_ZERO {
            neg.push(i);
        } else if !push(&mut out, &sys.row(i)[..m], sys.rhs[i]) {
            return None;
        }
    }
    let mut buf = [0.0; MAX_DIM];
    for &p in &pos {
        let rp = sys.row(p);
        let sp = 1.0 / rp[n - 1];
        for &q in &neg {
            let rq = sys.row(q);
            let sq = -1.0 / rq[n - 1];
            for k in 0..m {
                buf[k] = rp[k] * sp + rq[k] * sq;
            }
            let rhs = sys.rhs[p] * sp + sys.rhs[q] * sq;
            if !push(&mut out, &buf[..m], rhs) {
                return None;
            }
        }
    }
    Some(out)
}

/// Returns a point of `{x : A x ≤ b + tol}` if one exists. When the set has
/// nonempty interior the point is chosen by interval midpoints and lies in
/// the interior.
fn fm_feasible_point(normals: &[f64], offsets: &[f64], dim: usize, tol: f64) -> Option<Point> {
    let mut systems = Vec::with_capacity(dim + 1);
    systems.push(Rows { stride: dim, coef: normals.to_vec(), rhs: offsets.to_vec() });
    // the one-variable system is an interval check, no need to pair it out
    for _ in 1..dim {
        let next = fm_eliminate(systems.last().unwrap(), tol)?;
        systems.push(next);
    }
    // systems[k] has stride dim - k; back-substitute from 1 variable upward.
    let mut x = Point::zeros(dim);
    for vars in 1..=dim {
        let sys = &systems[dim - vars];
        let j = vars - 1;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..sys.len() {
            let r = sys.row(i);
            let a = r[j];
            if a.abs() <= FM_ZERO {
                if vars == 1 && sys.rhs[i] < -tol {
                    return None;
                }
                continue;
            }
            let rest: f64 = (0..j).map(|k| r[k] * x.coords[k]).sum();
            let bound = (sys.rhs[i] - rest) / a;
            if a > 0.0 {
                hi = hi.min(bound);
            } else {
                lo = lo.max(bound);
            }
        }
        if vars == 1 && lo > hi + tol {
            return None;
        }
        x.coords[j] = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        };
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// HPolytope

/// Convex polytope `{r : A r ≤ d}` with unit-length rows of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

impl HPolytope {
    /// Builds a polytope from row-major normals (`m × dim`) and offsets.
    /// Rows are normalized to unit length; the set is certified nonempty at
    /// tolerance [`GEOMETRY_TOL`].
    pub fn new(dim: usize, normals: Vec<f64>, offsets: Vec<f64>) -> Result<Self, GeometryError> {
        let poly = Self::normalized(dim, normals, offsets)?;
        if fm_feasible_point(&poly.normals, &poly.offsets, dim, GEOMETRY_TOL).is_none() {
            return Err(GeometryError::Empty);
        }
        Ok(poly)
    }

    /// Like [`HPolytope::new`], but nonemptiness is certified by a point
    /// that satisfies every row within `tol` instead of by elimination.
    pub fn with_witness(
        dim: usize,
        normals: Vec<f64>,
        offsets: Vec<f64>,
        witness: &Point,
        tol: f64,
    ) -> Result<Self, GeometryError> {
        if witness.dim() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: witness.dim() });
        }
        let poly = Self::normalized(dim, normals, offsets)?;
        if poly.violation(witness) > tol {
            return Err(GeometryError::Empty);
        }
        Ok(poly)
    }

    fn normalized(dim: usize, mut normals: Vec<f64>, mut offsets: Vec<f64>) -> Result<Self, GeometryError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        if normals.len() != offsets.len() * dim {
            return Err(GeometryError::DimensionMismatch {
                expected: offsets.len() * dim,
                found: normals.len(),
            });
        }
        if normals.iter().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        for (i, off) in offsets.iter_mut().enumerate() {
            let row = &mut normals[i * dim..(i + 1) * dim];
            let n = math::norm(row);
            if n <= 1e-14 {
                return Err(GeometryError::ZeroNormal { row: i });
            }
            row.iter_mut().for_each(|v| *v /= n);
            *off /= n;
        }
        Ok(Self { dim, normals, offsets })
    }

    /// Axis-aligned box `[min, max]`.
    pub fn from_box(min: &Point, max: &Point) -> Result<Self, GeometryError> {
        if min.dim() != max.dim() {
            return Err(GeometryError::DimensionMismatch { expected: min.dim(), found: max.dim() });
        }
        let d = min.dim();
        let mut normals = Vec::with_capacity(2 * d * d);
        let mut offsets = Vec::with_capacity(2 * d);
        for i in 0..d {
            for s in [1.0, -1.0] {
                for k in 0..d {
                    normals.push(if k == i { s } else { 0.0 });
                }
                offsets.push(if s > 0.0 { max[i] } else { -min[i] });
            }
        }
        Self::new(d, normals, offsets)
    }

    /// Halfspace form of the convex hull of `points` (`d = 2` or `3`).
    pub fn from_vertices(points: &[Point]) -> Result<Self, GeometryError> {
        let d = points.first().map(|p| p.dim()).ok_or(GeometryError::NotFullDimensional)?;
        if points.iter().any(|p| p.dim() != d) {
            return Err(GeometryError::DimensionMismatch { expected: d, found: d });
        }
        let (normals, offsets) = match d {
            2 => hull_facets_2d(points)?,
            3 => hull_facets_3d(points)?,
            _ => return Err(GeometryError::UnsupportedDimension(d)),
        };
        Self::new(d, normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_facets(&self) -> usize {
        self.offsets.len()
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `max_i (a_i·p − d_i)`; nonpositive iff `p` is inside.
    pub fn violation(&self, p: &Point) -> f64 {
        debug_assert_eq!(p.dim(), self.dim);
        (0..self.num_facets())
            .map(|i| math::dot(self.normal(i), p.as_slice()) - self.offsets[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.violation(p) <= tol
    }

    /// Intersection with one extra halfspace `normal·r ≤ offset`.
    pub fn with_halfspace(&self, normal: &[f64], offset: f64) -> Result<Self, GeometryError> {
        let mut normals = self.normals.clone();
        normals.extend_from_slice(normal);
        let mut offsets = self.offsets.clone();
        offsets.push(offset);
        Self::new(self.dim, normals, offsets)
    }

    /// Intersection with all facets of `other`.
    pub fn intersect(&self, other: &HPolytope) -> Result<Self, GeometryError> {
        if other.dim != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut normals = self.normals.clone();
        normals.extend_from_slice(&other.normals);
        let mut offsets = self.offsets.clone();
        offsets.extend_from_slice(&other.offsets);
        Self::new(self.dim, normals, offsets)
    }

    /// A point with strictly positive slack on every facet, if the polytope
    /// has nonempty interior.
    pub fn interior_point(&self) -> Option<Point> {
        let p = fm_feasible_point(&self.normals, &self.offsets, self.dim, 0.0)?;
        (self.violation(&p) < 0.0).then_some(p)
    }

    /// True iff the recession cone `{x : A x ≤ 0}` is `{0}`.
    pub fn is_bounded(&self) -> bool {
        let d = self.dim;
        for j in 0..d {
            for s in [1.0, -1.0] {
                // fix x_j = s and test {A x ≤ 0} in the remaining coordinates
                let mut coef = Vec::with_capacity(self.num_facets() * (d - 1));
                let mut rhs = Vec::with_capacity(self.num_facets());
                let mut violated = false;
                for i in 0..self.num_facets() {
                    let a = self.normal(i);
                    let r = -a[j] * s;
                    if d == 1 {
                        if r < -GEOMETRY_TOL {
                            violated = true;
                            break;
                        }
                        continue;
                    }
                    coef.extend((0..d).filter(|&k| k != j).map(|k| a[k]));
                    rhs.push(r);
                }
                if violated {
                    continue;
                }
                if d == 1 || fm_feasible_point(&coef, &rhs, d - 1, GEOMETRY_TOL).is_some() {
                    return false;
                }
            }
        }
        true
    }

    /// Vertices of a bounded polytope, deduplicated. Cost is
    /// `O(m^d · m)`, fine for the facet counts produced by region inflation.
    pub fn vertices(&self) -> Vec<Point> {
        let d = self.dim;
        let m = self.num_facets();
        let mut out: Vec<Point> = Vec::new();
        let consider = |p: Point, out: &mut Vec<Point>| {
            if self.violation(&p) <= 1e-9 && !out.iter().any(|q| q.distance(&p) <= 1e-8) {
                out.push(p);
            }
        };
        match d {
            1 => {
                for i in 0..m {
                    let a = self.normal(i)[0];
                    consider(Point::new(&[self.offsets[i] / a]).unwrap(), &mut out);
                }
            }
            2 => {
                for i in 0..m {
                    for j in (i + 1)..m {
                        let (a, b) = (self.normal(i), self.normal(j));
                        let det = a[0] * b[1] - a[1] * b[0];
                        if det.abs() < 1e-12 {
                            continue;
                        }
                        let (di, dj) = (self.offsets[i], self.offsets[j]);
                        let x = (di * b[1] - dj * a[1]) / det;
                        let y = (a[0] * dj - b[0] * di) / det;
                        consider(Point::xy(x, y), &mut out);
                    }
                }
            }
            _ => {
                for i in 0..m {
                    for j in (i + 1)..m {
                        for k in (j + 1)..m {
                            let mut a = [0.0; 9];
                            a[0..3].copy_from_slice(self.normal(i));
                            a[3..6].copy_from_slice(self.normal(j));
                            a[6..9].copy_from_slice(self.normal(k));
                            let mut b = [self.offsets[i], self.offsets[j], self.offsets[k]];
                            if math::solve_dense(&mut a, &mut b, 3, 1e-10).is_some() {
                                consider(Point::xyt(b[0], b[1], b[2]), &mut out);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Same set with redundant rows removed: a row is kept when at least
    /// `dim` vertices lie on it and no earlier kept row is identical.
    /// Unbounded polytopes are returned unchanged.
    pub fn without_redundant(&self) -> Self {
        if !self.is_bounded() {
            return self.clone();
        }
        let verts = self.vertices();
        let d = self.dim;
        let mut normals = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        for i in 0..self.num_facets() {
            let a = self.normal(i);
            let on = verts
                .iter()
                .filter(|v| (math::dot(a, v.as_slice()) - self.offsets[i]).abs() <= 1e-8)
                .count();
            if on < d {
                continue;
            }
            let dup = (0..offsets.len()).any(|k| {
                let b = &normals[k * d..(k + 1) * d];
                a.iter().zip(b).all(|(x, y): (&f64, &f64)| (x - y).abs() <= 1e-9)
                    && (offsets[k] - self.offsets[i]).abs() <= 1e-9
            });
            if !dup {
                normals.extend_from_slice(a);
                offsets.push(self.offsets[i]);
            }
        }
        Self { dim: d, normals, offsets }
    }

    /// Cross-section at a fixed value of the last coordinate (time for
    /// space-time regions); `None` when the slice is empty.
    pub fn slice_last(&self, value: f64) -> Option<HPolytope> {
        let d = self.dim;
        if d < 2 {
            return None;
        }
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..self.num_facets() {
            let a = self.normal(i);
            let rhs = self.offsets[i] - a[d - 1] * value;
            if math::norm(&a[..d - 1]) <= 1e-12 {
                if rhs < -GEOMETRY_TOL {
                    return None;
                }
                continue;
            }
            normals.extend_from_slice(&a[..d - 1]);
            offsets.push(rhs);
        }
        HPolytope::new(d - 1, normals, offsets).ok()
    }

    /// Axis-aligned bounding box from the vertices of a bounded polytope.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let v = self.vertices();
        let first = *v.first()?;
        let (mut lo, mut hi) = (first, first);
        for p in &v[1..] {
            for k in 0..self.dim {
                lo.coords[k] = lo.coords[k].min(p.coords[k]);
                hi.coords[k] = hi.coords[k].max(p.coords[k]);
            }
        }
        Some((lo, hi))
    }
}

fn cross2(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x())
}

/// Convex hull in counter-clockwise order (monotone chain), collinear points
/// dropped.
fn convex_hull_2d(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x().total_cmp(&b.x()).then(a.y().total_cmp(&b.y())));
    pts.dedup_by(|a, b| a.distance(b) <= 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: alloc::boxed::Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { alloc::boxed::Box::new(pts.iter()) } else { alloc::boxed::Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-12 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

fn hull_facets_2d(points: &[Point]) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let hull = convex_hull_2d(points);
    if hull.len() < 3 {
        return Err(GeometryError::NotFullDimensional);
    }
    let mut normals = Vec::with_capacity(2 * hull.len());
    let mut offsets = Vec::with_capacity(hull.len());
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        let (nx, ny) = (q.y() - p.y(), p.x() - q.x());
        normals.push(nx);
        normals.push(ny);
        offsets.push(nx * p.x() + ny * p.y());
    }
    Ok((normals, offsets))
}

fn hull_facets_3d(points: &[Point]) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let n = points.len();
    let mut normals: Vec<f64> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    let scale = points.iter().fold(1.0_f64, |m, p| m.max(p.norm()));
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let u = points[j] - points[i];
                let v = points[k] - points[i];
                let mut nrm = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                let len = math::norm(&nrm);
                if len <= 1e-12 * scale * scale {
                    continue;
                }
                nrm.iter_mut().for_each(|c| *c /= len);
                let off = math::dot(&nrm, points[i].as_slice());
                let side = |s: f64| {
                    points.iter().all(|p| s * (math::dot(&nrm, p.as_slice()) - off) <= 1e-9 * scale)
                };
                for s in [1.0, -1.0] {
                    if side(s) {
                        let cand = [s * nrm[0], s * nrm[1], s * nrm[2]];
                        let coff = s * off;
                        let dup = (0..offsets.len()).any(|f| {
                            let b = &normals[3 * f..3 * f + 3];
                            math::norm(&[b[0] - cand[0], b[1] - cand[1], b[2] - cand[2]]) <= 1e-9
                                && (offsets[f] - coff).abs() <= 1e-9 * scale
                        });
                        if !dup {
                            normals.extend_from_slice(&cand);
                            offsets.push(coff);
                        }
                    }
                }
            }
        }
    }
    if offsets.len() < 4 {
        return Err(GeometryError::NotFullDimensional);
    }
    Ok((normals, offsets))
}

/// `A·p ≤ d + tol` componentwise.
pub fn point_in_hpolytope(h: &HPolytope, p: &Point, tol: f64) -> Result<bool, GeometryError> {
    if p.dim() != h.dim() {
        return Err(GeometryError::DimensionMismatch { expected: h.dim(), found: p.dim() });
    }
    Ok(h.contains(p, tol))
}

/// True iff `{A₁x ≤ d₁ + tol, A₂x ≤ d₂ + tol}` is feasible, decided by a
/// linear feasibility program.
pub fn hpolytopes_touch(
    h1: &HPolytope,
    h2: &HPolytope,
    tol: f64,
    solver: &dyn ConicSolver,
) -> Result<bool, GeometryError> {
    if h1.dim() != h2.dim() {
        return Err(GeometryError::DimensionMismatch { expected: h1.dim(), found: h2.dim() });
    }
    // smallest common relaxation s with A₁x ≤ d₁ + s, A₂x ≤ d₂ + s; the
    // feasibility question itself is badly posed exactly at touching
    let d = h1.dim();
    let mut prog = ConicProgram::new(d + 1);
    let mut rows = Vec::with_capacity(h1.num_facets() + h2.num_facets() + 1);
    let mut floor = AffineRow::constant(1.0);
    floor.push(d, 1.0);
    rows.push(floor);
    for h in [h1, h2] {
        for i in 0..h.num_facets() {
            let mut r = AffineRow::constant(h.offset(i));
            for (k, &a) in h.normal(i).iter().enumerate() {
                r.push(k, -a);
            }
            r.push(d, 1.0);
            rows.push(r);
        }
    }
    prog.add_nonneg(&rows);
    prog.set_objective(d, 1.0);
    let sol = solver.solve(&prog, &Tolerances::default());
    match sol.status {
        SolveStatus::Optimal => Ok(sol.primal[d] <= tol),
        s => Err(GeometryError::Solver(s)),
    }
}

// ---------------------------------------------------------------------------
// Polygons and obstacles

/// Strictly convex polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon2D {
    vertices: Vec<Point>,
}

impl ConvexPolygon2D {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(p) = vertices.iter().find(|p| p.dim() != 2) {
            return Err(GeometryError::DimensionMismatch { expected: 2, found: p.dim() });
        }
        let n = vertices.len();
        let mut turning = 0.0;
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            let e1 = b - a;
            let e2 = c - b;
            let (l1, l2) = (e1.norm(), e2.norm());
            if l1 <= GEOMETRY_TOL || l2 <= GEOMETRY_TOL {
                return Err(GeometryError::NotConvex);
            }
            let cross = e1.x() * e2.y() - e1.y() * e2.x();
            if cross / (l1 * l2) <= GEOMETRY_TOL {
                return Err(GeometryError::NotConvex);
            }
            turning += libm::atan2(cross, e1.dot(&e2));
        }
        // a self-intersecting polygon with only left turns winds more than once
        if (turning - 2.0 * core::f64::consts::PI).abs() > 1e-6 {
            return Err(GeometryError::NotConvex);
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle.
    pub fn rectangle(min: Point, max: Point) -> Result<Self, GeometryError> {
        Self::new(alloc::vec![
            min,
            Point::xy(max.x(), min.y()),
            max,
            Point::xy(min.x(), max.y()),
        ])
    }

    /// Axis-aligned square of side `side` centered at `center`.
    pub fn square(center: Point, side: f64) -> Result<Self, GeometryError> {
        let h = 0.5 * side;
        Self::rectangle(
            Point::xy(center.x() - h, center.y() - h),
            Point::xy(center.x() + h, center.y() + h),
        )
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn translated(&self, offset: Point) -> Self {
        Self { vertices: self.vertices.iter().map(|v| *v + offset).collect() }
    }

    pub fn to_hpolytope(&self) -> Result<HPolytope, GeometryError> {
        HPolytope::from_vertices(&self.vertices)
    }
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = *b - *a;
    let len2 = ab.dot(&ab);
    let s = if len2 > 0.0 { ((*p - *a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(&(*a + ab * s))
}

/// True iff `p` lies in `poly` inflated outward by `margin` (closed set).
pub fn point_in_polygon(poly: &ConvexPolygon2D, p: &Point, margin: f64) -> bool {
    let p = p.xy_part();
    let v = poly.vertices();
    let n = v.len();
    if (0..n).all(|i| cross2(&v[i], &v[(i + 1) % n], &p) >= 0.0) {
        return true;
    }
    (0..n).any(|i| segment_distance(&p, &v[i], &v[(i + 1) % n]) <= margin)
}

/// Euclidean distance from `p` to the boundary of `poly`, negated when `p`
/// lies inside.
pub fn polygon_signed_distance(poly: &ConvexPolygon2D, p: &Point) -> f64 {
    let p = p.xy_part();
    let v = poly.vertices();
    let n = v.len();
    let d = (0..n).map(|i| segment_distance(&p, &v[i], &v[(i + 1) % n])).fold(f64::INFINITY, f64::min);
    if (0..n).all(|i| cross2(&v[i], &v[(i + 1) % n], &p) >= 0.0) {
        -d
    } else {
        d
    }
}

/// A polygon translating/deforming linearly between two keyframes, lifted
/// into `(x, y, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeObstacle {
    start_polygon: ConvexPolygon2D,
    end_polygon: ConvexPolygon2D,
    t_start: f64,
    t_end: f64,
    prism: Vec<Point>,
}

/// Lifts a moving polygon to its space-time prism. Vertex `i` of `start`
/// travels at constant velocity to vertex `i` of `end`.
pub fn extrude_obstacle(
    start: ConvexPolygon2D,
    end: ConvexPolygon2D,
    t_start: f64,
    t_end: f64,
) -> Result<SpaceTimeObstacle, GeometryError> {
    if start.len() != end.len() {
        return Err(GeometryError::VertexCountMismatch { start: start.len(), end: end.len() });
    }
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(GeometryError::NonPositiveDuration);
    }
    // turn at vertex i is a quadratic in the interpolation fraction; it must
    // stay positive on [0, 1]
    let n = start.len();
    for i in 0..n {
        let edge = |poly: &ConvexPolygon2D, k: usize| poly.vertices[(k + 1) % n] - poly.vertices[k];
        let (a0, b0) = (edge(&start, i), edge(&start, (i + 1) % n));
        let (a1, b1) = (edge(&end, i), edge(&end, (i + 1) % n));
        let (da, db) = (a1 - a0, b1 - b0);
        let cr = |u: &Point, v: &Point| u.x() * v.y() - u.y() * v.x();
        let c0 = cr(&a0, &b0);
        let c1 = cr(&a0, &db) + cr(&da, &b0);
        let c2 = cr(&da, &db);
        let q = |f: f64| c0 + c1 * f + c2 * f * f;
        let mut min = q(0.0).min(q(1.0));
        if c2 > 0.0 {
            let f = -c1 / (2.0 * c2);
            if (0.0..=1.0).contains(&f) {
                min = min.min(q(f));
            }
        }
        if min <= 0.0 {
            return Err(GeometryError::NonConvexMotion);
        }
    }
    let prism = start
        .vertices
        .iter()
        .map(|v| v.with_time(t_start))
        .chain(end.vertices.iter().map(|v| v.with_time(t_end)))
        .collect();
    Ok(SpaceTimeObstacle { start_polygon: start, end_polygon: end, t_start, t_end, prism })
}

impl SpaceTimeObstacle {
    /// A static obstacle over `[t_start, t_end]`.
    pub fn stationary(poly: ConvexPolygon2D, t_start: f64, t_end: f64) -> Result<Self, GeometryError> {
        extrude_obstacle(poly.clone(), poly, t_start, t_end)
    }

    pub fn start_polygon(&self) -> &ConvexPolygon2D {
        &self.start_polygon
    }

    pub fn end_polygon(&self) -> &ConvexPolygon2D {
        &self.end_polygon
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// `2k` space-time vertices: the start face then the end face.
    pub fn prism_vertices(&self) -> &[Point] {
        &self.prism
    }

    pub fn is_static(&self) -> bool {
        self.start_polygon == self.end_polygon
    }

    /// The obstacle's footprint at time `t`.
    pub fn cross_section(&self, t: f64) -> Result<ConvexPolygon2D, GeometryError> {
        obstacle_cross_section(self, t)
    }
}

/// Polygon occupied by `o` at time `t`, by per-vertex linear interpolation.
pub fn obstacle_cross_section(o: &SpaceTimeObstacle, t: f64) -> Result<ConvexPolygon2D, GeometryError> {
    if !(t >= o.t_start && t <= o.t_end) {
        return Err(GeometryError::OutOfLifetime { t, start: o.t_start, end: o.t_end });
    }
    let f = (t - o.t_start) / (o.t_end - o.t_start);
    if f == 0.0 {
        return Ok(o.start_polygon.clone());
    }
    if f == 1.0 {
        return Ok(o.end_polygon.clone());
    }
    let vertices = o
        .start_polygon
        .vertices
        .iter()
        .zip(&o.end_polygon.vertices)
        .map(|(a, b)| a.lerp(b, f))
        .collect();
    Ok(ConvexPolygon2D { vertices })
}

// ---------------------------------------------------------------------------
// Ellipsoid

/// `{center + C u : ‖u‖₂ ≤ 1}` with `C` symmetric positive definite.
#[derive(Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    center: Point,
    shape: [f64; 9],
}

impl fmt::Debug for Ellipsoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.center.dim();
        f.debug_struct("Ellipsoid")
            .field("center", &self.center)
            .field("shape", &&self.shape[..d * d])
            .finish()
    }
}

impl Ellipsoid {
    /// `shape` is row-major `d×d`.
    pub fn new(center: Point, shape: &[f64]) -> Result<Self, GeometryError> {
        let d = center.dim();
        if shape.len() != d * d {
            return Err(GeometryError::DimensionMismatch { expected: d * d, found: shape.len() });
        }
        if shape.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let scale = shape.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (shape[i * d + j] - shape[j * d + i]).abs() > 1e-12 * scale {
                    return Err(GeometryError::NotPositiveDefinite);
                }
            }
        }
        let mut shifted = [0.0; 9];
        shifted[..d * d].copy_from_slice(shape);
        for i in 0..d {
            shifted[i * d + i] -= 1e-12;
        }
        if !math::cholesky(&mut shifted[..d * d], d) {
            return Err(GeometryError::NotPositiveDefinite);
        }
        let mut s = [0.0; 9];
        s[..d * d].copy_from_slice(shape);
        Ok(Self { center, shape: s })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self, GeometryError> {
        let d = center.dim();
        let mut s = [0.0; 9];
        for i in 0..d {
            s[i * d + i] = radius;
        }
        Self::new(center, &s[..d * d])
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn shape(&self) -> &[f64] {
        let d = self.dim();
        &self.shape[..d * d]
    }

    pub fn log_det(&self) -> f64 {
        let d = self.dim();
        let mut l = self.shape;
        let ok = math::cholesky(&mut l[..d * d], d);
        debug_assert!(ok);
        math::cholesky_logdet(&l[..d * d], d)
    }

    /// `C⁻¹`, which maps the ellipsoid onto the unit ball.
    pub fn inverse_shape(&self) -> [f64; 9] {
        math::spd_inverse(&self.shape, self.dim()).expect("shape is positive definite")
    }

    /// `‖C⁻¹(p − c)‖₂`, the ellipsoid-metric distance of `p` from the center.
    pub fn metric_distance(&self, p: &Point) -> f64 {
        let d = self.dim();
        let inv = self.inverse_shape();
        let diff = *p - self.center;
        let mut u = [0.0; 3];
        math::mat_vec(&inv[..d * d], d, diff.as_slice(), &mut u[..d]);
        math::norm(&u[..d])
    }

    /// `d − a·c − ‖C a‖`: nonnegative iff the ellipsoid satisfies `a·x ≤ d`.
    pub fn facet_margin(&self, normal: &[f64], offset: f64) -> f64 {
        let d = self.dim();
        let mut ca = [0.0; 3];
        math::mat_vec(&self.shape[..d * d], d, normal, &mut ca[..d]);
        offset - math::dot(normal, self.center.as_slice()) - math::norm(&ca[..d])
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.metric_distance(p) <= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_square() -> HPolytope {
        HPolytope::from_box(&Point::xy(0.0, 0.0), &Point::xy(1.0, 1.0)).unwrap()
    }

    #[test]
    fn point_in_unit_square() {
        let h = unit_square();
        assert!(point_in_hpolytope(&h, &Point::xy(0.5, 0.5), 0.0).unwrap());
        assert!(!point_in_hpolytope(&h, &Point::xy(1.5, 0.5), 0.0).unwrap());
        assert!(point_in_hpolytope(&h, &Point::xy(1.0, 0.5), 1e-9).unwrap());
        assert!(matches!(
            point_in_hpolytope(&h, &Point::xyt(0.5, 0.5, 0.0), 0.0),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rows_are_normalized() {
        let h = HPolytope::new(2, vec![3.0, 4.0, -1.0, 0.0, 0.0, -1.0], vec![5.0, 0.0, 0.0]).unwrap();
        for i in 0..h.num_facets() {
            assert!((math::norm(h.normal(i)) - 1.0).abs() < 1e-12);
        }
        assert!((h.offset(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_malformed_polytopes_are_rejected() {
        // x ≤ 0 and x ≥ 1
        let e = HPolytope::new(1, vec![1.0, -1.0], vec![0.0, -1.0]);
        assert_eq!(e, Err(GeometryError::Empty));
        let z = HPolytope::new(2, vec![0.0, 0.0], vec![1.0]);
        assert_eq!(z, Err(GeometryError::ZeroNormal { row: 0 }));
        let nf = HPolytope::new(2, vec![f64::NAN, 0.0], vec![1.0]);
        assert_eq!(nf, Err(GeometryError::NonFinite));
        // triangle-shaped infeasibility in 3D
        let t = HPolytope::new(
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, -1.0, 0.0],
            vec![0.0, 0.0, -0.5],
        );
        assert_eq!(t, Err(GeometryError::Empty));
    }

    #[test]
    fn boundedness() {
        assert!(unit_square().is_bounded());
        let half = HPolytope::new(2, vec![-1.0, 0.0], vec![0.0]).unwrap();
        assert!(!half.is_bounded());
        let strip = HPolytope::new(2, vec![1.0, 0.0, -1.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!(!strip.is_bounded());
        let cube = HPolytope::from_box(&Point::xyt(0.0, 0.0, 0.0), &Point::xyt(1.0, 2.0, 3.0)).unwrap();
        assert!(cube.is_bounded());
    }

    #[test]
    fn interior_point_and_vertices_of_box() {
        let cube = HPolytope::from_box(&Point::xyt(0.0, 0.0, 0.0), &Point::xyt(1.0, 2.0, 3.0)).unwrap();
        let p = cube.interior_point().unwrap();
        assert!(cube.violation(&p) < 0.0);
        assert_eq!(cube.vertices().len(), 8);
        let (lo, hi) = cube.bounding_box().unwrap();
        assert_eq!(lo, Point::xyt(0.0, 0.0, 0.0));
        assert_eq!(hi, Point::xyt(1.0, 2.0, 3.0));
        // a polytope with empty interior has no interior point
        let flat = HPolytope::new(2, vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(flat.interior_point().is_none());
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let sq = unit_square();
        let extra = sq.with_halfspace(&[1.0, 1.0], 5.0).unwrap().with_halfspace(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(extra.num_facets(), 6);
        let r = extra.without_redundant();
        assert_eq!(r.num_facets(), 4);
        for v in sq.vertices() {
            assert!(r.contains(&v, 1e-12));
        }
    }

    #[test]
    fn hull_from_vertices_contains_generators() {
        let pts = [
            Point::xy(0.0, 0.0),
            Point::xy(2.0, 0.0),
            Point::xy(1.0, 0.5),
            Point::xy(2.0, 1.0),
            Point::xy(0.0, 1.0),
        ];
        let h = HPolytope::from_vertices(&pts).unwrap();
        assert_eq!(h.num_facets(), 4);
        for p in &pts {
            assert!(h.contains(p, 1e-9));
        }
        let prism: Vec<Point> = pts.iter().flat_map(|p| [p.with_time(0.0), p.with_time(1.0)]).collect();
        let h3 = HPolytope::from_vertices(&prism).unwrap();
        assert_eq!(h3.num_facets(), 6);
        for p in &prism {
            assert!(h3.contains(p, 1e-9));
        }
        assert!(!h3.contains(&Point::xyt(1.0, 0.5, 1.5), 1e-9));
        let collinear = [Point::xy(0.0, 0.0), Point::xy(1.0, 1.0), Point::xy(2.0, 2.0)];
        assert_eq!(HPolytope::from_vertices(&collinear), Err(GeometryError::NotFullDimensional));
    }

    #[test]
    fn slicing_a_slanted_prism() {
        let sq = ConvexPolygon2D::square(Point::xy(0.0, 0.5), 0.2).unwrap();
        let o = extrude_obstacle(sq.clone(), sq.translated(Point::xy(1.0, 0.0)), 0.0, 1.0).unwrap();
        let h = HPolytope::from_vertices(o.prism_vertices()).unwrap();
        let s = h.slice_last(0.5).unwrap();
        let mut v = s.vertices();
        v.sort_by(|a, b| a.x().total_cmp(&b.x()).then(a.y().total_cmp(&b.y())));
        let expect = [(0.4, 0.4), (0.4, 0.6), (0.6, 0.4), (0.6, 0.6)];
        for (p, e) in v.iter().zip(expect) {
            assert!((p.x() - e.0).abs() < 1e-9 && (p.y() - e.1).abs() < 1e-9);
        }
        assert!(h.slice_last(2.0).is_none());
    }

    #[test]
    fn polygon_validation() {
        let ccw = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)];
        assert!(ConvexPolygon2D::new(ccw.clone()).is_ok());
        let cw: Vec<Point> = ccw.iter().rev().copied().collect();
        assert_eq!(ConvexPolygon2D::new(cw), Err(GeometryError::NotConvex));
        assert_eq!(
            ConvexPolygon2D::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        );
        let collinear = vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(2.0, 0.0), Point::xy(0.0, 1.0)];
        assert_eq!(ConvexPolygon2D::new(collinear), Err(GeometryError::NotConvex));
        // pentagram: five left turns but winds twice
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let a = core::f64::consts::PI / 2.0 + (k as f64) * 4.0 * core::f64::consts::PI / 5.0;
                Point::xy(libm::cos(a), libm::sin(a))
            })
            .collect();
        assert_eq!(ConvexPolygon2D::new(star), Err(GeometryError::NotConvex));
    }

    #[test]
    fn point_in_polygon_with_margin() {
        let sq = ConvexPolygon2D::square(Point::xy(0.5, 0.5), 1.0).unwrap();
        assert!(point_in_polygon(&sq, &Point::xy(0.5, 0.5), 0.0));
        // 0.05 outside the right facet: Euclidean distance 0.05
        assert!(point_in_polygon(&sq, &Point::xy(1.05, 0.5), 0.1));
        assert!(!point_in_polygon(&sq, &Point::xy(1.05, 0.5), 0.04));
        assert!(point_in_polygon(&sq, &Point::xy(1.0, 1.0), 0.0));
        // diagonal from a corner: distance √2·0.1
        assert!(!point_in_polygon(&sq, &Point::xy(1.1, 1.1), 0.14));
        assert!(point_in_polygon(&sq, &Point::xy(1.1, 1.1), 0.1415));
    }

    #[test]
    fn extrusion_of_moving_square() {
        let sq = ConvexPolygon2D::square(Point::xy(0.0, 0.5), 0.2).unwrap();
        let end = ConvexPolygon2D::square(Point::xy(1.0, 0.5), 0.2).unwrap();
        let o = extrude_obstacle(sq, end, 0.0, 1.0).unwrap();
        let v = o.prism_vertices();
        assert_eq!(v.len(), 8);
        assert!(v[0].distance(&Point::xyt(-0.1, 0.4, 0.0)) < 1e-15);
        assert!(v[4].distance(&Point::xyt(0.9, 0.4, 1.0)) < 1e-15);
        let mid = o.cross_section(0.5).unwrap();
        let c = mid.vertices().iter().fold(Point::xy(0.0, 0.0), |a, b| a + *b) * 0.25;
        assert!(c.distance(&Point::xy(0.5, 0.5)) < 1e-12);
        assert_eq!(&o.cross_section(0.0).unwrap(), o.start_polygon());
        assert_eq!(&o.cross_section(1.0).unwrap(), o.end_polygon());
        assert!(matches!(o.cross_section(1.5), Err(GeometryError::OutOfLifetime { .. })));
    }

    #[test]
    fn static_extrusion_keeps_xy() {
        let r = ConvexPolygon2D::rectangle(Point::xy(0.3, 0.2), Point::xy(0.6, 0.4)).unwrap();
        let o = SpaceTimeObstacle::stationary(r, 0.0, 1.0).unwrap();
        let v = o.prism_vertices();
        for i in 0..4 {
            assert_eq!(v[i].xy_part(), v[i + 4].xy_part());
            assert_eq!(v[i].t(), 0.0);
            assert_eq!(v[i + 4].t(), 1.0);
        }
        assert!(o.is_static());
    }

    #[test]
    fn extrusion_errors() {
        let tri = ConvexPolygon2D::new(vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap();
        let sq = ConvexPolygon2D::square(Point::xy(0.0, 0.0), 1.0).unwrap();
        assert_eq!(
            extrude_obstacle(tri.clone(), sq.clone(), 0.0, 1.0),
            Err(GeometryError::VertexCountMismatch { start: 3, end: 4 })
        );
        assert_eq!(extrude_obstacle(sq.clone(), sq.clone(), 1.0, 1.0), Err(GeometryError::NonPositiveDuration));
        // reversing vertex order across keyframes flips orientation mid-flight
        let rot: Vec<Point> = sq.vertices().iter().map(|p| Point::xy(-p.x(), -p.y())).collect();
        let flipped = ConvexPolygon2D::new(rot).unwrap();
        assert_eq!(extrude_obstacle(sq, flipped, 0.0, 1.0), Err(GeometryError::NonConvexMotion));
    }

    #[test]
    fn ellipsoid_basics() {
        let e = Ellipsoid::new(Point::xy(1.0, 0.5), &[1.0, 0.0, 0.0, 0.5]).unwrap();
        assert!((e.log_det() - libm::log(0.5)).abs() < 1e-12);
        assert!((e.metric_distance(&Point::xy(2.0, 0.5)) - 1.0).abs() < 1e-12);
        assert!((e.facet_margin(&[0.0, 1.0], 1.0)).abs() < 1e-12);
        assert!(Ellipsoid::new(Point::xy(0.0, 0.0), &[1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(Ellipsoid::new(Point::xy(0.0, 0.0), &[1.0, 0.5, 0.0, 1.0]).is_err());
    }
}
