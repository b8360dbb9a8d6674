//! Conic programs for shortest paths in a graph of convex sets.
//!
//! Every vertex `v` carries a Bézier segment with control points
//! `x_{v,0..=n}`. The relaxation works with the lifted variables
//! `z_{v,i} = y_v x_{v,i}` so that every constraint is written in multiplied
//! form (`A z ≤ d y`) and no division by `y` ever happens. Each edge
//! `(a, b)` has two auxiliary vectors:
//!
//! * `z_first(a,b) = y_(a,b) x_{b,0}`, the junction point;
//! * `z_diff(a,b) = y_(a,b) (x_{b,1} − x_{b,0})`, the junction tangent.
//!
//! They are linked to the vertex variables on both sides: summed over the
//! outgoing edges of `a` they reproduce `z_{a,n}` and `z_{a,n} − z_{a,n−1}`,
//! and summed over the incoming edges of `b` they reproduce `z_{b,0}` and
//! `z_{b,1} − z_{b,0}`.
//!
//! [`assemble_restriction`] builds the much smaller program for a fixed
//! path, where junction points are shared expressions rather than
//! constrained copies.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::conic::{AffineRow, ConicProgram};
use crate::geometry::{HPolytope, Point};
use crate::graph::{GcsGraph, Terminals};
use crate::spline::{BezierSegment, Trajectory};
use crate::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error("dimension {found} does not match mode dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("terminal vertex {0} does not exist")]
    InvalidTerminal(usize),
    #[error("fixing refers to a missing variable {0:?}")]
    InvalidFixing(YVar),
    #[error("invalid path: {0}")]
    InvalidPath(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormulationParams {
    /// Bézier order `n`; every vertex gets `n + 1` control points.
    pub order: usize,
    /// Speed limit in m/s (space-time mode only).
    pub v_max: f64,
    /// Minimum time between consecutive control points in seconds
    /// (space-time mode only).
    pub epsilon: f64,
    pub mode: Mode,
    pub relaxation: Relaxation,
}

/// How the relaxation couples neighbouring vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Relaxation {
    /// Junction points and tangents are shared per edge and summed per
    /// vertex; the cost is charged on the vertex curves.
    #[default]
    Aggregated,
    /// Additionally gives every edge its own scaled copy of both endpoint
    /// curves, charging the cost on the copies. Same integral solutions,
    /// much tighter bound.
    PerEdge,
}

impl FormulationParams {
    pub fn static_2d(order: usize) -> Self {
        Self { order, v_max: f64::INFINITY, epsilon: 0.0, mode: Mode::Static2D, relaxation: Relaxation::Aggregated }
    }

    pub fn spacetime(order: usize, v_max: f64, epsilon: f64) -> Self {
        Self { order, v_max, epsilon, mode: Mode::SpaceTime3D, relaxation: Relaxation::Aggregated }
    }

    pub fn with_relaxation(self, relaxation: Relaxation) -> Self {
        Self { relaxation, ..self }
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        if self.order < 1 {
            return Err(FormulationError::InvalidParams("spline order must be at least 1"));
        }
        if self.mode == Mode::SpaceTime3D {
            if !(self.v_max > 0.0 && self.v_max.is_finite()) {
                return Err(FormulationError::InvalidParams("v_max must be positive and finite"));
            }
            if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
                return Err(FormulationError::InvalidParams("epsilon must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// A binary indicator of the mixed-integer program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum YVar {
    Vertex(usize),
    Edge(usize),
}

/// Branching decisions: indicator → fixed value.
pub type Fixings = BTreeMap<YVar, bool>;

/// Index layout of the relaxation's variables.
///
/// Order: `y_v`, `y_e`, `z_ctrl`, `z_edge_first`, `z_edge_diff`, then one
/// epigraph variable per consecutive control-point pair. The per-edge
/// relaxation appends the curve copies of every edge and their epigraph
/// variables.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableMap {
    num_vertices: usize,
    num_edges: usize,
    dim: usize,
    order: usize,
    copies: bool,
}

impl VariableMap {
    pub fn new(num_vertices: usize, num_edges: usize, dim: usize, order: usize) -> Self {
        Self { num_vertices, num_edges, dim, order, copies: false }
    }

    pub fn per_edge(num_vertices: usize, num_edges: usize, dim: usize, order: usize) -> Self {
        Self { copies: true, ..Self::new(num_vertices, num_edges, dim, order) }
    }

    pub fn y(&self, y: YVar) -> usize {
        match y {
            YVar::Vertex(v) => self.y_vertex(v),
            YVar::Edge(e) => self.y_edge(e),
        }
    }

    pub fn y_vertex(&self, v: usize) -> usize {
        v
    }

    pub fn y_edge(&self, e: usize) -> usize {
        self.num_vertices + e
    }

    fn z_ctrl_base(&self) -> usize {
        self.num_vertices + self.num_edges
    }

    pub fn z_ctrl(&self, v: usize, i: usize, k: usize) -> usize {
        self.z_ctrl_base() + (v * (self.order + 1) + i) * self.dim + k
    }

    fn z_first_base(&self) -> usize {
        self.z_ctrl_base() + self.num_vertices * (self.order + 1) * self.dim
    }

    pub fn z_edge_first(&self, e: usize, k: usize) -> usize {
        self.z_first_base() + e * self.dim + k
    }

    pub fn z_edge_diff(&self, e: usize, k: usize) -> usize {
        self.z_first_base() + (self.num_edges + e) * self.dim + k
    }

    /// Number of `y` and `z` variables, excluding cost epigraph variables.
    pub fn num_lifted(&self) -> usize {
        self.z_first_base() + 2 * self.num_edges * self.dim
    }

    pub fn cost_aux(&self, v: usize, i: usize) -> usize {
        self.num_lifted() + v * self.order + i
    }

    fn copy_base(&self) -> usize {
        self.num_lifted() + self.num_vertices * self.order
    }

    /// Copy of control point `i` of the tail (`head = false`) or head curve
    /// of edge `e`, scaled by `y_e`.
    ///
    /// # Panics
    ///
    /// If the map has no edge copies.
    pub fn edge_copy(&self, e: usize, head: bool, i: usize, k: usize) -> usize {
        assert!(self.copies, "aggregated relaxation has no edge copies");
        self.copy_base() + ((2 * e + head as usize) * (self.order + 1) + i) * self.dim + k
    }

    fn copy_cost_aux(&self, e: usize, head: bool, i: usize) -> usize {
        self.copy_base() + 2 * self.num_edges * (self.order + 1) * self.dim + (2 * e + head as usize) * self.order + i
    }

    pub fn num_vars(&self) -> usize {
        if self.copies {
            self.copy_base() + 2 * self.num_edges * ((self.order + 1) * self.dim + self.order)
        } else {
            self.copy_base()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vertex_flows(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_vertices).map(|v| x[self.y_vertex(v)]).collect()
    }

    pub fn edge_flows(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_edges).map(|e| x[self.y_edge(e)]).collect()
    }

    /// Lifted control point `z_{v,i}`.
    pub fn lifted_point(&self, x: &[f64], v: usize, i: usize) -> Point {
        let c: Vec<f64> = (0..self.dim).map(|k| x[self.z_ctrl(v, i, k)]).collect();
        Point::new(&c).expect("solver primal is finite")
    }
}

fn check_inputs(g: &GcsGraph, t: &Terminals, params: &FormulationParams) -> Result<(), FormulationError> {
    params.validate()?;
    if g.is_empty() {
        return Err(FormulationError::EmptyGraph);
    }
    let d = params.mode.dim();
    for found in [g.dim(), t.start.dim(), t.goal.dim()] {
        if found != d {
            return Err(FormulationError::DimensionMismatch { expected: d, found });
        }
    }
    for v in [t.source, t.sink] {
        if v >= g.num_vertices() {
            return Err(FormulationError::InvalidTerminal(v));
        }
    }
    Ok(())
}

/// Row `d_f·y − a_f·p` for facet `f`.
fn facet_row(h: &HPolytope, f: usize, p: &[AffineRow], y: Option<usize>) -> AffineRow {
    let mut r = match y {
        Some(col) => AffineRow::var(col, h.offset(f)),
        None => AffineRow::constant(h.offset(f)),
    };
    for (k, &a) in h.normal(f).iter().enumerate() {
        r.add_scaled(&p[k], -a);
    }
    r
}

/// Rows `d·y − A·p ≥ 0` for a point given as affine expressions.
fn membership_rows(h: &HPolytope, p: &[AffineRow], y: Option<usize>, out: &mut Vec<AffineRow>) {
    for f in 0..h.num_facets() {
        let r = facet_row(h, f, p, y);
        if !r.terms.is_empty() {
            out.push(r);
        }
    }
}

/// Facet pairs `(f, g)` with `a_f = −b_g` and `d_f = −d_g`: the two sets
/// touch along that plane and lie on opposite sides of it.
fn shared_facets(a: &HPolytope, b: &HPolytope) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for f in 0..a.num_facets() {
        let found = (0..b.num_facets()).find(|&g| {
            let opposite = a.normal(f).iter().zip(b.normal(g)).all(|(x, y)| (x + y).abs() <= 1e-9);
            opposite && (a.offset(f) + b.offset(g)).abs() <= 1e-9 * (1.0 + a.offset(f).abs())
        });
        if let Some(g) = found {
            pairs.push((f, g));
        }
    }
    pairs
}

/// Membership of a junction point in both `a` and `b`. A shared facet
/// would give two opposite inequalities that can only hold with equality;
/// it is written as one equality instead, so that the program keeps a
/// strictly feasible point.
fn junction_rows(
    a: &HPolytope,
    b: &HPolytope,
    p: &[AffineRow],
    y: usize,
    zero: &mut Vec<AffineRow>,
    nonneg: &mut Vec<AffineRow>,
) {
    let pairs = shared_facets(a, b);
    for f in 0..a.num_facets() {
        let r = facet_row(a, f, p, Some(y));
        if pairs.iter().any(|&(pf, _)| pf == f) {
            zero.push(r);
        } else {
            nonneg.push(r);
        }
    }
    for g in (0..b.num_facets()).filter(|&g| pairs.iter().all(|&(_, pg)| pg != g)) {
        nonneg.push(facet_row(b, g, p, Some(y)));
    }
}

/// Rows `d·scale − A·p ≥ 0`.
fn scaled_membership_rows(h: &HPolytope, p: &[AffineRow], scale: &AffineRow, out: &mut Vec<AffineRow>) {
    for f in 0..h.num_facets() {
        let mut r = AffineRow::new();
        r.add_scaled(scale, h.offset(f));
        for (k, &a) in h.normal(f).iter().enumerate() {
            r.add_scaled(&p[k], -a);
        }
        out.push(r);
    }
}

fn diff(a: &[AffineRow], b: &[AffineRow]) -> Vec<AffineRow> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut r = x.clone();
            r.add_scaled(y, -1.0);
            r
        })
        .collect()
}

/// Velocity cone `‖Δ_xy‖ ≤ v_max Δ_t` and time separation `Δ_t ≥ ε·scale`.
fn spacetime_rows(p: &mut ConicProgram, delta: &[AffineRow], params: &FormulationParams, scale: Option<usize>, nonneg: &mut Vec<AffineRow>) {
    let mut cone_t = AffineRow::new();
    cone_t.add_scaled(&delta[2], params.v_max);
    p.add_soc(&[cone_t, delta[0].clone(), delta[1].clone()]);
    let mut sep = delta[2].clone();
    match scale {
        Some(col) => sep.push(col, -params.epsilon),
        None => sep.constant -= params.epsilon,
    }
    nonneg.push(sep);
}

/// Indicators whose value is known before solving, indexed like the `y`
/// block of [`VariableMap`]: the terminals, edges into the source or out of
/// the sink, branching decisions and, when `prune` is set, vertices that
/// cannot lie on a simple source-sink path because they have at most one
/// live neighbour. Writing these as equalities instead of bounds keeps the
/// relaxation strictly feasible.
fn known_indicators(g: &GcsGraph, t: &Terminals, fix: &Fixings, prune: bool) -> Vec<Option<bool>> {
    let (nv, ne) = (g.num_vertices(), g.num_edges());
    let mut known = alloc::vec![None; nv + ne];
    for (&key, &val) in fix {
        known[match key {
            YVar::Vertex(v) => v,
            YVar::Edge(e) => nv + e,
        }] = Some(val);
    }
    for v in [t.source, t.sink] {
        known[v] = Some(true);
    }
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        if b == t.source || a == t.sink || known[a] == Some(false) || known[b] == Some(false) {
            known[nv + e] = Some(false);
        }
    }
    let mut changed = prune;
    while changed {
        changed = false;
        for v in 0..nv {
            if v == t.source || v == t.sink || known[v] == Some(false) {
                continue;
            }
            let live = |e: usize| known[nv + e] != Some(false);
            let has_in = g.incoming(v).iter().any(|&e| live(e));
            let has_out = g.outgoing(v).iter().any(|&e| live(e));
            let edges: Vec<usize> = g.incoming(v).iter().chain(g.outgoing(v)).copied().filter(|&e| live(e)).collect();
            if edges.iter().any(|&e| known[nv + e] == Some(true)) {
                continue;
            }
            let mut neighbours: Vec<usize> =
                edges.iter().map(|&e| if g.edges()[e].0 == v { g.edges()[e].1 } else { g.edges()[e].0 }).collect();
            neighbours.sort_unstable();
            neighbours.dedup();
            if neighbours.len() <= 1 || !has_in || !has_out {
                known[v] = Some(false);
                for e in edges {
                    known[nv + e] = Some(false);
                }
                changed = true;
            }
        }
    }
    known
}

/// Relaxed program over `y ∈ [0, 1]` for the given graph, terminals and
/// branching decisions.
///
/// Edges into the source and out of the sink are fixed to zero, which forces
/// `y_source = y_sink = 1`.
pub fn assemble_relaxation(
    g: &GcsGraph,
    t: &Terminals,
    params: &FormulationParams,
    fix: &Fixings,
) -> Result<(ConicProgram, VariableMap), FormulationError> {
    check_inputs(g, t, params)?;
    let (nv, ne, d, n) = (g.num_vertices(), g.num_edges(), params.mode.dim(), params.order);
    let per_edge = params.relaxation == Relaxation::PerEdge;
    let map = if per_edge { VariableMap::per_edge(nv, ne, d, n) } else { VariableMap::new(nv, ne, d, n) };
    let mut p = ConicProgram::new(map.num_vars());
    let mut zero = Vec::new();
    let mut nonneg = Vec::new();

    for (&key, _) in fix {
        let ok = match key {
            YVar::Vertex(v) => v < nv,
            YVar::Edge(e) => e < ne,
        };
        if !ok {
            return Err(FormulationError::InvalidFixing(key));
        }
    }
    let known = known_indicators(g, t, fix, per_edge);
    let terminal = |v: usize| v == t.source || v == t.sink;
    // terminal indicators are already fixed at one by their flow rows
    for (y, value) in known.iter().enumerate().filter(|&(y, _)| y >= nv || !terminal(y)) {
        match value {
            Some(v) => zero.push(AffineRow::var(y, 1.0).add_const(-(*v as u8 as f64))),
            None => {
                nonneg.push(AffineRow::var(y, 1.0));
                nonneg.push(AffineRow::constant(1.0).add(y, -1.0));
            }
        }
    }

    // flow conservation, minus the sink's outflow row, which is the negated
    // sum of all others; vertices known to be unused are pinned instead
    for v in (0..nv).filter(|&v| terminal(v) || known[v] != Some(false)) {
        let delta_s = if v == t.source { 1.0 } else { 0.0 };
        let delta_f = if v == t.sink { 1.0 } else { 0.0 };
        let mut inflow = AffineRow::constant(delta_s).add(map.y_vertex(v), -1.0);
        for &e in g.incoming(v) {
            inflow.push(map.y_edge(e), 1.0);
        }
        let mut outflow = AffineRow::constant(delta_f).add(map.y_vertex(v), -1.0);
        for &e in g.outgoing(v) {
            outflow.push(map.y_edge(e), 1.0);
        }
        zero.push(inflow);
        if v != t.sink {
            zero.push(outflow);
        }
    }

    let point = |v: usize, i: usize| -> Vec<AffineRow> { (0..d).map(|k| AffineRow::var(map.z_ctrl(v, i, k), 1.0)).collect() };
    let first = |e: usize| -> Vec<AffineRow> { (0..d).map(|k| AffineRow::var(map.z_edge_first(e, k), 1.0)).collect() };
    let tangent = |e: usize| -> Vec<AffineRow> { (0..d).map(|k| AffineRow::var(map.z_edge_diff(e, k), 1.0)).collect() };

    // with edge copies the vertex curves are sums of copies, and everything
    // below is implied except for a lone source-sink vertex
    let vertex_rows = |v: usize| !per_edge || (v == t.source && v == t.sink);

    // set membership of every control point
    for v in (0..nv).filter(|&v| vertex_rows(v)) {
        for i in 0..=n {
            membership_rows(g.region(v), &point(v, i), Some(map.y_vertex(v)), &mut nonneg);
        }
    }

    if per_edge {
        per_edge_rows(g, t, params, &map, &known, &mut p, &mut zero, &mut nonneg);
    } else {
        // junction links on both sides of every edge
        for v in 0..nv {
            for k in 0..d {
                if v != t.sink {
                    let mut cont = AffineRow::var(map.z_ctrl(v, n, k), 1.0);
                    let mut tang = AffineRow::var(map.z_ctrl(v, n, k), 1.0).add(map.z_ctrl(v, n - 1, k), -1.0);
                    for &e in g.outgoing(v) {
                        cont.push(map.z_edge_first(e, k), -1.0);
                        tang.push(map.z_edge_diff(e, k), -1.0);
                    }
                    zero.push(cont);
                    zero.push(tang);
                }
                if v != t.source {
                    let mut cont = AffineRow::var(map.z_ctrl(v, 0, k), 1.0);
                    let mut tang = AffineRow::var(map.z_ctrl(v, 1, k), 1.0).add(map.z_ctrl(v, 0, k), -1.0);
                    for &e in g.incoming(v) {
                        cont.push(map.z_edge_first(e, k), -1.0);
                        tang.push(map.z_edge_diff(e, k), -1.0);
                    }
                    zero.push(cont);
                    zero.push(tang);
                }
            }
        }
        // the junction and its neighbours on either side, per edge
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let zf = first(e);
            let mut second = zf.clone();
            let mut before = zf.clone();
            for ((s, p), dz) in second.iter_mut().zip(before.iter_mut()).zip(tangent(e)) {
                s.add_scaled(&dz, 1.0);
                p.add_scaled(&dz, -1.0);
            }
            junction_rows(g.region(a), g.region(b), &zf, map.y_edge(e), &mut zero, &mut nonneg);
            membership_rows(g.region(b), &second, Some(map.y_edge(e)), &mut nonneg);
            membership_rows(g.region(a), &before, Some(map.y_edge(e)), &mut nonneg);
        }
    }

    if params.mode == Mode::SpaceTime3D {
        for v in (0..nv).filter(|&v| vertex_rows(v)) {
            for i in 0..n {
                let delta = diff(&point(v, i + 1), &point(v, i));
                spacetime_rows(&mut p, &delta, params, Some(map.y_vertex(v)), &mut nonneg);
            }
        }
        if !per_edge {
            for e in 0..ne {
                spacetime_rows(&mut p, &tangent(e), params, Some(map.y_edge(e)), &mut nonneg);
            }
        }
    }

    // implied by the anchored edge copies otherwise
    if vertex_rows(t.source) {
        for k in 0..d {
            zero.push(AffineRow::var(map.z_ctrl(t.source, 0, k), 1.0).add(map.y_vertex(t.source), -t.start[k]));
            zero.push(AffineRow::var(map.z_ctrl(t.sink, n, k), 1.0).add(map.y_vertex(t.sink), -t.goal[k]));
        }
    }

    for v in 0..nv {
        for i in 0..n {
            let s = map.cost_aux(v, i);
            if vertex_rows(v) {
                let delta = diff(&point(v, i + 1), &point(v, i));
                p.add_soc(&[AffineRow::var(s, 1.0), delta[0].clone(), delta[1].clone()]);
                p.set_objective(s, 1.0);
            } else {
                zero.push(AffineRow::var(s, 1.0));
            }
        }
    }

    p.add_zero(&zero);
    p.add_nonneg(&nonneg);
    Ok((p, map))
}

/// Edge copies: each edge `(a, b)` carries `y_e x_a` and `y_e x_b`, which
/// must be a feasible two-segment chain scaled by `y_e`. Summed over the
/// outgoing (incoming) edges of a vertex they reproduce its curve, and the
/// copies at the source and sink are anchored at the terminals. The cost
/// is charged on the tail copies, plus the head copies of edges into the
/// sink.
fn per_edge_rows(
    g: &GcsGraph,
    t: &Terminals,
    params: &FormulationParams,
    map: &VariableMap,
    known: &[Option<bool>],
    p: &mut ConicProgram,
    zero: &mut Vec<AffineRow>,
    nonneg: &mut Vec<AffineRow>,
) {
    let (d, n, nv) = (params.mode.dim(), params.order, g.num_vertices());
    let dead = |e: usize| known[nv + e] == Some(false);
    let copy = |e: usize, head: bool, i: usize| -> Vec<AffineRow> {
        (0..d).map(|k| AffineRow::var(map.edge_copy(e, head, i, k), 1.0)).collect()
    };
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        let y = map.y_edge(e);
        if dead(e) {
            for head in [false, true] {
                for i in 0..=n {
                    (0..d).for_each(|k| zero.push(AffineRow::var(map.edge_copy(e, head, i, k), 1.0)));
                }
                (0..n).for_each(|i| zero.push(AffineRow::var(map.copy_cost_aux(e, head, i), 1.0)));
            }
            for k in 0..d {
                zero.push(AffineRow::var(map.z_edge_first(e, k), 1.0));
                zero.push(AffineRow::var(map.z_edge_diff(e, k), 1.0));
            }
            continue;
        }
        junction_rows(g.region(a), g.region(b), &copy(e, false, n), y, zero, nonneg);
        for (head, region) in [(false, a), (true, b)] {
            for i in (0..=n).filter(|&i| i != if head { 0 } else { n }) {
                membership_rows(g.region(region), &copy(e, head, i), Some(y), nonneg);
            }
            for i in 0..n {
                let delta = diff(&copy(e, head, i + 1), &copy(e, head, i));
                if params.mode == Mode::SpaceTime3D {
                    spacetime_rows(p, &delta, params, Some(y), nonneg);
                }
                let s = map.copy_cost_aux(e, head, i);
                if (!head && a != t.sink) || (head && b == t.sink) {
                    p.add_soc(&[AffineRow::var(s, 1.0), delta[0].clone(), delta[1].clone()]);
                    p.set_objective(s, 1.0);
                } else {
                    zero.push(AffineRow::var(s, 1.0));
                }
            }
        }
        for k in 0..d {
            let (tail_n, tail_m) = (map.edge_copy(e, false, n, k), map.edge_copy(e, false, n - 1, k));
            let (head_0, head_1) = (map.edge_copy(e, true, 0, k), map.edge_copy(e, true, 1, k));
            zero.push(AffineRow::var(tail_n, 1.0).add(head_0, -1.0));
            zero.push(AffineRow::var(tail_n, 1.0).add(tail_m, -1.0).add(head_1, -1.0).add(head_0, 1.0));
            if a == t.source {
                zero.push(AffineRow::var(map.edge_copy(e, false, 0, k), 1.0).add(y, -t.start[k]));
            }
            if b == t.sink {
                zero.push(AffineRow::var(map.edge_copy(e, true, n, k), 1.0).add(y, -t.goal[k]));
            }
            zero.push(AffineRow::var(map.z_edge_first(e, k), 1.0).add(head_0, -1.0));
            zero.push(AffineRow::var(map.z_edge_diff(e, k), 1.0).add(head_1, -1.0).add(head_0, 1.0));
        }
    }
    // A vertex entered from u and left towards u at once would be a 2-cycle,
    // so what remains of its curve after removing both copies stays in its
    // set. Summed over the neighbours these remainders give (|N| − 2) z_v:
    // with two neighbours they vanish, and one equality says it all.
    for v in 0..nv {
        if v == t.source || v == t.sink || known[v] == Some(false) {
            continue;
        }
        let mut neighbours: Vec<usize> = g
            .incoming(v)
            .iter()
            .map(|&e| g.edges()[e].0)
            .chain(g.outgoing(v).iter().map(|&e| g.edges()[e].1))
            .filter(|&u| [g.find_edge(u, v), g.find_edge(v, u)].iter().flatten().any(|&e| !dead(e)))
            .collect();
        neighbours.sort_unstable();
        neighbours.dedup();
        let pair = |u: usize| {
            let live = |e: Option<usize>| e.filter(|&e| !dead(e));
            (live(g.find_edge(u, v)), live(g.find_edge(v, u)))
        };
        let remainder = |into: Option<usize>, out: Option<usize>| {
            let mut scale = AffineRow::var(map.y_vertex(v), 1.0);
            let mut rest: Vec<Vec<AffineRow>> =
                (0..=n).map(|i| (0..d).map(|k| AffineRow::var(map.z_ctrl(v, i, k), 1.0)).collect()).collect();
            for (e, head) in [(into, true), (out, false)] {
                let Some(e) = e else { continue };
                scale.push(map.y_edge(e), -1.0);
                for (i, pt) in rest.iter_mut().enumerate() {
                    for (k, r) in pt.iter_mut().enumerate() {
                        r.push(map.edge_copy(e, head, i, k), -1.0);
                    }
                }
            }
            (scale, rest)
        };
        if neighbours.len() == 2 {
            let (into, out) = pair(neighbours[0]);
            let (scale, rest) = remainder(into, out);
            zero.push(scale);
            zero.extend(rest.into_iter().flatten());
            continue;
        }
        for u in neighbours {
            let (Some(into), Some(out)) = pair(u) else { continue };
            let (scale, rest) = remainder(Some(into), Some(out));
            for pt in &rest {
                scaled_membership_rows(g.region(v), pt, &scale, nonneg);
            }
            nonneg.push(scale);
        }
    }
    for v in 0..g.num_vertices() {
        // an unused vertex has every copy pinned at zero, so one side suffices
        let unused = known[v] == Some(false) && v != t.source && v != t.sink;
        for (edges, head, skip) in [(g.outgoing(v), false, v == t.sink), (g.incoming(v), true, v == t.source || unused)] {
            if skip {
                continue;
            }
            for i in 0..=n {
                for k in 0..d {
                    let mut r = AffineRow::var(map.z_ctrl(v, i, k), 1.0);
                    for &e in edges {
                        r.push(map.edge_copy(e, head, i, k), -1.0);
                    }
                    zero.push(r);
                }
            }
        }
    }
}

/// Program for a fixed source-to-sink path, with control points kept as
/// affine expressions of the decision variables.
#[derive(Clone, Debug)]
pub struct ChainProgram {
    pub program: ConicProgram,
    points: Vec<Vec<Vec<AffineRow>>>,
    mode: Mode,
}

impl ChainProgram {
    /// The trajectory encoded by a primal solution.
    pub fn trajectory(&self, x: &[f64]) -> Trajectory {
        let segments = self
            .points
            .iter()
            .map(|seg| {
                let pts = seg
                    .iter()
                    .map(|p| {
                        let c: Vec<f64> = p.iter().map(|r| r.eval(x)).collect();
                        Point::new(&c).expect("solver primal is finite")
                    })
                    .collect();
                BezierSegment::new(pts).expect("order is at least 1")
            })
            .collect();
        Trajectory::new(segments, self.mode).expect("segments match the mode")
    }
}

/// Checks that `path` is a simple chain of graph edges from source to sink.
pub fn check_path(g: &GcsGraph, t: &Terminals, path: &[usize]) -> Result<(), FormulationError> {
    if path.first() != Some(&t.source) || path.last() != Some(&t.sink) {
        return Err(FormulationError::InvalidPath("path must run from source to sink"));
    }
    for (i, &v) in path.iter().enumerate() {
        if v >= g.num_vertices() {
            return Err(FormulationError::InvalidPath("unknown vertex"));
        }
        if path[..i].contains(&v) {
            return Err(FormulationError::InvalidPath("vertex repeated"));
        }
    }
    if path.windows(2).any(|w| g.find_edge(w[0], w[1]).is_none()) {
        return Err(FormulationError::InvalidPath("consecutive vertices are not joined by an edge"));
    }
    Ok(())
}

/// The convex restriction: indicators fixed to one along `path` and zero
/// elsewhere, written directly over the control points of the path.
pub fn assemble_restriction(
    g: &GcsGraph,
    t: &Terminals,
    path: &[usize],
    params: &FormulationParams,
) -> Result<ChainProgram, FormulationError> {
    check_inputs(g, t, params)?;
    check_path(g, t, path)?;
    let (d, n, len) = (params.mode.dim(), params.order, path.len());
    let mut p = ConicProgram::new(0);
    let mut zero = Vec::new();
    let mut nonneg = Vec::new();
    let constant = |pt: &Point| -> Vec<AffineRow> { pt.as_slice().iter().map(|&c| AffineRow::constant(c)).collect() };

    let mut points: Vec<Vec<Vec<AffineRow>>> = Vec::with_capacity(len);
    for (j, &v) in path.iter().enumerate() {
        let mut seg: Vec<Vec<AffineRow>> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let last = j + 1 == len && i == n;
            let derived = j > 0 && i <= 1;
            let pt = if j == 0 && i == 0 {
                constant(&t.start)
            } else if j > 0 && i == 0 {
                points[j - 1][n].clone()
            } else if derived {
                // x_{j,1} = 2 x_{j−1,n} − x_{j−1,n−1}
                let prev = &points[j - 1];
                let mut q = Vec::with_capacity(d);
                for k in 0..d {
                    let mut r = AffineRow::new();
                    r.add_scaled(&prev[n][k], 2.0);
                    r.add_scaled(&prev[n - 1][k], -1.0);
                    q.push(r);
                }
                q
            } else if last {
                constant(&t.goal)
            } else {
                (0..d).map(|_| AffineRow::var(p.add_variable(), 1.0)).collect()
            };
            if last && derived {
                for k in 0..d {
                    zero.push(pt[k].clone().add_const(-t.goal[k]));
                }
            }
            membership_rows(g.region(v), &pt, None, &mut nonneg);
            seg.push(pt);
        }
        for i in 0..n {
            let delta = diff(&seg[i + 1], &seg[i]);
            if params.mode == Mode::SpaceTime3D {
                spacetime_rows(&mut p, &delta, params, None, &mut nonneg);
            }
            let s = p.add_variable();
            p.add_soc(&[AffineRow::var(s, 1.0), delta[0].clone(), delta[1].clone()]);
            p.set_objective(s, 1.0);
        }
        points.push(seg);
    }
    p.add_zero(&zero);
    p.add_nonneg(&nonneg);
    Ok(ChainProgram { program: p, points, mode: params.mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cube(x0: f64, x1: f64) -> HPolytope {
        HPolytope::from_box(&Point::xyt(x0, 0.0, 0.0), &Point::xyt(x1, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn variable_count_for_four_vertex_ring() {
        let regions = vec![cube(0.0, 1.0), cube(1.0, 2.0), cube(2.0, 3.0), cube(3.0, 4.0)];
        let edges = vec![(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2), (3, 0), (0, 3)];
        let g = GcsGraph::new(regions, edges).unwrap();
        let t = Terminals { source: 0, sink: 2, start: Point::xyt(0.5, 0.5, 0.0), goal: Point::xyt(2.5, 0.5, 1.0) };
        let params = FormulationParams::spacetime(3, 2.0, 1e-3);
        let (p, map) = assemble_relaxation(&g, &t, &params, &Fixings::new()).unwrap();
        assert_eq!(map.num_lifted(), 108);
        assert_eq!(p.num_vars(), 108 + 12);
        p.validate().unwrap();
    }

    #[test]
    fn variable_ranges_are_disjoint() {
        let m = VariableMap::new(3, 4, 2, 2);
        let mut seen = vec![false; m.num_vars()];
        let mut mark = |i: usize| {
            assert!(!seen[i]);
            seen[i] = true;
        };
        (0..3).for_each(|v| mark(m.y_vertex(v)));
        (0..4).for_each(|e| mark(m.y_edge(e)));
        for v in 0..3 {
            for i in 0..3 {
                (0..2).for_each(|k| mark(m.z_ctrl(v, i, k)));
            }
        }
        for e in 0..4 {
            (0..2).for_each(|k| mark(m.z_edge_first(e, k)));
            (0..2).for_each(|k| mark(m.z_edge_diff(e, k)));
        }
        for v in 0..3 {
            (0..2).for_each(|i| mark(m.cost_aux(v, i)));
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn per_edge_copies_follow_the_lifted_block() {
        let m = VariableMap::per_edge(3, 4, 2, 2);
        let plain = VariableMap::new(3, 4, 2, 2);
        assert_eq!(m.num_vars(), plain.num_vars() + 2 * 4 * (3 * 2 + 2));
        let mut seen = vec![false; m.num_vars()];
        for e in 0..4 {
            for head in [false, true] {
                for i in 0..3 {
                    for k in 0..2 {
                        let j = m.edge_copy(e, head, i, k);
                        assert!(j >= plain.num_vars() && !seen[j]);
                        seen[j] = true;
                    }
                }
                for i in 0..2 {
                    let j = m.copy_cost_aux(e, head, i);
                    assert!(!seen[j]);
                    seen[j] = true;
                }
            }
        }
        assert!(seen[plain.num_vars()..].iter().all(|&s| s));
    }

    #[test]
    fn per_edge_program_is_well_formed() {
        let regions = vec![cube(0.0, 1.0), cube(1.0, 2.0), cube(2.0, 3.0), cube(3.0, 4.0)];
        let edges = vec![(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2), (3, 0), (0, 3)];
        let g = GcsGraph::new(regions, edges).unwrap();
        let t = Terminals { source: 0, sink: 2, start: Point::xyt(0.5, 0.5, 0.0), goal: Point::xyt(2.5, 0.5, 1.0) };
        let params = FormulationParams::spacetime(3, 2.0, 1e-3).with_relaxation(Relaxation::PerEdge);
        let (p, map) = assemble_relaxation(&g, &t, &params, &Fixings::new()).unwrap();
        assert_eq!(map.num_lifted(), 108);
        assert_eq!(p.num_vars(), map.num_vars());
        p.validate().unwrap();
    }

    #[test]
    fn parameter_and_input_errors() {
        let g = GcsGraph::new(vec![], vec![]).unwrap();
        let t = Terminals { source: 0, sink: 0, start: Point::xy(0.0, 0.0), goal: Point::xy(1.0, 1.0) };
        let params = FormulationParams::static_2d(3);
        assert_eq!(assemble_relaxation(&g, &t, &params, &Fixings::new()).unwrap_err(), FormulationError::EmptyGraph);
        let g = GcsGraph::new(vec![cube(0.0, 1.0)], vec![]).unwrap();
        assert!(matches!(
            assemble_relaxation(&g, &t, &params, &Fixings::new()),
            Err(FormulationError::DimensionMismatch { expected: 2, found: 3 })
        ));
        let bad = FormulationParams::spacetime(3, 0.0, 1e-3);
        assert!(matches!(bad.validate(), Err(FormulationError::InvalidParams(_))));
        assert!(matches!(FormulationParams::static_2d(0).validate(), Err(FormulationError::InvalidParams(_))));
    }

    #[test]
    fn restriction_shares_junction_expressions() {
        let g = GcsGraph::new(vec![cube(0.0, 1.0), cube(1.0, 2.0)], vec![(0, 1), (1, 0)]).unwrap();
        let t = Terminals { source: 0, sink: 1, start: Point::xyt(0.5, 0.5, 0.0), goal: Point::xyt(1.5, 0.5, 1.0) };
        let params = FormulationParams::spacetime(3, 2.0, 1e-3);
        let chain = assemble_restriction(&g, &t, &[0, 1], &params).unwrap();
        // x_{0,1..=3} and x_{1,2} are free, plus one epigraph variable per pair
        assert_eq!(chain.program.num_vars(), 4 * 3 + 6);
        let x = vec![0.25; chain.program.num_vars()];
        let traj = chain.trajectory(&x);
        assert_eq!(traj.max_continuity_residual(), 0.0);
        assert!(traj.max_differentiability_residual() < 1e-15);
        assert!(matches!(
            assemble_restriction(&g, &t, &[1, 0], &params),
            Err(FormulationError::InvalidPath(_))
        ));
    }
}
