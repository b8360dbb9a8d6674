//! Branch-and-bound over the relaxed indicators.
//!
//! Nodes are explored best-first by their parent's relaxation bound. Every
//! node rounds its flow to a path (greedy maximum-flow walk, then a few
//! further paths of high flow product) and solves the convex restriction of
//! each, so incumbents appear early and are always certified trajectories.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::conic::{ConicSolver, SolveStatus, Tolerances};
use crate::formulation::{
    assemble_relaxation, assemble_restriction, FormulationError, FormulationParams, Fixings, VariableMap, YVar,
};
use crate::graph::{GcsGraph, Terminals};
use crate::spline::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("no feasible source-to-sink trajectory exists in the graph")]
    Infeasible,
    #[error("node limit reached before any feasible trajectory was found")]
    NodeLimitExceeded,
    #[error("conic solver reported {0:?}")]
    Numerical(SolveStatus),
    #[error("flow leaves no admissible edge at vertex {0}")]
    DeadEnd(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BnBOptions {
    pub integrality_tol: f64,
    /// Absolute optimality gap on the cost, in meters.
    pub gap_tol: f64,
    pub max_nodes: usize,
    /// Edges with less flow than this are ignored by path extraction.
    pub extraction_threshold: f64,
    /// Extra candidate paths per node, taken in order of decreasing flow
    /// product, whose restrictions are tried besides the greedy path.
    pub rounding_paths: usize,
    /// Stop trying extra paths once this many of them gave a trajectory.
    pub rounding_successes: usize,
    pub tolerances: Tolerances,
}

impl Default for BnBOptions {
    fn default() -> Self {
        Self {
            integrality_tol: 1e-4,
            gap_tol: 1e-6,
            max_nodes: 10_000,
            extraction_threshold: 1e-3,
            rounding_paths: 200,
            rounding_successes: 200,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The tree was closed to within the gap tolerance.
    Optimal,
    /// `max_nodes` was hit; the incumbent is the best found so far.
    NodeLimit,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: usize,
    pub relaxations: usize,
    pub restrictions: usize,
    /// Seconds spent inside relaxation solves, as reported by the backend.
    pub relaxation_time: f64,
    /// Seconds spent inside restriction solves, as reported by the backend.
    pub restriction_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub path: Vec<usize>,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub lower_bound: f64,
    pub root_bound: f64,
    pub termination: Termination,
    /// Set when some node was dropped after a numerical solver failure.
    pub inexact: bool,
    pub stats: SolveStats,
}

/// One line of the node trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeTrace {
    pub node: usize,
    pub bound: f64,
    pub incumbent: f64,
    pub max_fractionality: f64,
}

/// Optimal solution of one relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxation {
    pub objective: f64,
    pub vertex_flows: Vec<f64>,
    pub edge_flows: Vec<f64>,
    pub primal: Vec<f64>,
    pub map: VariableMap,
    pub solve_time: f64,
}

pub fn solve_relaxation(
    g: &GcsGraph,
    t: &Terminals,
    params: &FormulationParams,
    fix: &Fixings,
    solver: &dyn ConicSolver,
    tol: &Tolerances,
) -> Result<Relaxation, SolverError> {
    let (program, map) = assemble_relaxation(g, t, params, fix)?;
    let sol = solver.solve(&program, tol);
    match sol.status {
        SolveStatus::Optimal => Ok(Relaxation {
            objective: sol.objective_value,
            vertex_flows: map.vertex_flows(&sol.primal),
            edge_flows: map.edge_flows(&sol.primal),
            primal: sol.primal,
            map,
            solve_time: sol.solve_time,
        }),
        SolveStatus::Infeasible => Err(SolverError::Infeasible),
        s => Err(SolverError::Numerical(s)),
    }
}

/// Greedy walk from the source along the largest outgoing flow into an
/// unvisited vertex; ties go to the lower edge id.
pub fn extract_path(edge_flows: &[f64], g: &GcsGraph, t: &Terminals, threshold: f64) -> Result<Vec<usize>, SolverError> {
    let mut path = alloc::vec![t.source];
    let mut visited = alloc::vec![false; g.num_vertices()];
    visited[t.source] = true;
    let mut cur = t.source;
    while cur != t.sink {
        let mut best: Option<(usize, f64)> = None;
        for &e in g.outgoing(cur) {
            let (_, b) = g.edge(e);
            let y = edge_flows[e];
            if visited[b] || y < threshold {
                continue;
            }
            if best.map_or(true, |(_, by)| y > by) {
                best = Some((b, y));
            }
        }
        let (next, _) = best.ok_or(SolverError::DeadEnd(cur))?;
        visited[next] = true;
        path.push(next);
        cur = next;
    }
    Ok(path)
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Dijkstra from `from` to `to` over edges with a weight, avoiding the
/// banned vertices and edges.
fn shortest_path(
    g: &GcsGraph,
    w: &[Option<f64>],
    from: usize,
    to: usize,
    banned_v: &[bool],
    banned_e: &BTreeSet<usize>,
) -> Option<(Vec<usize>, f64)> {
    let n = g.num_vertices();
    let mut dist = alloc::vec![f64::INFINITY; n];
    let mut prev = alloc::vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Dist(0.0, from));
    while let Some(Dist(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if v == to {
            break;
        }
        for &e in g.outgoing(v) {
            let (_, b) = g.edge(e);
            let Some(we) = w[e] else { continue };
            if banned_v[b] || banned_e.contains(&e) {
                continue;
            }
            if d + we < dist[b] {
                dist[b] = d + we;
                prev[b] = v;
                heap.push(Dist(d + we, b));
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = alloc::vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some((path, dist[to]))
}

/// Up to `k` simple source-to-sink paths in order of decreasing product of
/// edge flows (Yen's algorithm on `−ln y`). Edges below `threshold` are
/// ignored.
pub fn likely_paths(edge_flows: &[f64], g: &GcsGraph, t: &Terminals, threshold: f64, k: usize) -> Vec<Vec<usize>> {
    let w: Vec<Option<f64>> =
        edge_flows.iter().map(|&y| (y >= threshold).then(|| -crate::math::ln(y.min(1.0)))).collect();
    let weight = |path: &[usize]| -> f64 {
        path.windows(2).map(|p| g.find_edge(p[0], p[1]).and_then(|e| w[e]).unwrap_or(f64::INFINITY)).sum()
    };
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut pending: Vec<(f64, Vec<usize>)> = Vec::new();
    let none = alloc::vec![false; g.num_vertices()];
    match shortest_path(g, &w, t.source, t.sink, &none, &BTreeSet::new()) {
        Some((p, _)) if k > 0 => found.push(p),
        _ => return found,
    }
    while found.len() < k {
        let last = found.last().unwrap().clone();
        for i in 0..last.len() - 1 {
            let root = &last[..=i];
            let banned_e: BTreeSet<usize> = found
                .iter()
                .filter(|p| p.len() > i + 1 && &p[..=i] == root)
                .filter_map(|p| g.find_edge(p[i], p[i + 1]))
                .collect();
            let mut banned_v = none.clone();
            root[..i].iter().for_each(|&v| banned_v[v] = true);
            let Some((spur, _)) = shortest_path(g, &w, last[i], t.sink, &banned_v, &banned_e) else { continue };
            let mut path = root[..i].to_vec();
            path.extend(spur);
            if !found.contains(&path) && pending.iter().all(|(_, p)| *p != path) {
                pending.push((weight(&path), path));
            }
        }
        let Some(best) = (0..pending.len()).min_by(|&a, &b| {
            pending[a].0.total_cmp(&pending[b].0).then_with(|| pending[a].1.cmp(&pending[b].1))
        }) else {
            break;
        };
        found.push(pending.swap_remove(best).1);
    }
    found
}

/// Trajectory and cost for a fixed path.
#[derive(Clone, Debug, PartialEq)]
pub struct Restriction {
    pub trajectory: Trajectory,
    /// `xy` control-polygon length of the recovered trajectory.
    pub cost: f64,
    pub solve_time: f64,
}

pub fn convex_restriction(
    g: &GcsGraph,
    t: &Terminals,
    path: &[usize],
    params: &FormulationParams,
    solver: &dyn ConicSolver,
    tol: &Tolerances,
) -> Result<Restriction, SolverError> {
    let chain = assemble_restriction(g, t, path, params)?;
    let sol = solver.solve(&chain.program, tol);
    match sol.status {
        SolveStatus::Optimal => {
            let trajectory = chain.trajectory(&sol.primal);
            let cost = trajectory.control_polygon_length_xy();
            Ok(Restriction { trajectory, cost, solve_time: sol.solve_time })
        }
        SolveStatus::Infeasible => Err(SolverError::Infeasible),
        s => Err(SolverError::Numerical(s)),
    }
}

struct Node {
    bound: f64,
    id: usize,
    fix: Fixings,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.id.cmp(&self.id))
    }
}

struct Incumbent {
    cost: f64,
    path: Vec<usize>,
    trajectory: Trajectory,
}

pub fn solve_gcs(
    g: &GcsGraph,
    t: &Terminals,
    params: &FormulationParams,
    opts: &BnBOptions,
    solver: &dyn ConicSolver,
) -> Result<Solution, SolverError> {
    solve_gcs_traced(g, t, params, opts, solver, &mut |_| {})
}

/// A relaxation that stalls numerically is solved once more with tolerances
/// this many times looser before the node is given up.
const RETRY_LOOSENING: f64 = 100.0;

/// [`solve_gcs`] reporting every evaluated node to `trace`.
pub fn solve_gcs_traced(
    g: &GcsGraph,
    t: &Terminals,
    params: &FormulationParams,
    opts: &BnBOptions,
    solver: &dyn ConicSolver,
    trace: &mut dyn FnMut(&NodeTrace),
) -> Result<Solution, SolverError> {
    let mut stats = SolveStats::default();
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, id: 0, fix: Fixings::new() });
    let mut next_id = 1;
    let mut incumbent: Option<Incumbent> = None;
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut root_bound = None;
    let mut closed_bound = f64::INFINITY;
    let mut inexact = false;
    let mut hit_limit = false;

    while let Some(node) = heap.pop() {
        let inc_cost = incumbent.as_ref().map_or(f64::INFINITY, |i| i.cost);
        if node.bound >= inc_cost - opts.gap_tol {
            heap.push(node);
            break;
        }
        if stats.nodes >= opts.max_nodes {
            heap.push(node);
            hit_limit = true;
            break;
        }
        stats.nodes += 1;
        stats.relaxations += 1;
        let loose = Tolerances {
            feasibility: opts.tolerances.feasibility * RETRY_LOOSENING,
            gap: opts.tolerances.gap * RETRY_LOOSENING,
        };
        let relax = match solve_relaxation(g, t, params, &node.fix, solver, &opts.tolerances)
            .or_else(|e| match e {
                SolverError::Numerical(_) => solve_relaxation(g, t, params, &node.fix, solver, &loose),
                e => Err(e),
            }) {
            Ok(r) => r,
            Err(SolverError::Infeasible) => continue,
            Err(SolverError::Numerical(_)) => {
                inexact = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.relaxation_time += relax.solve_time;
        let bound = relax.objective.max(node.bound);
        if node.id == 0 {
            root_bound = Some(relax.objective);
        }

        let greedy = extract_path(&relax.edge_flows, g, t, opts.extraction_threshold).ok();
        let extra = likely_paths(&relax.edge_flows, g, t, opts.extraction_threshold, opts.rounding_paths);
        let mut feasible_extras = 0;
        for (k, path) in greedy.into_iter().map(|p| (0, p)).chain(extra.into_iter().map(|p| (1, p))) {
            if feasible_extras >= opts.rounding_successes {
                break;
            }
            if !tried.insert(path.clone()) {
                continue;
            }
            stats.restrictions += 1;
            match convex_restriction(g, t, &path, params, solver, &opts.tolerances) {
                Ok(r) => {
                    feasible_extras += k;
                    stats.restriction_time += r.solve_time;
                    if incumbent.as_ref().map_or(true, |i| r.cost < i.cost) {
                        incumbent = Some(Incumbent { cost: r.cost, path, trajectory: r.trajectory });
                    }
                }
                Err(SolverError::Infeasible) => {}
                Err(SolverError::Numerical(_)) => inexact |= k == 0,
                Err(e) => return Err(e),
            }
        }
        let inc_cost = incumbent.as_ref().map_or(f64::INFINITY, |i| i.cost);

        let mut branch: Option<(usize, f64)> = None;
        for (e, &y) in relax.edge_flows.iter().enumerate() {
            if node.fix.contains_key(&YVar::Edge(e)) {
                continue;
            }
            let frac = y.min(1.0 - y);
            if branch.map_or(true, |(_, f)| frac > f) {
                branch = Some((e, frac));
            }
        }
        let max_frac = branch.map_or(0.0, |(_, f)| f);
        trace(&NodeTrace { node: node.id, bound, incumbent: inc_cost, max_fractionality: max_frac });

        if bound >= inc_cost - opts.gap_tol {
            continue;
        }
        match branch {
            Some((e, f)) if f > opts.integrality_tol => {
                for val in [true, false] {
                    let mut fix = node.fix.clone();
                    fix.insert(YVar::Edge(e), val);
                    heap.push(Node { bound, id: next_id, fix });
                    next_id += 1;
                }
            }
            _ => closed_bound = closed_bound.min(bound),
        }
    }

    let Some(inc) = incumbent else {
        return Err(if hit_limit {
            SolverError::NodeLimitExceeded
        } else if inexact {
            SolverError::Numerical(SolveStatus::NumericalError)
        } else {
            SolverError::Infeasible
        });
    };
    let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let root_bound = root_bound.unwrap_or(f64::NEG_INFINITY);
    let lower_bound = inc.cost.min(open).min(closed_bound).max(root_bound);
    Ok(Solution {
        path: inc.path,
        trajectory: inc.trajectory,
        cost: inc.cost,
        lower_bound,
        root_bound,
        termination: if hit_limit { Termination::NodeLimit } else { Termination::Optimal },
        inexact,
        stats,
    })
}

/// Minimum restriction cost over every simple source-to-sink path, by
/// exhaustive enumeration. Exponential; meant for small graphs.
pub fn brute_force(
    g: &GcsGraph,
    t: &Terminals,
    params: &FormulationParams,
    solver: &dyn ConicSolver,
    tol: &Tolerances,
) -> Result<(Vec<usize>, f64), SolverError> {
    fn walk(g: &GcsGraph, sink: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let cur = *path.last().unwrap();
        if cur == sink {
            out.push(path.clone());
            return;
        }
        for &e in g.outgoing(cur) {
            let (_, b) = g.edge(e);
            if !path.contains(&b) {
                path.push(b);
                walk(g, sink, path, out);
                path.pop();
            }
        }
    }
    let mut paths = Vec::new();
    walk(g, t.sink, &mut alloc::vec![t.source], &mut paths);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for p in paths {
        match convex_restriction(g, t, &p, params, solver, tol) {
            Ok(r) => {
                if best.as_ref().map_or(true, |(_, c)| r.cost < *c) {
                    best = Some((p, r.cost));
                }
            }
            Err(SolverError::Infeasible) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(SolverError::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{HPolytope, Point};
    use alloc::vec;

    fn line_graph(n: usize) -> GcsGraph {
        let regions = (0..n)
            .map(|i| HPolytope::from_box(&Point::xy(i as f64, 0.0), &Point::xy(i as f64 + 1.0, 1.0)).unwrap())
            .collect();
        let mut edges = Vec::new();
        for i in 0..n.saturating_sub(1) {
            edges.push((i, i + 1));
            edges.push((i + 1, i));
        }
        GcsGraph::new(regions, edges).unwrap()
    }

    fn terminals(source: usize, sink: usize) -> Terminals {
        Terminals { source, sink, start: Point::xy(0.5, 0.5), goal: Point::xy(2.5, 0.5) }
    }

    #[test]
    fn integral_flow_is_followed() {
        let g = line_graph(3);
        let mut y = vec![0.0; g.num_edges()];
        y[g.find_edge(0, 1).unwrap()] = 1.0;
        y[g.find_edge(1, 2).unwrap()] = 1.0;
        assert_eq!(extract_path(&y, &g, &terminals(0, 2), 1e-3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn split_flow_follows_larger_branch() {
        // 0 → {1, 2} → 3
        let sq = |x: f64, y: f64| HPolytope::from_box(&Point::xy(x, y), &Point::xy(x + 1.0, y + 1.0)).unwrap();
        let g = GcsGraph::new(
            vec![sq(0.0, 0.0), sq(1.0, 0.0), sq(0.0, 1.0), sq(1.0, 1.0)],
            vec![(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let t = terminals(0, 3);
        let y = vec![0.4, 0.6, 0.4, 0.6];
        assert_eq!(extract_path(&y, &g, &t, 1e-3).unwrap(), vec![0, 2, 3]);
        let tiny = vec![1e-4; 4];
        assert_eq!(extract_path(&tiny, &g, &t, 1e-3), Err(SolverError::DeadEnd(0)));
        assert_eq!(likely_paths(&y, &g, &t, 1e-3, 5), vec![vec![0, 2, 3], vec![0, 1, 3]]);
        assert!(likely_paths(&tiny, &g, &t, 1e-3, 5).is_empty());
    }

    #[test]
    fn node_order_is_best_bound_then_oldest() {
        let mut h = BinaryHeap::new();
        h.push(Node { bound: 2.0, id: 0, fix: Fixings::new() });
        h.push(Node { bound: 1.0, id: 2, fix: Fixings::new() });
        h.push(Node { bound: 1.0, id: 1, fix: Fixings::new() });
        let order: Vec<usize> = core::iter::from_fn(|| h.pop().map(|n| n.id)).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }
}
