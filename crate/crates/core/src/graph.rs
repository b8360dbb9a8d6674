//! Directed graph of convex sets.

use alloc::vec::Vec;

use thiserror::Error;

use crate::conic::ConicSolver;
use crate::geometry::{hpolytopes_touch, GeometryError, HPolytope, Point};

/// Default tolerance for the boundary-touching adjacency test.
pub const TOUCH_TOL: f64 = 1e-7;

/// Containment tolerance used when placing the start and goal.
pub const TERMINAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge {0} references a missing vertex")]
    MissingVertex(usize),
    #[error("edge {0} is a self-loop")]
    SelfLoop(usize),
    #[error("edge {0} is a duplicate")]
    DuplicateEdge(usize),
    #[error("regions have mixed dimensions")]
    MixedDimensions,
    #[error("no region contains the {0}")]
    NoContainingSet(Terminal),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Start,
    Goal,
}

impl core::fmt::Display for Terminal {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Terminal::Start => "start",
            Terminal::Goal => "goal",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcsGraph {
    regions: Vec<HPolytope>,
    edges: Vec<(usize, usize)>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl GcsGraph {
    /// Graph from explicit edges. Adjacency is taken on trust here;
    /// [`build_graph`] derives it geometrically.
    pub fn new(regions: Vec<HPolytope>, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let n = regions.len();
        if let Some(r) = regions.first() {
            if regions.iter().any(|h| h.dim() != r.dim()) {
                return Err(GraphError::MixedDimensions);
            }
        }
        let mut outgoing = alloc::vec![Vec::new(); n];
        let mut incoming = alloc::vec![Vec::new(); n];
        for (id, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(GraphError::MissingVertex(id));
            }
            if a == b {
                return Err(GraphError::SelfLoop(id));
            }
            if edges[..id].contains(&(a, b)) {
                return Err(GraphError::DuplicateEdge(id));
            }
            outgoing[a].push(id);
            incoming[b].push(id);
        }
        Ok(Self { regions, edges, outgoing, incoming })
    }

    pub fn num_vertices(&self) -> usize {
        self.regions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Dimension of the regions, or 0 for an empty graph.
    pub fn dim(&self) -> usize {
        self.regions.first().map_or(0, HPolytope::dim)
    }

    pub fn region(&self, v: usize) -> &HPolytope {
        &self.regions[v]
    }

    pub fn regions(&self) -> &[HPolytope] {
        &self.regions
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge ids leaving `v`, in increasing order.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    /// Edge ids entering `v`, in increasing order.
    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.incoming[v]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.outgoing[a].iter().copied().find(|&e| self.edges[e].1 == b)
    }
}

fn boxes_apart(a: &Option<(Point, Point)>, b: &Option<(Point, Point)>, tol: f64) -> bool {
    match (a, b) {
        (Some((alo, ahi)), Some((blo, bhi))) => (0..alo.dim())
            .any(|k| alo[k] > bhi[k] + tol + 1e-9 || blo[k] > ahi[k] + tol + 1e-9),
        _ => false,
    }
}

/// Connects every pair of regions that touch (at tolerance `tol`) with both
/// directed edges. Edges are listed pair by pair in `(i, j)`, `(j, i)` order
/// for `i < j` ascending.
pub fn build_graph(regions: Vec<HPolytope>, tol: f64, solver: &dyn ConicSolver) -> Result<GcsGraph, GraphError> {
    let boxes: Vec<_> = regions
        .iter()
        .map(|r| if r.is_bounded() { r.bounding_box() } else { None })
        .collect();
    let mut edges = Vec::new();
    for i in 0..regions.len() {
        for j in (i + 1)..regions.len() {
            if boxes_apart(&boxes[i], &boxes[j], tol) {
                continue;
            }
            if hpolytopes_touch(&regions[i], &regions[j], tol, solver)? {
                edges.push((i, j));
                edges.push((j, i));
            }
        }
    }
    GcsGraph::new(regions, edges)
}

/// Source and sink placement.
#[derive(Clone, Debug, PartialEq)]
pub struct Terminals {
    pub source: usize,
    pub sink: usize,
    pub start: Point,
    pub goal: Point,
}

fn containing(g: &GcsGraph, p: &Point, which: Terminal) -> Result<usize, GraphError> {
    if p.dim() != g.dim() {
        return Err(GeometryError::DimensionMismatch { expected: g.dim(), found: p.dim() }.into());
    }
    g.regions
        .iter()
        .position(|r| r.contains(p, TERMINAL_TOL))
        .ok_or(GraphError::NoContainingSet(which))
}

/// Lowest-id vertex containing `start` becomes the source, likewise for
/// `goal` and the sink.
pub fn locate_terminals(g: &GcsGraph, start: Point, goal: Point) -> Result<Terminals, GraphError> {
    let source = containing(g, &start, Terminal::Start)?;
    let sink = containing(g, &goal, Terminal::Goal)?;
    Ok(Terminals { source, sink, start, goal })
}
