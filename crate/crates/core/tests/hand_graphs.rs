#![cfg(feature = "clarabel")]

use stgcs_core::conic::{ClarabelSolver, Tolerances};
use stgcs_core::formulation::{Fixings, FormulationParams, Relaxation};
use stgcs_core::geometry::{HPolytope, Point};
use stgcs_core::graph::{build_graph, locate_terminals, TOUCH_TOL};
use stgcs_core::solver::{brute_force, convex_restriction, solve_gcs, solve_relaxation, BnBOptions, SolverError};

// geometric minimum around the rectangle (0.3,0.2)–(0.6,0.4), passing the right side
fn detour() -> f64 {
    (0.1f64 * 0.1 + 0.2 * 0.2).sqrt() + 0.2 + (0.1f64 * 0.1 + 0.6 * 0.6).sqrt()
}

fn ring(spacetime: bool) -> Vec<HPolytope> {
    let b = |x0: f64, y0: f64, x1: f64, y1: f64| {
        if spacetime {
            HPolytope::from_box(&Point::xyt(x0, y0, 0.0), &Point::xyt(x1, y1, 1.0)).unwrap()
        } else {
            HPolytope::from_box(&Point::xy(x0, y0), &Point::xy(x1, y1)).unwrap()
        }
    };
    vec![
        b(0.0, 0.0, 0.3, 1.0),
        b(0.3, 0.0, 0.6, 0.2),
        b(0.6, 0.0, 1.0, 1.0),
        b(0.3, 0.4, 0.6, 1.0),
    ]
}

#[test]
fn ring_around_rectangle_reaches_geometric_minimum() {
    let solver = ClarabelSolver::default();
    for spacetime in [false, true] {
        let g = build_graph(ring(spacetime), TOUCH_TOL, &solver).unwrap();
        assert_eq!(g.num_edges(), 8);
        let (start, goal, params) = if spacetime {
            (Point::xyt(0.5, 0.0, 0.0), Point::xyt(0.5, 1.0, 1.0), FormulationParams::spacetime(3, 2.0, 1e-3))
        } else {
            (Point::xy(0.5, 0.0), Point::xy(0.5, 1.0), FormulationParams::static_2d(3))
        };
        let t = locate_terminals(&g, start, goal).unwrap();
        assert_eq!((t.source, t.sink), (1, 3));
        let sol = solve_gcs(&g, &t, &params, &BnBOptions::default(), &solver).unwrap();
        assert!((sol.cost - detour()).abs() < 1e-4, "spacetime={spacetime} cost={}", sol.cost);
        assert_eq!(sol.path, vec![1, 2, 3]);
        assert!(sol.root_bound <= sol.cost + 1e-6);
        let (_, brute) = brute_force(&g, &t, &params, &solver, &Tolerances::default()).unwrap();
        assert!((brute - sol.cost).abs() < 1e-6);
    }
}

#[test]
fn single_region_straight_line() {
    let solver = ClarabelSolver::default();
    let g = build_graph(vec![HPolytope::from_box(&Point::xyt(0.0, 0.0, 0.0), &Point::xyt(1.0, 1.0, 1.0)).unwrap()], TOUCH_TOL, &solver).unwrap();
    let t = locate_terminals(&g, Point::xyt(0.5, 0.0, 0.0), Point::xyt(0.5, 1.0, 1.0)).unwrap();
    let params = FormulationParams::spacetime(3, 2.0, 1e-3);
    let relax = solve_relaxation(&g, &t, &params, &Fixings::new(), &solver, &Tolerances::default()).unwrap();
    assert!((relax.objective - 1.0).abs() < 1e-6);
    let r = convex_restriction(&g, &t, &[0], &params, &solver, &Tolerances::default()).unwrap();
    assert!((r.cost - 1.0).abs() < 1e-6);

    let slow = FormulationParams::spacetime(3, 0.5, 1e-3);
    assert_eq!(
        convex_restriction(&g, &t, &[0], &slow, &solver, &Tolerances::default()).unwrap_err(),
        SolverError::Infeasible
    );
}

#[test]
fn unreachable_sink_is_infeasible() {
    let solver = ClarabelSolver::default();
    let regions = vec![
        HPolytope::from_box(&Point::xy(0.0, 0.0), &Point::xy(1.0, 1.0)).unwrap(),
        HPolytope::from_box(&Point::xy(2.0, 0.0), &Point::xy(3.0, 1.0)).unwrap(),
    ];
    let g = build_graph(regions, TOUCH_TOL, &solver).unwrap();
    let t = locate_terminals(&g, Point::xy(0.5, 0.5), Point::xy(2.5, 0.5)).unwrap();
    let r = solve_gcs(&g, &t, &FormulationParams::static_2d(3), &BnBOptions::default(), &solver);
    assert_eq!(r.unwrap_err(), SolverError::Infeasible);
}

#[test]
fn both_relaxations_agree_on_the_ring() {
    let solver = ClarabelSolver::default();
    let g = build_graph(ring(true), TOUCH_TOL, &solver).unwrap();
    let t = locate_terminals(&g, Point::xyt(0.5, 0.0, 0.0), Point::xyt(0.5, 1.0, 1.0)).unwrap();
    let mut costs = Vec::new();
    for r in [Relaxation::Aggregated, Relaxation::PerEdge] {
        let params = FormulationParams::spacetime(3, 2.0, 1e-3).with_relaxation(r);
        let sol = solve_gcs(&g, &t, &params, &BnBOptions::default(), &solver).unwrap();
        assert!(sol.root_bound <= sol.cost + 1e-6);
        let root = solve_relaxation(&g, &t, &params, &Fixings::new(), &solver, &Tolerances::default()).unwrap();
        assert!((root.objective - sol.root_bound).abs() < 1e-9);
        costs.push(sol.cost);
    }
    assert!((costs[0] - costs[1]).abs() < 1e-6);
}
