#![cfg(feature = "clarabel")]

use stgcs_core::conic::{ClarabelSolver, ConicSolver, SolveStatus, Tolerances};
use stgcs_core::geometry::{extrude_obstacle, ConvexPolygon2D, Ellipsoid, HPolytope, Point, SpaceTimeObstacle};
use stgcs_core::iris::{
    generate_regions, inflate_region, inflate_region_detailed, separating_hyperplane, Environment, IrisError, IrisParams,
};
use stgcs_core::conic::{AffineRow, ConicProgram};

fn rect() -> ConvexPolygon2D {
    ConvexPolygon2D::rectangle(Point::xy(0.3, 0.2), Point::xy(0.6, 0.4)).unwrap()
}

fn static_env() -> Environment {
    let bounds = HPolytope::from_box(&Point::xy(0.0, 0.0), &Point::xy(1.0, 1.0)).unwrap();
    Environment::planar(bounds, &[rect()]).unwrap()
}

fn spacetime_env(obstacles: &[SpaceTimeObstacle]) -> Environment {
    let bounds = HPolytope::from_box(&Point::xyt(0.0, 0.0, 0.0), &Point::xyt(1.0, 1.0, 1.0)).unwrap();
    Environment::spacetime(bounds, obstacles).unwrap()
}

fn moving_square() -> SpaceTimeObstacle {
    let a = ConvexPolygon2D::square(Point::xy(0.0, 0.5), 0.2).unwrap();
    let b = ConvexPolygon2D::square(Point::xy(1.0, 0.5), 0.2).unwrap();
    extrude_obstacle(a, b, 0.0, 1.0).unwrap()
}

// dense lattice over the convex hull of the obstacle vertices
fn hull_samples(vertices: &[Point], per_axis: usize) -> Vec<Point> {
    let d = vertices[0].dim();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in vertices {
        for k in 0..d {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let hull = HPolytope::from_vertices(vertices).unwrap();
    let mut out = Vec::new();
    let n = per_axis;
    let total = n.pow(d as u32);
    for idx in 0..total {
        let mut c = [0.0; 3];
        let mut r = idx;
        for k in 0..d {
            c[k] = lo[k] + (hi[k] - lo[k]) * (r % n) as f64 / (n - 1) as f64;
            r /= n;
        }
        let p = Point::new(&c[..d]).unwrap();
        if hull.contains(&p, 1e-12) {
            out.push(p);
        }
    }
    out
}

fn assert_collision_free(region: &HPolytope, env: &Environment) {
    for o in env.obstacles() {
        let per_axis = if region.dim() == 2 { 40 } else { 30 };
        let samples = hull_samples(o.vertices(), per_axis);
        assert!(samples.len() >= 1000);
        for p in samples {
            assert!(region.violation(&p) > -1e-7, "obstacle sample {p:?} strictly inside region");
        }
    }
}

// largest common inner margin must stay below 1e-6
fn interiors_disjoint(a: &HPolytope, b: &HPolytope, solver: &dyn ConicSolver) -> bool {
    let d = a.dim();
    let mut prog = ConicProgram::new(d + 1);
    let mut rows = vec![AffineRow::constant(1.0)];
    rows[0].push(d, -1.0);
    for h in [a, b] {
        for i in 0..h.num_facets() {
            let mut r = AffineRow::constant(h.offset(i));
            for k in 0..d {
                r.push(k, -h.normal(i)[k]);
            }
            r.push(d, -1.0);
            rows.push(r);
        }
    }
    prog.add_nonneg(&rows);
    prog.set_objective(d, -1.0);
    let sol = solver.solve(&prog, &Tolerances::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol.primal[d] < 1e-6
}

#[test]
fn hyperplane_against_triangle_in_unit_metric() {
    let solver = ClarabelSolver::default();
    let e = Ellipsoid::ball(Point::xy(0.0, 0.0), 1.0).unwrap();
    let tri = [Point::xy(2.0, 0.0), Point::xy(3.0, 1.0), Point::xy(3.0, -1.0)];
    let (a, b) = separating_hyperplane(&e, &tri, &solver).unwrap();
    assert!((a[0] - 1.0).abs() < 1e-6 && a[1].abs() < 1e-6);
    assert!((b - 2.0).abs() < 1e-6);

    let inside = Ellipsoid::ball(Point::xy(2.5, 0.0), 0.1).unwrap();
    assert_eq!(separating_hyperplane(&inside, &tri, &solver), Err(IrisError::CenterInObstacle));
}

#[test]
fn empty_environment_returns_bounds() {
    let solver = ClarabelSolver::default();
    let bounds = HPolytope::from_box(&Point::xy(0.0, 0.0), &Point::xy(2.0, 1.0)).unwrap();
    let env = Environment::planar(bounds.clone(), &[]).unwrap();
    let r = inflate_region(&Point::xy(0.3, 0.3), &env, &[], &IrisParams::default(), &solver).unwrap();
    assert_eq!(r.num_facets(), 4);
    for v in bounds.vertices() {
        assert!(r.contains(&v, 1e-9));
    }
}

#[test]
fn seeds_inside_obstacles_are_rejected() {
    let solver = ClarabelSolver::default();
    let env = static_env();
    let r = inflate_region(&Point::xy(0.45, 0.3), &env, &[], &IrisParams::default(), &solver);
    assert_eq!(r.unwrap_err(), IrisError::SeedRejected);
    let out = inflate_region(&Point::xy(1.5, 0.3), &env, &[], &IrisParams::default(), &solver);
    assert_eq!(out.unwrap_err(), IrisError::SeedOutsideBounds);
}

#[test]
fn region_beside_obstacle_is_collision_free() {
    let solver = ClarabelSolver::default();
    let env = static_env();
    let seed = Point::xy(0.15, 0.3);
    let inf = inflate_region_detailed(&seed, &env, &[], &IrisParams::default(), &solver).unwrap();
    assert!(inf.region.contains(&seed, 1e-9));
    assert!(inf.region.is_bounded());
    assert_collision_free(&inf.region, &env);
    assert!(inf.log_det_history.windows(2).all(|w| w[1] >= w[0]));

    let st = spacetime_env(&[moving_square()]);
    let seed = Point::xyt(0.5, 0.1, 0.5);
    let inf = inflate_region_detailed(&seed, &st, &[], &IrisParams::default(), &solver).unwrap();
    assert!(inf.region.contains(&seed, 1e-9));
    assert_collision_free(&inf.region, &st);
    assert!(inf.log_det_history.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn generated_regions_are_deterministic_and_disjoint() {
    let solver = ClarabelSolver::default();
    let env = static_env();
    let (start, goal) = (Point::xy(0.5, 0.0), Point::xy(0.5, 1.0));
    let params = IrisParams::default();
    let a = generate_regions(&env, &start, &goal, 6, 7, &params, &solver).unwrap();
    let b = generate_regions(&env, &start, &goal, 6, 7, &params, &solver).unwrap();
    assert_eq!(a, b);
    assert!(a[0].contains(&start, 1e-9));
    assert!(a.iter().any(|r| r.contains(&goal, 1e-9)));
    for r in &a {
        assert_collision_free(r, &env);
    }
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            assert!(interiors_disjoint(&a[i], &a[j], &solver), "regions {i} and {j} overlap");
        }
    }
}

#[test]
fn terminals_only_without_samples() {
    let solver = ClarabelSolver::default();
    let env = static_env();
    let r = generate_regions(&env, &Point::xy(0.5, 0.0), &Point::xy(0.5, 1.0), 0, 0, &IrisParams::default(), &solver).unwrap();
    assert!((1..=2).contains(&r.len()));
    let bad = generate_regions(&env, &Point::xy(0.45, 0.3), &Point::xy(0.5, 1.0), 0, 0, &IrisParams::default(), &solver);
    assert!(matches!(bad, Err(IrisError::TerminalInCollision(_))));
}
