//! Random cluttered environments with many moving obstacles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{Bounds, IrisSpec, ObstacleSpec, Scenario, ScenarioMode, SolverSpec, TimeSpan};

/// Shape of the generated environments.
#[derive(Clone, Debug, PartialEq)]
pub struct ClutterSpec {
    pub obstacles: usize,
    /// Side length of the square obstacles, meters.
    pub side: f64,
    /// Obstacles start and end inside this box, entirely.
    pub region_min: [f64; 2],
    pub region_max: [f64; 2],
    pub v_max: f64,
}

impl Default for ClutterSpec {
    fn default() -> Self {
        Self { obstacles: 20, side: 0.1, region_min: [0.0, 0.2], region_max: [1.0, 0.8], v_max: 3.0 }
    }
}

fn square(c: [f64; 2], side: f64) -> Vec<[f64; 2]> {
    let h = side / 2.0;
    vec![[c[0] - h, c[1] - h], [c[0] + h, c[1] - h], [c[0] + h, c[1] + h], [c[0] - h, c[1] + h]]
}

/// Unit-square scenario from `(0.5, 0)` at `t = 0` to `(0.5, 1)` at `t = 1`
/// with square obstacles moving at constant velocity between uniformly drawn
/// start and end positions. `seed` drives both the obstacles and the region
/// sampling.
pub fn cluttered_scenario(spec: &ClutterSpec, seed: u64, samples: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = spec.side / 2.0;
    let center = |rng: &mut ChaCha8Rng| {
        [
            rng.gen_range(spec.region_min[0] + h..=spec.region_max[0] - h),
            rng.gen_range(spec.region_min[1] + h..=spec.region_max[1] - h),
        ]
    };
    let obstacles = (0..spec.obstacles)
        .map(|_| {
            let a = center(&mut rng);
            let b = center(&mut rng);
            ObstacleSpec { vertices_start: square(a, spec.side), vertices_end: Some(square(b, spec.side)) }
        })
        .collect();
    Scenario {
        mode: ScenarioMode::Spacetime,
        bounds: Bounds { min: [0.0, 0.0], max: [1.0, 1.0] },
        time: TimeSpan { start: 0.0, end: 1.0 },
        start: [0.5, 0.0],
        goal: [0.5, 1.0],
        v_max: Some(spec.v_max),
        epsilon: 1e-3,
        spline_order: 3,
        obstacles,
        iris: IrisSpec { samples, seed, ..IrisSpec::default() },
        solver: SolverSpec::default(),
    }
}
