#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub(crate) mod math;

pub mod conic;
pub mod formulation;
pub mod geometry;
pub mod graph;
pub mod iris;
pub mod solver;
pub mod spline;
pub mod validation;

/// Configuration space of a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Planar `(x, y)` planning around static obstacles.
    Static2D,
    /// `(x, y, t)` planning with time as an explicit coordinate.
    SpaceTime3D,
}

impl Mode {
    pub fn dim(self) -> usize {
        match self {
            Mode::Static2D => 2,
            Mode::SpaceTime3D => 3,
        }
    }
}
