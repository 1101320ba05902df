//! Fragmentation indices of bounded sets and threshold experiments for the
//! bistable reaction-diffusion equation `u_t = Δu + f(u)`.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It is split
//! into:
//!
//! * [`geom`]: exact constructive sets, rasters with fractional coverage,
//!   measures, the `d1` and essential Hausdorff distances, enclosing balls,
//!   and the two fragmentation indices `δ1` (half the Fraenkel asymmetry) and
//!   `δH` (Hausdorff asymmetry).
//! * [`families`]: constructors for the named set families (`En`, `Fn`, `Gn`,
//!   `Da`, `On`, `Qp`, cubes, cube-ball intersections, shells) and the two
//!   equimeasurable pair constructions showing non-monotone dynamics.
//! * [`reaction`]: the bistable nonlinearity and derived scalars.
//! * [`solver`]: finite-difference time stepping on a truncated box with
//!   Neumann walls, and the extinction / invasion classifier.
//! * [`thresholds`]: bisection and sweeps over monotone families of initial
//!   data.
#![no_std]

extern crate alloc;

pub mod families;
pub mod geom;
pub mod math;
pub mod point;
pub mod reaction;
pub mod solver;
pub mod thresholds;

pub use geom::{GeomError, RasterSet, SetExpr};
pub use point::Point;



pub use geom::IndexReport;
pub use reaction::BistableReaction;
pub use solver::{Outcome, SolverConfig, Verdict};
pub use thresholds::ThresholdBracket;
