//! Three-layer mobile-robot motion planning.
//!
//! * [`gridmap`] / [`mapio`]: occupancy rasters, the Euclidean distance grid and map files.
//! * [`primitives`], [`heuristic`], [`planner`]: state-lattice A* with a backward 2-D
//!   Dijkstra heuristic and heuristic-guided motion-primitive pruning.
//! * [`optimizer`]: soft-constrained Levenberg-Marquardt path deformation solved with a
//!   banded LU factorization.
//! * [`velocity`]: cubic-spline smoothing and time-optimal speed profiling.
//! * [`pipeline`] / [`runtime`]: the periodic plan/optimize/profile loop, a kinematic
//!   simulator on a simulated clock, and the same tasks on threads.
//! * [`fixtures`], [`harness`]: synthetic benchmark maps, benchmark records, scenario
//!   files and the batch commands behind the CLI.

pub mod banded;
pub mod fixtures;
pub mod geometry;
pub mod gridmap;
pub mod mapio;
pub mod harness;
pub mod heuristic;
pub mod optimizer;
pub mod pipeline;
pub mod planner;
pub mod primitives;
pub mod runtime;
pub mod velocity;

pub use geometry::{wrap_angle, Pose2, WorldPoint};
