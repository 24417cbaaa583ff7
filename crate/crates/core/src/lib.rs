//! Non-deterministic linear billiards.
//!
//! A billiard table here is a finite arrangement of linear subspaces of a
//! Euclidean space. A trajectory with a prescribed itinerary `L₁ … L_k` is a
//! polygonal path whose vertices lie on the listed subspaces and which obeys
//! the reflection law (speed and the tangential velocity component are
//! conserved) at each vertex. Such trajectories are the critical points of the
//! path length `S(A, q₁, …, q_k, B)` over `L₁ × … × L_k`, and the crate finds
//! them by minimizing `S`.
//!
//! Around that core the crate provides the scattering relation on oriented
//! lines, the `r`-thickened deterministic billiard, conservation laws, planar
//! unfoldings for line arrangements and N-body builders.

pub mod arrangement;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod generating;
pub mod linalg;
pub mod nbody;
pub mod origami;
pub mod scattering;
pub mod symmetry;
pub mod thickened;
pub mod trajectory;

pub use arrangement::{Arrangement, Itinerary, Point, Subspace};
pub use error::{Error, Result};
pub use generating::{minimize, Chain, Classification, MinimizeResult, SolverOptions};
pub use trajectory::{BilliardTrajectory, OrientedLine};
