//! Singularity-conditioned inverse kinematics.
//!
//! Forward kinematics and Jacobians for serial revolute chains, singularity
//! metrics (manipulability, condition number, ellipsoids), affine-invariant
//! SPD geometry, a family of iterative and optimisation-based IK solvers, a
//! from-scratch MLP for learned warm starts, and a benchmark harness that
//! breaks solver performance down by singularity proximity.
//!
//! Runnable walkthroughs live in `crates/core/examples/`; the `singik`
//! binary drives the benchmark panels from the command line.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod learning;
pub mod linalg;
pub mod metrics;
pub mod riemannian;
pub mod solvers;

pub use error::{Error, Result};
pub use kinematics::{JointConfig, KinematicChain, Pose, TaskPosition};
pub use metrics::SpdMatrix;
pub use solvers::{SolveResult, SolverConfig, SolverKind};
