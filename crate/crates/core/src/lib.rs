//! Solver and property battery for parabolic variational inequalities of the
//! second kind with boundary friction, under Dirichlet or Robin (heat
//! transfer) conditions on the clamped boundary part, together with the
//! associated distributed optimal-control problems.
//!
//! The crate is organized around six pieces:
//!
//! - [`fem`]: tagged meshes of the unit interval/square, lumped-mass P1
//!   operators, and a preconditioned CG solver;
//! - [`state`]: the backward-Euler stepping scheme with smoothed friction and
//!   a coordinate-descent energy oracle for small instances;
//! - [`functionals`]: friction functional, space-time norms, the tracking
//!   cost, and the energy/convexity decompositions;
//! - [`control`]: adjoint and finite-difference gradients, gradient descent
//!   with Barzilai-Borwein steps;
//! - [`verify`]: executable property checks (sign preservation, comparison,
//!   convex-combination bound, stability, energy estimate, convexity, and the
//!   ε- and h-limit sweeps) with measured margins;
//! - [`cli`] + [`config`] + [`csvout`]: the command-line surface.

pub mod cli;
pub mod config;
pub mod control;
pub mod csvout;
pub mod error;
pub mod fem;
pub mod functionals;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use state::{
    solve_parabolic_vi, BcMode, ControlField, Discretization, ProblemSpec, SolveReport,
    StateTrajectory,
};
