//! Exact stationary analysis of two parallel queues under join-the-shortest-queue
//! routing.
//!
//! The symmetric model has Poisson arrivals of rate `2 rho`, two unit-rate
//! exponential servers, and each arrival joins the shorter queue (ties split
//! evenly). Queues hold at most `K` customers each, or are unbounded. The
//! crate computes blocking probabilities, boundary and full stationary
//! distributions, total-occupancy laws and comparison bounds in closed form,
//! and checks every result against a direct balance-equation solve and a
//! coupled simulation.

pub mod asymmetric;
pub mod blocking;
pub mod cli;
pub mod cohen_chain;
pub mod convkernel;
pub mod error;
pub mod finite_dist;
pub mod infinite_dist;
mod linalg;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod simulator;
pub mod totals_bounds;

pub use error::{JsqError, Result};
pub use model::{AsymmetricParams, Capacity, JointDist, RateMatrix, SymmetricParams};
