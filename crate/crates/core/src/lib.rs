//! LP-relaxation and randomized-rounding policies for correlated stochastic knapsack (with and
//! without cancellation) and for bandits whose rewards need not form a martingale.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`model`]: instances, validation, layering of arbitrary arm graphs.
//! - [`lp`]: linear programs and the simplex solver.
//! - [`knapsack`]: knapsack LPs, rounding and execution.
//! - [`mab`]: bandit LPs, convex decomposition into strategies, gap filling and play.
//! - [`oracle`]: exact dynamic programs for small instances.
//! - [`harness`]: Monte Carlo simulation, instance generators and certification reports.

pub mod harness;
pub mod knapsack;
pub mod lp;
pub mod mab;
pub mod model;
pub mod oracle;
pub mod rng;
