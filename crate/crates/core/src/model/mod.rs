//! Instance types for stochastic knapsack and bandit problems, their validation rules, and the
//! layered-DAG reduction for arbitrary arm graphs.
//!
//! Instances are plain data: construct them, call the matching `validate_*` function, and hand
//! them to the LP builders. All builders re-validate and refuse invalid input.

mod instance;
mod layer;
mod mab;
mod stock;

pub use instance::Instance;
pub use layer::layer_dag;
pub use mab::{validate_mab, Arm, ArmGraph, ArmShape, Edge, MabInstance, StateId};
pub use stock::{validate_stock, ItemDist, Outcome, StockInstance};

/// Absolute tolerance for probability sums.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("invalid knapsack instance: {}", .0.join("; "))]
    InvalidStock(Vec<String>),
    #[error("invalid bandit instance: {}", .0.join("; "))]
    InvalidMab(Vec<String>),
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("duplicate size {0} in item outcome list")]
    DuplicateSize(usize),
}
