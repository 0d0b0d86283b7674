//! Budgeted bandits without the martingale assumption.
//!
//! The flow is: build a time-indexed LP ([`lp`]), peel its solution into per-arm strategies
//! ([`decompose`]), close small gaps ([`gapfill`]) and finally play sampled strategies
//! ([`play`]). [`pipeline`] ties the steps together for trees, layered DAGs and the
//! pull/exploit model.

pub mod decompose;
pub mod forest;
pub mod gapfill;
pub mod lp;
pub mod pipeline;
pub mod play;

use serde::{Deserialize, Serialize};

use crate::lp::{LpError, LpStatus};
use crate::model::ModelError;

pub use decompose::{decompose_dag, decompose_exploit, decompose_tree, peel_strat, PeelSkeleton};
pub use forest::{DagNode, StrategyDag, StrategyForest};
pub use gapfill::{extent_by_time, gap_fill};
pub use lp::{build_lp4, build_lp_mab, build_lp_mabdag, ArmVars, MabLpIndex, Residual};
pub use pipeline::{MabDagPipeline, MabExploitPipeline, MabTreePipeline};
pub use play::{alg_mab, alg_mab_exploit, implicit_play, Play, PlayTrace};

/// Mass below this counts as zero while peeling.
pub const ZERO_MASS: f64 = 1e-9;
/// Leftover residual mass up to this is discarded at the end of a decomposition.
pub const LEFTOVER_TOL: f64 = 1e-6;
/// Each strategy is sampled with its root probability divided by this.
pub const SAMPLE_DIVISOR: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Pull,
    Exploit,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MabError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP ended with status {0:?}")]
    NotOptimal(LpStatus),
    #[error("arm {0} is not a tree")]
    NotTree(usize),
    #[error("arm {0} is not a layered DAG")]
    NotLayered(usize),
    #[error("instance has no exploit budget")]
    MissingExploitBudget,
    #[error("arm {arm}: residual mass {mass} left after peeling")]
    Residual { arm: usize, mass: f64 },
    #[error("arm {arm}: {count} peels exceed the bound {bound}")]
    TooManyPeels { arm: usize, count: usize, bound: usize },
}
