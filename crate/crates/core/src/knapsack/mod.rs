//! Correlated stochastic knapsack: LP relaxations, randomized rounding and policy execution.
//!
//! Two regimes are covered. Without cancellation, [`nocancel`] rounds a start-time LP into
//! random deadlines. With cancellation, the instance is split at half the budget: the early part
//! goes through the stopping-time LP and [`small`], the late part through the no-cancel
//! pipeline, and [`pipeline::FullPipeline`] picks one of the two with a fair coin.

pub mod lp;
pub mod nocancel;
pub mod pipeline;
pub mod small;

use rand::Rng;
use serde::Serialize;

use crate::lp::{LpError, LpStatus};
use crate::model::{ItemDist, ModelError};

pub use lp::{
    build_lp_nocancel, build_lp_small, build_poly_lp_nocancel, build_poly_lp_small,
    expected_start_reward, expected_truncated_size, NoCancelLpIndex, PolyNoCancelIndex,
    SmallLpIndex, StartDistribution, TimeClass,
};
pub use nocancel::{execute_nocancel, round_nocancel, round_poly_nocancel, StartTimeSchedule};
pub use pipeline::{
    solve_late, solve_stock_full, split_early_late, FullPipeline, NoCancelPipeline,
    PolyNoCancelPipeline, SmallPipeline,
};
pub use small::{execute_small, round_small, CancelPolicy};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KnapsackError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP ended with status {0:?}")]
    NotOptimal(LpStatus),
    #[error("item {item} has reward at size {size}, beyond half the budget")]
    LateReward { item: usize, size: usize },
}

/// What happened to one item in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ItemOutcome {
    /// Dropped by the rounding step.
    Ignored,
    /// Selected but the knapsack was already too full at its deadline.
    NotStarted,
    /// Finished within the budget; `reward` was collected.
    Completed { size: usize, reward: f64 },
    /// Finished after the budget ran out; nothing collected.
    Overflowed { size: usize },
    /// Cancelled after `processed` units.
    Canceled { processed: usize },
    /// Left unfinished when the policy ran out of decision points.
    Abandoned { processed: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnapsackRunResult {
    pub reward: f64,
    pub outcomes: Vec<ItemOutcome>,
    /// Units processed in total, including work past the budget.
    pub consumed: usize,
}

impl KnapsackRunResult {
    pub(crate) fn empty(n: usize) -> Self {
        Self { reward: 0.0, outcomes: vec![ItemOutcome::Ignored; n], consumed: 0 }
    }

    /// Units used by items that earned reward.
    pub fn credited_units(&self) -> usize {
        self.outcomes
            .iter()
            .map(|o| match o {
                ItemOutcome::Completed { size, .. } => *size,
                _ => 0,
            })
            .sum()
    }
}

/// Draws a size from the item's distribution with a single uniform.
pub(crate) fn sample_size(item: &ItemDist, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = 0;
    for (size, p) in item.support() {
        cum += p;
        last = size;
        if u < cum {
            return size;
        }
    }
    last
}
