//! Rounding the stopping-time LP into a cancellation policy.
//!
//! The LP fixes, per item, how likely it is to stop at each checkpoint. The policy keeps an item
//! with a constant probability and then cancels it at checkpoint `c` often enough that the total
//! stopping probability there (completion or cancellation) equals `s[c] / v[c]`.

use rand::Rng;
use serde::Serialize;

use super::lp::{SmallLpIndex, StoppingValues};
use super::{sample_size, ItemOutcome, KnapsackRunResult};
use crate::model::StockInstance;

/// Reach probabilities at or below this are treated as unreachable.
const UNREACHED: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CancelPolicy {
    pub kept: Vec<bool>,
    /// Cancellation mass `s/v - hazard` per item and checkpoint, clamped to `[0, 1]`.
    pub cancel: Vec<Vec<f64>>,
    pub hazard: Vec<Vec<f64>>,
    pub stage_end: Vec<usize>,
    /// Kept items, ascending.
    pub order: Vec<usize>,
}

impl CancelPolicy {
    /// Builds the deterministic part of the policy from LP values; `kept` is filled by the
    /// caller.
    pub fn from_values(values: &StoppingValues, index: &SmallLpIndex, kept: Vec<bool>) -> Self {
        let cancel = values
            .v
            .iter()
            .zip(&values.s)
            .zip(&index.hazard)
            .map(|((v, s), h)| {
                (0..index.active)
                    .map(|c| {
                        if v[c] <= UNREACHED {
                            0.0
                        } else {
                            (s[c] / v[c] - h[c]).clamp(0.0, 1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let order = (0..kept.len()).filter(|&i| kept[i]).collect();
        Self {
            kept,
            cancel,
            hazard: index.hazard.iter().map(|h| h[..index.active].to_vec()).collect(),
            stage_end: index.stage_end[..index.active].to_vec(),
            order,
        }
    }

    /// Probability of cancelling at checkpoint `c` given the item is still running there.
    /// Completion and cancellation are disjoint, so the cancellation mass is rescaled by the
    /// surviving fraction.
    pub fn cancel_given_running(&self, item: usize, c: usize) -> f64 {
        let h = self.hazard[item][c];
        if h >= 1.0 - UNREACHED {
            0.0
        } else {
            (self.cancel[item][c] / (1.0 - h)).clamp(0.0, 1.0)
        }
    }

    /// Exact stopping law of a kept item by forward recursion: entry `c` is the probability
    /// of stopping at checkpoint `c`; the extra last entry is the probability of running past the
    /// final checkpoint's stage.
    pub fn stopping_law(&self, item: usize) -> Vec<f64> {
        let mut reach = 1.0;
        let mut law = Vec::with_capacity(self.stage_end.len() + 1);
        for c in 0..self.stage_end.len() {
            let h = self.hazard[item][c];
            let stop = reach * (h + (1.0 - h) * self.cancel_given_running(item, c));
            law.push(stop);
            reach -= stop;
        }
        law.push(reach);
        law
    }
}

/// Keeps each item with probability `index.keep_probability()` (one uniform per item).
pub fn round_small(values: &StoppingValues, index: &SmallLpIndex, rng: &mut impl Rng) -> CancelPolicy {
    let keep = index.keep_probability();
    let kept = (0..values.v.len()).map(|_| rng.gen::<f64>() < keep).collect();
    CancelPolicy::from_values(values, index, kept)
}

/// Runs kept items one after another. At each checkpoint the item is first offered for
/// cancellation, then processed through the next stage; reward counts only if the total number
/// of processed units is within the budget when the item completes.
pub fn execute_small(instance: &StockInstance, policy: &CancelPolicy, rng: &mut impl Rng) -> KnapsackRunResult {
    let mut result = KnapsackRunResult::empty(instance.items.len());
    for &i in &policy.order {
        let item = &instance.items[i];
        let size = sample_size(item, rng);
        let mut processed = 0;
        let mut outcome = None;
        for c in 0..policy.stage_end.len() {
            if rng.gen::<f64>() < policy.cancel_given_running(i, c) {
                outcome = Some(ItemOutcome::Canceled { processed });
                break;
            }
            let end = policy.stage_end[c];
            if size <= end {
                result.consumed += size - processed;
                processed = size;
                outcome = Some(if result.consumed <= instance.budget {
                    let reward = item.reward(size);
                    result.reward += reward;
                    ItemOutcome::Completed { size, reward }
                } else {
                    ItemOutcome::Overflowed { size }
                });
                break;
            }
            result.consumed += end - processed;
            processed = end;
        }
        result.outcomes[i] = outcome.unwrap_or(ItemOutcome::Abandoned { processed });
    }
    result
}
