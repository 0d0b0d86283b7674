//! Rounding a start-time LP into random deadlines and running the resulting policy.

use rand::Rng;
use serde::Serialize;

use super::lp::{StartDistribution, TimeClass};
use super::{sample_size, ItemOutcome, KnapsackRunResult};
use crate::model::StockInstance;

/// Each selected item may start only while the knapsack holds at most `deadline` units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StartTimeSchedule {
    pub deadline: Vec<Option<usize>>,
    /// Selected items by ascending deadline, ties by index.
    pub order: Vec<usize>,
}

impl StartTimeSchedule {
    fn from_deadlines(deadline: Vec<Option<usize>>) -> Self {
        let mut order: Vec<usize> = (0..deadline.len()).filter(|&i| deadline[i].is_some()).collect();
        order.sort_by_key(|&i| (deadline[i], i));
        Self { deadline, order }
    }
}

/// Gives item `i` deadline `t` with probability `x[i][t] / 4`, otherwise drops it. One uniform
/// per item.
pub fn round_nocancel(dist: &StartDistribution, rng: &mut impl Rng) -> StartTimeSchedule {
    let deadline = dist
        .mass
        .iter()
        .map(|row| {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            row.iter().position(|&m| {
                cum += m / 4.0;
                u < cum
            })
        })
        .collect();
    StartTimeSchedule::from_deadlines(deadline)
}

/// Picks class `j` with probability `xbar[i][j] / 4`, then a uniform start time inside it.
pub fn round_poly_nocancel(
    class_mass: &[Vec<f64>],
    classes: &[TimeClass],
    rng: &mut impl Rng,
) -> StartTimeSchedule {
    let deadline = class_mass
        .iter()
        .map(|row| {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let j = row.iter().position(|&m| {
                cum += m / 4.0;
                u < cum
            })?;
            Some(rng.gen_range(classes[j].first..=classes[j].last))
        })
        .collect();
    StartTimeSchedule::from_deadlines(deadline)
}

/// Considers items in schedule order and starts each one whose deadline is not yet exceeded by
/// the occupied space. Started items run to completion; only those finishing within the budget
/// pay. Sizes are drawn when an item starts.
pub fn execute_nocancel(
    instance: &StockInstance,
    schedule: &StartTimeSchedule,
    rng: &mut impl Rng,
) -> KnapsackRunResult {
    let mut result = KnapsackRunResult::empty(instance.items.len());
    for &i in &schedule.order {
        let deadline = schedule.deadline[i].expect("ordered items have deadlines");
        if result.consumed > deadline {
            result.outcomes[i] = ItemOutcome::NotStarted;
            continue;
        }
        let item = &instance.items[i];
        let size = sample_size(item, rng);
        result.consumed += size;
        result.outcomes[i] = if result.consumed <= instance.budget {
            let reward = item.reward(size);
            result.reward += reward;
            ItemOutcome::Completed { size, reward }
        } else {
            ItemOutcome::Overflowed { size }
        };
    }
    result
}
