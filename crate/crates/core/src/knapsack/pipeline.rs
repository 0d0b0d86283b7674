//! End-to-end knapsack pipelines: build and solve an LP once, then round and execute per trial.

use rand::Rng;

use super::lp::{
    build_lp_nocancel, build_lp_small, build_poly_lp_nocancel, build_poly_lp_small, SmallLpIndex,
    StartDistribution, StoppingValues, TimeClass,
};
use super::nocancel::{execute_nocancel, round_nocancel, round_poly_nocancel, StartTimeSchedule};
use super::small::{execute_small, round_small, CancelPolicy};
use super::{KnapsackError, KnapsackRunResult};
use crate::lp::{LinearProgram, LpSolution, LpStatus};
use crate::model::{ItemDist, StockInstance};

fn solve(lp: &LinearProgram) -> Result<LpSolution, KnapsackError> {
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        other => Err(KnapsackError::NotOptimal(other)),
    }
}

fn keep_rewards(item: &ItemDist, keep: impl Fn(usize) -> bool) -> ItemDist {
    ItemDist {
        probs: item.probs.clone(),
        rewards: item.rewards.iter().filter(|(&s, _)| keep(s)).map(|(&s, &r)| (s, r)).collect(),
    }
}

/// Splits rewards at `floor(B/2)`: the early copy keeps sizes up to it, the late copy the rest.
/// Size distributions are unchanged.
pub fn split_early_late(instance: &StockInstance) -> (StockInstance, StockInstance) {
    let half = instance.budget / 2;
    let part = |keep: &dyn Fn(usize) -> bool| {
        StockInstance::new(instance.budget, instance.items.iter().map(|it| keep_rewards(it, keep)).collect())
    };
    (part(&|s| s <= half), part(&|s| s > half))
}

/// Start-time LP, deadlines drawn per trial.
#[derive(Debug, Clone)]
pub struct NoCancelPipeline {
    pub instance: StockInstance,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    pub dist: StartDistribution,
}

impl NoCancelPipeline {
    pub fn new(instance: &StockInstance) -> Result<Self, KnapsackError> {
        let (lp, index) = build_lp_nocancel(instance)?;
        let solution = solve(&lp)?;
        let dist = index.start_distribution(&solution);
        Ok(Self { instance: instance.clone(), lp, solution, dist })
    }

    pub fn lp_opt(&self) -> f64 {
        self.solution.objective
    }

    /// One trial, also returning the drawn schedule.
    pub fn run_traced(&self, rng: &mut impl Rng) -> (StartTimeSchedule, KnapsackRunResult) {
        let schedule = round_nocancel(&self.dist, rng);
        let result = execute_nocancel(&self.instance, &schedule, rng);
        (schedule, result)
    }

    pub fn run(&self, rng: &mut impl Rng) -> KnapsackRunResult {
        self.run_traced(rng).1
    }
}

/// Coarse start-time LP over doubling classes.
#[derive(Debug, Clone)]
pub struct PolyNoCancelPipeline {
    pub instance: StockInstance,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    pub classes: Vec<TimeClass>,
    pub class_mass: Vec<Vec<f64>>,
    /// The class mass spread over each class, as a point of the fine LP.
    pub expanded: StartDistribution,
}

impl PolyNoCancelPipeline {
    pub fn new(instance: &StockInstance) -> Result<Self, KnapsackError> {
        let (lp, index) = build_poly_lp_nocancel(instance)?;
        let solution = solve(&lp)?;
        Ok(Self {
            instance: instance.clone(),
            class_mass: index.class_mass(&solution),
            expanded: index.expand(&solution),
            classes: index.classes,
            lp,
            solution,
        })
    }

    pub fn lp_opt(&self) -> f64 {
        self.solution.objective
    }

    pub fn run(&self, rng: &mut impl Rng) -> KnapsackRunResult {
        let schedule = round_poly_nocancel(&self.class_mass, &self.classes, rng);
        execute_nocancel(&self.instance, &schedule, rng)
    }
}

/// Stopping-time LP on an instance whose rewards all sit at sizes up to half the budget.
#[derive(Debug, Clone)]
pub struct SmallPipeline {
    pub instance: StockInstance,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    pub index: SmallLpIndex,
    pub values: StoppingValues,
}

impl SmallPipeline {
    /// `quantized` selects the power-of-two relaxation.
    pub fn new(early: &StockInstance, quantized: bool) -> Result<Self, KnapsackError> {
        let (lp, index) = if quantized { build_poly_lp_small(early)? } else { build_lp_small(early)? };
        let solution = solve(&lp)?;
        let values = index.values(&solution);
        Ok(Self { instance: early.clone(), lp, solution, index, values })
    }

    pub fn lp_opt(&self) -> f64 {
        self.solution.objective
    }

    /// The policy with every item kept: the deterministic part of the rounding.
    pub fn full_policy(&self) -> CancelPolicy {
        CancelPolicy::from_values(&self.values, &self.index, vec![true; self.instance.items.len()])
    }

    /// Largest gap between the kept-item stopping law and the LP's stopping values, over every
    /// item and checkpoint, plus the pass-through mass against `v` at the first inactive one.
    pub fn stopping_law_error(&self) -> f64 {
        let policy = self.full_policy();
        let active = self.index.active;
        let mut worst = 0.0f64;
        for i in 0..self.instance.items.len() {
            let law = policy.stopping_law(i);
            for c in 0..active {
                worst = worst.max((law[c] - self.values.s[i][c]).abs());
            }
            if let Some(v) = self.values.v[i].get(active) {
                worst = worst.max((law[active] - v).abs());
            }
        }
        worst
    }

    pub fn run(&self, rng: &mut impl Rng) -> KnapsackRunResult {
        let policy = round_small(&self.values, &self.index, rng);
        execute_small(&self.instance, &policy, rng)
    }
}

/// The late half of a cancellation instance: a no-cancel pipeline on the late rewards.
pub fn solve_late(late: &StockInstance) -> Result<NoCancelPipeline, KnapsackError> {
    NoCancelPipeline::new(late)
}

/// Cancellation-aware pipeline: a fair coin picks the early or the late half per trial.
#[derive(Debug, Clone)]
pub struct FullPipeline {
    pub early: SmallPipeline,
    pub late: NoCancelPipeline,
}

impl FullPipeline {
    pub fn new(instance: &StockInstance, quantized: bool) -> Result<Self, KnapsackError> {
        let (early, late) = split_early_late(instance);
        Ok(Self { early: SmallPipeline::new(&early, quantized)?, late: solve_late(&late)? })
    }

    pub fn run(&self, rng: &mut impl Rng) -> KnapsackRunResult {
        if rng.gen::<bool>() {
            self.early.run(rng)
        } else {
            self.late.run(rng)
        }
    }
}

/// Builds the full pipeline and runs one trial.
pub fn solve_stock_full(instance: &StockInstance, rng: &mut impl Rng) -> Result<KnapsackRunResult, KnapsackError> {
    Ok(FullPipeline::new(instance, false)?.run(rng))
}
