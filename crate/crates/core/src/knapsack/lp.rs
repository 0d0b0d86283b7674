//! Builders for the four knapsack relaxations.
//!
//! Start times follow one convention throughout: `x[i][t]` is the probability that item `i`
//! starts after exactly `t` budget units have been used, `t` in `0..B`, and the load row at `T`
//! counts starts `t < T`.

use serde::Serialize;

use super::KnapsackError;
use crate::lp::{LinearProgram, LpSolution, Relation, VarId};
use crate::model::{ItemDist, StockInstance};

/// `E[min(S, t)]`.
pub fn expected_truncated_size(item: &ItemDist, t: usize) -> f64 {
    item.support().map(|(s, p)| p * s.min(t) as f64).sum()
}

/// Expected reward of starting `item` once `t` of the `budget` units are used: every size that
/// still fits pays its reward.
pub fn expected_start_reward(item: &ItemDist, t: usize, budget: usize) -> f64 {
    if t > budget {
        return 0.0;
    }
    item.support().filter(|&(s, _)| s <= budget - t).map(|(s, p)| p * item.reward(s)).sum()
}

/// Per-item start-time probabilities extracted from an LP solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartDistribution {
    pub mass: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct NoCancelLpIndex {
    pub budget: usize,
    /// `x[i][t]` for `t` in `0..budget`.
    pub x: Vec<Vec<VarId>>,
}

impl NoCancelLpIndex {
    pub fn start_distribution(&self, sol: &LpSolution) -> StartDistribution {
        StartDistribution {
            mass: self.x.iter().map(|row| row.iter().map(|&v| sol.value(v).max(0.0)).collect()).collect(),
        }
    }

    /// Dense LP value vector carrying `dist` (used to check expanded solutions).
    pub fn values_of(&self, lp: &LinearProgram, dist: &StartDistribution) -> Vec<f64> {
        let mut values = vec![0.0; lp.num_vars()];
        for (row, mass) in self.x.iter().zip(&dist.mass) {
            for (&v, &m) in row.iter().zip(mass) {
                values[v.0] = m;
            }
        }
        values
    }
}

fn check_instance(instance: &StockInstance) -> Result<(), KnapsackError> {
    instance.clone().validated()?;
    Ok(())
}

pub fn build_lp_nocancel(
    instance: &StockInstance,
) -> Result<(LinearProgram, NoCancelLpIndex), KnapsackError> {
    check_instance(instance)?;
    let budget = instance.budget;
    let mut lp = LinearProgram::new();
    let mut x = Vec::with_capacity(instance.items.len());
    for (i, item) in instance.items.iter().enumerate() {
        let mut row = Vec::with_capacity(budget);
        let mut prev = f64::INFINITY;
        for t in 0..budget {
            let var = lp.add_var(format!("x_{i}_{t}"), 0.0, 1.0);
            let er = expected_start_reward(item, t, budget);
            assert!(er <= prev + 1e-12, "start reward must not increase with the start time");
            prev = er;
            lp.add_objective(var, er);
            row.push(var);
        }
        lp.add_constraint(format!("once_{i}"), row.iter().map(|&v| (v, 1.0)).collect(), Relation::Le, 1.0);
        x.push(row);
    }
    for t in 1..=budget {
        let mut terms = Vec::new();
        for (i, item) in instance.items.iter().enumerate() {
            let load = expected_truncated_size(item, t);
            terms.extend(x[i][..t].iter().map(|&v| (v, load)));
        }
        lp.add_constraint(format!("load_{t}"), terms, Relation::Le, 2.0 * t as f64);
    }
    Ok((lp, NoCancelLpIndex { budget, x }))
}

/// Contiguous block of start times sharing one coarse variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeClass {
    pub first: usize,
    pub last: usize,
}

impl TimeClass {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Start-time classes `{0}`, `[1,2]`, `[3,6]`, ..., class `j` covering `[2^j - 1, 2^(j+1) - 2]`
/// cut at `budget - 1`.
pub fn start_classes(budget: usize) -> Vec<TimeClass> {
    let mut out = Vec::new();
    let mut j = 0;
    while (1usize << j) <= budget {
        let first = (1usize << j) - 1;
        let last = ((1usize << (j + 1)) - 2).min(budget - 1);
        out.push(TimeClass { first, last });
        j += 1;
    }
    out
}

#[derive(Debug, Clone)]
pub struct PolyNoCancelIndex {
    pub budget: usize,
    pub classes: Vec<TimeClass>,
    /// `xbar[i][j]`.
    pub xbar: Vec<Vec<VarId>>,
}

impl PolyNoCancelIndex {
    pub fn class_mass(&self, sol: &LpSolution) -> Vec<Vec<f64>> {
        self.xbar.iter().map(|row| row.iter().map(|&v| sol.value(v).max(0.0)).collect()).collect()
    }

    /// Spreads each class mass evenly over the class: a point of the fine start-time LP.
    pub fn expand(&self, sol: &LpSolution) -> StartDistribution {
        let mass = self
            .class_mass(sol)
            .into_iter()
            .map(|row| {
                let mut fine = vec![0.0; self.budget];
                for (class, m) in self.classes.iter().zip(row) {
                    for slot in &mut fine[class.first..=class.last] {
                        *slot = m / class.len() as f64;
                    }
                }
                fine
            })
            .collect();
        StartDistribution { mass }
    }
}

pub fn build_poly_lp_nocancel(
    instance: &StockInstance,
) -> Result<(LinearProgram, PolyNoCancelIndex), KnapsackError> {
    check_instance(instance)?;
    let budget = instance.budget;
    let classes = start_classes(budget);
    let mut lp = LinearProgram::new();
    let mut xbar = Vec::new();
    for (i, item) in instance.items.iter().enumerate() {
        let row: Vec<VarId> = classes
            .iter()
            .enumerate()
            .map(|(j, class)| {
                let var = lp.add_var(format!("xbar_{i}_{j}"), 0.0, 1.0);
                // The latest start in the class is the worst case for the reward.
                lp.add_objective(var, expected_start_reward(item, class.last, budget));
                var
            })
            .collect();
        lp.add_constraint(format!("once_{i}"), row.iter().map(|&v| (v, 1.0)).collect(), Relation::Le, 1.0);
        xbar.push(row);
    }
    for j in 0..classes.len() {
        let horizon = 1usize << (j + 1);
        let mut terms = Vec::new();
        for (i, item) in instance.items.iter().enumerate() {
            let load = expected_truncated_size(item, horizon);
            terms.extend(xbar[i][..=j].iter().map(|&v| (v, load)));
        }
        lp.add_constraint(format!("load_{j}"), terms, Relation::Le, horizon as f64);
    }
    Ok((lp, PolyNoCancelIndex { budget, classes, xbar }))
}

/// Stopping-time LP layout shared by the unit-step and the power-of-two relaxations.
///
/// Checkpoint `c` is the moment before the item's next stage: `v[i][c]` is the probability the
/// item reaches it, `s[i][c]` the probability it stops there (by completing in the previous
/// stage or by being cancelled). Stage `c` ends after `stage_end[c]` processed units.
#[derive(Debug, Clone)]
pub struct SmallLpIndex {
    pub budget: usize,
    pub v: Vec<Vec<VarId>>,
    pub s: Vec<Vec<VarId>>,
    /// Completion probability at checkpoint `c` given the item reached it.
    pub hazard: Vec<Vec<f64>>,
    pub stage_end: Vec<usize>,
    /// Number of checkpoints at which the rounded policy still makes a decision.
    pub active: usize,
    pub quantized: bool,
}

/// `(v, s)` values per item and checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingValues {
    pub v: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
}

impl SmallLpIndex {
    pub fn values(&self, sol: &LpSolution) -> StoppingValues {
        let read = |m: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
            m.iter().map(|row| row.iter().map(|&x| sol.value(x)).collect()).collect()
        };
        StoppingValues { v: read(&self.v), s: read(&self.s) }
    }

    /// Items are kept with probability 1/4, or 1/8 for the power-of-two relaxation.
    pub fn keep_probability(&self) -> f64 {
        if self.quantized {
            0.125
        } else {
            0.25
        }
    }
}

struct Checkpoints {
    hazard: Vec<f64>,
    reward: Vec<f64>,
    cost: Vec<f64>,
}

fn stopping_lp(
    per_item: Vec<Checkpoints>,
    budget: usize,
    stage_end: Vec<usize>,
    active: usize,
    quantized: bool,
) -> (LinearProgram, SmallLpIndex) {
    let mut lp = LinearProgram::new();
    let (mut vs, mut ss, mut hs) = (Vec::new(), Vec::new(), Vec::new());
    for (i, cp) in per_item.into_iter().enumerate() {
        let k = cp.hazard.len();
        let v: Vec<VarId> = (0..k)
            .map(|c| lp.add_var(format!("v_{i}_{c}"), if c == 0 { 1.0 } else { 0.0 }, 1.0))
            .collect();
        let s: Vec<VarId> = (0..k).map(|c| lp.add_var(format!("s_{i}_{c}"), 0.0, 1.0)).collect();
        for c in 0..k {
            let mut flow = vec![(v[c], 1.0), (s[c], -1.0)];
            if c + 1 < k {
                flow.push((v[c + 1], -1.0));
            }
            lp.add_constraint(format!("flow_{i}_{c}"), flow, Relation::Eq, 0.0);
            let mut stop = vec![(s[c], 1.0)];
            if cp.hazard[c] > 0.0 {
                stop.push((v[c], -cp.hazard[c]));
            }
            lp.add_constraint(format!("stop_{i}_{c}"), stop, Relation::Ge, 0.0);
            lp.add_objective(v[c], cp.reward[c] * cp.hazard[c]);
        }
        let spend: Vec<(VarId, f64)> =
            (0..k).filter(|&c| cp.cost[c] > 0.0).map(|c| (s[c], cp.cost[c])).collect();
        lp.add_constraint(format!("budget_{i}"), spend, Relation::Le, budget as f64);
        vs.push(v);
        ss.push(s);
        hs.push(cp.hazard);
    }
    (lp, SmallLpIndex { budget, v: vs, s: ss, hazard: hs, stage_end, active, quantized })
}

fn check_early(instance: &StockInstance) -> Result<(), KnapsackError> {
    check_instance(instance)?;
    let half = instance.budget / 2;
    for (i, item) in instance.items.iter().enumerate() {
        if let Some((size, _)) =
            item.support().find(|&(s, _)| s > half && item.reward(s) > 0.0)
        {
            return Err(KnapsackError::LateReward { item: i, size });
        }
    }
    Ok(())
}

/// Unit-step stopping LP over checkpoints `t = 0..=B` for an instance whose rewards sit at sizes
/// at most `B/2`.
pub fn build_lp_small(instance: &StockInstance) -> Result<(LinearProgram, SmallLpIndex), KnapsackError> {
    check_early(instance)?;
    let budget = instance.budget;
    let half = budget / 2;
    let per_item = instance
        .items
        .iter()
        .map(|item| Checkpoints {
            hazard: (0..=budget).map(|t| item.hazard(t)).collect(),
            reward: (0..=budget).map(|t| if (1..=half).contains(&t) { item.reward(t) } else { 0.0 }).collect(),
            cost: (0..=budget).map(|t| t as f64).collect(),
        })
        .collect();
    let stage_end = (0..=budget).map(|t| t + 1).collect();
    Ok(stopping_lp(per_item, budget, stage_end, half + 1, false))
}

/// Size classes `[2^j, 2^(j+1))` for `j = 0..=floor(log2 B)`: class probability and the
/// probability-weighted average reward.
pub fn quantize(item: &ItemDist, budget: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut j = 0;
    while (1usize << j) <= budget {
        let (lo, hi) = (1usize << j, 1usize << (j + 1));
        let mass: f64 = item.support().filter(|&(s, _)| s >= lo && s < hi).map(|(_, p)| p).sum();
        let weighted: f64 =
            item.support().filter(|&(s, _)| s >= lo && s < hi).map(|(s, p)| p * item.reward(s)).sum();
        out.push((mass, if mass > 0.0 { weighted / mass } else { 0.0 }));
        j += 1;
    }
    out
}

/// Power-of-two stopping LP on the quantized instance. Checkpoint 0 is "before starting";
/// checkpoint `j + 1` follows size class `j` and costs `2^j` budget when the item stops there.
pub fn build_poly_lp_small(
    instance: &StockInstance,
) -> Result<(LinearProgram, SmallLpIndex), KnapsackError> {
    check_early(instance)?;
    let budget = instance.budget;
    let per_item: Vec<Checkpoints> = instance
        .items
        .iter()
        .map(|item| {
            let classes = quantize(item, budget);
            let mut tail: f64 = classes.iter().map(|c| c.0).sum();
            let mut cp = Checkpoints { hazard: vec![0.0], reward: vec![0.0], cost: vec![0.0] };
            for (j, &(mass, reward)) in classes.iter().enumerate() {
                cp.hazard.push(if tail > 0.0 { (mass / tail).min(1.0) } else { 0.0 });
                cp.reward.push(reward);
                cp.cost.push((1usize << j) as f64);
                tail -= mass;
            }
            cp
        })
        .collect();
    let checkpoints = per_item.first().map_or(1, |cp| cp.hazard.len());
    let stage_end = (0..checkpoints).map(|c| (1usize << (c + 1)) - 1).collect();
    // Stages whose sizes start beyond B/2 carry no reward, so decisions stop before them.
    let half = (budget / 2).max(1);
    let active = (0..checkpoints).take_while(|&c| (1usize << c) <= half).count();
    Ok(stopping_lp(per_item, budget, stage_end, active, true))
}
