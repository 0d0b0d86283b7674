//! Instance families: three adversarial constructions and seeded random instances.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Arm, ArmShape, Edge, Instance, ItemDist, MabInstance, StateId, StockInstance};
use crate::rng::seeded;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("cancel-benefit needs an even n of at least 4, got {0}")]
    CancelBenefitN(usize),
    #[error("correlated-gap needs n of at least 2, got {0}")]
    CorrelatedGapN(usize),
    #[error("preemption-gap needs L > n >= 2, got n={n}, L={l}")]
    PreemptionShape { n: usize, l: usize },
    #[error("preemption-gap needs a budget of at least {min}, got {budget}")]
    PreemptionBudget { budget: usize, min: usize },
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("parameter overflow")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    CancelBenefit { n: usize },
    CorrelatedGap { n: usize },
    PreemptionGap { n: usize, l: usize, m: u32, budget: Option<usize> },
    RandomStock { n: usize, budget: usize, support: usize, seed: u64 },
    RandomMab { arms: usize, states: usize, budget: usize, seed: u64, shape: ArmShape, exploit_budget: Option<usize> },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Instance, GenError> {
        Ok(match *self {
            GeneratorSpec::CancelBenefit { n } => Instance::Stock(gen_cancel_benefit(n)?),
            GeneratorSpec::CorrelatedGap { n } => Instance::Stock(gen_correlated_gap(n)?),
            GeneratorSpec::PreemptionGap { n, l, m, budget } => Instance::Mab(gen_preemption_gap(n, l, m, budget)?),
            GeneratorSpec::RandomStock { n, budget, support, seed } => {
                Instance::Stock(gen_random_stock(n, budget, support, seed)?)
            }
            GeneratorSpec::RandomMab { arms, states, budget, seed, shape, exploit_budget } => {
                let mut inst = gen_random_mab(arms, states, budget, seed, shape)?;
                inst.exploit_budget = exploit_budget;
                Instance::Mab(inst)
            }
        })
    }
}

/// Sizes 1 and `n/2` with equal odds, reward 1 at either size, budget `n`.
pub fn gen_cancel_benefit(n: usize) -> Result<StockInstance, GenError> {
    if n < 4 || n % 2 != 0 {
        return Err(GenError::CancelBenefitN(n));
    }
    let item = ItemDist::from_triples([(1, 0.5, 1.0), (n / 2, 0.5, 1.0)]);
    Ok(StockInstance::new(n, vec![item; n]))
}

/// Size 1 with probability `1 - 1/n` and no reward, size `n` otherwise with reward 1; budget `n`.
pub fn gen_correlated_gap(n: usize) -> Result<StockInstance, GenError> {
    if n < 2 {
        return Err(GenError::CorrelatedGapN(n));
    }
    let nf = n as f64;
    let item = ItemDist::from_triples([(1, 1.0 - 1.0 / nf, 0.0), (n, 1.0 / nf, 1.0)]);
    Ok(StockInstance::new(n, vec![item; n]))
}

/// `n * (L^0 + ... + L^j)`.
fn spent_through(n: usize, l: usize, j: u32) -> Option<usize> {
    (0..=j).try_fold(0usize, |acc, k| acc.checked_add(l.checked_pow(k)?))?.checked_mul(n)
}

/// Smallest budget leaving every right-side chain at least one state.
pub fn preemption_min_budget(n: usize, l: usize, m: u32) -> Result<usize, GenError> {
    if m == 0 {
        return Ok(1);
    }
    spent_through(n, l, m - 1).and_then(|s| s.checked_add(1)).ok_or(GenError::Overflow)
}

/// `n` identical arms. Pulling level root `rho(j)` for `j < m` moves right with probability
/// `1/(n * n^(m-j))` onto a chain of `B - n*(L^0+...+L^j)` states whose last state pays
/// `n^(m-j)`; otherwise left onto `L^(j+1) - 1` empty states leading to `rho(j+1)`. Pulling
/// `rho(m)` reaches a leaf paying 1 with probability `1/n`, else an empty leaf. Rewards are
/// earned when a state is pulled. `budget` defaults to the minimum.
pub fn gen_preemption_gap(n: usize, l: usize, m: u32, budget: Option<usize>) -> Result<MabInstance, GenError> {
    if n < 2 || l <= n {
        return Err(GenError::PreemptionShape { n, l });
    }
    let min = preemption_min_budget(n, l, m)?;
    let budget = budget.unwrap_or(min);
    if budget < min {
        return Err(GenError::PreemptionBudget { budget, min });
    }
    let nf = n as f64;
    let arms = (0..n)
        .map(|a| {
            let mut b = ArmBuilder::new(format!("a{a}"));
            let mut level = b.state(format!("rho{}", 0), 0.0);
            let root = level.clone();
            for j in 0..m {
                let spent = spent_through(n, l, j).ok_or(GenError::Overflow)?;
                let right_len = budget - spent;
                let p_right = 1.0 / (nf * nf.powi((m - j) as i32));
                let payoff = nf.powi((m - j) as i32);
                let mut prev = level.clone();
                for k in 1..=right_len {
                    let reward = if k == right_len { payoff } else { 0.0 };
                    let s = b.state(format!("r{j}_{k}"), reward);
                    b.edge(&prev, &s, if k == 1 { p_right } else { 1.0 });
                    prev = s;
                }
                let left_len = l.checked_pow(j + 1).ok_or(GenError::Overflow)? - 1;
                let next = b.state(format!("rho{}", j + 1), 0.0);
                let mut prev = level.clone();
                for k in 1..=left_len {
                    let s = b.state(format!("l{j}_{k}"), 0.0);
                    b.edge(&prev, &s, if k == 1 { 1.0 - p_right } else { 1.0 });
                    prev = s;
                }
                b.edge(&prev, &next, if left_len == 0 { 1.0 - p_right } else { 1.0 });
                level = next;
            }
            let win = b.state("win", 1.0);
            let lose = b.state("lose", 0.0);
            b.edge(&level, &win, 1.0 / nf);
            b.edge(&level, &lose, 1.0 - 1.0 / nf);
            Ok(b.finish(root, ArmShape::Tree))
        })
        .collect::<Result<Vec<_>, GenError>>()?;
    Ok(MabInstance { budget, exploit_budget: None, arms })
}

struct ArmBuilder {
    prefix: String,
    states: Vec<StateId>,
    edges: Vec<Edge>,
    rewards: BTreeMap<StateId, f64>,
}

impl ArmBuilder {
    fn new(prefix: String) -> Self {
        Self { prefix, states: Vec::new(), edges: Vec::new(), rewards: BTreeMap::new() }
    }

    fn state(&mut self, name: impl AsRef<str>, reward: f64) -> StateId {
        let id = StateId::new(format!("{}.{}", self.prefix, name.as_ref()));
        self.states.push(id.clone());
        if reward != 0.0 {
            self.rewards.insert(id.clone(), reward);
        }
        id
    }

    fn edge(&mut self, from: &StateId, to: &StateId, p: f64) {
        self.edges.push(Edge { from: from.clone(), to: to.clone(), p });
    }

    fn finish(self, root: StateId, shape: ArmShape) -> Arm {
        Arm { states: self.states, root, edges: self.edges, rewards: self.rewards, shape }
    }
}

/// Positive weights normalized to sum to 1.
fn simplex(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = 1.0 - head;
    p
}

fn two_decimals(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// `n` items, each with `support` distinct sizes drawn from `1..=budget` and a reward in
/// `[0, 1]` per size.
pub fn gen_random_stock(n: usize, budget: usize, support: usize, seed: u64) -> Result<StockInstance, GenError> {
    if budget == 0 {
        return Err(GenError::NonPositive("budget"));
    }
    if support == 0 {
        return Err(GenError::NonPositive("support"));
    }
    let mut rng = seeded(seed);
    let sizes: Vec<usize> = (1..=budget).collect();
    let items = (0..n)
        .map(|_| {
            let mut chosen: Vec<usize> = sizes.choose_multiple(&mut rng, support.min(budget)).copied().collect();
            chosen.sort_unstable();
            let probs = simplex(chosen.len(), &mut rng);
            ItemDist::from_triples(chosen.iter().zip(probs).map(|(&s, p)| (s, p, two_decimals(rng.gen()))).collect::<Vec<_>>())
        })
        .collect();
    Ok(StockInstance::new(budget, items))
}

/// Random arms with `states` states and rewards in `[0, 1]`. Trees are random arborescences,
/// layered arms random DAGs whose edges join consecutive depths, and graphs random digraphs
/// that may contain cycles.
pub fn gen_random_mab(arms: usize, states: usize, budget: usize, seed: u64, shape: ArmShape) -> Result<MabInstance, GenError> {
    if budget == 0 {
        return Err(GenError::NonPositive("budget"));
    }
    if states == 0 {
        return Err(GenError::NonPositive("states"));
    }
    let mut rng = seeded(seed);
    let arms = (0..arms).map(|a| random_arm(a, states, shape, &mut rng)).collect();
    Ok(MabInstance { budget, exploit_budget: None, arms })
}

fn random_arm(a: usize, states: usize, shape: ArmShape, rng: &mut impl Rng) -> Arm {
    let mut b = ArmBuilder::new(format!("a{a}"));
    let ids: Vec<StateId> = (0..states).map(|k| b.state(format!("s{k}"), two_decimals(rng.gen()))).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); states];
    match shape {
        ArmShape::Tree => {
            for v in 1..states {
                children[rng.gen_range(0..v)].push(v);
            }
        }
        ArmShape::LayeredDag => {
            // Layer of each state, non-decreasing in the state index with no empty layer.
            let mut layer = vec![0usize; states];
            for v in 1..states {
                layer[v] = layer[v - 1] + usize::from(v == 1 || rng.gen_bool(0.5));
            }
            for v in 1..states {
                let above: Vec<usize> = (0..v).filter(|&u| layer[u] + 1 == layer[v]).collect();
                for &u in &above {
                    if rng.gen_bool(0.5) {
                        children[u].push(v);
                    }
                }
                if !above.iter().any(|&u| children[u].contains(&v)) {
                    children[*above.choose(rng).expect("layers are contiguous")].push(v);
                }
            }
        }
        ArmShape::Graph => {
            for v in 1..states {
                children[rng.gen_range(0..v)].push(v);
            }
            for u in 0..states {
                let extra = rng.gen_range(0..states);
                if rng.gen_bool(0.4) && !children[u].contains(&extra) {
                    children[u].push(extra);
                }
            }
        }
    }
    for (u, kids) in children.iter_mut().enumerate() {
        kids.sort_unstable();
        if kids.is_empty() {
            continue;
        }
        let probs = simplex(kids.len(), rng);
        for (&v, p) in kids.iter().zip(probs) {
            b.edge(&ids[u], &ids[v], p);
        }
    }
    b.finish(ids[0].clone(), shape)
}
