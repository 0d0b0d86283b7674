//! Exact optimal adaptive values by dynamic programming, for instances small enough to enumerate.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{ArmGraph, MabInstance, StockInstance};

pub const NOCANCEL_MAX_ITEMS: usize = 16;
pub const NOCANCEL_MAX_BUDGET: usize = 64;
pub const CANCEL_MAX_ITEMS: usize = 6;
pub const CANCEL_MAX_BUDGET: usize = 16;
pub const MAB_MAX_STATES: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{what} is {size}, above the oracle limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    /// Number of DP states evaluated.
    pub states: usize,
}

fn guard(what: &'static str, size: usize, limit: usize) -> Result<(), OracleError> {
    if size > limit {
        Err(OracleError::TooLarge { what, size, limit })
    } else {
        Ok(())
    }
}

/// Best policy that runs each started item to completion. An item overflowing the budget ends
/// the run with nothing for that item.
pub fn opt_nocancel(instance: &StockInstance) -> Result<OracleResult, OracleError> {
    let n = instance.items.len();
    let b = instance.budget;
    guard("item count", n, NOCANCEL_MAX_ITEMS)?;
    guard("budget", b, NOCANCEL_MAX_BUDGET)?;
    let width = b + 1;
    let mut value = vec![0.0f64; (1usize << n) * width];
    for mask in 1usize..(1 << n) {
        for room in 0..=b {
            let mut best = 0.0f64;
            for (i, item) in instance.items.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    continue;
                }
                let rest = mask & !(1 << i);
                let gain: f64 = item
                    .support()
                    .filter(|&(s, _)| s <= room)
                    .map(|(s, p)| p * (item.reward(s) + value[rest * width + room - s]))
                    .sum();
                best = best.max(gain);
            }
            value[mask * width + room] = best;
        }
    }
    Ok(OracleResult { value: value[((1 << n) - 1) * width + b], states: value.len() })
}

struct CancelDp<'a> {
    instance: &'a StockInstance,
    idle: HashMap<(usize, usize), f64>,
    running: HashMap<(usize, usize, usize, usize), f64>,
}

impl CancelDp<'_> {
    /// No item in progress; `room` units left.
    fn idle(&mut self, mask: usize, room: usize) -> f64 {
        if let Some(&v) = self.idle.get(&(mask, room)) {
            return v;
        }
        let mut best = 0.0f64;
        for i in 0..self.instance.items.len() {
            if mask & (1 << i) != 0 {
                best = best.max(self.running(mask & !(1 << i), room, i, 0));
            }
        }
        self.idle.insert((mask, room), best);
        best
    }

    /// Item `item` has run `elapsed` units without completing; `room` units left.
    fn running(&mut self, mask: usize, room: usize, item: usize, elapsed: usize) -> f64 {
        let key = (mask, room, item, elapsed);
        if let Some(&v) = self.running.get(&key) {
            return v;
        }
        let cancel = self.idle(mask, room);
        let dist = &self.instance.items[item];
        let proceed = if room == 0 || dist.tail(elapsed + 1) <= 0.0 {
            0.0
        } else {
            let h = dist.hazard(elapsed + 1);
            let done = h * (dist.reward(elapsed + 1) + self.idle(mask, room - 1));
            let more = if h < 1.0 { (1.0 - h) * self.running(mask, room - 1, item, elapsed + 1) } else { 0.0 };
            done + more
        };
        let v = cancel.max(proceed);
        self.running.insert(key, v);
        v
    }
}

/// Best policy that may abandon the running item after any whole number of units.
pub fn opt_cancel(instance: &StockInstance) -> Result<OracleResult, OracleError> {
    let n = instance.items.len();
    guard("item count", n, CANCEL_MAX_ITEMS)?;
    guard("budget", instance.budget, CANCEL_MAX_BUDGET)?;
    let mut dp = CancelDp { instance, idle: HashMap::new(), running: HashMap::new() };
    let value = dp.idle((1 << n) - 1, instance.budget);
    Ok(OracleResult { value, states: dp.idle.len() + dp.running.len() })
}

/// Per-arm local state: a graph index, or retired.
struct JointSpace {
    graphs: Vec<ArmGraph>,
    radix: Vec<usize>,
    joint: usize,
}

impl JointSpace {
    fn new(instance: &MabInstance, budget_slots: usize) -> Result<Self, OracleError> {
        let graphs = instance.graphs();
        let radix: Vec<usize> = graphs.iter().map(|g| g.len() + 1).collect();
        let mut joint = 1usize;
        for r in &radix {
            joint = joint.saturating_mul(*r);
        }
        guard("joint state count", joint.saturating_mul(budget_slots), MAB_MAX_STATES)?;
        Ok(Self { graphs, radix, joint })
    }

    fn retired(&self, arm: usize) -> usize {
        self.radix[arm] - 1
    }

    fn decode(&self, mut code: usize) -> Vec<usize> {
        self.radix
            .iter()
            .map(|r| {
                let d = code % r;
                code /= r;
                d
            })
            .collect()
    }

    fn encode(&self, local: &[usize]) -> usize {
        local.iter().zip(&self.radix).rev().fold(0, |acc, (d, r)| acc * r + d)
    }
}

struct MabDp {
    space: JointSpace,
    exploits: Option<usize>,
    /// Indexed by (joint, pulls left, exploits left).
    memo: Vec<Option<f64>>,
    budget: usize,
}

impl MabDp {
    fn slot(&self, joint: usize, pulls: usize, ks: usize) -> usize {
        (joint * (self.budget + 1) + pulls) * (self.exploits.unwrap_or(0) + 1) + ks
    }

    fn value(&mut self, joint: usize, pulls: usize, ks: usize) -> f64 {
        let slot = self.slot(joint, pulls, ks);
        if let Some(v) = self.memo[slot] {
            return v;
        }
        let local = self.space.decode(joint);
        let mut best = 0.0f64;
        for arm in 0..local.len() {
            let u = local[arm];
            if u == self.space.retired(arm) {
                continue;
            }
            let reward = self.space.graphs[arm].reward[u];
            if self.exploits.is_some() && ks > 0 {
                let mut next = local.clone();
                next[arm] = self.space.retired(arm);
                best = best.max(reward + self.value(self.space.encode(&next), pulls, ks - 1));
            }
            if pulls > 0 {
                let gain = if self.exploits.is_some() { 0.0 } else { reward };
                let children = self.space.graphs[arm].children[u].clone();
                let mut next = local.clone();
                let v = if children.is_empty() {
                    next[arm] = self.space.retired(arm);
                    self.value(self.space.encode(&next), pulls - 1, ks)
                } else {
                    children
                        .iter()
                        .map(|&(c, p)| {
                            next[arm] = c;
                            p * self.value(self.space.encode(&next), pulls - 1, ks)
                        })
                        .sum()
                };
                best = best.max(gain + v);
            }
        }
        self.memo[slot] = Some(best);
        best
    }
}

/// Best adaptive policy over at most `budget` pulls. Pulling a state earns its reward and moves
/// the arm along one random edge; a pulled leaf retires the arm. When an exploit budget is set,
/// pulls earn nothing and up to `K` exploits each earn the current state's reward and retire
/// the arm.
pub fn opt_mab(instance: &MabInstance) -> Result<OracleResult, OracleError> {
    let ks = instance.exploit_budget.map_or(1, |k| k + 1);
    let slots = (instance.budget + 1).saturating_mul(ks);
    let space = JointSpace::new(instance, slots)?;
    let roots: Vec<usize> = space.graphs.iter().map(|g| g.root).collect();
    let start = space.encode(&roots);
    let memo = vec![None; space.joint * slots];
    let mut dp = MabDp { space, exploits: instance.exploit_budget, memo, budget: instance.budget };
    let value = dp.value(start, instance.budget, instance.exploit_budget.unwrap_or(0));
    let states = dp.memo.iter().filter(|v| v.is_some()).count();
    Ok(OracleResult { value, states })
}

struct SerialDp<'a> {
    graphs: &'a [ArmGraph],
    exploit_model: bool,
    fresh: HashMap<(usize, usize, usize), f64>,
    busy: HashMap<(usize, usize, usize, usize, usize), f64>,
}

impl SerialDp<'_> {
    /// No arm in hand; `closed` arms may not be touched again.
    fn fresh(&mut self, closed: usize, pulls: usize, ks: usize) -> f64 {
        if let Some(&v) = self.fresh.get(&(closed, pulls, ks)) {
            return v;
        }
        let mut best = 0.0f64;
        for arm in 0..self.graphs.len() {
            if closed & (1 << arm) == 0 {
                best = best.max(self.busy(arm, self.graphs[arm].root, closed | (1 << arm), pulls, ks));
            }
        }
        self.fresh.insert((closed, pulls, ks), best);
        best
    }

    /// Arm `arm` in hand at state `u`; leaving it closes it for good.
    fn busy(&mut self, arm: usize, u: usize, closed: usize, pulls: usize, ks: usize) -> f64 {
        let key = (arm, u, closed, pulls, ks);
        if let Some(&v) = self.busy.get(&key) {
            return v;
        }
        let graph = &self.graphs[arm];
        let reward = graph.reward[u];
        let mut best = self.fresh(closed, pulls, ks);
        if self.exploit_model && ks > 0 {
            best = best.max(reward + self.fresh(closed, pulls, ks - 1));
        }
        if pulls > 0 {
            let gain = if self.exploit_model { 0.0 } else { reward };
            let children = graph.children[u].clone();
            let v = if children.is_empty() {
                self.fresh(closed, pulls - 1, ks)
            } else {
                children.iter().map(|&(c, p)| p * self.busy(arm, c, closed, pulls - 1, ks)).sum()
            };
            best = best.max(gain + v);
        }
        self.busy.insert(key, best);
        best
    }
}

/// Best policy among those that never return to an arm once they stop playing it.
pub fn opt_mab_nonpreempting(instance: &MabInstance) -> Result<OracleResult, OracleError> {
    let ks = instance.exploit_budget.map_or(1, |k| k + 1);
    let slots = (instance.budget + 1).saturating_mul(ks);
    let space = JointSpace::new(instance, slots)?;
    guard("arm count", space.graphs.len(), usize::BITS as usize - 1)?;
    let mut dp = SerialDp {
        graphs: &space.graphs,
        exploit_model: instance.exploit_budget.is_some(),
        fresh: HashMap::new(),
        busy: HashMap::new(),
    };
    let value = dp.fresh(0, instance.budget, instance.exploit_budget.unwrap_or(0));
    Ok(OracleResult { value, states: dp.fresh.len() + dp.busy.len() })
}
