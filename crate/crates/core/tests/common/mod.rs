//! Plain recursive expectimax evaluators, written independently of the crate's oracles. No
//! memoization, so only for very small instances.

#![allow(dead_code)]

use stocpack::model::{ArmGraph, MabInstance, StockInstance};

/// Best no-cancel value: pick an unused item, it consumes its size; overflow ends the run.
pub fn expectimax_nocancel(inst: &StockInstance) -> f64 {
    fn go(inst: &StockInstance, left: &[usize], room: usize) -> f64 {
        let mut best = 0.0f64;
        for (k, &i) in left.iter().enumerate() {
            let rest: Vec<usize> = left.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
            let item = &inst.items[i];
            let mut v = 0.0;
            for (&size, &p) in &item.probs {
                if size <= room && p > 0.0 {
                    v += p * (item.rewards.get(&size).copied().unwrap_or(0.0) + go(inst, &rest, room - size));
                }
            }
            best = best.max(v);
        }
        best
    }
    let all: Vec<usize> = (0..inst.items.len()).collect();
    go(inst, &all, inst.budget)
}

/// Best value when the running item may be dropped after any whole unit. The state tracks the
/// running item's conditional size law directly.
pub fn expectimax_cancel(inst: &StockInstance) -> f64 {
    fn idle(inst: &StockInstance, left: &[usize], room: usize) -> f64 {
        let mut best = 0.0f64;
        for (k, &i) in left.iter().enumerate() {
            let rest: Vec<usize> = left.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
            let law: Vec<(usize, f64)> = inst.items[i].probs.iter().filter(|(_, &p)| p > 0.0).map(|(&s, &p)| (s, p)).collect();
            best = best.max(running(inst, &rest, room, i, 0, &law));
        }
        best
    }

    /// `law` is the size distribution of item `i` given it has run `done` units.
    fn running(inst: &StockInstance, rest: &[usize], room: usize, i: usize, done: usize, law: &[(usize, f64)]) -> f64 {
        let stop = idle(inst, rest, room);
        if room == 0 || law.is_empty() {
            return stop;
        }
        let next = done + 1;
        let finish: f64 = law.iter().filter(|(s, _)| *s == next).map(|p| p.1).sum();
        let mut v = finish * (inst.items[i].rewards.get(&next).copied().unwrap_or(0.0) + idle(inst, rest, room - 1));
        let more: f64 = 1.0 - finish;
        if more > 1e-15 {
            let cond: Vec<(usize, f64)> = law.iter().filter(|(s, _)| *s > next).map(|&(s, p)| (s, p / more)).collect();
            v += more * running(inst, rest, room - 1, i, next, &cond);
        }
        stop.max(v)
    }

    let all: Vec<usize> = (0..inst.items.len()).collect();
    idle(inst, &all, inst.budget)
}

/// Best value of the plain bandit model: pulls earn the state's reward; a pulled leaf retires
/// its arm.
pub fn expectimax_mab(inst: &MabInstance) -> f64 {
    fn go(graphs: &[ArmGraph], at: &mut Vec<Option<usize>>, pulls: usize) -> f64 {
        if pulls == 0 {
            return 0.0;
        }
        let mut best = 0.0f64;
        for a in 0..graphs.len() {
            let Some(u) = at[a] else { continue };
            let g = &graphs[a];
            let mut v = g.reward[u];
            if g.children[u].is_empty() {
                at[a] = None;
                v += go(graphs, at, pulls - 1);
            } else {
                for &(c, p) in &g.children[u] {
                    at[a] = Some(c);
                    v += p * go(graphs, at, pulls - 1);
                }
            }
            at[a] = Some(u);
            best = best.max(v);
        }
        best
    }
    let graphs = inst.graphs();
    let mut at: Vec<Option<usize>> = graphs.iter().map(|g| Some(g.root)).collect();
    go(&graphs, &mut at, inst.budget)
}
