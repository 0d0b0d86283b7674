//! Strategy objects produced by peeling.

use serde::Serialize;

use super::Action;
use crate::model::ArmGraph;

/// One peeled strategy on a tree arm. `time[u] = None` means the strategy never plays `u`.
/// Probabilities propagate top-down, `prob[child] = prob[parent] * p`, so the propagation
/// invariant holds bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyForest {
    pub arm: usize,
    pub peel: usize,
    pub time: Vec<Option<usize>>,
    /// Times as peeled, kept when gap filling moves components.
    pub original_time: Vec<Option<usize>>,
    pub prob: Vec<f64>,
    /// Pull or exploit per played state; `Pull` where unplayed.
    pub action: Vec<Action>,
}

impl StrategyForest {
    pub fn root_prob(&self, graph: &ArmGraph) -> f64 {
        self.prob[graph.root]
    }

    pub fn pull(&self, u: usize) -> f64 {
        if self.action[u] == Action::Pull {
            self.prob[u]
        } else {
            0.0
        }
    }

    pub fn exploit(&self, u: usize) -> f64 {
        if self.action[u] == Action::Exploit {
            self.prob[u]
        } else {
            0.0
        }
    }

    pub fn latest_time(&self) -> Option<usize> {
        self.time.iter().flatten().copied().max()
    }

    /// Played states whose parent is played exactly one step earlier belong to the parent's
    /// component; every other played state heads its own.
    pub fn is_head(&self, graph: &ArmGraph, u: usize) -> bool {
        let Some(t) = self.time[u] else { return false };
        match graph.parent(u) {
            Some((p, _)) => self.time[p].is_none_or(|tp| tp + 1 != t),
            None => true,
        }
    }

    pub fn head(&self, graph: &ArmGraph, mut u: usize) -> usize {
        while !self.is_head(graph, u) {
            u = graph.parent(u).expect("non-heads have parents").0;
        }
        u
    }

    /// The component headed by `head`, in depth-first order.
    pub fn component(&self, graph: &ArmGraph, head: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![head];
        while let Some(u) = stack.pop() {
            out.push(u);
            let Some(t) = self.time[u] else { continue };
            for &(c, _) in graph.children[u].iter().rev() {
                if self.time[c] == Some(t + 1) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Checks time monotonicity, exact probability propagation, the preflow condition and
    /// exploit leaves.
    pub fn check(&self, graph: &ArmGraph) -> Result<(), String> {
        for u in 0..graph.len() {
            match self.time[u] {
                None => {
                    if self.prob[u] != 0.0 {
                        return Err(format!("state {u}: unplayed with prob {}", self.prob[u]));
                    }
                }
                Some(t) => {
                    if t == 0 {
                        return Err(format!("state {u}: time 0"));
                    }
                    if let Some((p, edge)) = graph.parent(u) {
                        let Some(tp) = self.time[p] else {
                            return Err(format!("state {u}: played below an unplayed parent"));
                        };
                        if t < tp + 1 {
                            return Err(format!("state {u}: time {t} not after parent time {tp}"));
                        }
                        if self.action[p] == Action::Exploit {
                            return Err(format!("state {u}: played below an exploit"));
                        }
                        if self.prob[u] != self.prob[p] * edge {
                            return Err(format!("state {u}: prob {} != {} * {edge}", self.prob[u], self.prob[p]));
                        }
                    }
                }
            }
            let below: f64 = graph.children[u].iter().map(|&(c, _)| self.prob[c]).sum();
            if below > self.prob[u] * (1.0 + 1e-9) {
                return Err(format!("state {u}: children carry {below} > {}", self.prob[u]));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DagNode {
    pub state: usize,
    pub time: usize,
    pub prob: f64,
    /// Successor per child of `state`, in the graph's child order; `None` is time infinity.
    pub next: Vec<Option<usize>>,
}

/// One peeled strategy on a layered arm: nodes are (state, time) pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyDag {
    pub arm: usize,
    pub peel: usize,
    pub root: usize,
    pub nodes: Vec<DagNode>,
}

impl StrategyDag {
    pub fn root_prob(&self) -> f64 {
        self.nodes[self.root].prob
    }

    pub fn check(&self, graph: &ArmGraph) -> Result<(), String> {
        let mut inflow = vec![0.0; self.nodes.len()];
        for (k, node) in self.nodes.iter().enumerate() {
            let kids = &graph.children[node.state];
            if node.next.len() != kids.len() {
                return Err(format!("node {k}: {} successors for {} children", node.next.len(), kids.len()));
            }
            for (&(child, p), next) in kids.iter().zip(&node.next) {
                let Some(n) = *next else { continue };
                let succ = &self.nodes[n];
                if succ.state != child {
                    return Err(format!("node {k}: successor {n} has the wrong state"));
                }
                if succ.time < node.time + 1 {
                    return Err(format!("node {k}: successor time {} not after {}", succ.time, node.time));
                }
                inflow[n] += node.prob * p;
            }
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if k != self.root && (inflow[k] - node.prob).abs() > 1e-12 * node.prob.max(1.0) {
                return Err(format!("node {k}: prob {} but inflow {}", node.prob, inflow[k]));
            }
        }
        if self.nodes[self.root].state != graph.root {
            return Err("dag root is not the arm root".into());
        }
        Ok(())
    }
}
