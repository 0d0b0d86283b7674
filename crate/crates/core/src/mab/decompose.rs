//! Peeling an LP solution into per-arm strategies.
//!
//! Every round builds one strategy from the residual solution, takes the largest multiple of it
//! that keeps the residual non-negative, and subtracts it together with the arrivals it caused.
//! The entry that limits the multiple is set to exactly zero, so each round retires at least one
//! residual entry.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::forest::{DagNode, StrategyDag, StrategyForest};
use super::lp::{ArmVars, MabLpIndex, Residual};
use super::{Action, MabError, LEFTOVER_TOL, ZERO_MASS};
use crate::lp::LpSolution;
use crate::model::ArmGraph;

fn first_positive(row: &[f64], from: usize) -> Option<usize> {
    (from..row.len()).find(|&t| row[t] > ZERO_MASS)
}

fn settle(value: &mut f64) {
    if *value < ZERO_MASS {
        *value = 0.0;
    }
}

/// Peels strategy forests from one tree arm, optionally with exploit leaves.
#[derive(Debug, Clone)]
pub struct TreePeeler<'a> {
    vars: &'a ArmVars,
    arm: usize,
    exploits: bool,
    residual: Residual,
    peels: usize,
    bound: usize,
}

impl<'a> TreePeeler<'a> {
    pub fn new(index: &'a MabLpIndex, values: &[f64], arm: usize) -> Self {
        let vars = &index.arms[arm];
        let slots = index.budget + if index.exploits { index.horizon } else { 0 };
        Self {
            vars,
            arm,
            exploits: index.exploits,
            residual: vars.residual(index, values),
            peels: 0,
            bound: slots * vars.graph.len(),
        }
    }

    pub fn residual(&self) -> &Residual {
        &self.residual
    }

    fn finish(&mut self) -> Result<Option<StrategyForest>, MabError> {
        let mass = self.residual.mass();
        if mass > LEFTOVER_TOL {
            return Err(MabError::Residual { arm: self.arm, mass });
        }
        for row in self.residual.z.iter_mut().chain(self.residual.x.iter_mut()) {
            row.fill(0.0);
        }
        Ok(None)
    }

    /// Next forest, or `None` once the residual is empty.
    pub fn peel(&mut self) -> Result<Option<StrategyForest>, MabError> {
        let g = &self.vars.graph;
        let n = g.len();
        let mut time = vec![None; n];
        let mut action = vec![Action::Pull; n];
        let mut reach = vec![0.0; n];
        let mut order = Vec::new();
        for u in g.bfs_order() {
            let (from, path) = if u == g.root {
                (1, 1.0)
            } else {
                let (p, edge) = g.parent(u).expect("tree states have parents");
                match time[p] {
                    Some(tp) if action[p] == Action::Pull => (tp + 1, reach[p] * edge),
                    _ => continue,
                }
            };
            let pull_at = first_positive(&self.residual.z[u], from);
            let exploit_at = if self.exploits { first_positive(&self.residual.x[u], from) } else { None };
            let (t, act) = match (pull_at, exploit_at) {
                (None, None) => continue,
                (Some(tz), Some(tx)) if tx <= tz => (tx, Action::Exploit),
                (Some(tz), _) => (tz, Action::Pull),
                (None, Some(tx)) => (tx, Action::Exploit),
            };
            time[u] = Some(t);
            action[u] = act;
            reach[u] = path;
            order.push(u);
        }
        if time[g.root].is_none() {
            return self.finish();
        }

        let slot = |res: &Residual, u: usize| -> f64 {
            let t = time[u].unwrap();
            match action[u] {
                Action::Pull => res.z[u][t],
                Action::Exploit => res.x[u][t],
            }
        };
        let (mut eps, mut limiting) = (f64::INFINITY, g.root);
        for &u in &order {
            let e = slot(&self.residual, u) / reach[u];
            if e < eps {
                eps = e;
                limiting = u;
            }
        }

        let mut prob = vec![0.0; n];
        for &u in &order {
            prob[u] = match g.parent(u) {
                Some((p, edge)) if u != g.root => prob[p] * edge,
                _ => eps,
            };
            let t = time[u].unwrap();
            let cell = match action[u] {
                Action::Pull => &mut self.residual.z[u][t],
                Action::Exploit => &mut self.residual.x[u][t],
            };
            *cell -= prob[u];
            if u == limiting {
                *cell = 0.0;
            }
            settle(cell);
            if action[u] == Action::Pull && t + 1 < self.residual.w[0].len() {
                for &(c, edge) in &g.children[u] {
                    let w = &mut self.residual.w[c][t + 1];
                    *w -= prob[u] * edge;
                    settle(w);
                }
            }
        }

        let forest = StrategyForest {
            arm: self.arm,
            peel: self.peels,
            original_time: time.clone(),
            time,
            prob,
            action,
        };
        self.peels += 1;
        if self.peels > self.bound {
            return Err(MabError::TooManyPeels { arm: self.arm, count: self.peels, bound: self.bound });
        }
        Ok(Some(forest))
    }
}

fn peel_all<T>(mut next: impl FnMut() -> Result<Option<T>, MabError>) -> Result<Vec<T>, MabError> {
    let mut out = Vec::new();
    while let Some(item) = next()? {
        out.push(item);
    }
    Ok(out)
}

/// Strategy forests of `arm` from an optimal tree relaxation.
pub fn decompose_tree(index: &MabLpIndex, sol: &LpSolution, arm: usize) -> Result<Vec<StrategyForest>, MabError> {
    let mut peeler = TreePeeler::new(index, &sol.values, arm);
    peel_all(|| peeler.peel())
}

/// Pull/exploit forests of `arm` from an optimal exploit relaxation.
pub fn decompose_exploit(
    index: &MabLpIndex,
    sol: &LpSolution,
    arm: usize,
) -> Result<Vec<StrategyForest>, MabError> {
    debug_assert!(index.exploits);
    decompose_tree(index, sol, arm)
}

/// Marked (state, time) nodes with accumulated peel probabilities and successor links.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeelSkeleton {
    pub nodes: Vec<(usize, usize)>,
    pub peel_prob: Vec<f64>,
    pub next: Vec<Vec<Option<usize>>>,
    /// Node indices in visiting order.
    pub visit_order: Vec<usize>,
}

/// Marks the root at its earliest positive slot and walks marked nodes by (depth, time). Each
/// child state of a visited `(u, t)` is linked to its earliest positive slot after `t`.
pub fn peel_strat(graph: &ArmGraph, z: &[Vec<f64>]) -> Option<PeelSkeleton> {
    let t0 = first_positive(&z[graph.root], 1)?;
    let mut skel = PeelSkeleton { nodes: vec![(graph.root, t0)], peel_prob: vec![1.0], next: vec![Vec::new()], visit_order: Vec::new() };
    let mut by_key: HashMap<(usize, usize), usize> = HashMap::from([((graph.root, t0), 0)]);
    let mut pending: BTreeSet<(usize, usize, usize)> = BTreeSet::from([(0, t0, graph.root)]);
    while let Some((_, t, u)) = pending.pop_first() {
        let node = by_key[&(u, t)];
        skel.visit_order.push(node);
        let mut links = Vec::with_capacity(graph.children[u].len());
        for &(v, p) in &graph.children[u] {
            let Some(tv) = first_positive(&z[v], t + 1) else {
                links.push(None);
                continue;
            };
            let target = *by_key.entry((v, tv)).or_insert_with(|| {
                skel.nodes.push((v, tv));
                skel.peel_prob.push(0.0);
                skel.next.push(Vec::new());
                pending.insert((graph.depth_of(v), tv, v));
                skel.nodes.len() - 1
            });
            skel.peel_prob[target] += skel.peel_prob[node] * p;
            links.push(Some(target));
        }
        skel.next[node] = links;
    }
    Some(skel)
}

/// Strategy DAGs of `arm` from an optimal layered relaxation.
pub fn decompose_dag(index: &MabLpIndex, sol: &LpSolution, arm: usize) -> Result<Vec<StrategyDag>, MabError> {
    let mut peeler = DagPeeler::new(index, &sol.values, arm);
    peel_all(|| peeler.peel())
}

#[derive(Debug, Clone)]
pub struct DagPeeler<'a> {
    vars: &'a ArmVars,
    arm: usize,
    residual: Residual,
    peels: usize,
    bound: usize,
}

impl<'a> DagPeeler<'a> {
    pub fn new(index: &'a MabLpIndex, values: &[f64], arm: usize) -> Self {
        let vars = &index.arms[arm];
        Self {
            vars,
            arm,
            residual: vars.residual(index, values),
            peels: 0,
            bound: index.budget * index.budget * vars.graph.len(),
        }
    }

    pub fn residual(&self) -> &Residual {
        &self.residual
    }

    pub fn peel(&mut self) -> Result<Option<StrategyDag>, MabError> {
        let g = &self.vars.graph;
        let Some(skel) = peel_strat(g, &self.residual.z) else {
            let mass = self.residual.mass();
            if mass > LEFTOVER_TOL {
                return Err(MabError::Residual { arm: self.arm, mass });
            }
            self.residual.z.iter_mut().for_each(|row| row.fill(0.0));
            return Ok(None);
        };
        let (mut eps, mut limiting) = (f64::INFINITY, 0);
        for (k, &(u, t)) in skel.nodes.iter().enumerate() {
            let e = self.residual.z[u][t] / skel.peel_prob[k];
            if e < eps {
                eps = e;
                limiting = k;
            }
        }
        let horizon = self.residual.w[0].len();
        let mut nodes = Vec::with_capacity(skel.nodes.len());
        for (k, &(u, t)) in skel.nodes.iter().enumerate() {
            let prob = eps * skel.peel_prob[k];
            let cell = &mut self.residual.z[u][t];
            *cell -= prob;
            if k == limiting {
                *cell = 0.0;
            }
            settle(cell);
            if t + 1 < horizon {
                for &(v, p) in &g.children[u] {
                    let w = &mut self.residual.w[v][t + 1];
                    *w -= prob * p;
                    settle(w);
                }
            }
            nodes.push(DagNode { state: u, time: t, prob, next: skel.next[k].clone() });
        }
        let dag = StrategyDag { arm: self.arm, peel: self.peels, root: 0, nodes };
        self.peels += 1;
        if self.peels > self.bound {
            return Err(MabError::TooManyPeels { arm: self.arm, count: self.peels, bound: self.bound });
        }
        Ok(Some(dag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mab::lp::tests::arm;
    use crate::mab::lp::{build_lp4, build_lp_mab, build_lp_mabdag, peel_invariant_rows};
    use crate::model::{ArmShape, MabInstance, StateId};

    #[test]
    fn root_half_mass() {
        let inst = MabInstance { budget: 1, exploit_budget: None, arms: vec![arm("a", &[], &[("a", 1.0)], ArmShape::Tree)] };
        let (lp, idx) = build_lp_mab(&inst).unwrap();
        let mut values = vec![0.0; lp.num_vars()];
        values[idx.arms[0].z[0][0].0] = 0.5;
        values[idx.arms[0].w[0][0].0] = 1.0;
        let mut peeler = TreePeeler::new(&idx, &values, 0);
        let f = peeler.peel().unwrap().unwrap();
        assert_eq!(f.prob[0], 0.5);
        assert_eq!(f.time[0], Some(1));
        assert!(peeler.peel().unwrap().is_none());
    }

    fn chain_instance() -> MabInstance {
        let a = arm("r", &[("r", "x", 0.5), ("r", "y", 0.5), ("x", "z", 1.0)], &[("y", 1.0), ("z", 2.0)], ArmShape::Tree);
        let b = arm("s", &[("s", "s1", 1.0)], &[("s", 0.3), ("s1", 0.9)], ArmShape::Tree);
        MabInstance { budget: 4, exploit_budget: Some(1), arms: vec![a, b] }
    }

    #[test]
    fn tree_marginals_and_residual_feasibility() {
        let inst = chain_instance();
        let (lp, idx) = build_lp_mab(&inst).unwrap();
        let sol = lp.solve().unwrap();
        for arm in 0..2 {
            let mut peeler = TreePeeler::new(&idx, &sol.values, arm);
            let mut forests = Vec::new();
            let mut values = sol.values.clone();
            while let Some(f) = peeler.peel().unwrap() {
                idx.arms[arm].write(peeler.residual(), &mut values);
                assert!(lp.max_violation_where(&values, peel_invariant_rows).unwrap() <= 1e-7);
                f.check(&idx.arms[arm].graph).unwrap();
                forests.push(f);
            }
            let g = &idx.arms[arm].graph;
            for u in 0..g.len() {
                for t in 1..=idx.budget {
                    let rebuilt: f64 = forests.iter().filter(|f| f.time[u] == Some(t)).map(|f| f.prob[u]).sum();
                    assert!((rebuilt - sol.value(idx.arms[arm].z[u][t - 1])).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn exploit_root_only() {
        let inst = MabInstance { budget: 1, exploit_budget: Some(1), arms: vec![arm("a", &[("a", "b", 1.0)], &[("a", 5.0)], ArmShape::Tree)] };
        let (lp, idx) = build_lp4(&inst).unwrap();
        let sol = lp.solve().unwrap();
        let forests = decompose_exploit(&idx, &sol, 0).unwrap();
        assert_eq!(forests.len(), 1);
        assert_eq!(forests[0].exploit(0), 1.0);
        assert_eq!(forests[0].time[1], None);
    }

    #[test]
    fn diamond_accumulates() {
        let a = arm(
            "r",
            &[("r", "a", 0.5), ("r", "b", 0.5), ("a", "c", 1.0), ("b", "c", 1.0)],
            &[("c", 1.0)],
            ArmShape::LayeredDag,
        );
        let inst = MabInstance { budget: 3, exploit_budget: None, arms: vec![a] };
        let (_, idx) = build_lp_mabdag(&inst).unwrap();
        let g = &idx.arms[0].graph;
        let id = |s: &str| g.index_of(&StateId::new(s)).unwrap();
        let mut z = vec![vec![0.0; 4]; g.len()];
        z[id("r")][1] = 1.0;
        z[id("a")][2] = 0.5;
        z[id("b")][2] = 0.5;
        z[id("c")][3] = 1.0;
        let skel = peel_strat(g, &z).unwrap();
        let c = skel.nodes.iter().position(|&n| n == (id("c"), 3)).unwrap();
        assert_eq!(skel.peel_prob[c], 1.0);
        let order: Vec<_> = skel.visit_order.iter().map(|&k| skel.nodes[k]).collect();
        assert_eq!(order, vec![(id("r"), 1), (id("a"), 2), (id("b"), 2), (id("c"), 3)]);

        let root_only = peel_strat(g, &{
            let mut z2 = vec![vec![0.0; 4]; g.len()];
            z2[id("r")][2] = 0.7;
            z2
        })
        .unwrap();
        assert_eq!(root_only.nodes, vec![(id("r"), 2)]);
        assert_eq!(root_only.peel_prob, vec![1.0]);
    }
}
