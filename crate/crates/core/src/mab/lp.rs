//! Time-indexed bandit relaxations.
//!
//! Per arm and state `u`: `z[u][t]` is the probability that `u` is pulled at time `t`, `w[u][t]`
//! that the arm arrives in `u` at time `t`, and in the exploit model `x[u][t]` that `u` is
//! exploited at time `t`. Constraint names carry their family as a prefix: `arrive_`, `cum_`,
//! `slot_`, `root_` and `exploits`.

use crate::lp::{LinearProgram, LpSolution, Relation, VarId};
use crate::model::{ArmGraph, ArmShape, MabInstance};

use super::MabError;

#[derive(Debug, Clone)]
pub struct ArmVars {
    pub graph: ArmGraph,
    /// `z[u][t - 1]` for `t` in `1..=budget`.
    pub z: Vec<Vec<VarId>>,
    /// `w[u][t - 1]` for `t` in `1..=horizon`.
    pub w: Vec<Vec<VarId>>,
    /// `x[u][t - 1]` for `t` in `1..=horizon`; empty without exploits.
    pub x: Vec<Vec<VarId>>,
}

#[derive(Debug, Clone)]
pub struct MabLpIndex {
    pub budget: usize,
    /// Last arrival/exploit time: `budget`, or `budget + 1` when exploits are modelled, since an
    /// arm may be exploited after the final pull.
    pub horizon: usize,
    pub exploits: bool,
    pub arms: Vec<ArmVars>,
}

/// Dense per-arm copy of an LP point, indexed `[state][time]` with time 0 unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub z: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
}

impl Residual {
    /// Total pull and exploit mass.
    pub fn mass(&self) -> f64 {
        self.z.iter().chain(&self.x).flatten().sum()
    }
}

impl ArmVars {
    fn read(vars: &[Vec<VarId>], values: &[f64], len: usize) -> Vec<Vec<f64>> {
        vars.iter()
            .map(|row| {
                let mut dense = vec![0.0; len + 1];
                for (k, &v) in row.iter().enumerate() {
                    dense[k + 1] = values[v.0];
                }
                dense
            })
            .collect()
    }

    pub fn residual(&self, index: &MabLpIndex, values: &[f64]) -> Residual {
        Residual {
            z: Self::read(&self.z, values, index.budget),
            w: Self::read(&self.w, values, index.horizon),
            x: Self::read(&self.x, values, index.horizon),
        }
    }

    /// Writes `residual` over this arm's entries of `values`.
    pub fn write(&self, residual: &Residual, values: &mut [f64]) {
        for (vars, dense) in [(&self.z, &residual.z), (&self.w, &residual.w), (&self.x, &residual.x)] {
            for (row, vals) in vars.iter().zip(dense) {
                for (k, &v) in row.iter().enumerate() {
                    values[v.0] = vals[k + 1];
                }
            }
        }
    }
}

impl MabLpIndex {
    pub fn residuals(&self, sol: &LpSolution) -> Vec<Residual> {
        self.arms.iter().map(|a| a.residual(self, &sol.values)).collect()
    }
}

/// Keeps the families that must survive peeling: arrival, cumulative and per-slot rows.
pub fn peel_invariant_rows(name: &str) -> bool {
    name.starts_with("arrive_") || name.starts_with("cum_") || name.starts_with("slot_")
}

fn build(
    instance: &MabInstance,
    exploit_budget: Option<usize>,
) -> Result<(LinearProgram, MabLpIndex), MabError> {
    let budget = instance.budget;
    let horizon = if exploit_budget.is_some() { budget + 1 } else { budget };
    let open = |depth: Option<usize>, t: usize| depth.is_some_and(|d| d < t);
    let mut lp = LinearProgram::new();
    let mut arms = Vec::new();
    let mut slots: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); budget + 1];
    let mut exploit_terms = Vec::new();

    for (i, arm) in instance.arms.iter().enumerate() {
        let graph = ArmGraph::new(arm);
        let n = graph.len();
        let mut z = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        let mut x = Vec::new();
        for u in 0..n {
            let depth = graph.depth[u];
            let reward = graph.reward[u];
            let zu: Vec<VarId> = (1..=budget)
                .map(|t| {
                    let var = lp.add_var(format!("z_{i}_{u}_{t}"), 0.0, if open(depth, t) { 1.0 } else { 0.0 });
                    if open(depth, t) {
                        slots[t].push((var, 1.0));
                        if exploit_budget.is_none() && reward != 0.0 {
                            lp.add_objective(var, reward);
                        }
                    }
                    var
                })
                .collect();
            let wu: Vec<VarId> = (1..=horizon)
                .map(|t| {
                    let free = if u == graph.root { t == 1 } else { t > 1 && open(depth, t) };
                    lp.add_var(format!("w_{i}_{u}_{t}"), 0.0, if free { 1.0 } else { 0.0 })
                })
                .collect();
            if exploit_budget.is_some() {
                let xu: Vec<VarId> = (1..=horizon)
                    .map(|t| {
                        let var = lp.add_var(format!("x_{i}_{u}_{t}"), 0.0, if open(depth, t) { 1.0 } else { 0.0 });
                        if open(depth, t) {
                            exploit_terms.push((var, 1.0));
                            if reward != 0.0 {
                                lp.add_objective(var, reward);
                            }
                        }
                        var
                    })
                    .collect();
                x.push(xu);
            }
            z.push(zu);
            w.push(wu);
        }

        for u in 0..n {
            let depth = graph.depth[u];
            if u != graph.root {
                for t in 2..=horizon {
                    if !open(depth, t) {
                        continue;
                    }
                    let mut terms = vec![(w[u][t - 1], 1.0)];
                    terms.extend(graph.parents[u].iter().map(|&(v, p)| (z[v][t - 2], -p)));
                    lp.add_constraint(format!("arrive_{i}_{u}_{t}"), terms, Relation::Eq, 0.0);
                }
            }
            for t in 1..=horizon {
                if !open(depth, t) {
                    continue;
                }
                let mut terms: Vec<(VarId, f64)> = w[u][..t].iter().map(|&v| (v, 1.0)).collect();
                terms.extend(z[u][..t.min(budget)].iter().map(|&v| (v, -1.0)));
                if exploit_budget.is_some() {
                    terms.extend(x[u][..t].iter().map(|&v| (v, -1.0)));
                }
                lp.add_constraint(format!("cum_{i}_{u}_{t}"), terms, Relation::Ge, 0.0);
            }
        }
        lp.add_constraint(format!("root_{i}"), vec![(w[graph.root][0], 1.0)], Relation::Eq, 1.0);
        arms.push(ArmVars { graph, z, w, x });
    }

    for (t, terms) in slots.into_iter().enumerate().skip(1) {
        if !terms.is_empty() {
            lp.add_constraint(format!("slot_{t}"), terms, Relation::Le, 1.0);
        }
    }
    if let Some(k) = exploit_budget {
        lp.add_constraint("exploits", exploit_terms, Relation::Le, k as f64);
    }
    Ok((lp, MabLpIndex { budget, horizon, exploits: exploit_budget.is_some(), arms }))
}

fn validated(instance: &MabInstance) -> Result<(), MabError> {
    instance.clone().validated()?;
    Ok(())
}

/// Relaxation for tree-shaped arms.
pub fn build_lp_mab(instance: &MabInstance) -> Result<(LinearProgram, MabLpIndex), MabError> {
    validated(instance)?;
    if let Some(i) = instance.arms.iter().position(|a| a.shape != ArmShape::Tree) {
        return Err(MabError::NotTree(i));
    }
    build(instance, None)
}

/// Relaxation for layered arms; arrivals sum over every in-neighbour. Trees qualify.
pub fn build_lp_mabdag(instance: &MabInstance) -> Result<(LinearProgram, MabLpIndex), MabError> {
    validated(instance)?;
    if let Some(i) = instance.arms.iter().position(|a| a.shape == ArmShape::Graph) {
        return Err(MabError::NotLayered(i));
    }
    build(instance, None)
}

/// Pull/exploit relaxation: rewards come only from exploits, at most `K` of them.
pub fn build_lp4(instance: &MabInstance) -> Result<(LinearProgram, MabLpIndex), MabError> {
    validated(instance)?;
    let k = instance.exploit_budget.ok_or(MabError::MissingExploitBudget)?;
    if let Some(i) = instance.arms.iter().position(|a| a.shape != ArmShape::Tree) {
        return Err(MabError::NotTree(i));
    }
    build(instance, Some(k))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Arm, Edge, StateId};
    use std::collections::BTreeMap;

    pub(crate) fn arm(root: &str, edges: &[(&str, &str, f64)], rewards: &[(&str, f64)], shape: ArmShape) -> Arm {
        let mut states = vec![StateId::new(root)];
        for (a, b, _) in edges {
            for s in [a, b] {
                if !states.iter().any(|x| x.as_str() == *s) {
                    states.push(StateId::new(*s));
                }
            }
        }
        Arm {
            states,
            root: StateId::new(root),
            edges: edges.iter().map(|&(a, b, p)| Edge { from: StateId::new(a), to: StateId::new(b), p }).collect(),
            rewards: rewards.iter().map(|&(s, r)| (StateId::new(s), r)).collect::<BTreeMap<_, _>>(),
            shape,
        }
    }

    fn solve(lp: &LinearProgram) -> f64 {
        let sol = lp.solve().unwrap();
        assert!(sol.is_optimal());
        assert!(lp.max_violation(&sol.values).unwrap() <= 1e-7);
        sol.objective
    }

    #[test]
    fn single_root() {
        let inst = MabInstance { budget: 1, exploit_budget: None, arms: vec![arm("a", &[], &[("a", 1.0)], ArmShape::Tree)] };
        let (lp, _) = build_lp_mab(&inst).unwrap();
        assert!((solve(&lp) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_roots_share_one_slot() {
        let inst = MabInstance {
            budget: 1,
            exploit_budget: None,
            arms: vec![arm("a", &[], &[("a", 1.0)], ArmShape::Tree), arm("b", &[], &[("b", 1.0)], ArmShape::Tree)],
        };
        let (lp, _) = build_lp_mab(&inst).unwrap();
        assert!((solve(&lp) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn diamond_arrival_row() {
        let a = arm(
            "r",
            &[("r", "a", 0.5), ("r", "b", 0.5), ("a", "c", 1.0), ("b", "c", 1.0)],
            &[("c", 1.0)],
            ArmShape::LayeredDag,
        );
        let inst = MabInstance { budget: 3, exploit_budget: None, arms: vec![a] };
        let (lp, idx) = build_lp_mabdag(&inst).unwrap();
        let g = &idx.arms[0].graph;
        let c = g.index_of(&StateId::new("c")).unwrap();
        let row = lp.constraints.iter().find(|r| r.name == format!("arrive_0_{c}_3")).unwrap();
        let a_id = g.index_of(&StateId::new("a")).unwrap();
        let b_id = g.index_of(&StateId::new("b")).unwrap();
        let mut terms = row.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut expected = vec![(idx.arms[0].w[c][2], 1.0), (idx.arms[0].z[a_id][1], -1.0), (idx.arms[0].z[b_id][1], -1.0)];
        expected.sort_by_key(|t| t.0);
        assert_eq!(terms, expected);
        assert!((solve(&lp) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp4_examples() {
        let one = |k| MabInstance { budget: 1, exploit_budget: Some(k), arms: vec![arm("a", &[], &[("a", 5.0)], ArmShape::Tree)] };
        assert!(solve(&build_lp4(&one(0)).unwrap().0).abs() < 1e-12);
        assert!((solve(&build_lp4(&one(1)).unwrap().0) - 5.0).abs() < 1e-9);
        let missing = MabInstance { exploit_budget: None, ..one(1) };
        assert_eq!(build_lp4(&missing).unwrap_err(), MabError::MissingExploitBudget);
    }

    #[test]
    fn exploit_after_last_pull_is_allowed() {
        // Pull the root once, then exploit the child: one pull, exploit at time 2.
        let a = arm("r", &[("r", "c", 1.0)], &[("c", 3.0)], ArmShape::Tree);
        let inst = MabInstance { budget: 1, exploit_budget: Some(1), arms: vec![a] };
        assert!((solve(&build_lp4(&inst).unwrap().0) - 3.0).abs() < 1e-9);
    }
}
