//! Playing sampled strategies.
//!
//! Random draws happen in a fixed order: one uniform per arm to pick its strategy (arms in
//! index order), then one uniform per transition out of a state with children, in play order.
//! Runs ignore the budgets; only credit is cut off.

use rand::Rng;
use serde::Serialize;

use super::forest::{StrategyDag, StrategyForest};
use super::{Action, SAMPLE_DIVISOR};
use crate::model::{ArmGraph, StateId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Play {
    /// 1-based position in the trace.
    pub index: usize,
    pub arm: usize,
    pub state: StateId,
    pub action: Action,
    /// State the arm moved to; `None` after an exploit or at a leaf.
    pub next: Option<StateId>,
    pub credited: bool,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayTrace {
    /// Strategy index chosen per arm.
    pub sampled: Vec<Option<usize>>,
    pub plays: Vec<Play>,
    pub pulls: usize,
    pub exploits: usize,
    /// Credited reward.
    pub reward: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    sampled: &'a [Option<usize>],
    pulls: usize,
    exploits: usize,
    reward: f64,
}

impl PlayTrace {
    fn new(sampled: Vec<Option<usize>>) -> Self {
        Self { sampled, plays: Vec::new(), pulls: 0, exploits: 0, reward: 0.0 }
    }

    /// One JSON object per play followed by a summary line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for play in &self.plays {
            out.push_str(&serde_json::to_string(play).expect("plays serialize"));
            out.push('\n');
        }
        let summary = Summary { sampled: &self.sampled, pulls: self.pulls, exploits: self.exploits, reward: self.reward };
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    fn record(&mut self, arm: usize, state: &StateId, action: Action, next: Option<&StateId>, credit: Option<f64>) {
        if let Some(r) = credit {
            self.reward += r;
        }
        self.plays.push(Play {
            index: self.plays.len() + 1,
            arm,
            state: state.clone(),
            action,
            next: next.cloned(),
            credited: credit.is_some(),
            reward: credit.unwrap_or(0.0),
        });
    }
}

fn sample(root_probs: impl Iterator<Item = Vec<f64>>, rng: &mut impl Rng) -> Vec<Option<usize>> {
    root_probs
        .map(|probs| {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            probs.iter().position(|p| {
                cum += p / SAMPLE_DIVISOR;
                u < cum
            })
        })
        .collect()
}

/// Position of the realized child, or `None` at a leaf (no draw then).
fn transition(children: &[(usize, f64)], rng: &mut impl Rng) -> Option<usize> {
    if children.is_empty() {
        return None;
    }
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (k, &(_, p)) in children.iter().enumerate() {
        cum += p;
        if u < cum {
            return Some(k);
        }
    }
    Some(children.len() - 1)
}

fn play_forests(
    graphs: &[ArmGraph],
    forests: &[Vec<StrategyForest>],
    budget: usize,
    exploit_budget: Option<usize>,
    rng: &mut impl Rng,
) -> PlayTrace {
    let sampled = sample(graphs.iter().zip(forests).map(|(g, fs)| fs.iter().map(|f| f.root_prob(g)).collect()), rng);
    let mut trace = PlayTrace::new(sampled);
    let mut curr: Vec<Option<usize>> = trace.sampled.iter().zip(graphs).map(|(s, g)| s.map(|_| g.root)).collect();
    let chosen = trace.sampled.clone();
    let forest = |i: usize| &forests[i][chosen[i].expect("active arms have a strategy")];
    loop {
        let pick = (0..graphs.len())
            .filter_map(|i| {
                let u = curr[i]?;
                Some((forest(i).time[u]?, i))
            })
            .min();
        let Some((mut tau, arm)) = pick else { break };
        let (g, f) = (&graphs[arm], forest(arm));
        while let Some(u) = curr[arm] {
            if f.time[u] != Some(tau) {
                break;
            }
            if f.action[u] == Action::Exploit {
                trace.exploits += 1;
                let k = exploit_budget.unwrap_or(usize::MAX);
                let ok = trace.pulls <= budget && trace.exploits <= k;
                trace.record(arm, &g.ids[u], Action::Exploit, None, ok.then_some(g.reward[u]));
                curr[arm] = None;
                break;
            }
            trace.pulls += 1;
            let next = transition(&g.children[u], rng).map(|k| g.children[u][k].0);
            let credit = (exploit_budget.is_none() && trace.pulls <= budget).then_some(g.reward[u]);
            trace.record(arm, &g.ids[u], Action::Pull, next.map(|v| &g.ids[v]), credit);
            curr[arm] = next;
            tau += 1;
        }
    }
    trace
}

/// Samples a forest per arm and plays connected components earliest first; the first `budget`
/// plays earn their state's reward.
pub fn alg_mab(graphs: &[ArmGraph], forests: &[Vec<StrategyForest>], budget: usize, rng: &mut impl Rng) -> PlayTrace {
    play_forests(graphs, forests, budget, None, rng)
}

/// As [`alg_mab`] on pull/exploit forests. Pulls earn nothing; an exploit earns its state's
/// reward when at most `budget` pulls and `exploit_budget` exploits have happened, and retires
/// the arm.
pub fn alg_mab_exploit(
    graphs: &[ArmGraph],
    forests: &[Vec<StrategyForest>],
    budget: usize,
    exploit_budget: usize,
    rng: &mut impl Rng,
) -> PlayTrace {
    play_forests(graphs, forests, budget, Some(exploit_budget), rng)
}

/// Plays strategy DAGs, filling gaps on the fly: a burst continues while the next node is due
/// at the running time or sits before twice its depth.
pub fn implicit_play(graphs: &[ArmGraph], dags: &[Vec<StrategyDag>], budget: usize, rng: &mut impl Rng) -> PlayTrace {
    let sampled = sample(dags.iter().map(|ds| ds.iter().map(StrategyDag::root_prob).collect()), rng);
    let mut trace = PlayTrace::new(sampled);
    let mut curr: Vec<Option<usize>> = trace.sampled.iter().enumerate().map(|(i, s)| s.map(|j| dags[i][j].root)).collect();
    let chosen = trace.sampled.clone();
    let dag = |i: usize| &dags[i][chosen[i].expect("active arms have a strategy")];
    loop {
        let pick = (0..graphs.len())
            .filter_map(|i| {
                let k = curr[i]?;
                Some((dag(i).nodes[k].time, i))
            })
            .min();
        let Some((mut tau, arm)) = pick else { break };
        let (g, d) = (&graphs[arm], dag(arm));
        while let Some(k) = curr[arm] {
            let node = &d.nodes[k];
            if node.time != tau && 2 * g.depth_of(node.state) <= node.time {
                break;
            }
            trace.pulls += 1;
            let u = node.state;
            let pos = transition(&g.children[u], rng);
            let credit = (trace.pulls <= budget).then_some(g.reward[u]);
            trace.record(arm, &g.ids[u], Action::Pull, pos.map(|p| &g.ids[g.children[u][p].0]), credit);
            curr[arm] = pos.and_then(|p| node.next[p]);
            tau += 1;
        }
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mab::lp::tests::arm;
    use crate::mab::forest::DagNode;
    use crate::model::ArmShape;
    use crate::rng::seeded;

    fn single(reward: f64) -> (ArmGraph, StrategyForest) {
        let g = ArmGraph::new(&arm("a", &[], &[("a", reward)], ArmShape::Tree));
        let f = StrategyForest { arm: 0, peel: 0, time: vec![Some(1)], original_time: vec![Some(1)], prob: vec![1.0], action: vec![Action::Pull] };
        (g, f)
    }

    #[test]
    fn sampling_rate_is_one_in_twenty_four() {
        let (g, f) = single(1.0);
        let mut rng = seeded(4);
        let n = 240_000;
        let total: f64 = (0..n).map(|_| alg_mab(std::slice::from_ref(&g), &[vec![f.clone()]], 1, &mut rng).reward).sum();
        let mean = total / n as f64;
        let sd = (mean * (1.0 - mean) / n as f64).sqrt();
        assert!((mean - 1.0 / 24.0).abs() < 4.0 * sd, "{mean}");
    }

    #[test]
    fn exploit_budget_zero_never_credits() {
        let (g, mut f) = single(5.0);
        f.action[0] = Action::Exploit;
        let mut rng = seeded(1);
        for _ in 0..2000 {
            let t = alg_mab_exploit(std::slice::from_ref(&g), &[vec![f.clone()]], 1, 0, &mut rng);
            assert_eq!(t.reward, 0.0);
            assert!(t.plays.iter().all(|p| p.action == Action::Exploit && p.next.is_none()));
        }
    }

    #[test]
    fn credit_stops_after_budget() {
        let g = ArmGraph::new(&arm("a", &[("a", "b", 1.0), ("b", "c", 1.0)], &[("a", 1.0), ("b", 1.0), ("c", 1.0)], ArmShape::Tree));
        let f = StrategyForest {
            arm: 0,
            peel: 0,
            time: vec![Some(1), Some(2), Some(3)],
            original_time: vec![Some(1), Some(2), Some(3)],
            prob: vec![24.0, 24.0, 24.0],
            action: vec![Action::Pull; 3],
        };
        let t = alg_mab(std::slice::from_ref(&g), &[vec![f]], 2, &mut seeded(0));
        assert_eq!(t.plays.len(), 3);
        assert_eq!(t.plays.iter().map(|p| p.credited).collect::<Vec<_>>(), vec![true, true, false]);
        assert_eq!(t.reward, 2.0);
    }

    #[test]
    fn implicit_advance_trigger() {
        // Chain at depths 0..=3; node at depth 3 sits at time 5 < 6 and joins the burst.
        let edges = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0)];
        let g = ArmGraph::new(&arm("a", &edges, &[("d", 1.0)], ArmShape::Tree));
        let node = |state, time, next| DagNode { state, time, prob: 24.0, next };
        let dag = StrategyDag {
            arm: 0,
            peel: 0,
            root: 0,
            nodes: vec![node(0, 1, vec![Some(1)]), node(1, 2, vec![Some(2)]), node(2, 3, vec![Some(3)]), node(3, 5, vec![])],
        };
        let other = ArmGraph::new(&arm("x", &[], &[], ArmShape::Tree));
        let odag = StrategyDag { arm: 1, peel: 0, root: 0, nodes: vec![node(0, 4, vec![])] };
        let t = implicit_play(&[g, other], &[vec![dag], vec![odag]], 10, &mut seeded(0));
        let arms: Vec<usize> = t.plays.iter().map(|p| p.arm).collect();
        assert_eq!(arms, vec![0, 0, 0, 0, 1]);
    }
}
