use std::collections::{BTreeMap, HashSet};

use super::{Arm, ArmGraph, ArmShape, Edge, ModelError, StateId};

/// Unrolls an arm into `budget` time layers: state `(v, t)` exists when it is reachable from
/// `(root, 1)`, and `(u, t) -> (v, t + 1)` whenever `p(u, v) > 0`. Copies are named `v@t`.
pub fn layer_dag(arm: &Arm, budget: usize) -> Result<Arm, ModelError> {
    if budget == 0 {
        return Err(ModelError::ZeroBudget);
    }
    let graph = ArmGraph::new(arm);
    let copy_id = |u: usize, t: usize| StateId(format!("{}@{t}", graph.ids[u]));

    let mut states = vec![copy_id(graph.root, 1)];
    let mut origins = vec![graph.root];
    let mut edges = Vec::new();
    let mut layer = vec![graph.root];
    for t in 1..budget {
        let mut next: Vec<usize> = Vec::new();
        let mut seen = HashSet::new();
        for &u in &layer {
            for &(v, p) in &graph.children[u] {
                if seen.insert(v) {
                    next.push(v);
                }
                edges.push(Edge { from: copy_id(u, t), to: copy_id(v, t + 1), p });
            }
        }
        states.extend(next.iter().map(|&v| copy_id(v, t + 1)));
        origins.extend(&next);
        layer = next;
    }
    let rewards: BTreeMap<StateId, f64> = states
        .iter()
        .zip(&origins)
        .filter(|(_, &u)| graph.reward[u] != 0.0)
        .map(|(s, &u)| (s.clone(), graph.reward[u]))
        .collect();
    Ok(Arm { states, root: copy_id(graph.root, 1), edges, rewards, shape: ArmShape::LayeredDag })
}
