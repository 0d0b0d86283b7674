//! Materializes the tree of root paths of a layered arm and replays strategy DAGs as explicit
//! strategy forests on it.

use std::collections::HashMap;

use stocpack::mab::{alg_mab, gap_fill, implicit_play, Action, MabDagPipeline, PlayTrace, StrategyDag, StrategyForest};
use stocpack::model::{Arm, ArmGraph, ArmShape, Edge, StateId};
use stocpack::rng::seeded;

/// Path tree of one layered arm plus the layered state behind every tree node.
pub struct PathTree {
    pub graph: ArmGraph,
    pub origin: Vec<usize>,
}

/// Node ids are `state#p0.p1...` with child positions along the path. Children keep the
/// layered child order so transitions consume the same draws.
pub fn path_tree(layered: &ArmGraph, limit: usize) -> Option<PathTree> {
    let mut states = Vec::new();
    let mut edges = Vec::new();
    let mut rewards = std::collections::BTreeMap::new();
    let mut stack = vec![(layered.root, String::new())];
    while let Some((u, path)) = stack.pop() {
        if states.len() >= limit {
            return None;
        }
        let id = StateId(format!("{}#{path}", layered.ids[u]));
        if layered.reward[u] != 0.0 {
            rewards.insert(id.clone(), layered.reward[u]);
        }
        for (pos, &(v, _)) in layered.children[u].iter().enumerate().rev() {
            let child = if path.is_empty() { pos.to_string() } else { format!("{path}.{pos}") };
            stack.push((v, child));
        }
        states.push(id);
    }
    // Edges in child order.
    for id in &states {
        let (name, path) = id.0.split_once('#').expect("path ids");
        let u = layered.index_of(&StateId(name.to_string())).expect("layered state");
        for (pos, &(v, p)) in layered.children[u].iter().enumerate() {
            let child = if path.is_empty() { pos.to_string() } else { format!("{path}.{pos}") };
            edges.push(Edge { from: id.clone(), to: StateId(format!("{}#{child}", layered.ids[v])), p });
        }
    }
    let root = states[0].clone();
    let arm = Arm { states, root, edges, rewards, shape: ArmShape::Tree };
    let graph = ArmGraph::new(&arm);
    let origin = graph
        .ids
        .iter()
        .map(|id| layered.index_of(&StateId(id.0.split_once('#').expect("path ids").0.to_string())).expect("layered state"))
        .collect();
    Some(PathTree { graph, origin })
}

/// The forest that plays the tree node of every DAG path at that DAG node's time.
pub fn unfold(tree: &PathTree, dag: &StrategyDag) -> StrategyForest {
    let g = &tree.graph;
    let mut time = vec![None; g.len()];
    let mut prob = vec![0.0; g.len()];
    time[g.root] = Some(dag.nodes[dag.root].time);
    prob[g.root] = dag.root_prob();
    let mut stack = vec![(g.root, dag.root)];
    while let Some((u, k)) = stack.pop() {
        for (pos, &(c, p)) in g.children[u].iter().enumerate() {
            if let Some(k2) = dag.nodes[k].next[pos] {
                time[c] = Some(dag.nodes[k2].time);
                prob[c] = prob[u] * p;
                stack.push((c, k2));
            }
        }
    }
    StrategyForest { arm: dag.arm, peel: dag.peel, original_time: time.clone(), time, prob, action: vec![Action::Pull; g.len()] }
}

/// Explicit counterpart of a DAG pipeline: path trees and gap-filled forests per arm.
pub struct Explicit {
    pub trees: Vec<PathTree>,
    pub graphs: Vec<ArmGraph>,
    pub forests: Vec<Vec<StrategyForest>>,
}

impl Explicit {
    pub fn new(p: &MabDagPipeline, limit: usize) -> Option<Self> {
        let mut trees = Vec::new();
        let mut forests = Vec::new();
        for (g, dags) in p.graphs.iter().zip(&p.dags) {
            let tree = path_tree(g, limit)?;
            let mut fs: Vec<StrategyForest> = dags.iter().map(|d| unfold(&tree, d)).collect();
            for f in &fs {
                f.check(&tree.graph).ok()?;
            }
            gap_fill(&tree.graph, &mut fs);
            forests.push(fs);
            trees.push(tree);
        }
        let graphs = trees.iter().map(|t| t.graph.clone()).collect();
        Some(Self { trees, graphs, forests })
    }

    pub fn size(&self) -> usize {
        self.graphs.iter().map(ArmGraph::len).sum()
    }

    /// Plays the forests and renames tree nodes back to layered states.
    pub fn play(&self, layered: &[ArmGraph], budget: usize, seed: u64) -> PlayTrace {
        let mut trace = alg_mab(&self.graphs, &self.forests, budget, &mut seeded(seed));
        let names: Vec<HashMap<&StateId, &StateId>> = self
            .trees
            .iter()
            .zip(layered)
            .map(|(t, g)| t.graph.ids.iter().zip(&t.origin).map(|(id, &u)| (id, &g.ids[u])).collect())
            .collect();
        for play in &mut trace.plays {
            let map = &names[play.arm];
            play.state = map[&play.state].clone();
            play.next = play.next.as_ref().map(|n| map[n].clone());
        }
        trace
    }
}

/// JSON-lines traces of the implicit and explicit plays under one seed.
pub fn traces(p: &MabDagPipeline, explicit: &Explicit, seed: u64) -> (String, String) {
    let implicit = implicit_play(&p.graphs, &p.dags, p.instance.budget, &mut seeded(seed));
    let explicit = explicit.play(&p.graphs, p.instance.budget, seed);
    (implicit.to_json_lines(), explicit.to_json_lines())
}
