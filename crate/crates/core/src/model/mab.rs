use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, PROB_TOL};

/// Opaque state identifier, unique across all arms of an instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmShape {
    Tree,
    LayeredDag,
    /// Arbitrary transition graph; must be layered before any pipeline can use it.
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: StateId,
    pub to: StateId,
    pub p: f64,
}

/// A single arm: a rooted Markov chain with a reward for playing each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub states: Vec<StateId>,
    pub root: StateId,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub rewards: BTreeMap<StateId, f64>,
    pub shape: ArmShape,
}

impl Arm {
    pub fn reward(&self, state: &StateId) -> f64 {
        self.rewards.get(state).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MabInstance {
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploit_budget: Option<usize>,
    pub arms: Vec<Arm>,
}

impl MabInstance {
    pub fn validated(self) -> Result<Self, ModelError> {
        let violations = validate_mab(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::InvalidMab(violations))
        }
    }

    pub fn graphs(&self) -> Vec<ArmGraph> {
        self.arms.iter().map(ArmGraph::new).collect()
    }

    pub fn total_states(&self) -> usize {
        self.arms.iter().map(|a| a.states.len()).sum()
    }
}

/// Index-based view of an arm used by every algorithm. Only edges with positive probability
/// become transitions; children keep the order of the edge list.
#[derive(Debug, Clone)]
pub struct ArmGraph {
    pub ids: Vec<StateId>,
    pub root: usize,
    pub children: Vec<Vec<(usize, f64)>>,
    pub parents: Vec<Vec<(usize, f64)>>,
    pub reward: Vec<f64>,
    /// Shortest distance from the root, `None` when unreachable.
    pub depth: Vec<Option<usize>>,
    index: HashMap<StateId, usize>,
}

impl ArmGraph {
    /// Builds the view. Edges naming unknown states are skipped; run [`validate_mab`] first.
    pub fn new(arm: &Arm) -> Self {
        let ids = arm.states.clone();
        let index: HashMap<StateId, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let n = ids.len();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for e in &arm.edges {
            if let (Some(&u), Some(&v)) = (index.get(&e.from), index.get(&e.to)) {
                if e.p > 0.0 {
                    children[u].push((v, e.p));
                    parents[v].push((u, e.p));
                }
            }
        }
        let reward = ids.iter().map(|s| arm.reward(s)).collect();
        let root = index.get(&arm.root).copied().unwrap_or(0);
        let mut depth = vec![None; n];
        if n > 0 {
            depth[root] = Some(0);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let d = depth[u].unwrap_or(0);
                for &(v, _) in &children[u] {
                    if depth[v].is_none() {
                        depth[v] = Some(d + 1);
                        queue.push_back(v);
                    }
                }
            }
        }
        Self { ids, root, children, parents, reward, depth, index }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &StateId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Unique parent in a tree arm.
    pub fn parent(&self, u: usize) -> Option<(usize, f64)> {
        self.parents[u].first().copied()
    }

    pub fn depth_of(&self, u: usize) -> usize {
        self.depth[u].unwrap_or(usize::MAX)
    }

    pub fn is_leaf(&self, u: usize) -> bool {
        self.children[u].is_empty()
    }

    /// Product of edge probabilities along the root path of a tree arm.
    pub fn path_prob(&self, u: usize) -> f64 {
        let mut prob = 1.0;
        let mut cur = u;
        while let Some((p, edge)) = self.parent(cur) {
            prob *= edge;
            cur = p;
        }
        prob
    }

    /// States in breadth-first order from the root (reachable states only).
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).filter(|&u| self.depth[u].is_some()).collect();
        order.sort_by_key(|&u| (self.depth[u], u));
        order
    }
}

/// Lists every invariant violation of a bandit instance; empty means valid.
pub fn validate_mab(instance: &MabInstance) -> Vec<String> {
    let mut out = Vec::new();
    if instance.budget == 0 {
        out.push("budget must be positive".to_string());
    }
    let mut owner: HashMap<&StateId, usize> = HashMap::new();
    for (a, arm) in instance.arms.iter().enumerate() {
        validate_arm(a, arm, &mut out);
        for s in arm.states.iter().collect::<HashSet<_>>() {
            if let Some(&prev) = owner.get(s) {
                out.push(format!("arms {prev} and {a}: state {s} is shared"));
            } else {
                owner.insert(s, a);
            }
        }
    }
    out
}

fn validate_arm(a: usize, arm: &Arm, out: &mut Vec<String>) {
    let mut known = HashSet::new();
    for s in &arm.states {
        if !known.insert(s) {
            out.push(format!("arm {a}: state {s} listed twice"));
        }
    }
    if !known.contains(&arm.root) {
        out.push(format!("arm {a}: root {} is not a state", arm.root));
        return;
    }
    let mut out_mass: HashMap<&StateId, f64> = HashMap::new();
    let mut in_count: HashMap<&StateId, usize> = HashMap::new();
    let mut seen_edges = HashSet::new();
    let mut edges_ok = true;
    for e in &arm.edges {
        for end in [&e.from, &e.to] {
            if !known.contains(end) {
                out.push(format!("arm {a}: edge endpoint {end} is not a state"));
                edges_ok = false;
            }
        }
        if !(e.p.is_finite() && (0.0..=1.0).contains(&e.p)) {
            out.push(format!("arm {a}: edge {}->{} probability {} outside [0,1]", e.from, e.to, e.p));
        }
        if !seen_edges.insert((&e.from, &e.to)) {
            out.push(format!("arm {a}: duplicate edge {}->{}", e.from, e.to));
        }
        *out_mass.entry(&e.from).or_default() += e.p;
        *in_count.entry(&e.to).or_default() += 1;
    }
    for s in &arm.states {
        if let Some(&mass) = out_mass.get(s) {
            if (mass - 1.0).abs() > PROB_TOL {
                out.push(format!("arm {a}: state {s} out-probability {mass} ≠ 1"));
            }
        }
    }
    for (s, &r) in &arm.rewards {
        if !known.contains(s) {
            out.push(format!("arm {a}: reward for unknown state {s}"));
        }
        if !r.is_finite() || r < 0.0 {
            out.push(format!("arm {a}: reward {r} of state {s} is not finite and non-negative"));
        }
    }
    if !edges_ok {
        return;
    }
    let graph = ArmGraph::new(arm);
    match arm.shape {
        ArmShape::Graph => {}
        ArmShape::Tree => {
            if in_count.get(&arm.root).copied().unwrap_or(0) > 0 {
                out.push(format!("arm {a}: tree root {} has an incoming edge", arm.root));
            }
            for s in &arm.states {
                if *s != arm.root && in_count.get(s).copied().unwrap_or(0) != 1 {
                    out.push(format!("arm {a}: tree state {s} does not have exactly one parent"));
                }
            }
            check_reachable(a, arm, &graph, out);
        }
        ArmShape::LayeredDag => {
            check_reachable(a, arm, &graph, out);
            for e in &arm.edges {
                let (u, v) = (graph.index_of(&e.from), graph.index_of(&e.to));
                if let (Some(u), Some(v)) = (u, v) {
                    if let (Some(du), Some(dv)) = (graph.depth[u], graph.depth[v]) {
                        if dv != du + 1 {
                            out.push(format!(
                                "arm {a}: edge {}->{} does not go to the next layer",
                                e.from, e.to
                            ));
                        }
                    }
                }
            }
        }
    }
}

fn check_reachable(a: usize, arm: &Arm, graph: &ArmGraph, out: &mut Vec<String>) {
    // Zero-probability edges still count for shape, so reachability uses the raw edge list.
    let mut reach = vec![false; graph.len()];
    reach[graph.root] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for e in &arm.edges {
            if let (Some(u), Some(v)) = (graph.index_of(&e.from), graph.index_of(&e.to)) {
                if reach[u] && !reach[v] {
                    reach[v] = true;
                    changed = true;
                }
            }
        }
    }
    for (u, ok) in reach.iter().enumerate() {
        if !ok {
            out.push(format!("arm {a}: state {} unreachable from root", graph.ids[u]));
        }
    }
}
