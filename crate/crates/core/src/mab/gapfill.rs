//! Closing short gaps: a component whose head plays before twice its depth is pulled forward to
//! follow its parent directly.

use std::collections::BTreeMap;

use super::forest::StrategyForest;
use crate::model::ArmGraph;

/// Advances components in place. Times are scanned from the latest down to 1; within one time,
/// heads are taken in state order. Forests are independent, so their order does not matter.
pub fn gap_fill(graph: &ArmGraph, forests: &mut [StrategyForest]) {
    for forest in forests.iter_mut() {
        fill_one(graph, forest);
    }
}

fn fill_one(graph: &ArmGraph, forest: &mut StrategyForest) {
    let Some(latest) = forest.latest_time() else { return };
    for tau in (1..=latest).rev() {
        while let Some(head) = (0..graph.len()).find(|&v| {
            forest.time[v] == Some(tau) && forest.is_head(graph, v) && tau < 2 * graph.depth_of(v)
        }) {
            let (parent, _) = graph.parent(head).expect("the root has depth 0 and is never advanced");
            let target = forest.time[parent].expect("played states have played parents") + 1;
            let shift = tau - target;
            for u in forest.component(graph, head) {
                forest.time[u] = forest.time[u].map(|t| t - shift);
            }
        }
    }
}

/// Total pull probability at each time over a collection of forests.
pub fn extent_by_time<'a>(forests: impl IntoIterator<Item = &'a StrategyForest>) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for f in forests {
        for (u, t) in f.time.iter().enumerate() {
            if let Some(t) = t {
                *out.entry(*t).or_insert(0.0) += f.pull(u);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mab::lp::tests::arm;
    use crate::mab::Action;
    use crate::model::ArmShape;

    fn chain() -> ArmGraph {
        let edges = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0), ("d", "e", 1.0)];
        ArmGraph::new(&arm("a", &edges, &[("e", 1.0)], ArmShape::Tree))
    }

    fn forest(times: &[Option<usize>]) -> StrategyForest {
        StrategyForest {
            arm: 0,
            peel: 0,
            time: times.to_vec(),
            original_time: times.to_vec(),
            prob: times.iter().map(|t| if t.is_some() { 1.0 } else { 0.0 }).collect(),
            action: vec![Action::Pull; times.len()],
        }
    }

    #[test]
    fn satisfied_forest_unchanged() {
        let g = chain();
        let mut fs = vec![forest(&[Some(1), Some(2), Some(4), Some(5), None])];
        gap_fill(&g, &mut fs);
        assert_eq!(fs[0].time, fs[0].original_time);
    }

    #[test]
    fn early_head_joins_parent_with_its_component() {
        let g = chain();
        // d has depth 3 and heads at time 5 < 6; e follows it.
        let mut fs = vec![forest(&[Some(1), Some(2), Some(3), Some(5), Some(6)])];
        gap_fill(&g, &mut fs);
        assert_eq!(fs[0].time, vec![Some(1), Some(2), Some(3), Some(4), Some(5)]);
        assert!(!fs[0].is_head(&g, 3));
        assert_eq!(fs[0].original_time[3], Some(5));
    }

    #[test]
    fn advances_cascade_downwards_in_time() {
        let g = chain();
        // Heads c at 5, d at 7 and e at 9 all sit at or after twice their depth.
        let mut keep = vec![forest(&[Some(1), Some(2), Some(5), Some(7), Some(9)])];
        gap_fill(&g, &mut keep);
        assert_eq!(keep[0].time, keep[0].original_time);
        // e heads at 7 < 8 after d at 5: joins at 6.
        let mut fs = vec![forest(&[Some(1), Some(3), Some(4), Some(5), Some(7)])];
        gap_fill(&g, &mut fs);
        assert_eq!(fs[0].time[4], Some(6));
        let extent = extent_by_time(&fs);
        assert_eq!(extent.values().copied().sum::<f64>(), 5.0);
    }
}
