#![allow(dead_code)]

pub mod blowup;

use stocpack::model::StockInstance;

/// Best no-cancel value by plain recursion over (remaining items, free space).
pub fn expectimax_nocancel(inst: &StockInstance) -> f64 {
    fn go(inst: &StockInstance, left: &[usize], room: usize) -> f64 {
        let mut best = 0.0f64;
        for (k, &i) in left.iter().enumerate() {
            let mut rest = left.to_vec();
            rest.remove(k);
            let item = &inst.items[i];
            let v: f64 = item
                .probs
                .iter()
                .filter(|(&s, &p)| s <= room && p > 0.0)
                .map(|(&s, &p)| p * (item.rewards.get(&s).copied().unwrap_or(0.0) + go(inst, &rest, room - s)))
                .sum();
            best = best.max(v);
        }
        best
    }
    let all: Vec<usize> = (0..inst.items.len()).collect();
    go(inst, &all, inst.budget)
}
