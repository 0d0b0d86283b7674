use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModelError, PROB_TOL};

/// One (size, probability, reward) row of an item's joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub size: usize,
    pub prob: f64,
    #[serde(default)]
    pub reward: f64,
}

/// Joint size/reward distribution of a single item. Rewards are tied to the realized size.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Outcome>", into = "Vec<Outcome>")]
pub struct ItemDist {
    pub probs: BTreeMap<usize, f64>,
    pub rewards: BTreeMap<usize, f64>,
}

impl ItemDist {
    /// Builds a distribution from `(size, prob, reward)` triples. Later duplicates overwrite.
    pub fn from_triples(rows: impl IntoIterator<Item = (usize, f64, f64)>) -> Self {
        let mut dist = Self::default();
        for (size, prob, reward) in rows {
            dist.probs.insert(size, prob);
            dist.rewards.insert(size, reward);
        }
        dist
    }

    pub fn prob(&self, size: usize) -> f64 {
        self.probs.get(&size).copied().unwrap_or(0.0)
    }

    pub fn reward(&self, size: usize) -> f64 {
        self.rewards.get(&size).copied().unwrap_or(0.0)
    }

    /// Sizes with positive probability, ascending.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().filter(|(_, &p)| p > 0.0).map(|(&s, &p)| (s, p))
    }

    /// `P(S >= size)`.
    pub fn tail(&self, size: usize) -> f64 {
        self.probs.range(size..).map(|(_, &p)| p).sum()
    }

    /// Probability of completing at exactly `size` given the item reached `size`; zero when no
    /// mass remains.
    pub fn hazard(&self, size: usize) -> f64 {
        let tail = self.tail(size);
        if tail <= 0.0 {
            0.0
        } else {
            (self.prob(size) / tail).min(1.0)
        }
    }

    pub fn max_size(&self) -> usize {
        self.support().map(|(s, _)| s).max().unwrap_or(0)
    }
}

impl TryFrom<Vec<Outcome>> for ItemDist {
    type Error = ModelError;

    fn try_from(rows: Vec<Outcome>) -> Result<Self, Self::Error> {
        let mut dist = ItemDist::default();
        for row in rows {
            if dist.probs.insert(row.size, row.prob).is_some() {
                return Err(ModelError::DuplicateSize(row.size));
            }
            dist.rewards.insert(row.size, row.reward);
        }
        Ok(dist)
    }
}

impl From<ItemDist> for Vec<Outcome> {
    fn from(dist: ItemDist) -> Self {
        dist.probs
            .iter()
            .map(|(&size, &prob)| Outcome { size, prob, reward: dist.reward(size) })
            .collect()
    }
}

/// Correlated stochastic knapsack: budget `B` and independent items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockInstance {
    pub budget: usize,
    pub items: Vec<ItemDist>,
}

impl StockInstance {
    pub fn new(budget: usize, items: Vec<ItemDist>) -> Self {
        Self { budget, items }
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        let violations = validate_stock(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::InvalidStock(violations))
        }
    }

    /// Largest size carrying positive reward, across all items.
    pub fn max_rewarded_size(&self) -> usize {
        self.items
            .iter()
            .flat_map(|item| item.rewards.iter().filter(|(s, &r)| r > 0.0 && item.prob(**s) > 0.0))
            .map(|(&s, _)| s)
            .max()
            .unwrap_or(0)
    }
}

/// Lists every invariant violation of a knapsack instance; empty means valid.
pub fn validate_stock(instance: &StockInstance) -> Vec<String> {
    let mut out = Vec::new();
    if instance.budget == 0 {
        out.push("budget must be positive".to_string());
    }
    for (i, item) in instance.items.iter().enumerate() {
        let mut mass = 0.0;
        for (&size, &p) in &item.probs {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("item {i}: probability {p} at size {size} outside [0,1]"));
            }
            if size == 0 && p > 0.0 {
                out.push(format!("item {i}: size 0 has positive mass"));
            }
            if size > instance.budget && p > 0.0 {
                out.push(format!("item {i}: size {size} exceeds budget {}", instance.budget));
            }
            mass += p;
        }
        if (mass - 1.0).abs() > PROB_TOL {
            out.push(format!("item {i}: probability mass {mass} ≠ 1"));
        }
        for (&size, &r) in &item.rewards {
            if !item.probs.contains_key(&size) {
                out.push(format!("item {i}: reward at size {size} without probability"));
            }
            if !r.is_finite() || r < 0.0 {
                out.push(format!("item {i}: reward {r} at size {size} is not finite and non-negative"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(rows: &[(usize, f64, f64)]) -> ItemDist {
        ItemDist::from_triples(rows.iter().copied())
    }

    #[test]
    fn valid_single_item() {
        let inst = StockInstance::new(1, vec![item(&[(1, 1.0, 5.0)])]);
        assert!(validate_stock(&inst).is_empty());
    }

    #[test]
    fn mass_violation_is_reported_once() {
        let inst = StockInstance::new(2, vec![item(&[(1, 0.6, 0.0), (2, 0.6, 0.0)])]);
        assert_eq!(validate_stock(&inst), vec!["item 0: probability mass 1.2 ≠ 1".to_string()]);
    }

    #[test]
    fn zero_size_is_reported() {
        let inst = StockInstance::new(2, vec![item(&[(0, 1.0, 0.0)])]);
        assert_eq!(validate_stock(&inst), vec!["item 0: size 0 has positive mass".to_string()]);
    }

    #[test]
    fn oversized_and_negative_reward() {
        let inst = StockInstance::new(2, vec![item(&[(1, 0.5, -1.0), (3, 0.5, 0.0)])]);
        let v = validate_stock(&inst);
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn hazard_and_tail() {
        let it = item(&[(1, 0.5, 0.0), (2, 0.25, 0.0), (4, 0.25, 0.0)]);
        assert_eq!(it.tail(2), 0.5);
        assert_eq!(it.hazard(2), 0.5);
        assert_eq!(it.hazard(3), 0.0);
        assert_eq!(it.hazard(4), 1.0);
        assert_eq!(it.hazard(5), 0.0);
    }

    #[test]
    fn json_round_trip_and_duplicates() {
        let it = item(&[(1, 0.75, 0.0), (4, 0.25, 1.0)]);
        let text = serde_json::to_string(&it).unwrap();
        assert_eq!(
            text,
            r#"[{"size":1,"prob":0.75,"reward":0.0},{"size":4,"prob":0.25,"reward":1.0}]"#
        );
        let back: ItemDist = serde_json::from_str(&text).unwrap();
        assert_eq!(back, it);
        let dup = r#"[{"size":1,"prob":0.5},{"size":1,"prob":0.5}]"#;
        assert!(serde_json::from_str::<ItemDist>(dup).is_err());
    }
}
