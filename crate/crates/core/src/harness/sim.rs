//! Seeded Monte Carlo trials and one-sided bound checks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{seeded, trial_seed, SimRng};

/// Checks pass when `mean + SIGMA_SLACK * stderr` reaches the bound.
pub const SIGMA_SLACK: f64 = 3.0;
/// Absolute slack for float noise in bound checks.
pub const BOUND_EPS: f64 = 1e-12;
pub const KNAPSACK_TRIALS: usize = 100_000;
pub const MAB_TRIALS: usize = 200_000;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        }
    }
}

/// `mean >= bound * reference`, evaluated with the three-sigma slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    pub bound: f64,
    pub reference: f64,
    /// `mean / reference`, or 0 when the reference is 0.
    pub ratio: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: f64,
    pub comparisons: Vec<Comparison>,
    pub per_state_frequency: Option<BTreeMap<String, f64>>,
}

impl SimReport {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().copied().collect::<KahanSum>().total() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).collect::<KahanSum>().total() / (n - 1) as f64
        } else {
            0.0
        };
        let stderr = (var / n as f64).sqrt();
        Self { trials: n, seed, mean, stderr, ci95: 1.96 * stderr, comparisons: Vec::new(), per_state_frequency: None }
    }

    /// Upper end of the one-sided acceptance window.
    pub fn optimistic_mean(&self) -> f64 {
        self.mean + SIGMA_SLACK * self.stderr + BOUND_EPS
    }

    pub fn compare(&mut self, label: impl Into<String>, bound: f64, reference: f64) -> &Comparison {
        let ratio = if reference != 0.0 { self.mean / reference } else { 0.0 };
        let verdict = Verdict::from_bool(self.optimistic_mean() >= bound * reference);
        self.comparisons.push(Comparison { label: label.into(), bound, reference, ratio, verdict });
        self.comparisons.last().expect("just pushed")
    }

    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.verdict != Verdict::Fail)
    }
}

/// Runs `trial` once per index with a generator seeded by [`trial_seed`]`(seed, index)`.
/// Results are collected by index and summed in order, so the report does not depend on the
/// thread count.
pub fn simulate<F>(trials: usize, seed: u64, trial: F) -> SimReport
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    let samples = sample(trials, seed, trial);
    SimReport::from_samples(&samples, seed)
}

/// Per-trial outputs in index order.
pub fn sample<T, F>(trials: usize, seed: u64, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    assert!(trials >= 1, "at least one trial");
    (0..trials as u64).into_par_iter().map(|i| trial(&mut seeded(trial_seed(seed, i)))).collect()
}
