//! Pipeline selection by name and uniform access to built pipelines.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::knapsack::{
    split_early_late, FullPipeline, KnapsackError, KnapsackRunResult, NoCancelPipeline, PolyNoCancelPipeline,
    SmallPipeline,
};
use crate::lp::{LinearProgram, LpSolution};
use crate::mab::{MabDagPipeline, MabError, MabExploitPipeline, MabTreePipeline, PlayTrace};
use crate::model::{Instance, MabInstance, StockInstance};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    Nocancel,
    NocancelPoly,
    Small,
    SmallPoly,
    StockFull,
    MabTree,
    MabDag,
    MabExploit,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 8] = [
        PipelineKind::Nocancel,
        PipelineKind::NocancelPoly,
        PipelineKind::Small,
        PipelineKind::SmallPoly,
        PipelineKind::StockFull,
        PipelineKind::MabTree,
        PipelineKind::MabDag,
        PipelineKind::MabExploit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::Nocancel => "nocancel",
            PipelineKind::NocancelPoly => "nocancel-poly",
            PipelineKind::Small => "small",
            PipelineKind::SmallPoly => "small-poly",
            PipelineKind::StockFull => "stock-full",
            PipelineKind::MabTree => "mab-tree",
            PipelineKind::MabDag => "mab-dag",
            PipelineKind::MabExploit => "mab-exploit",
        }
    }

    pub fn is_knapsack(self) -> bool {
        !matches!(self, PipelineKind::MabTree | PipelineKind::MabDag | PipelineKind::MabExploit)
    }

    pub fn default_trials(self) -> usize {
        if self.is_knapsack() {
            super::sim::KNAPSACK_TRIALS
        } else {
            super::sim::MAB_TRIALS
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown pipeline {0:?}")]
pub struct UnknownPipeline(pub String);

impl FromStr for PipelineKind {
    type Err = UnknownPipeline;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownPipeline(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("pipeline {kind} needs a {expected} instance")]
    Mismatch { kind: PipelineKind, expected: &'static str },
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Knapsack(#[from] KnapsackError),
    #[error(transparent)]
    Mab(#[from] MabError),
}

/// A solved pipeline, ready to run trials.
#[derive(Debug, Clone)]
pub enum BuiltPipeline {
    Nocancel(NoCancelPipeline),
    NocancelPoly(PolyNoCancelPipeline),
    /// Runs on the early part of the instance.
    Small(SmallPipeline),
    SmallPoly(SmallPipeline),
    StockFull(FullPipeline),
    MabTree(MabTreePipeline),
    MabDag(MabDagPipeline),
    MabExploit(MabExploitPipeline),
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TrialRecord {
    Knapsack(KnapsackRunResult),
    Mab(PlayTrace),
}

impl TrialRecord {
    pub fn reward(&self) -> f64 {
        match self {
            TrialRecord::Knapsack(r) => r.reward,
            TrialRecord::Mab(t) => t.reward,
        }
    }

    /// JSON lines: a knapsack run is one line, a bandit run one line per play plus a summary.
    pub fn to_json_lines(&self) -> String {
        match self {
            TrialRecord::Knapsack(r) => serde_json::to_string(r).expect("results serialize") + "\n",
            TrialRecord::Mab(t) => t.to_json_lines(),
        }
    }
}

fn stock(kind: PipelineKind, instance: &Instance) -> Result<&StockInstance, PipelineError> {
    match instance {
        Instance::Stock(s) => Ok(s),
        Instance::Mab(_) => Err(PipelineError::Mismatch { kind, expected: "stock" }),
    }
}

fn mab(kind: PipelineKind, instance: &Instance) -> Result<&MabInstance, PipelineError> {
    match instance {
        Instance::Mab(m) => Ok(m),
        Instance::Stock(_) => Err(PipelineError::Mismatch { kind, expected: "mab" }),
    }
}

impl BuiltPipeline {
    pub fn build(kind: PipelineKind, instance: &Instance) -> Result<Self, PipelineError> {
        let violations = instance.validate();
        if !violations.is_empty() {
            return Err(PipelineError::Invalid(violations));
        }
        Ok(match kind {
            PipelineKind::Nocancel => BuiltPipeline::Nocancel(NoCancelPipeline::new(stock(kind, instance)?)?),
            PipelineKind::NocancelPoly => BuiltPipeline::NocancelPoly(PolyNoCancelPipeline::new(stock(kind, instance)?)?),
            PipelineKind::Small => BuiltPipeline::Small(SmallPipeline::new(&split_early_late(stock(kind, instance)?).0, false)?),
            PipelineKind::SmallPoly => {
                BuiltPipeline::SmallPoly(SmallPipeline::new(&split_early_late(stock(kind, instance)?).0, true)?)
            }
            PipelineKind::StockFull => BuiltPipeline::StockFull(FullPipeline::new(stock(kind, instance)?, false)?),
            PipelineKind::MabTree => BuiltPipeline::MabTree(MabTreePipeline::new(mab(kind, instance)?)?),
            PipelineKind::MabDag => BuiltPipeline::MabDag(MabDagPipeline::new(mab(kind, instance)?)?),
            PipelineKind::MabExploit => BuiltPipeline::MabExploit(MabExploitPipeline::new(mab(kind, instance)?)?),
        })
    }

    pub fn kind(&self) -> PipelineKind {
        match self {
            BuiltPipeline::Nocancel(_) => PipelineKind::Nocancel,
            BuiltPipeline::NocancelPoly(_) => PipelineKind::NocancelPoly,
            BuiltPipeline::Small(_) => PipelineKind::Small,
            BuiltPipeline::SmallPoly(_) => PipelineKind::SmallPoly,
            BuiltPipeline::StockFull(_) => PipelineKind::StockFull,
            BuiltPipeline::MabTree(_) => PipelineKind::MabTree,
            BuiltPipeline::MabDag(_) => PipelineKind::MabDag,
            BuiltPipeline::MabExploit(_) => PipelineKind::MabExploit,
        }
    }

    /// Solved LPs with a label each; the combined pipeline has one per half.
    pub fn lps(&self) -> Vec<(&'static str, &LinearProgram, &LpSolution)> {
        match self {
            BuiltPipeline::Nocancel(p) => vec![("lp", &p.lp, &p.solution)],
            BuiltPipeline::NocancelPoly(p) => vec![("lp", &p.lp, &p.solution)],
            BuiltPipeline::Small(p) | BuiltPipeline::SmallPoly(p) => vec![("lp", &p.lp, &p.solution)],
            BuiltPipeline::StockFull(p) => {
                vec![("early", &p.early.lp, &p.early.solution), ("late", &p.late.lp, &p.late.solution)]
            }
            BuiltPipeline::MabTree(p) => vec![("lp", &p.lp, &p.solution)],
            BuiltPipeline::MabDag(p) => vec![("lp", &p.lp, &p.solution)],
            BuiltPipeline::MabExploit(p) => vec![("lp", &p.lp, &p.solution)],
        }
    }

    /// LP optimum; for the combined pipeline, the average of the two halves, matching the coin.
    pub fn lp_opt(&self) -> f64 {
        match self {
            BuiltPipeline::StockFull(p) => 0.5 * (p.early.lp_opt() + p.late.lp_opt()),
            _ => self.lps()[0].2.objective,
        }
    }

    pub fn run(&self, rng: &mut SimRng) -> TrialRecord {
        match self {
            BuiltPipeline::Nocancel(p) => TrialRecord::Knapsack(p.run(rng)),
            BuiltPipeline::NocancelPoly(p) => TrialRecord::Knapsack(p.run(rng)),
            BuiltPipeline::Small(p) | BuiltPipeline::SmallPoly(p) => TrialRecord::Knapsack(p.run(rng)),
            BuiltPipeline::StockFull(p) => TrialRecord::Knapsack(p.run(rng)),
            BuiltPipeline::MabTree(p) => TrialRecord::Mab(p.run(rng)),
            BuiltPipeline::MabDag(p) => TrialRecord::Mab(p.run(rng)),
            BuiltPipeline::MabExploit(p) => TrialRecord::Mab(p.run(rng)),
        }
    }

    /// Label of the LP ratio check, naming the guaranteed fraction.
    pub fn lp_bound_label(&self) -> &'static str {
        match self.kind() {
            PipelineKind::Nocancel | PipelineKind::Small | PipelineKind::StockFull => "lp_opt/8",
            PipelineKind::NocancelPoly | PipelineKind::SmallPoly => "lp_opt/16",
            PipelineKind::MabTree | PipelineKind::MabDag => "lp_opt/48",
            PipelineKind::MabExploit => "lp_opt*11/576",
        }
    }

    /// Guaranteed fraction of the LP optimum.
    pub fn lp_bound(&self) -> f64 {
        match self.kind() {
            PipelineKind::Nocancel | PipelineKind::Small | PipelineKind::StockFull => 1.0 / 8.0,
            PipelineKind::NocancelPoly | PipelineKind::SmallPoly => 1.0 / 16.0,
            PipelineKind::MabTree | PipelineKind::MabDag => 1.0 / 48.0,
            PipelineKind::MabExploit => 11.0 / 576.0,
        }
    }
}
