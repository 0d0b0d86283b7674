//! End-to-end bandit pipelines: solve and decompose once, play per trial.

use rand::Rng;

use super::decompose::{decompose_dag, decompose_exploit, decompose_tree};
use super::forest::{StrategyDag, StrategyForest};
use super::gapfill::gap_fill;
use super::lp::{build_lp4, build_lp_mab, build_lp_mabdag, MabLpIndex};
use super::play::{alg_mab, alg_mab_exploit, implicit_play, PlayTrace};
use super::MabError;
use crate::lp::{LinearProgram, LpSolution, LpStatus};
use crate::model::{layer_dag, ArmGraph, ArmShape, MabInstance};

fn solve(lp: &LinearProgram) -> Result<LpSolution, MabError> {
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        other => Err(MabError::NotOptimal(other)),
    }
}

fn graphs(index: &MabLpIndex) -> Vec<ArmGraph> {
    index.arms.iter().map(|a| a.graph.clone()).collect()
}

#[derive(Debug, Clone)]
pub struct MabTreePipeline {
    pub instance: MabInstance,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    pub index: MabLpIndex,
    pub graphs: Vec<ArmGraph>,
    /// Forests as peeled.
    pub peeled: Vec<Vec<StrategyForest>>,
    /// Forests after gap filling; these are played.
    pub forests: Vec<Vec<StrategyForest>>,
}

impl MabTreePipeline {
    pub fn new(instance: &MabInstance) -> Result<Self, MabError> {
        let (lp, index) = build_lp_mab(instance)?;
        let solution = solve(&lp)?;
        let peeled = (0..index.arms.len())
            .map(|i| decompose_tree(&index, &solution, i))
            .collect::<Result<Vec<_>, _>>()?;
        let graphs = graphs(&index);
        let mut forests = peeled.clone();
        for (g, fs) in graphs.iter().zip(forests.iter_mut()) {
            gap_fill(g, fs);
        }
        Ok(Self { instance: instance.clone(), lp, solution, index, graphs, peeled, forests })
    }

    pub fn lp_opt(&self) -> f64 {
        self.solution.objective
    }

    pub fn run(&self, rng: &mut impl Rng) -> PlayTrace {
        alg_mab(&self.graphs, &self.forests, self.instance.budget, rng)
    }
}

/// Arms of the general `graph` shape are layered first; trees and layered arms are used as given.
pub fn layered_instance(instance: &MabInstance) -> Result<MabInstance, MabError> {
    let arms = instance
        .arms
        .iter()
        .map(|a| if a.shape == ArmShape::Graph { layer_dag(a, instance.budget) } else { Ok(a.clone()) })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MabInstance { arms, ..instance.clone() })
}

#[derive(Debug, Clone)]
pub struct MabDagPipeline {
    /// The layered instance actually solved.
    pub instance: MabInstance,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    pub index: MabLpIndex,
    pub graphs: Vec<ArmGraph>,
    pub dags: Vec<Vec<StrategyDag>>,
}

impl MabDagPipeline {
    pub fn new(instance: &MabInstance) -> Result<Self, MabError> {
        let instance = layered_instance(instance)?;
        let (lp, index) = build_lp_mabdag(&instance)?;
        let solution = solve(&lp)?;
        let dags = (0..index.arms.len())
            .map(|i| decompose_dag(&index, &solution, i))
            .collect::<Result<Vec<_>, _>>()?;
        let graphs = graphs(&index);
        Ok(Self { instance, lp, solution, index, graphs, dags })
    }

    pub fn lp_opt(&self) -> f64 {
        self.solution.objective
    }

    pub fn run(&self, rng: &mut impl Rng) -> PlayTrace {
        implicit_play(&self.graphs, &self.dags, self.instance.budget, rng)
    }
}

#[derive(Debug, Clone)]
pub struct MabExploitPipeline {
    pub instance: MabInstance,
    pub exploit_budget: usize,
    pub lp: LinearProgram,
    pub solution: LpSolution,
    pub index: MabLpIndex,
    pub graphs: Vec<ArmGraph>,
    pub peeled: Vec<Vec<StrategyForest>>,
    pub forests: Vec<Vec<StrategyForest>>,
}

impl MabExploitPipeline {
    pub fn new(instance: &MabInstance) -> Result<Self, MabError> {
        let (lp, index) = build_lp4(instance)?;
        let exploit_budget = instance.exploit_budget.ok_or(MabError::MissingExploitBudget)?;
        let solution = solve(&lp)?;
        let peeled = (0..index.arms.len())
            .map(|i| decompose_exploit(&index, &solution, i))
            .collect::<Result<Vec<_>, _>>()?;
        let graphs = graphs(&index);
        let mut forests = peeled.clone();
        for (g, fs) in graphs.iter().zip(forests.iter_mut()) {
            gap_fill(g, fs);
        }
        Ok(Self { instance: instance.clone(), exploit_budget, lp, solution, index, graphs, peeled, forests })
    }

    pub fn lp_opt(&self) -> f64 {
        self.solution.objective
    }

    pub fn run(&self, rng: &mut impl Rng) -> PlayTrace {
        alg_mab_exploit(&self.graphs, &self.forests, self.instance.budget, self.exploit_budget, rng)
    }
}
