//! Sparse maximization LPs with boxed variables, a deterministic dense-tableau simplex, a
//! feasibility checker and an exporter for the CPLEX LP text format.

mod dual;
mod format;
mod simplex;

use std::collections::HashMap;

use serde::Serialize;

pub use dual::dual;

/// Pivot elements smaller than this are treated as zero.
pub const PIVOT_TOL: f64 = 1e-10;
/// Constraint and phase-one feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced costs within this band count as non-improving.
pub const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LpError {
    #[error("variable {0:?} is not declared")]
    UnknownVariable(String),
    #[error("variable {name} has bounds [{lower}, {upper}]")]
    BadBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
}

/// `maximize c·x` subject to sparse rows and per-variable bounds. Lower bounds must be finite.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub objective: Vec<(VarId, f64)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Primal values in variable order; empty unless optimal.
    pub values: Vec<f64>,
}

impl LpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values.get(var.0).copied().unwrap_or(0.0)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper });
        VarId(self.variables.len() - 1)
    }

    /// Adds `coeff` to the objective coefficient of `var`.
    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        if coeff != 0.0 {
            self.objective.push((var, coeff));
        }
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.constraints.push(Constraint { name: name.into(), terms, relation, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// Dense objective vector with duplicate terms summed.
    pub fn objective_dense(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars()];
        for &(v, a) in &self.objective {
            c[v.0] += a;
        }
        c
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Checks the declared invariants: known variables, ordered finite lower bounds, finite
    /// coefficients.
    pub fn check(&self) -> Result<(), LpError> {
        for v in &self.variables {
            if !v.lower.is_finite() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::BadBounds { name: v.name.clone(), lower: v.lower, upper: v.upper });
            }
        }
        let n = self.num_vars();
        let known = |v: VarId| if v.0 < n { Ok(()) } else { Err(LpError::UnknownVariable(format!("#{}", v.0))) };
        for &(v, a) in &self.objective {
            known(v)?;
            if !a.is_finite() {
                return Err(LpError::NonFinite("objective".into()));
            }
        }
        for c in &self.constraints {
            for &(v, a) in &c.terms {
                known(v)?;
                if !a.is_finite() {
                    return Err(LpError::NonFinite(c.name.clone()));
                }
            }
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(c.name.clone()));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.check()?;
        simplex::solve(self)
    }

    /// Largest absolute bound or constraint violation of `values` (variable order).
    pub fn max_violation(&self, values: &[f64]) -> Result<f64, LpError> {
        self.max_violation_where(values, |_| true)
    }

    /// As [`Self::max_violation`], restricted to constraints whose name passes `keep`. Bounds are
    /// always checked.
    pub fn max_violation_where(
        &self,
        values: &[f64],
        keep: impl Fn(&str) -> bool,
    ) -> Result<f64, LpError> {
        if values.len() != self.num_vars() {
            return Err(LpError::ValueCount { expected: self.num_vars(), got: values.len() });
        }
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in self.constraints.iter().filter(|c| keep(&c.name)) {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v.0]).sum();
            let gap = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        Ok(worst)
    }

    /// Violation check keyed by variable name; every declared variable must be present.
    pub fn max_violation_named(&self, values: &HashMap<String, f64>) -> Result<f64, LpError> {
        let index: HashMap<&str, usize> =
            self.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let mut dense = vec![f64::NAN; self.num_vars()];
        for (name, &x) in values {
            let i = *index.get(name.as_str()).ok_or_else(|| LpError::UnknownVariable(name.clone()))?;
            dense[i] = x;
        }
        if let Some(missing) = dense.iter().position(|x| x.is_nan()) {
            return Err(LpError::UnknownVariable(self.variables[missing].name.clone()));
        }
        self.max_violation(&dense)
    }

    /// Renders the program in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        format::write_lp(self)
    }

    /// `name -> value` map of a solution, for reports.
    pub fn named_values(&self, solution: &LpSolution) -> Vec<(String, f64)> {
        self.variables.iter().zip(&solution.values).map(|(v, &x)| (v.name.clone(), x)).collect()
    }
}
