//! Two-phase bounded-variable primal simplex on a dense tableau.
//!
//! Variables are shifted so every lower bound is zero; finite upper bounds are handled by the
//! bound-flipping ratio test instead of extra rows. Fixed variables are folded into the right-hand
//! side. Entering and leaving choices follow Bland's smallest-index rule, which rules out cycling
//! and makes the result a pure function of the input.

use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation, COST_TOL, FEAS_TOL, PIVOT_TOL};

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau {
    cols: usize,
    /// Row-major `rows x cols` coefficients of the current basis representation.
    a: Vec<f64>,
    /// Values of the basic variables, one per row.
    beta: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, r: usize, j: usize) -> f64 {
        self.a[r * self.cols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for r in 0..self.rows() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.cols..(r + 1) * self.cols];
                for (dj, &arj) in d.iter_mut().zip(row) {
                    *dj -= cb * arj;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let cols = self.cols;
        let piv = self.at(r, j);
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for x in prow.iter_mut() {
            *x /= piv;
        }
        prow[j] = 1.0;
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (x, &p) in d.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.basic_row[leaving] = None;
        self.basic_row[j] = Some(r);
        self.basis[r] = j;
    }

    /// Maximizes `cost` over columns admitted by `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<Phase, LpError> {
        let mut d = self.reduced_costs(cost);
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            let entering = (0..self.cols).find(|&j| {
                self.basic_row[j].is_none()
                    && self.upper[j] > 0.0
                    && allowed(j)
                    && ((!self.at_upper[j] && d[j] > COST_TOL) || (self.at_upper[j] && d[j] < -COST_TOL))
            });
            let Some(j) = entering else {
                return Ok(Phase::Optimal);
            };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            // Ratio test; `None` as the leaving row means the entering variable flips bounds.
            let mut best = self.upper[j];
            let mut best_key = j;
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..self.rows() {
                let da = dir * self.at(r, j);
                let bv = self.basis[r];
                let (theta, to_upper) = if da > PIVOT_TOL {
                    (self.beta[r].max(0.0) / da, false)
                } else if da < -PIVOT_TOL && self.upper[bv].is_finite() {
                    ((self.upper[bv] - self.beta[r]).max(0.0) / -da, true)
                } else {
                    continue;
                };
                if theta < best - TIE_TOL || (theta <= best + TIE_TOL && bv < best_key) {
                    best = theta.min(best);
                    best_key = bv;
                    leave = Some((r, to_upper));
                }
            }
            if best.is_infinite() {
                return Ok(Phase::Unbounded);
            }
            let theta = best;
            for r in 0..self.rows() {
                let arj = self.at(r, j);
                if arj != 0.0 {
                    self.beta[r] -= dir * arj * theta;
                }
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { theta } else { self.upper[j] - theta };
                    let leaving = self.basis[r];
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[j] = false;
                    self.pivot(r, j, &mut d);
                    self.beta[r] = entering_value;
                }
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    let lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();

    // Columns exist only for variables with room between their bounds.
    let mut col_of = vec![None; n];
    let mut var_of_col = Vec::new();
    for (i, v) in lp.variables.iter().enumerate() {
        if v.upper > v.lower {
            col_of[i] = Some(var_of_col.len());
            var_of_col.push(i);
        }
    }
    let structural = var_of_col.len();

    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut rhs = c.rhs;
        let mut dense: Vec<(usize, f64)> = Vec::new();
        for &(v, a) in &c.terms {
            rhs -= a * lower[v.0];
            if let Some(col) = col_of[v.0] {
                match dense.iter_mut().find(|(k, _)| *k == col) {
                    Some(entry) => entry.1 += a,
                    None => dense.push((col, a)),
                }
            }
        }
        dense.retain(|&(_, a)| a != 0.0);
        if dense.is_empty() {
            let violated = match c.relation {
                Relation::Le => -rhs > FEAS_TOL,
                Relation::Ge => rhs > FEAS_TOL,
                Relation::Eq => rhs.abs() > FEAS_TOL,
            };
            if violated {
                return Ok(infeasible());
            }
            continue;
        }
        let mut rel = c.relation;
        if rhs < 0.0 {
            rhs = -rhs;
            for entry in &mut dense {
                entry.1 = -entry.1;
            }
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push((dense, rel, rhs));
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = structural + slacks + artificials;
    let first_art = structural + slacks;

    let mut upper = vec![f64::INFINITY; cols];
    for (c, &v) in var_of_col.iter().enumerate() {
        upper[c] = lp.variables[v].upper - lp.variables[v].lower;
    }
    let mut a = vec![0.0; m * cols];
    let mut basis = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (structural, first_art);
    for (r, (dense, rel, rhs)) in rows.iter().enumerate() {
        for &(c, v) in dense {
            a[r * cols + c] = v;
        }
        match rel {
            Relation::Le => {
                a[r * cols + next_slack] = 1.0;
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                a[r * cols + next_slack] = -1.0;
                next_slack += 1;
                a[r * cols + next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                a[r * cols + next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        beta.push(*rhs);
    }
    let mut basic_row = vec![None; cols];
    for (r, &b) in basis.iter().enumerate() {
        basic_row[b] = Some(r);
    }
    let mut t = Tableau {
        cols,
        a,
        beta,
        basis,
        basic_row,
        at_upper: vec![false; cols],
        upper,
        iterations: 0,
        max_iterations: 200_000 + 100 * (m + cols),
    };

    if artificials > 0 {
        let mut cost = vec![0.0; cols];
        cost[first_art..].fill(-1.0);
        t.optimize(&cost, &|_| true)?;
        let infeasibility: f64 =
            (0..m).filter(|&r| t.basis[r] >= first_art).map(|r| t.beta[r].max(0.0)).sum();
        if infeasibility > FEAS_TOL {
            return Ok(infeasible());
        }
        for j in first_art..cols {
            t.upper[j] = 0.0;
        }
        // Drive zero-level artificials out of the basis where a real column can replace them.
        for r in 0..m {
            if t.basis[r] < first_art {
                continue;
            }
            let replacement = (0..first_art)
                .find(|&j| t.basic_row[j].is_none() && t.at(r, j).abs() > PIVOT_TOL);
            if let Some(j) = replacement {
                let value = t.nonbasic_value(j);
                let mut scratch = vec![0.0; cols];
                t.at_upper[t.basis[r]] = false;
                t.pivot(r, j, &mut scratch);
                t.at_upper[j] = false;
                t.beta[r] = value;
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for &(v, coef) in &lp.objective {
        if let Some(c) = col_of[v.0] {
            cost[c] += coef;
        }
    }
    if t.optimize(&cost, &|j| j < first_art)? == Phase::Unbounded {
        return Ok(LpSolution { status: LpStatus::Unbounded, objective: f64::INFINITY, values: Vec::new() });
    }

    let mut values = lower.clone();
    for (c, &v) in var_of_col.iter().enumerate() {
        let shifted = match t.basic_row[c] {
            Some(r) => t.beta[r],
            None => t.nonbasic_value(c),
        };
        let var = &lp.variables[v];
        values[v] = (var.lower + shifted).clamp(var.lower, var.upper);
    }
    let objective = lp.objective_value(&values);
    Ok(LpSolution { status: LpStatus::Optimal, objective, values })
}

fn infeasible() -> LpSolution {
    LpSolution { status: LpStatus::Infeasible, objective: f64::NEG_INFINITY, values: Vec::new() }
}
