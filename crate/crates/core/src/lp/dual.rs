use super::{LinearProgram, Relation, VarId};

/// Builds the LP dual, written as a maximization so the same solver applies. When both programs
/// have optima, `primal.objective == -dual.objective`.
///
/// Row `i` gets multiplier `y_i` (sign fixed by its relation, split in two for equalities);
/// finite upper bounds get `s_j >= 0` and lower bounds `r_j >= 0`; every primal column becomes
/// the equality `sum_i a_ij y_i + s_j - r_j = c_j`.
pub fn dual(primal: &LinearProgram) -> LinearProgram {
    let n = primal.num_vars();
    let c = primal.objective_dense();
    let mut d = LinearProgram::new();
    let mut columns: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];

    for (i, row) in primal.constraints.iter().enumerate() {
        // (multiplier sign in the column equations, objective sign) per dual variable.
        let parts: &[f64] = match row.relation {
            Relation::Le => &[1.0],
            Relation::Ge => &[-1.0],
            Relation::Eq => &[1.0, -1.0],
        };
        for (k, &sign) in parts.iter().enumerate() {
            let y = d.add_var(format!("y_{i}_{k}"), 0.0, f64::INFINITY);
            d.add_objective(y, -sign * row.rhs);
            for &(v, a) in &row.terms {
                columns[v.0].push((y, sign * a));
            }
        }
    }
    for (j, var) in primal.variables.iter().enumerate() {
        if var.upper.is_finite() {
            let s = d.add_var(format!("s_{j}"), 0.0, f64::INFINITY);
            d.add_objective(s, -var.upper);
            columns[j].push((s, 1.0));
        }
        let r = d.add_var(format!("r_{j}"), 0.0, f64::INFINITY);
        d.add_objective(r, var.lower);
        columns[j].push((r, -1.0));
    }
    for (j, terms) in columns.into_iter().enumerate() {
        d.add_constraint(format!("col_{j}"), terms, Relation::Eq, c[j]);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_of_small_lp_matches() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 3.0);
        let y = lp.add_var("y", 1.0, f64::INFINITY);
        lp.add_objective(x, 2.0);
        lp.add_objective(y, 1.0);
        lp.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_constraint("b", vec![(x, 1.0), (y, -1.0)], Relation::Ge, -2.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, 2.0)], Relation::Eq, 5.0);
        let p = lp.solve().unwrap();
        let q = dual(&lp).solve().unwrap();
        assert!(p.is_optimal() && q.is_optimal());
        assert!((p.objective + q.objective).abs() < 1e-9, "{} vs {}", p.objective, q.objective);
    }
}
