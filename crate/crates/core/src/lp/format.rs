use std::fmt::Write;

use super::{LinearProgram, Relation, VarId};

fn push_terms(out: &mut String, lp: &LinearProgram, terms: &[(VarId, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(lp.variables.first().map(|v| v.name.as_str()).unwrap_or("dummy"));
        return;
    }
    for (k, &(v, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { '-' } else { '+' };
        if k == 0 && a >= 0.0 {
            let _ = write!(out, " {} {}", a, lp.variables[v.0].name);
        } else {
            let _ = write!(out, " {sign} {} {}", a.abs(), lp.variables[v.0].name);
        }
    }
}

pub(super) fn write_lp(lp: &LinearProgram) -> String {
    let mut out = String::from("Maximize\n obj:");
    push_terms(&mut out, lp, &lp.objective);
    out.push_str("\nSubject To\n");
    for (i, c) in lp.constraints.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        push_terms(&mut out, lp, &c.terms);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &lp.variables {
        if v.upper.is_finite() {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        } else {
            let _ = writeln!(out, " {} >= {}", v.name, v.lower);
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_sections() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x_0", 0.0, 1.0);
        let y = lp.add_var("y_0", 0.0, f64::INFINITY);
        lp.add_objective(x, 3.0);
        lp.add_objective(y, -1.0);
        lp.add_constraint("k", vec![(x, 1.0), (y, -2.5)], Relation::Ge, 0.5);
        let text = lp.to_lp_format();
        assert_eq!(
            text,
            "Maximize\n obj: 3 x_0 - 1 y_0\nSubject To\n c0: 1 x_0 - 2.5 y_0 >= 0.5\n\
             Bounds\n 0 <= x_0 <= 1\n y_0 >= 0\nEnd\n"
        );
    }
}
