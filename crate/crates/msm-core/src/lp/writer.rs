//! LP text export (CPLEX-style sections), byte-stable for equal inputs.

use std::fmt::Write;

use super::{LpProblem, Relop};

/// Row and column names for export. Produced by the expansion layer; any
/// missing name falls back to a positional one.
#[derive(Debug, Clone, Default)]
pub struct LpLabels {
    pub columns: Vec<String>,
    pub rows: Vec<String>,
}

impl LpLabels {
    fn column(&self, j: usize) -> String {
        self.columns.get(j).cloned().unwrap_or_else(|| format!("c{j}"))
    }

    fn row(&self, i: usize) -> String {
        self.rows.get(i).cloned().unwrap_or_else(|| format!("r{i}"))
    }
}

/// Render a problem in LP text format with named rows and columns.
pub fn emit_lp_file(p: &LpProblem, labels: &LpLabels) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, &c) in p.objective.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        write_term(&mut out, c, &labels.column(j), first);
        first = false;
    }
    if p.objective_offset != 0.0 {
        write_constant(&mut out, p.objective_offset, first);
        first = false;
    }
    let _ = first;
    out.push('\n');

    out.push_str("Subject To\n");
    for (i, row) in p.rows.iter().enumerate() {
        let _ = write!(out, " {}:", labels.row(i));
        let mut first = true;
        for (&j, &c) in &row.coeffs {
            if c == 0.0 {
                continue;
            }
            write_term(&mut out, c, &labels.column(j), first);
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        let op = match row.relop {
            Relop::Eq => "=",
            Relop::Le => "<=",
            Relop::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", op, trim_number(row.rhs));
    }

    if p.n_cols > 0 {
        out.push_str("Bounds\n");
        for j in 0..p.n_cols {
            let (lb, ub) = p.bounds[j];
            let name = labels.column(j);
            match (lb.is_finite(), ub.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {name} free");
                }
                (true, false) => {
                    let _ = writeln!(out, " {name} >= {}", trim_number(lb));
                }
                (false, true) => {
                    let _ = writeln!(out, " -infinity <= {name} <= {}", trim_number(ub));
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {name} <= {}", trim_number(lb), trim_number(ub));
                }
            }
        }
    }

    out.push_str("End\n");
    out
}

fn write_term(out: &mut String, coeff: f64, name: &str, first: bool) {
    let magnitude = coeff.abs();
    let sign = if coeff < 0.0 { "-" } else { "+" };
    if first {
        if coeff < 0.0 {
            out.push_str(" -");
        }
    } else {
        out.push(' ');
        out.push_str(sign);
    }
    if magnitude == 1.0 {
        let _ = write!(out, " {name}");
    } else {
        let _ = write!(out, " {} {name}", trim_number(magnitude));
    }
}

fn write_constant(out: &mut String, value: f64, first: bool) {
    if first {
        let _ = write!(out, " {}", trim_number(value));
    } else {
        let sign = if value < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {}", trim_number(value.abs()));
    }
}

/// Whole numbers print without a fraction; everything else uses the
/// shortest round-trip form.
fn trim_number(value: f64) -> String {
    if value == value.trunc() && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Row;

    #[test]
    fn empty_problem_is_header_and_end() {
        let out = emit_lp_file(&LpProblem::default(), &LpLabels::default());
        assert_eq!(out, "Minimize\n obj:\nSubject To\nEnd\n");
    }

    #[test]
    fn named_rows_and_columns() {
        let p = LpProblem {
            n_cols: 2,
            objective: vec![5.0, -1.0],
            objective_offset: 0.0,
            rows: vec![Row {
                coeffs: [(0, 1.0), (1, -2.5)].into_iter().collect(),
                relop: Relop::Le,
                rhs: 4.0,
            }],
            bounds: vec![(0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)],
        };
        let labels = LpLabels {
            columns: vec!["x__n0".into(), "x__n1".into()],
            rows: vec!["cap__n0".into()],
        };
        let out = emit_lp_file(&p, &labels);
        assert!(out.contains(" obj: 5 x__n0 - x__n1\n"));
        assert!(out.contains(" cap__n0: x__n0 - 2.5 x__n1 <= 4\n"));
        assert!(out.contains(" x__n0 >= 0\n"));
        assert!(out.contains(" x__n1 free\n"));
    }

    #[test]
    fn emission_is_deterministic() {
        let p = LpProblem {
            n_cols: 3,
            objective: vec![1.0, 2.0, 3.0],
            objective_offset: 0.5,
            rows: vec![Row {
                coeffs: [(2, 1.0), (0, 1.0)].into_iter().collect(),
                relop: Relop::Eq,
                rhs: 1.0,
            }],
            bounds: vec![(0.0, 1.0); 3],
        };
        let labels = LpLabels::default();
        assert_eq!(emit_lp_file(&p, &labels), emit_lp_file(&p, &labels));
        assert!(emit_lp_file(&p, &labels).contains("+ 0.5"));
    }
}
