//! Canonical text form of a model. Parsing the output reproduces the
//! model exactly, including coefficient values.

use std::fmt::Write;

use super::ast::{LinExpr, MetaModel, StageAtom, StageKind, StageSetExpr};

/// Render a model as canonical text. Empty model renders as "".
pub fn format_model(model: &MetaModel) -> String {
    let mut out = String::new();
    let mut sections: Vec<String> = Vec::new();

    if !model.stage_decls.is_empty() {
        let mut s = String::new();
        for decl in &model.stage_decls {
            let kind = match decl.kind {
                StageKind::Deterministic => "deterministic",
                StageKind::Stochastic => "stochastic",
            };
            let _ = writeln!(
                s,
                "{} {}: {};",
                kind,
                decl.object_names.join(", "),
                format_stage_set(&decl.stage_set)
            );
        }
        sections.push(s);
    }

    if !model.params.is_empty() || !model.vars.is_empty() {
        let mut s = String::new();
        for p in &model.params {
            let _ = writeln!(s, "param {};", p.name);
        }
        for v in &model.vars {
            let _ = write!(s, "var {}", v.name);
            if v.lb.is_finite() {
                let _ = write!(s, " >= {}", format_number(v.lb));
            }
            if v.ub.is_finite() {
                let _ = write!(s, " <= {}", format_number(v.ub));
            }
            s.push_str(";\n");
        }
        sections.push(s);
    }

    if let Some(obj) = &model.objective {
        sections.push(format!("minimize {}: {};\n", obj.name, format_expr(&obj.expr)));
    }

    if !model.constraints.is_empty() {
        let mut s = String::new();
        for c in &model.constraints {
            let _ = writeln!(
                s,
                "subject to {}: {} {} {};",
                c.name,
                format_expr(&c.lhs),
                c.relop,
                format_expr(&c.rhs)
            );
        }
        sections.push(s);
    }

    for (i, section) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(section);
    }
    out
}

/// Render a stage set as written: `3`, `T`, `0..T`, ...
pub fn format_stage_set(set: &StageSetExpr) -> String {
    match set.hi {
        Some(hi) => format!("{}..{}", format_atom(set.lo), format_atom(hi)),
        None => format_atom(set.lo),
    }
}

fn format_atom(atom: StageAtom) -> String {
    match atom {
        StageAtom::Lit(v) => v.to_string(),
        StageAtom::Horizon => "T".into(),
    }
}

/// Render an expression; `E(...)` is re-applied when the expect flag is set.
pub fn format_expr(expr: &LinExpr) -> String {
    let body = format_expr_body(expr);
    if expr.expect {
        format!("E({body})")
    } else {
        body
    }
}

fn format_expr_body(expr: &LinExpr) -> String {
    let mut pieces: Vec<(bool, String)> = Vec::new(); // (negative, magnitude text)

    for term in &expr.terms {
        let negative = term.coeff < 0.0;
        let magnitude = term.coeff.abs();
        let factors = term
            .factors
            .iter()
            .map(|f| {
                if f.recourse_depth > 0 {
                    format!("{}(-{})", f.name, f.recourse_depth)
                } else {
                    f.name.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" * ");
        let text = if magnitude == 1.0 {
            factors
        } else {
            format!("{} * {}", format_number(magnitude), factors)
        };
        pieces.push((negative, text));
    }

    if expr.constant != 0.0 || pieces.is_empty() {
        pieces.push((expr.constant < 0.0, format_number(expr.constant.abs())));
    }

    let mut out = String::new();
    for (i, (negative, text)) in pieces.iter().enumerate() {
        if i == 0 {
            if *negative {
                out.push('-');
            }
        } else {
            out.push_str(if *negative { " - " } else { " + " });
        }
        out.push_str(text);
    }
    out
}

/// Shortest decimal text that parses back to the same value. Whole numbers
/// are printed without a fraction.
pub fn format_number(value: f64) -> String {
    if value == value.trunc() && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}
