//! Programmatic model construction mirroring the text syntax, for host
//! programs that assemble models instead of writing `.msm` files.
//!
//! ```
//! use msm_core::builder::ModelBuilder;
//!
//! let mut b = ModelBuilder::new();
//! b.parameter("a").unwrap();
//! b.variable("x", Some(0.0), None).unwrap();
//! b.variable("s", Some(0.0), None).unwrap();
//! b.minimize("objective_function", "E(V * x)").unwrap();
//! b.subject_to("terminal_stage", "s = a").unwrap();
//! b.deterministic("T", &["a"]).unwrap();
//! b.stochastic("0..T", &["x", "s", "objective_function", "terminal_stage"]).unwrap();
//! let model = b.finish();
//! assert_eq!(model.vars.len(), 2);
//! ```
//!
//! Expression arguments are parsed with the same grammar as model text, so
//! a builder call sequence and the equivalent text produce structurally
//! equal models.

use crate::dsl::ast::{
    Constraint, MetaModel, Objective, ParamDecl, Sense, StageDecl, StageKind, StageSetExpr,
    VarDecl,
};
use crate::dsl::lexer::tokenize;
use crate::dsl::parser::{parse_expr_text, parse_relation_text, ParseError};
use crate::dsl::{LexError, ModelTextError};

/// Failure while assembling a model through the builder.
#[derive(Debug, Clone, PartialEq)]
pub enum BuildError {
    /// A name was declared twice in the same category.
    DuplicateName { name: String, category: &'static str },
    /// Embedded expression or stage-set text failed to parse.
    Text(ModelTextError),
}

impl std::fmt::Display for BuildError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BuildError::DuplicateName { name, category } => {
                write!(f, "duplicate {category} `{name}`")
            }
            BuildError::Text(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for BuildError {}

impl From<LexError> for BuildError {
    fn from(e: LexError) -> Self {
        BuildError::Text(ModelTextError::Lex(e))
    }
}

impl From<ParseError> for BuildError {
    fn from(e: ParseError) -> Self {
        BuildError::Text(ModelTextError::Parse(e))
    }
}

/// Accumulates declarations and produces a [`MetaModel`].
#[derive(Debug, Default)]
pub struct ModelBuilder {
    model: MetaModel,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parameter(&mut self, name: &str) -> Result<&mut Self, BuildError> {
        if self.model.params.iter().any(|p| p.name == name) {
            return Err(BuildError::DuplicateName { name: name.into(), category: "param" });
        }
        self.model.params.push(ParamDecl { name: name.into() });
        Ok(self)
    }

    pub fn variable(
        &mut self,
        name: &str,
        lb: Option<f64>,
        ub: Option<f64>,
    ) -> Result<&mut Self, BuildError> {
        if self.model.vars.iter().any(|v| v.name == name) {
            return Err(BuildError::DuplicateName { name: name.into(), category: "var" });
        }
        self.model.vars.push(VarDecl {
            name: name.into(),
            lb: lb.unwrap_or(f64::NEG_INFINITY),
            ub: ub.unwrap_or(f64::INFINITY),
        });
        Ok(self)
    }

    /// Set the objective from expression text, e.g. `"E(V * x)"`.
    pub fn minimize(&mut self, name: &str, expr: &str) -> Result<&mut Self, BuildError> {
        if self.model.objective.is_some() {
            return Err(BuildError::DuplicateName { name: name.into(), category: "objective" });
        }
        let tokens = tokenize(expr)?;
        let expr = parse_expr_text(&tokens, true)?;
        self.model.objective = Some(Objective { name: name.into(), sense: Sense::Minimize, expr });
        Ok(self)
    }

    /// Add a constraint from relation text, e.g. `"s - s(-1) = x"`.
    pub fn subject_to(&mut self, name: &str, relation: &str) -> Result<&mut Self, BuildError> {
        if self.model.constraints.iter().any(|c| c.name == name) {
            return Err(BuildError::DuplicateName { name: name.into(), category: "constraint" });
        }
        let tokens = tokenize(relation)?;
        let (lhs, relop, rhs) = parse_relation_text(&tokens)?;
        self.model.constraints.push(Constraint { name: name.into(), lhs, relop, rhs });
        Ok(self)
    }

    /// Annotate objects as stage-valued, e.g. `deterministic("T", &["a"])`.
    pub fn deterministic(&mut self, stages: &str, names: &[&str]) -> Result<&mut Self, BuildError> {
        self.stage_decl(StageKind::Deterministic, stages, names)
    }

    /// Annotate objects as node-valued, e.g. `stochastic("0..T", &["x"])`.
    pub fn stochastic(&mut self, stages: &str, names: &[&str]) -> Result<&mut Self, BuildError> {
        self.stage_decl(StageKind::Stochastic, stages, names)
    }

    fn stage_decl(
        &mut self,
        kind: StageKind,
        stages: &str,
        names: &[&str],
    ) -> Result<&mut Self, BuildError> {
        let stage_set = parse_stage_set_text(stages)?;
        self.model.stage_decls.push(StageDecl {
            kind,
            object_names: names.iter().map(|n| n.to_string()).collect(),
            stage_set,
        });
        Ok(self)
    }

    pub fn finish(self) -> MetaModel {
        self.model
    }
}

/// Parse stage-set text like `"0..T"` or `"3"`.
pub fn parse_stage_set_text(text: &str) -> Result<StageSetExpr, BuildError> {
    // Reuse the statement grammar by parsing a synthetic annotation.
    let tokens = tokenize(&format!("stochastic __set: {text};"))?;
    let model = crate::dsl::parser::parse_model(&tokens)?;
    Ok(model.stage_decls[0].stage_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_source;

    #[test]
    fn empty_builder_yields_empty_model() {
        assert!(ModelBuilder::new().finish().is_empty());
    }

    #[test]
    fn duplicate_variable_rejected() {
        let mut b = ModelBuilder::new();
        b.variable("x", Some(0.0), None).unwrap();
        let err = b.variable("x", Some(0.0), None).unwrap_err();
        assert_eq!(err, BuildError::DuplicateName { name: "x".into(), category: "var" });
    }

    #[test]
    fn duplicate_objective_rejected() {
        let mut b = ModelBuilder::new();
        b.minimize("f", "x").unwrap();
        assert!(b.minimize("g", "x").is_err());
    }

    #[test]
    fn bad_embedded_expression_propagates_position() {
        let mut b = ModelBuilder::new();
        match b.subject_to("c", "s - = x").unwrap_err() {
            BuildError::Text(ModelTextError::Parse(e)) => assert_eq!((e.line, e.col), (1, 5)),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn builder_matches_parsed_text() {
        let mut b = ModelBuilder::new();
        b.parameter("a").unwrap();
        b.variable("x", Some(0.0), None).unwrap();
        b.variable("s", Some(0.0), None).unwrap();
        b.minimize("objective_function", "E(V * x)").unwrap();
        b.subject_to("non_anticitpativity", "s - s(-1) = x").unwrap();
        b.subject_to("root_stage", "s = 0").unwrap();
        b.subject_to("terminal_stage", "s = a").unwrap();
        b.deterministic("T", &["a"]).unwrap();
        b.stochastic("0..T", &["x", "s", "objective_function"]).unwrap();
        b.stochastic("1..T", &["non_anticitpativity"]).unwrap();
        b.stochastic("0", &["root_stage"]).unwrap();
        b.stochastic("T", &["terminal_stage"]).unwrap();
        let built = b.finish();

        let parsed = parse_source(
            "param a;
             var x >= 0, s >= 0;
             minimize objective_function: E(V * x);
             subject to non_anticitpativity: s - s(-1) = x;
             subject to root_stage: s = 0;
             subject to terminal_stage: s = a;
             deterministic a: T;
             stochastic x, s, objective_function: 0..T;
             stochastic non_anticitpativity: 1..T;
             stochastic root_stage: 0;
             stochastic terminal_stage: T;",
        )
        .unwrap();
        assert_eq!(built, parsed);
    }
}
