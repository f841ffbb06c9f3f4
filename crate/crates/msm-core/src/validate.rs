//! Binding a model to a horizon: stage-annotation resolution and
//! well-formedness checks.

use std::collections::BTreeMap;

use crate::dsl::ast::{LinExpr, MetaModel, StageAtom, StageKind};
use crate::stage::StageSet;

/// A single validation finding, naming the object it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub object: String,
    pub reason: String,
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.object, self.reason)
    }
}

impl std::error::Error for ValidationError {}

/// All findings from one validation pass. Validation is exhaustive: it
/// collects every violation instead of stopping at the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors {
    pub errors: Vec<ValidationError>,
}

impl std::fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

/// Resolved stage annotation of one object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub kind: StageKind,
    pub stages: StageSet,
}

/// What a name means inside an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Variable,
    /// Declared parameter annotated `deterministic`: one value per stage,
    /// supplied by the tree file's stage-value section.
    StageParam,
    /// Node-valued parameter: declared without a `deterministic`
    /// annotation, or never declared at all (implicit).
    NodeParam,
}

/// A model successfully bound to a horizon. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModel {
    model: MetaModel,
    horizon: u32,
    resolved: BTreeMap<String, Annotation>,
    implicit_params: Vec<String>,
}

impl ValidatedModel {
    pub fn model(&self) -> &MetaModel {
        &self.model
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Resolved annotations by object name.
    pub fn resolved(&self) -> &BTreeMap<String, Annotation> {
        &self.resolved
    }

    pub fn annotation(&self, name: &str) -> Option<&Annotation> {
        self.resolved.get(name)
    }

    /// Names used in expressions without a `param`/`var` declaration.
    pub fn implicit_params(&self) -> &[String] {
        &self.implicit_params
    }

    pub fn symbol_kind(&self, name: &str) -> Option<SymbolKind> {
        if self.model.vars.iter().any(|v| v.name == name) {
            return Some(SymbolKind::Variable);
        }
        let declared = self.model.params.iter().any(|p| p.name == name);
        if !declared && !self.implicit_params.iter().any(|p| p == name) {
            return None;
        }
        match self.resolved.get(name) {
            Some(a) if a.kind == StageKind::Deterministic => Some(SymbolKind::StageParam),
            _ => Some(SymbolKind::NodeParam),
        }
    }
}

/// Validate a model against horizon `T`.
///
/// Checks, exhaustively: unique names; exactly one objective; every
/// variable, constraint, and the objective carries exactly one stage
/// annotation; annotations reference known objects; stage sets fit the
/// horizon; no variable-times-variable terms; recourse only on variables;
/// and no recourse reaching above the root of any stage set.
pub fn validate_model(model: &MetaModel, horizon: u32) -> Result<ValidatedModel, ValidationErrors> {
    let mut errors: Vec<ValidationError> = Vec::new();
    let mut push = |object: &str, reason: String| {
        errors.push(ValidationError { object: object.into(), reason });
    };

    // Name uniqueness within and across categories.
    let categories: [(&str, Vec<&str>); 4] = [
        ("param", model.params.iter().map(|p| p.name.as_str()).collect()),
        ("var", model.vars.iter().map(|v| v.name.as_str()).collect()),
        ("objective", model.objective.iter().map(|o| o.name.as_str()).collect()),
        ("constraint", model.constraints.iter().map(|c| c.name.as_str()).collect()),
    ];
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for (category, names) in &categories {
        for name in names {
            match seen.get(name) {
                None => {
                    seen.insert(name, category);
                }
                Some(prev) if prev == category => {
                    push(name, format!("duplicate {category} declaration"));
                }
                Some(prev) => {
                    push(name, format!("declared as both {prev} and {category}"));
                }
            }
        }
    }

    let implicit_params = model.implicit_params();
    for name in &implicit_params {
        if model.objective.iter().any(|o| &o.name == name)
            || model.constraints.iter().any(|c| &c.name == name)
        {
            push(name, "used as a value but names a constraint or objective".into());
        }
    }

    if model.objective.is_none() {
        push("model", "no objective declared".into());
    }

    let known = |name: &str| {
        model.params.iter().any(|p| p.name == name)
            || model.vars.iter().any(|v| v.name == name)
            || model.objective.iter().any(|o| o.name == name)
            || model.constraints.iter().any(|c| c.name == name)
            || implicit_params.iter().any(|p| p == name)
    };

    // Resolve stage annotations.
    let mut resolved: BTreeMap<String, Annotation> = BTreeMap::new();
    for decl in &model.stage_decls {
        // A literal range that is inverted regardless of T is a mistake;
        // one emptied by T substitution just instantiates nothing.
        if let (StageAtom::Lit(lo), Some(StageAtom::Lit(hi))) = (decl.stage_set.lo, decl.stage_set.hi)
        {
            if lo > hi {
                for name in &decl.object_names {
                    push(name, format!("stage set {lo}..{hi} is empty"));
                }
                continue;
            }
        }
        if let StageAtom::Lit(lo) = decl.stage_set.lo {
            if lo > horizon && decl.stage_set.hi.is_none() {
                for name in &decl.object_names {
                    push(name, format!("stage {lo} is beyond horizon {horizon}"));
                }
                continue;
            }
        }
        let stages = StageSet::clamped(&decl.stage_set, horizon);
        for name in &decl.object_names {
            if !known(name) {
                push(name, "annotation references unknown object".into());
                continue;
            }
            if resolved.contains_key(name) {
                push(name, "multiple stage annotations".into());
                continue;
            }
            resolved.insert(name.clone(), Annotation { kind: decl.kind, stages: stages.clone() });
        }
    }

    // Variables, constraints, and the objective each need an annotation;
    // parameters may go without (they default to node-valued).
    let needs_annotation = model
        .vars
        .iter()
        .map(|v| v.name.as_str())
        .chain(model.objective.iter().map(|o| o.name.as_str()))
        .chain(model.constraints.iter().map(|c| c.name.as_str()));
    for name in needs_annotation {
        if !resolved.contains_key(name) {
            push(name, "no stage annotation".into());
        }
    }

    // Expression checks.
    let is_var = |name: &str| model.vars.iter().any(|v| v.name == name);
    let mut check_expr = |owner: &str, expr: &LinExpr, stages: Option<&StageSet>| {
        for term in &expr.terms {
            let var_count = term.factors.iter().filter(|f| is_var(&f.name)).count();
            if var_count > 1 {
                push(owner, "term multiplies two variables".into());
            }
            for factor in &term.factors {
                if factor.recourse_depth == 0 {
                    continue;
                }
                if !is_var(&factor.name) {
                    push(
                        owner,
                        format!("recourse reference `{}(-{})` on a parameter", factor.name, factor.recourse_depth),
                    );
                    continue;
                }
                if let Some(stages) = stages {
                    if let Some(min) = stages.min() {
                        if factor.recourse_depth > min {
                            push(
                                owner,
                                format!(
                                    "recourse depth {} exceeds root: first instantiated at stage {min}",
                                    factor.recourse_depth
                                ),
                            );
                        }
                    }
                }
            }
        }
    };

    if let Some(obj) = &model.objective {
        let stages = resolved.get(&obj.name).map(|a| &a.stages);
        check_expr(&obj.name, &obj.expr, stages);
    }
    for c in &model.constraints {
        let stages = resolved.get(&c.name).map(|a| &a.stages);
        check_expr(&c.name, &c.lhs, stages);
        check_expr(&c.name, &c.rhs, stages);
    }

    if errors.is_empty() {
        Ok(ValidatedModel { model: model.clone(), horizon, resolved, implicit_params })
    } else {
        Err(ValidationErrors { errors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_source;

    const PURCHASE: &str = "\
deterministic a: T;
stochastic x, s, objective_function: 0..T;
stochastic non_anticitpativity: 1..T;
stochastic root_stage: 0;
stochastic terminal_stage: T;
param a;
var x >= 0, s >= 0;
minimize objective_function: E(V * x);
subject to non_anticitpativity: s - s(-1) = x;
subject to root_stage: s = 0;
subject to terminal_stage: s = a;
";

    fn reasons(src: &str, horizon: u32) -> Vec<(String, String)> {
        match validate_model(&parse_source(src).unwrap(), horizon) {
            Ok(_) => vec![],
            Err(e) => e.errors.into_iter().map(|e| (e.object, e.reason)).collect(),
        }
    }

    #[test]
    fn purchase_model_validates_at_horizon_3() {
        let vm = validate_model(&parse_source(PURCHASE).unwrap(), 3).unwrap();
        assert_eq!(vm.horizon(), 3);
        for name in ["x", "s", "objective_function"] {
            let a = vm.annotation(name).unwrap();
            assert_eq!(a.kind, StageKind::Stochastic);
            assert_eq!(a.stages.stages(), &[0, 1, 2, 3]);
        }
        let a = vm.annotation("a").unwrap();
        assert_eq!(a.kind, StageKind::Deterministic);
        assert_eq!(a.stages.stages(), &[3]);
        assert_eq!(vm.annotation("non_anticitpativity").unwrap().stages.stages(), &[1, 2, 3]);
        assert_eq!(vm.implicit_params(), &["V".to_string()]);
        assert_eq!(vm.symbol_kind("V"), Some(SymbolKind::NodeParam));
        assert_eq!(vm.symbol_kind("a"), Some(SymbolKind::StageParam));
        assert_eq!(vm.symbol_kind("x"), Some(SymbolKind::Variable));
    }

    #[test]
    fn balance_range_vanishes_at_horizon_0() {
        let vm = validate_model(&parse_source(PURCHASE).unwrap(), 0).unwrap();
        assert!(vm.annotation("non_anticitpativity").unwrap().stages.is_empty());
        assert_eq!(vm.annotation("x").unwrap().stages.stages(), &[0]);
    }

    #[test]
    fn recourse_above_root_rejected() {
        let errs = reasons(
            "stochastic c: 0; stochastic x, s, f: 0..T;
             var x >= 0, s >= 0; minimize f: x;
             subject to c: s - s(-1) = x;",
            2,
        );
        assert_eq!(errs.len(), 1);
        assert!(errs[0].1.contains("exceeds root"));
    }

    #[test]
    fn unknown_annotation_object_rejected() {
        let errs = reasons(
            "stochastic non_anticipativity: 1..T;
             stochastic x, s, f: 0..T;
             var x >= 0, s >= 0; minimize f: x;
             subject to non_anticitpativity: s - s(-1) = x;",
            2,
        );
        assert!(errs
            .iter()
            .any(|(o, r)| o == "non_anticipativity" && r.contains("unknown object")));
        assert!(errs.iter().any(|(o, r)| o == "non_anticitpativity" && r.contains("no stage")));
    }

    #[test]
    fn bilinear_term_rejected() {
        let errs = reasons(
            "stochastic x, s, f, c: 0..T; var x, s; minimize f: x; subject to c: x * s = 0;",
            1,
        );
        assert!(errs.iter().any(|(_, r)| r.contains("two variables")));
    }

    #[test]
    fn recourse_on_parameter_rejected() {
        let errs = reasons(
            "stochastic x, f, c: 1..T; param p; var x; minimize f: x; subject to c: p(-1) = x;",
            2,
        );
        assert!(errs.iter().any(|(_, r)| r.contains("on a parameter")));
    }

    #[test]
    fn missing_objective_and_annotations_collected_together() {
        let errs = reasons("var x; subject to c: x = 0;", 1);
        assert!(errs.iter().any(|(o, _)| o == "model"));
        assert!(errs.iter().any(|(o, r)| o == "x" && r.contains("no stage")));
        assert!(errs.iter().any(|(o, r)| o == "c" && r.contains("no stage")));
    }

    #[test]
    fn duplicate_and_cross_category_names_rejected() {
        let errs = reasons(
            "stochastic x, f, c: 0..T; var x, x; minimize f: x; subject to c: x = 0;",
            1,
        );
        assert!(errs.iter().any(|(o, r)| o == "x" && r.contains("duplicate")));
        let errs = reasons(
            "stochastic x, f, c: 0..T; param x; var x; minimize f: x; subject to c: x = 0;",
            1,
        );
        assert!(errs.iter().any(|(o, r)| o == "x" && r.contains("both param and var")));
    }

    #[test]
    fn validation_is_idempotent() {
        let vm = validate_model(&parse_source(PURCHASE).unwrap(), 3).unwrap();
        let again = validate_model(vm.model(), 3).unwrap();
        assert_eq!(vm, again);
    }

    #[test]
    fn singleton_beyond_horizon_rejected() {
        let errs = reasons(
            "stochastic x, f: 0..T; stochastic c: 5; var x; minimize f: x; subject to c: x = 0;",
            3,
        );
        assert!(errs.iter().any(|(o, r)| o == "c" && r.contains("beyond horizon")));
    }
}
