//! Syntax tree for model text.

/// Lexical class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// One of: `deterministic`, `stochastic`, `param`, `var`, `minimize`,
    /// `subject`, `to`.
    Keyword,
    Ident,
    Int,
    Real,
    /// `+`, `-`, `*`, `=`, `<=`, `>=`.
    Op,
    LParen,
    RParen,
    Colon,
    Comma,
    Semi,
    /// Exactly `..`.
    Range,
}

/// A lexeme with its 1-based source position.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
}

/// An endpoint of a stage-set expression: a literal stage or the horizon
/// symbol `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageAtom {
    Lit(u32),
    Horizon,
}

/// Unresolved stage set as written: a single atom or an inclusive range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSetExpr {
    pub lo: StageAtom,
    /// Absent for a singleton like `0` or `T`.
    pub hi: Option<StageAtom>,
}

/// Reference to a named symbol inside an expression. `recourse_depth` is
/// the number of stages to walk up the tree; 0 means the current node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolRef {
    pub name: String,
    pub recourse_depth: u32,
}

/// One product term of a linear expression: a coefficient times at most
/// two symbol factors. At most one factor may turn out to be a variable;
/// that is checked during validation, once declarations are known.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<SymbolRef>,
}

/// A linear expression: sum of terms plus a constant. `expect` is set when
/// the whole expression was wrapped in `E(...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<Term>,
    pub constant: f64,
    pub expect: bool,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr { terms: Vec::new(), constant: 0.0, expect: false }
    }

    /// Names referenced anywhere in the expression, in order of appearance.
    pub fn symbol_names(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().flat_map(|t| t.factors.iter().map(|f| f.name.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    /// `f64::NEG_INFINITY` when unbounded below.
    pub lb: f64,
    /// `f64::INFINITY` when unbounded above.
    pub ub: f64,
}

/// Objective sense. Only minimization exists in the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub name: String,
    pub sense: Sense,
    pub expr: LinExpr,
}

/// Constraint relation operator. Shared with the LP layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Relop {
    #[default]
    Eq,
    Le,
    Ge,
}

impl std::fmt::Display for Relop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Relop::Eq => "=",
            Relop::Le => "<=",
            Relop::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub lhs: LinExpr,
    pub relop: Relop,
    pub rhs: LinExpr,
}

/// Whether an object lives on the node structure (`stochastic`) or on the
/// stage structure, one shared instance per stage (`deterministic`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Deterministic,
    Stochastic,
}

/// One `deterministic`/`stochastic` statement annotating a list of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDecl {
    pub kind: StageKind,
    pub object_names: Vec<String>,
    pub stage_set: StageSetExpr,
}

/// A parsed model: declarations plus stage annotations, not yet bound to a
/// horizon. Statement order is preserved within each category.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetaModel {
    pub params: Vec<ParamDecl>,
    pub vars: Vec<VarDecl>,
    pub objective: Option<Objective>,
    pub constraints: Vec<Constraint>,
    pub stage_decls: Vec<StageDecl>,
}

impl MetaModel {
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
            && self.vars.is_empty()
            && self.objective.is_none()
            && self.constraints.is_empty()
            && self.stage_decls.is_empty()
    }

    /// All expressions of the model: the objective plus each constraint side.
    pub fn expressions(&self) -> impl Iterator<Item = &LinExpr> {
        self.objective
            .iter()
            .map(|o| &o.expr)
            .chain(self.constraints.iter().flat_map(|c| [&c.lhs, &c.rhs]))
    }

    /// Names used in expressions that were never declared with `param` or
    /// `var`. These are implicit stochastic parameters, to be supplied
    /// node-by-node from the scenario tree. First-appearance order.
    pub fn implicit_params(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for expr in self.expressions() {
            for name in expr.symbol_names() {
                if self.params.iter().any(|p| p.name == name)
                    || self.vars.iter().any(|v| v.name == name)
                    || seen.iter().any(|s: &String| s == name)
                {
                    continue;
                }
                seen.push(name.to_string());
            }
        }
        seen
    }
}
