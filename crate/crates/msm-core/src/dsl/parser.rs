//! Recursive-descent parser turning a token stream into a [`MetaModel`].
//!
//! Grammar, one statement per `;`:
//!
//! ```text
//! model      := statement*
//! statement  := stage_decl | param_decl | var_decl | objective | constraint
//! stage_decl := ("deterministic" | "stochastic") name_list ":" stage_set ";"
//! param_decl := "param" name_list ";"
//! var_decl   := "var" var_item ("," var_item)* ";"
//! var_item   := IDENT bound*            # at most one ">=" and one "<="
//! objective  := "minimize" IDENT ":" objective_expr ";"
//! constraint := "subject" "to" IDENT ":" expr relop expr ";"
//! stage_set  := atom [".." atom]        # atom := INT | "T"
//! expr       := ["-"] term (("+" | "-") term)*
//! term       := factor ("*" factor)*
//! factor     := NUMBER | IDENT ["(" NEG_INT ")"]
//! ```
//!
//! `E(...)` is recognized only when it wraps the entire objective
//! expression. `IDENT(-k)` is a recourse reference to the value k stages
//! up; the parser keeps it symbolic and leaves legality checks (recourse
//! on variables only, depth vs. stage set) to validation.

use super::ast::{
    Constraint, LinExpr, MetaModel, Objective, ParamDecl, Relop, Sense, StageAtom, StageDecl,
    StageKind, StageSetExpr, SymbolRef, Term, Token, TokenKind, VarDecl,
};

/// Grammar violation with the position of the offending token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "parse error at {}:{}: expected {}, found {}",
            self.line, self.col, self.expected, self.found
        )
    }
}

impl std::error::Error for ParseError {}

/// Parse a full token stream into a model.
pub fn parse_model(tokens: &[Token]) -> Result<MetaModel, ParseError> {
    Parser { tokens, pos: 0 }.model()
}

/// Parse a standalone expression, as used by the programmatic builder for
/// embedded expression text. `allow_expect` permits an outer `E(...)`.
pub fn parse_expr_text(tokens: &[Token], allow_expect: bool) -> Result<LinExpr, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let expr = if allow_expect && p.at_expect_wrapper(tokens.len()) {
        p.expect_wrapped_expr(tokens.len())?
    } else {
        p.expr()?
    };
    p.expect_end()?;
    Ok(expr)
}

/// Parse `lhs relop rhs` constraint text.
pub fn parse_relation_text(tokens: &[Token]) -> Result<(LinExpr, Relop, LinExpr), ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let rel = p.relation()?;
    p.expect_end()?;
    Ok(rel)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError {
                line: t.line,
                col: t.col,
                expected: expected.into(),
                found: format!("`{}`", t.text),
            },
            None => {
                let (line, col) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.col + t.text.chars().count() as u32))
                    .unwrap_or((1, 1));
                ParseError { line, col, expected: expected.into(), found: "end of input".into() }
            }
        }
    }

    fn is_kind(&self, kind: TokenKind) -> bool {
        self.peek().map(|t| t.kind == kind).unwrap_or(false)
    }

    fn is_op(&self, text: &str) -> bool {
        self.peek().map(|t| t.kind == TokenKind::Op && t.text == text).unwrap_or(false)
    }

    fn expect_kind(&mut self, kind: TokenKind, what: &str) -> Result<&Token, ParseError> {
        if self.is_kind(kind) {
            Ok(self.bump().expect("peeked"))
        } else {
            Err(self.error(what))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.peek().is_some() {
            Err(self.error("end of expression"))
        } else {
            Ok(())
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        Ok(self.expect_kind(TokenKind::Ident, what)?.text.clone())
    }

    fn semi(&mut self) -> Result<(), ParseError> {
        self.expect_kind(TokenKind::Semi, "`;`")?;
        Ok(())
    }

    fn model(&mut self) -> Result<MetaModel, ParseError> {
        let mut model = MetaModel::default();
        while let Some(tok) = self.peek() {
            if tok.kind != TokenKind::Keyword {
                return Err(self.error("a statement keyword"));
            }
            match tok.text.as_str() {
                "deterministic" | "stochastic" => {
                    let decl = self.stage_decl()?;
                    model.stage_decls.push(decl);
                }
                "param" => {
                    self.bump();
                    loop {
                        let name = self.ident("identifier")?;
                        model.params.push(ParamDecl { name });
                        if self.is_kind(TokenKind::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.semi()?;
                }
                "var" => {
                    self.bump();
                    loop {
                        let decl = self.var_item()?;
                        model.vars.push(decl);
                        if self.is_kind(TokenKind::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.semi()?;
                }
                "minimize" => {
                    if model.objective.is_some() {
                        return Err(self.error("at most one objective"));
                    }
                    self.bump();
                    let name = self.ident("objective name")?;
                    self.expect_kind(TokenKind::Colon, "`:`")?;
                    let expr = self.objective_expr()?;
                    self.semi()?;
                    model.objective = Some(Objective { name, sense: Sense::Minimize, expr });
                }
                "subject" => {
                    self.bump();
                    match self.peek() {
                        Some(t) if t.kind == TokenKind::Keyword && t.text == "to" => {
                            self.bump();
                        }
                        _ => return Err(self.error("`to`")),
                    }
                    let name = self.ident("constraint name")?;
                    self.expect_kind(TokenKind::Colon, "`:`")?;
                    let (lhs, relop, rhs) = self.relation()?;
                    self.semi()?;
                    model.constraints.push(Constraint { name, lhs, relop, rhs });
                }
                _ => return Err(self.error("a statement keyword")),
            }
        }
        Ok(model)
    }

    fn stage_decl(&mut self) -> Result<StageDecl, ParseError> {
        let kind = match self.bump().expect("peeked").text.as_str() {
            "deterministic" => StageKind::Deterministic,
            _ => StageKind::Stochastic,
        };
        let mut object_names = Vec::new();
        loop {
            object_names.push(self.ident("object name")?);
            if self.is_kind(TokenKind::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_kind(TokenKind::Colon, "`:`")?;
        let stage_set = self.stage_set()?;
        self.semi()?;
        Ok(StageDecl { kind, object_names, stage_set })
    }

    fn stage_set(&mut self) -> Result<StageSetExpr, ParseError> {
        let lo = self.stage_atom()?;
        let hi = if self.is_kind(TokenKind::Range) {
            self.bump();
            Some(self.stage_atom()?)
        } else {
            None
        };
        Ok(StageSetExpr { lo, hi })
    }

    fn stage_atom(&mut self) -> Result<StageAtom, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Int && !t.text.starts_with('-') => {
                let value = t.text.parse::<u32>().map_err(|_| self.error("a stage number"))?;
                self.bump();
                Ok(StageAtom::Lit(value))
            }
            Some(t) if t.kind == TokenKind::Ident && t.text == "T" => {
                self.bump();
                Ok(StageAtom::Horizon)
            }
            _ => Err(self.error("a stage number or `T`")),
        }
    }

    fn var_item(&mut self) -> Result<VarDecl, ParseError> {
        let name = self.ident("variable name")?;
        let mut lb = f64::NEG_INFINITY;
        let mut ub = f64::INFINITY;
        let mut have_lb = false;
        let mut have_ub = false;
        while self.is_op(">=") || self.is_op("<=") {
            let op = self.bump().expect("peeked").text.clone();
            let value = self.signed_number()?;
            match op.as_str() {
                ">=" => {
                    if have_lb {
                        return Err(self.error("a single lower bound"));
                    }
                    lb = value;
                    have_lb = true;
                }
                _ => {
                    if have_ub {
                        return Err(self.error("a single upper bound"));
                    }
                    ub = value;
                    have_ub = true;
                }
            }
        }
        Ok(VarDecl { name, lb, ub })
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let negative = if self.is_op("-") {
            self.bump();
            true
        } else {
            false
        };
        let value = self.number()?;
        Ok(if negative { -value } else { value })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Int || t.kind == TokenKind::Real => {
                let value = t.text.parse::<f64>().map_err(|_| self.error("a number"))?;
                self.bump();
                Ok(value)
            }
            _ => Err(self.error("a number")),
        }
    }

    /// True when the tokens from the cursor form `E ( ... )` whose closing
    /// parenthesis is the last token before `end`.
    fn at_expect_wrapper(&self, end: usize) -> bool {
        let is_e = self
            .peek()
            .map(|t| t.kind == TokenKind::Ident && t.text == "E")
            .unwrap_or(false);
        if !is_e || self.peek_at(1).map(|t| t.kind) != Some(TokenKind::LParen) {
            return false;
        }
        let mut depth = 0usize;
        for i in (self.pos + 1)..end {
            match self.tokens[i].kind {
                TokenKind::LParen => depth += 1,
                TokenKind::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        return i + 1 == end;
                    }
                }
                _ => {}
            }
        }
        false
    }

    fn expect_wrapped_expr(&mut self, _end: usize) -> Result<LinExpr, ParseError> {
        self.bump(); // E
        self.bump(); // (
        let mut expr = self.expr()?;
        self.expect_kind(TokenKind::RParen, "`)`")?;
        expr.expect = true;
        Ok(expr)
    }

    fn objective_expr(&mut self) -> Result<LinExpr, ParseError> {
        let end = self.tokens[self.pos..]
            .iter()
            .position(|t| t.kind == TokenKind::Semi)
            .map(|off| self.pos + off)
            .unwrap_or(self.tokens.len());
        if self.at_expect_wrapper(end) {
            self.expect_wrapped_expr(end)
        } else {
            self.expr()
        }
    }

    fn relation(&mut self) -> Result<(LinExpr, Relop, LinExpr), ParseError> {
        let lhs = self.expr()?;
        let relop = match self.peek() {
            Some(t) if t.kind == TokenKind::Op => match t.text.as_str() {
                "=" => Relop::Eq,
                "<=" => Relop::Le,
                ">=" => Relop::Ge,
                _ => return Err(self.error("`=`, `<=`, or `>=`")),
            },
            _ => return Err(self.error("`=`, `<=`, or `>=`")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok((lhs, relop, rhs))
    }

    fn expr(&mut self) -> Result<LinExpr, ParseError> {
        let mut out = LinExpr::zero();
        let mut sign = 1.0;
        if self.is_op("-") {
            self.bump();
            sign = -1.0;
        }
        self.term(sign, &mut out)?;
        loop {
            let sign = if self.is_op("+") {
                1.0
            } else if self.is_op("-") {
                -1.0
            } else {
                break;
            };
            self.bump();
            self.term(sign, &mut out)?;
        }
        Ok(out)
    }

    fn term(&mut self, sign: f64, out: &mut LinExpr) -> Result<(), ParseError> {
        let start = self.pos;
        let mut coeff = sign;
        let mut factors: Vec<SymbolRef> = Vec::new();
        loop {
            self.factor(&mut coeff, &mut factors)?;
            if self.is_op("*") {
                self.bump();
            } else {
                break;
            }
        }
        if factors.len() > 2 {
            let t = &self.tokens[start];
            return Err(ParseError {
                line: t.line,
                col: t.col,
                expected: "at most two symbol factors per term".into(),
                found: format!("{} factors", factors.len()),
            });
        }
        if factors.is_empty() {
            out.constant += coeff;
        } else {
            out.terms.push(Term { coeff, factors });
        }
        Ok(())
    }

    fn factor(
        &mut self,
        coeff: &mut f64,
        factors: &mut Vec<SymbolRef>,
    ) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Int || t.kind == TokenKind::Real => {
                *coeff *= self.number()?;
                Ok(())
            }
            Some(t) if t.kind == TokenKind::Ident => {
                let name = t.text.clone();
                self.bump();
                let mut recourse_depth = 0;
                if self.is_kind(TokenKind::LParen) {
                    let depth_tok = self.peek_at(1);
                    let is_recourse = depth_tok
                        .map(|t| t.kind == TokenKind::Int && t.text.starts_with('-'))
                        .unwrap_or(false);
                    if !is_recourse {
                        let what = if name == "E" {
                            "`E(...)` only around the whole objective"
                        } else {
                            "a negative recourse depth like `(-1)`"
                        };
                        self.bump();
                        return Err(self.error(what));
                    }
                    self.bump(); // (
                    let text = &self.bump().expect("peeked").text;
                    let depth = text[1..]
                        .parse::<u32>()
                        .map_err(|_| self.error("a recourse depth"))?;
                    self.expect_kind(TokenKind::RParen, "`)`")?;
                    recourse_depth = depth;
                }
                factors.push(SymbolRef { name, recourse_depth });
                Ok(())
            }
            _ => Err(self.error("a number or identifier")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::lexer::tokenize;

    fn parse(src: &str) -> MetaModel {
        parse_model(&tokenize(src).unwrap()).unwrap()
    }

    fn parse_err(src: &str) -> ParseError {
        parse_model(&tokenize(src).unwrap()).unwrap_err()
    }

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

    #[test]
    fn purchase_model_shape() {
        let m = parse(PURCHASE);
        assert_eq!(m.params.len(), 1);
        assert_eq!(m.params[0].name, "a");
        assert_eq!(m.implicit_params(), vec!["V".to_string()]);
        assert_eq!(m.vars.len(), 2);
        assert_eq!(m.vars[0], VarDecl { name: "x".into(), lb: 0.0, ub: f64::INFINITY });
        assert!(m.objective.is_some());
        assert_eq!(m.constraints.len(), 3);
        assert_eq!(m.stage_decls.len(), 5);
    }

    #[test]
    fn purchase_model_details() {
        let m = parse(PURCHASE);
        let obj = m.objective.as_ref().unwrap();
        assert!(obj.expr.expect);
        assert_eq!(obj.expr.terms.len(), 1);
        assert_eq!(obj.expr.terms[0].coeff, 1.0);
        assert_eq!(
            obj.expr.terms[0].factors,
            vec![
                SymbolRef { name: "V".into(), recourse_depth: 0 },
                SymbolRef { name: "x".into(), recourse_depth: 0 },
            ]
        );

        let balance = &m.constraints[0];
        assert_eq!(balance.name, "non_anticitpativity");
        assert_eq!(
            balance.lhs.terms,
            vec![
                Term { coeff: 1.0, factors: vec![SymbolRef { name: "s".into(), recourse_depth: 0 }] },
                Term {
                    coeff: -1.0,
                    factors: vec![SymbolRef { name: "s".into(), recourse_depth: 1 }],
                },
            ]
        );
        assert_eq!(balance.relop, Relop::Eq);

        assert_eq!(
            m.stage_decls[1],
            StageDecl {
                kind: StageKind::Stochastic,
                object_names: vec!["x".into(), "s".into(), "objective_function".into()],
                stage_set: StageSetExpr {
                    lo: StageAtom::Lit(0),
                    hi: Some(StageAtom::Horizon)
                },
            }
        );
        assert_eq!(
            m.stage_decls[0].stage_set,
            StageSetExpr { lo: StageAtom::Horizon, hi: None }
        );
    }

    #[test]
    fn empty_source_gives_empty_model() {
        let m = parse("");
        assert!(m.is_empty());
        assert!(m.objective.is_none());
    }

    #[test]
    fn param_without_name_errors_at_semicolon() {
        let err = parse_err("param ;");
        assert_eq!((err.line, err.col), (1, 7));
        assert!(err.expected.contains("identifier"));
        assert_eq!(err.found, "`;`");
    }

    #[test]
    fn constants_fold_into_expression() {
        let m = parse("subject to c: 2 * x + 3 - 1 = 4;");
        let c = &m.constraints[0];
        assert_eq!(c.lhs.terms.len(), 1);
        assert_eq!(c.lhs.terms[0].coeff, 2.0);
        assert_eq!(c.lhs.constant, 2.0);
        assert_eq!(c.rhs.constant, 4.0);
    }

    #[test]
    fn leading_minus_and_numeric_products() {
        let m = parse("subject to c: -2 * x + 3 * 4 = 0;");
        let c = &m.constraints[0];
        assert_eq!(c.lhs.terms[0].coeff, -2.0);
        assert_eq!(c.lhs.constant, 12.0);
    }

    #[test]
    fn three_symbol_factors_rejected() {
        let err = parse_err("subject to c: a * b * x = 0;");
        assert!(err.expected.contains("two symbol factors"));
    }

    #[test]
    fn expect_wrapper_only_in_objective() {
        let err = parse_err("subject to c: E(x) = 0;");
        assert!(err.expected.contains("objective"));
        let err = parse_err("minimize f: E(x) + y;");
        assert!(err.expected.contains("objective"));
    }

    #[test]
    fn expect_wrapper_around_whole_objective() {
        let m = parse("minimize f: E(2 * x + y);");
        let e = &m.objective.as_ref().unwrap().expr;
        assert!(e.expect);
        assert_eq!(e.terms.len(), 2);
    }

    #[test]
    fn objective_without_wrapper() {
        let m = parse("minimize f: x + 1;");
        assert!(!m.objective.as_ref().unwrap().expr.expect);
    }

    #[test]
    fn nested_parens_inside_wrapper() {
        let m = parse("minimize f: E(s(-1) + x);");
        let e = &m.objective.as_ref().unwrap().expr;
        assert!(e.expect);
        assert_eq!(e.terms[0].factors[0].recourse_depth, 1);
    }

    #[test]
    fn duplicate_objective_rejected() {
        let err = parse_err("minimize f: x; minimize g: x;");
        assert!(err.expected.contains("one objective"));
    }

    #[test]
    fn var_bounds_both_sides() {
        let m = parse("var x >= 0 <= 5, y, z <= -1;");
        assert_eq!(m.vars[0], VarDecl { name: "x".into(), lb: 0.0, ub: 5.0 });
        assert_eq!(m.vars[1], VarDecl { name: "y".into(), lb: f64::NEG_INFINITY, ub: f64::INFINITY });
        assert_eq!(m.vars[2], VarDecl { name: "z".into(), lb: f64::NEG_INFINITY, ub: -1.0 });
    }

    #[test]
    fn recourse_requires_negative_int() {
        assert!(parse_model(&tokenize("subject to c: s(1) = 0;").unwrap()).is_err());
    }

    #[test]
    fn error_position_inside_offending_token() {
        let err = parse_err("stochastic x: 1..;");
        assert_eq!((err.line, err.col), (1, 18));
    }
}
