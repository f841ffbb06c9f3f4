//! The stage-annotated modeling language: lexer, parser, and printer.
//!
//! Model text declares parameters, variables, one objective, and named
//! constraints without any reference to stages. Separate `deterministic` /
//! `stochastic` statements attach a stage set to each named object:
//!
//! ```text
//! deterministic a: T;
//! stochastic x, s, objective_function: 0..T;
//!
//! param a;
//! var x >= 0, s >= 0;
//!
//! minimize objective_function: E(V * x);
//! subject to terminal_stage: s = a;
//! ```
//!
//! `E(...)` marks the objective as an expectation and may wrap only the
//! whole objective expression. `name(-k)` references a variable's value
//! `k` stages up the tree. `#` starts a line comment. The horizon symbol
//! `T` is bound later, when the model is validated against a tree.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{MetaModel, Token, TokenKind};
pub use lexer::{tokenize, LexError};
pub use parser::{parse_model, ParseError};
pub use printer::format_model;

/// Tokenize and parse in one step.
pub fn parse_source(src: &str) -> Result<MetaModel, ModelTextError> {
    let tokens = tokenize(src)?;
    Ok(parse_model(&tokens)?)
}

/// Either phase of reading model text can fail.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelTextError {
    Lex(LexError),
    Parse(ParseError),
}

impl std::fmt::Display for ModelTextError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelTextError::Lex(e) => e.fmt(f),
            ModelTextError::Parse(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ModelTextError {}

impl From<LexError> for ModelTextError {
    fn from(e: LexError) -> Self {
        ModelTextError::Lex(e)
    }
}

impl From<ParseError> for ModelTextError {
    fn from(e: ParseError) -> Self {
        ModelTextError::Parse(e)
    }
}
