//! Tokenizer for model text.

use super::ast::{Token, TokenKind};

const KEYWORDS: [&str; 7] =
    ["deterministic", "stochastic", "param", "var", "minimize", "subject", "to"];

/// A character sequence outside the grammar, with its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub snippet: String,
}

impl std::fmt::Display for LexError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "lex error at {}:{}: unexpected `{}`", self.line, self.col, self.snippet)
    }
}

impl std::error::Error for LexError {}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Split source text into tokens. Comments run from `#` to end of line.
///
/// A `-` directly after `(` fuses with the following number, so the
/// recourse form `s(-1)` yields an `Int` token `-1`; everywhere else `-`
/// is an operator.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut sc = Scanner::new(src);
    let mut tokens: Vec<Token> = Vec::new();

    while let Some(c) = sc.peek() {
        let (line, col) = (sc.line, sc.col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                sc.bump();
            }
            '#' => {
                while let Some(c) = sc.peek() {
                    if c == '\n' {
                        break;
                    }
                    sc.bump();
                }
            }
            '(' => tokens.push(single(&mut sc, TokenKind::LParen, line, col)),
            ')' => tokens.push(single(&mut sc, TokenKind::RParen, line, col)),
            ':' => tokens.push(single(&mut sc, TokenKind::Colon, line, col)),
            ',' => tokens.push(single(&mut sc, TokenKind::Comma, line, col)),
            ';' => tokens.push(single(&mut sc, TokenKind::Semi, line, col)),
            '+' | '*' | '=' => tokens.push(single(&mut sc, TokenKind::Op, line, col)),
            '-' => {
                sc.bump();
                let after_lparen =
                    tokens.last().map(|t| t.kind == TokenKind::LParen).unwrap_or(false);
                if after_lparen && sc.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    let tok = scan_number(&mut sc, line, col, true)?;
                    tokens.push(tok);
                } else {
                    tokens.push(Token { kind: TokenKind::Op, text: "-".into(), line, col });
                }
            }
            '<' | '>' => {
                sc.bump();
                if sc.peek() == Some('=') {
                    sc.bump();
                    tokens.push(Token {
                        kind: TokenKind::Op,
                        text: format!("{c}="),
                        line,
                        col,
                    });
                } else {
                    return Err(LexError { line, col, snippet: c.to_string() });
                }
            }
            '.' => {
                sc.bump();
                if sc.peek() == Some('.') {
                    sc.bump();
                    tokens.push(Token { kind: TokenKind::Range, text: "..".into(), line, col });
                } else {
                    return Err(LexError { line, col, snippet: ".".into() });
                }
            }
            _ if c.is_ascii_digit() => {
                let tok = scan_number(&mut sc, line, col, false)?;
                tokens.push(tok);
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(c) = sc.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        text.push(c);
                        sc.bump();
                    } else {
                        break;
                    }
                }
                let kind = if KEYWORDS.contains(&text.as_str()) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                };
                tokens.push(Token { kind, text, line, col });
            }
            _ => return Err(LexError { line, col, snippet: c.to_string() }),
        }
    }

    Ok(tokens)
}

fn single(sc: &mut Scanner, kind: TokenKind, line: u32, col: u32) -> Token {
    let c = sc.bump().expect("peeked");
    Token { kind, text: c.to_string(), line, col }
}

/// Scan digits, optionally a fraction. A `.` is only consumed when a digit
/// follows, so `0..T` stays an integer followed by a range token.
fn scan_number(sc: &mut Scanner, line: u32, col: u32, negative: bool) -> Result<Token, LexError> {
    let mut text = String::new();
    if negative {
        text.push('-');
    }
    while let Some(c) = sc.peek() {
        if c.is_ascii_digit() {
            text.push(c);
            sc.bump();
        } else {
            break;
        }
    }
    let mut kind = TokenKind::Int;
    if sc.peek() == Some('.') {
        // Two-character lookahead: `1..3` must not become a real.
        let mut ahead = sc.chars.clone();
        ahead.next();
        if ahead.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            kind = TokenKind::Real;
            text.push('.');
            sc.bump();
            while let Some(c) = sc.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    sc.bump();
                } else {
                    break;
                }
            }
        } else if ahead.peek() != Some(&'.') {
            // `1.` with no digit and no range after it.
            return Err(LexError { line: sc.line, col: sc.col, snippet: ".".into() });
        }
    }
    Ok(Token { kind, text, line, col })
}
