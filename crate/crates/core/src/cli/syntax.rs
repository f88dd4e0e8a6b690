//! Text syntax for angular expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := atom ('^' '-'? integer)?
//! atom   := 'zeta' | 'W' | 'i' | number
//!         | 'h' '(' int '/' int ')'
//!         | ('exp' | 'log' | 'inv' | 'conj') '(' expr ')'
//!         | '(' expr ')'
//! ```
//!
//! `a - b` is `a + (-1) b`, `a / b` is `a * inv(b)`. Sums, products and
//! negations of constants are folded into a single constant, so the printed
//! form of a parsed tree parses back to the same tree.

use std::fmt;

use thiserror::Error;

use crate::domain::ComplexValue;
use crate::expr::{Expr, Node};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    InvalidCharacter(char),
    UnexpectedToken { found: String, expected: Vec<String> },
    InvalidIndex { k: i64, m: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {}", describe(.kind))]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::InvalidCharacter(c) => format!("invalid character {c:?}"),
        ParseErrorKind::UnexpectedToken { found, expected } => {
            format!("expected one of {}, found {found}", expected.join(", "))
        }
        ParseErrorKind::InvalidIndex { k, m } => {
            format!("invalid index h({k}/{m}): need m >= 1 and |k| <= m - 1")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) => write!(f, "number {s}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push((start, Tok::Num(src[start..i].to_string())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or(c);
            return Err(ParseError {
                offset: i,
                kind: ParseErrorKind::InvalidCharacter(ch),
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

const ATOM_START: &[&str] = &["'zeta'", "'W'", "'i'", "'h'", "number", "'exp'", "'log'", "'inv'", "'conj'", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind: ParseErrorKind::UnexpectedToken {
                found: self.peek().to_string(),
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("'{c}'")]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    let r = self.term()?;
                    acc = fold_add(acc, r);
                }
                Tok::Sym('-') => {
                    self.bump();
                    let r = self.term()?;
                    acc = fold_add(acc, fold_neg(r));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    let r = self.unary()?;
                    acc = fold_mul(acc, r);
                }
                Tok::Sym('/') => {
                    self.bump();
                    let r = self.unary()?;
                    acc = fold_mul(acc, r.inv());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            Ok(fold_neg(self.unary()?))
        } else {
            self.factor()
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let p = self.integer(&["integer exponent"])?;
        let p = i32::try_from(p).map_err(|_| self.unexpected(&["exponent in i32 range"]))?;
        Ok(base.powi(p))
    }

    /// `'-'? digits`
    fn integer(&mut self, what: &[&str]) -> Result<i64, ParseError> {
        let neg = *self.peek() == Tok::Sym('-');
        if neg {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Num(s) if s.bytes().all(|b| b.is_ascii_digit()) => {
                let v: i64 = s.parse().map_err(|_| self.unexpected(&["integer in i64 range"]))?;
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn call(&mut self) -> Result<Expr, ParseError> {
        self.expect_sym('(')?;
        let e = self.expr()?;
        self.expect_sym(')')?;
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        match self.peek().clone() {
            Tok::Num(s) => {
                let v: f64 = s.parse().map_err(|_| self.unexpected(&["number"]))?;
                self.bump();
                Ok(Expr::real(v))
            }
            Tok::Sym('(') => self.call(),
            Tok::Ident(id) => {
                self.bump();
                match id.as_str() {
                    "zeta" => Ok(Expr::zeta()),
                    "W" => Ok(Expr::w()),
                    "i" => Ok(Expr::i()),
                    "exp" => Ok(self.call()?.exp()),
                    "log" => Ok(self.call()?.log()),
                    "inv" => Ok(self.call()?.inv()),
                    "conj" => Ok(self.call()?.conj()),
                    "h" => {
                        self.expect_sym('(')?;
                        let k = self.integer(&["integer k"])?;
                        self.expect_sym('/')?;
                        let m = self.integer(&["integer m"])?;
                        self.expect_sym(')')?;
                        let bad = ParseError {
                            offset: start,
                            kind: ParseErrorKind::InvalidIndex { k, m },
                        };
                        let (k32, m32) = match (i32::try_from(k), i32::try_from(m)) {
                            (Ok(k), Ok(m)) => (k, m),
                            _ => return Err(bad),
                        };
                        Expr::hkm(k32, m32).map_err(|_| bad)
                    }
                    _ => {
                        self.pos -= 1;
                        Err(self.unexpected(ATOM_START))
                    }
                }
            }
            _ => Err(self.unexpected(ATOM_START)),
        }
    }
}

fn as_const(e: &Expr) -> Option<ComplexValue> {
    match e.node() {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn fold_add(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(a), Some(b)) => Expr::constant(a + b),
        _ => l + r,
    }
}

fn fold_mul(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(a), Some(b)) => Expr::constant(a * b),
        _ => l * r,
    }
}

fn fold_neg(e: Expr) -> Expr {
    match as_const(&e) {
        Some(c) => Expr::constant(-c),
        None => -e,
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected(&["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]));
    }
    Ok(e)
}

fn write_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_sign_negative() {
        write!(f, "(-{:?})", -x)
    } else {
        write!(f, "{x:?}")
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: ComplexValue) -> fmt::Result {
    if c.im == 0.0 {
        write_real(f, c.re)
    } else if c.re == 0.0 {
        match c.im {
            1.0 => f.write_str("i"),
            -1.0 => f.write_str("(-i)"),
            im => {
                f.write_str("(")?;
                write_real(f, im)?;
                f.write_str("*i)")
            }
        }
    } else {
        f.write_str("(")?;
        write_real(f, c.re)?;
        f.write_str(" + ")?;
        write_real(f, c.im)?;
        f.write_str("*i)")
    }
}

/// Prints in the grammar above, fully parenthesized.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, *c),
            Node::Zeta => f.write_str("zeta"),
            Node::W => f.write_str("W"),
            Node::Hkm { k, m } => write!(f, "h({k}/{m})"),
            Node::Add(l, r) => write!(f, "({l} + {r})"),
            Node::Mul(l, r) => write!(f, "({l} * {r})"),
            Node::Inv(x) => write!(f, "inv({x})"),
            Node::Exp(x) => write!(f, "exp({x})"),
            Node::Log(x) => write!(f, "log({x})"),
            Node::Conj(x) => write!(f, "conj({x})"),
            Node::IntPow(x, p) => write!(f, "({x})^{p}"),
        }
    }
}
