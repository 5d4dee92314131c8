//! Edge guards: a closed expression language over a single token value `v`.
//!
//! ```text
//! guard   := "else" | or
//! or      := and ("||" and)*
//! and     := unary ("&&" unary)*
//! unary   := "!" unary | atom
//! atom    := "true" | "false" | "(" or ")" | "v" cmp literal | "v"
//! cmp     := "==" | "!=" | "<" | "<=" | ">" | ">="
//! literal := integer | "true" | "false" | "null" | "\"" chars "\""
//! ```
//! A bare `v` tests a boolean token.

use crate::state::TokenValue;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
}

impl Literal {
    fn to_value(&self) -> TokenValue {
        match self {
            Literal::Int(i) => TokenValue::Int(*i),
            Literal::Bool(b) => TokenValue::Bool(*b),
            Literal::Str(s) => TokenValue::Str(s.clone()),
            Literal::Null => TokenValue::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    False,
    Else,
    /// The token itself, which must be boolean.
    Value,
    Cmp(CmpOp, Literal),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuardError {
    #[error("guard syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("guard type mismatch: cannot apply `{op}` to {value}")]
    TypeMismatch { op: String, value: String },
    #[error("`else` is only meaningful on decision outgoing edges")]
    ElseOutsideDecision,
}

/// Evaluate a guard on a token. `else` is rejected here; decision
/// semantics resolve it against sibling guards.
pub fn eval_guard(g: &Guard, v: &TokenValue) -> Result<bool, GuardError> {
    match g {
        Guard::True => Ok(true),
        Guard::False => Ok(false),
        Guard::Else => Err(GuardError::ElseOutsideDecision),
        Guard::Value => match v {
            TokenValue::Bool(b) => Ok(*b),
            other => Err(mismatch("v", other)),
        },
        Guard::Cmp(op, lit) => compare(*op, v, lit),
        Guard::Not(a) => Ok(!eval_guard(a, v)?),
        Guard::And(a, b) => Ok(eval_guard(a, v)? && eval_guard(b, v)?),
        Guard::Or(a, b) => Ok(eval_guard(a, v)? || eval_guard(b, v)?),
    }
}

fn mismatch(op: &str, v: &TokenValue) -> GuardError {
    GuardError::TypeMismatch { op: op.to_string(), value: v.to_string() }
}

fn compare(op: CmpOp, v: &TokenValue, lit: &Literal) -> Result<bool, GuardError> {
    let rhs = lit.to_value();
    match op {
        CmpOp::Eq => Ok(*v == rhs),
        CmpOp::Ne => Ok(*v != rhs),
        _ => {
            let ord = match (v, &rhs) {
                (TokenValue::Int(a), TokenValue::Int(b)) => a.cmp(b),
                (TokenValue::Str(a), TokenValue::Str(b)) => a.cmp(b),
                _ => return Err(mismatch(op.symbol(), v)),
            };
            Ok(match op {
                CmpOp::Lt => ord.is_lt(),
                CmpOp::Le => ord.is_le(),
                CmpOp::Gt => ord.is_gt(),
                CmpOp::Ge => ord.is_ge(),
                CmpOp::Eq | CmpOp::Ne => unreachable!(),
            })
        }
    }
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl Guard {
    pub fn parse(src: &str) -> Result<Guard, GuardError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        p.skip_ws();
        if p.eat_word("else") {
            p.skip_ws();
            return if p.at_end() { Ok(Guard::Else) } else { Err(p.err("trailing input after `else`")) };
        }
        let g = p.or()?;
        p.skip_ws();
        if !p.at_end() {
            return Err(p.err("trailing input"));
        }
        Ok(g)
    }

    pub fn is_else(&self) -> bool {
        matches!(self, Guard::Else)
    }

    /// Whether evaluation can fail on values admitted by `ty`.
    pub fn type_errors(&self, ty: &super::ValueType) -> Option<GuardError> {
        use super::ValueType as T;
        let probe = match ty {
            T::Control => Some(TokenValue::Control),
            T::Int => Some(TokenValue::Int(0)),
            T::Bool => Some(TokenValue::Bool(false)),
            T::Str => Some(TokenValue::Str(String::new())),
            T::Any | T::Named(_) => None,
        };
        let probe = probe?;
        match self {
            Guard::Else => None,
            _ => eval_guard(self, &probe).err(),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => write!(f, "true"),
            Guard::False => write!(f, "false"),
            Guard::Else => write!(f, "else"),
            Guard::Value => write!(f, "v"),
            Guard::Cmp(op, lit) => {
                write!(f, "v {} ", op.symbol())?;
                match lit {
                    Literal::Int(i) => write!(f, "{i}"),
                    Literal::Bool(b) => write!(f, "{b}"),
                    Literal::Str(s) => write!(f, "{s:?}"),
                    Literal::Null => write!(f, "null"),
                }
            }
            Guard::Not(a) => write!(f, "!({a})"),
            Guard::And(a, b) => write!(f, "({a}) && ({b})"),
            Guard::Or(a, b) => write!(f, "({a}) || ({b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> GuardError {
        GuardError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(w.as_bytes()) {
            let next = rest.get(w.len()).copied();
            if !next.is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += w.len();
                return true;
            }
        }
        false
    }

    fn or(&mut self) -> Result<Guard, GuardError> {
        let mut lhs = self.and()?;
        while self.eat("||") {
            let rhs = self.and()?;
            lhs = Guard::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Guard, GuardError> {
        let mut lhs = self.unary()?;
        while self.eat("&&") {
            let rhs = self.unary()?;
            lhs = Guard::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Guard, GuardError> {
        self.skip_ws();
        if self.peek() == Some(b'!') && self.src.get(self.pos + 1) != Some(&b'=') {
            self.pos += 1;
            return Ok(Guard::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Guard, GuardError> {
        if self.eat("(") {
            let g = self.or()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`"));
            }
            return Ok(g);
        }
        if self.eat_word("true") {
            return Ok(Guard::True);
        }
        if self.eat_word("false") {
            return Ok(Guard::False);
        }
        if self.eat_word("v") {
            let op = if self.eat("==") {
                CmpOp::Eq
            } else if self.eat("!=") {
                CmpOp::Ne
            } else if self.eat("<=") {
                CmpOp::Le
            } else if self.eat(">=") {
                CmpOp::Ge
            } else if self.eat("<") {
                CmpOp::Lt
            } else if self.eat(">") {
                CmpOp::Gt
            } else {
                return Ok(Guard::Value);
            };
            let lit = self.literal()?;
            return Ok(Guard::Cmp(op, lit));
        }
        Err(self.err("expected guard expression"))
    }

    fn literal(&mut self) -> Result<Literal, GuardError> {
        self.skip_ws();
        if self.eat_word("true") {
            return Ok(Literal::Bool(true));
        }
        if self.eat_word("false") {
            return Ok(Literal::Bool(false));
        }
        if self.eat_word("null") {
            return Ok(Literal::Null);
        }
        if self.peek() == Some(b'"') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|c| c != b'"') {
                self.pos += 1;
            }
            if self.at_end() {
                return Err(self.err("unterminated string"));
            }
            let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            self.pos += 1;
            return Ok(Literal::Str(s));
        }
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map(Literal::Int)
            .ok_or_else(|| GuardError::Syntax { pos: start, msg: "expected literal".into() })
    }
}
