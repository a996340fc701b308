//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' int_or_rational)?
//! base   := number | var | func '(' expr (',' expr)? ')' | '(' expr ')' | '-' base
//! ```
//!
//! Multiplication must be explicit. A minus sign applied directly to a
//! constant is folded into a negative constant. Note that `-x^2` is
//! `(-x)^2` under this grammar.

use std::fmt;

use thiserror::Error;

use super::{BinaryOp, Node, Rational, ScalarExpr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken {
        found: String,
        expected: &'static str,
    },
    UnexpectedEnd {
        expected: &'static str,
    },
    UnknownIdentifier(String),
    ImplicitMultiplication(String),
    InvalidNumber(String),
    InvalidExponent,
    WrongArity {
        func: &'static str,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found `{found}`")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::ImplicitMultiplication(found) => write!(
                f,
                "`{found}` follows an operand without an operator (implicit multiplication is not supported, write `*`)"
            ),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::InvalidExponent => {
                f.write_str("exponent must be an integer or a rational p/q")
            }
            ParseErrorKind::WrongArity {
                func,
                expected,
                found,
            } => write!(f, "`{func}` takes {expected} argument(s), found {found}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Num(v) => v.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::End => "end of input".into(),
        }
    }

    fn starts_operand(&self) -> bool {
        matches!(self, Tok::Num(_) | Tok::Ident(_) | Tok::LParen)
    }
}

pub(crate) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<(Tok, usize)>,
    allow_param: bool,
    aliases: &'a [(&'a str, ScalarExpr)],
}

impl<'a> Parser<'a> {
    pub(crate) fn spatial(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            peeked: None,
            allow_param: false,
            aliases: &[],
        }
    }

    pub(crate) fn profile(src: &'a str) -> Self {
        Parser {
            allow_param: true,
            ..Parser::spatial(src)
        }
    }

    pub(crate) fn with_aliases(mut self, aliases: &'a [(&'a str, ScalarExpr)]) -> Self {
        self.aliases = aliases;
        self
    }

    pub(crate) fn parse(mut self) -> Result<ScalarExpr, ParseError> {
        let e = self.expr()?;
        let (tok, at) = self.next()?;
        match tok {
            Tok::End => Ok(e),
            t if t.starts_operand() => Err(ParseError {
                kind: ParseErrorKind::ImplicitMultiplication(t.text()),
                offset: at,
            }),
            t => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken {
                    found: t.text(),
                    expected: "an operator or end of input",
                },
                offset: at,
            }),
        }
    }

    fn lex(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            self.pos = end;
            return text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| (Tok::Num(v), start))
                .ok_or(ParseError {
                    kind: ParseErrorKind::InvalidNumber(text.to_string()),
                    offset: start,
                });
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('\0');
        Err(ParseError {
            kind: ParseErrorKind::UnexpectedChar(ch),
            offset: start,
        })
    }

    fn peek(&mut self) -> Result<&(Tok, usize), ParseError> {
        if self.peeked.is_none() {
            let t = self.lex()?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().expect("peeked token"))
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), ParseError> {
        let (tok, at) = self.next()?;
        if tok == want {
            return Ok(());
        }
        Err(unexpected(tok, at, expected))
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek()?.0 {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.term()?;
            lhs = raw_binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let (tok, at) = self.peek()?.clone();
            let op = match tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                t if t.starts_operand() => {
                    return Err(ParseError {
                        kind: ParseErrorKind::ImplicitMultiplication(t.text()),
                        offset: at,
                    })
                }
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.factor()?;
            lhs = raw_binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr, ParseError> {
        let base = self.base()?;
        if self.peek()?.0 != Tok::Caret {
            return Ok(base);
        }
        self.next()?;
        let r = self.exponent()?;
        Ok(ScalarExpr::from_node(Node::Pow(base, r)))
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let (mut tok, mut at) = self.next()?;
        let mut sign = 1;
        if tok == Tok::Minus {
            sign = -1;
            (tok, at) = self.next()?;
        }
        match tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e15 => Ok(sign * v as i64),
            _ => Err(ParseError {
                kind: ParseErrorKind::InvalidExponent,
                offset: at,
            }),
        }
    }

    fn exponent(&mut self) -> Result<Rational, ParseError> {
        let at = self.peek()?.1;
        if self.peek()?.0 != Tok::LParen {
            return Ok(Rational::integer(self.signed_int()?));
        }
        self.next()?;
        let num = self.signed_int()?;
        let mut den = 1;
        if self.peek()?.0 == Tok::Slash {
            self.next()?;
            den = self.signed_int()?;
        }
        self.expect(Tok::RParen, "`)` closing the exponent")?;
        Rational::new(num, den).ok_or(ParseError {
            kind: ParseErrorKind::InvalidExponent,
            offset: at,
        })
    }

    fn base(&mut self) -> Result<ScalarExpr, ParseError> {
        let (tok, at) = self.next()?;
        match tok {
            Tok::Num(v) => Ok(ScalarExpr::constant(v)),
            Tok::Minus => {
                let inner = self.base()?;
                Ok(match inner.as_const() {
                    Some(c) => ScalarExpr::constant(-c),
                    None => ScalarExpr::from_node(Node::Unary(UnaryOp::Neg, inner)),
                })
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(name, at),
            t => Err(unexpected(t, at, "a number, variable, function or `(`")),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<ScalarExpr, ParseError> {
        let var = match name.as_str() {
            "x" if !self.allow_param => Some(Var::X),
            "y" if !self.allow_param => Some(Var::Y),
            "z" if !self.allow_param => Some(Var::Z),
            "s" if self.allow_param => Some(Var::S),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(ScalarExpr::var(v));
        }
        if let Some((_, e)) = self.aliases.iter().find(|(n, _)| *n == name) {
            return Ok(e.clone());
        }
        let (func, arity): (&'static str, usize) = match name.as_str() {
            "sin" => ("sin", 1),
            "cos" => ("cos", 1),
            "exp" => ("exp", 1),
            "log" => ("log", 1),
            "sqrt" => ("sqrt", 1),
            "atan" => ("atan", 1),
            "atan2" => ("atan2", 2),
            _ => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name),
                    offset: at,
                })
            }
        };
        self.expect(Tok::LParen, "`(` after a function name")?;
        let mut args = vec![self.expr()?];
        while self.peek()?.0 == Tok::Comma {
            self.next()?;
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)` closing the argument list")?;
        if args.len() != arity {
            return Err(ParseError {
                kind: ParseErrorKind::WrongArity {
                    func,
                    expected: arity,
                    found: args.len(),
                },
                offset: at,
            });
        }
        let mut args = args.into_iter();
        let a = args.next().expect("first argument");
        let op = match func {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "atan" => UnaryOp::Atan,
            _ => {
                let b = args.next().expect("second argument");
                return Ok(raw_binary(BinaryOp::Atan2, a, b));
            }
        };
        Ok(ScalarExpr::from_node(Node::Unary(op, a)))
    }
}

fn raw_binary(op: BinaryOp, a: ScalarExpr, b: ScalarExpr) -> ScalarExpr {
    ScalarExpr::from_node(Node::Binary(op, a, b))
}

fn unexpected(tok: Tok, at: usize, expected: &'static str) -> ParseError {
    let kind = match tok {
        Tok::End => ParseErrorKind::UnexpectedEnd { expected },
        t => ParseErrorKind::UnexpectedToken {
            found: t.text(),
            expected,
        },
    };
    ParseError { kind, offset: at }
}
