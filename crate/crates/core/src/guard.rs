//! Declarative domain guards excluding coordinate singularities.
//!
//! A guard is written as comparisons joined by `&&` (all must hold) and
//! `||` (binds tighter; at least one of the alternatives must hold), e.g.
//! `r >= 0.05 && x > 0 || y^2 >= 0.0025`. Comparison sides use the
//! expression grammar plus the aliases `r = sqrt(x^2+y^2)` and
//! `rho = sqrt(x^2+y^2+z^2)`. The literal `none` admits every point.

use std::fmt;

use thiserror::Error;

use crate::expr::{ParseError, ScalarExpr};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    text: String,
    lhs: ScalarExpr,
    op: CmpOp,
    rhs: ScalarExpr,
}

impl Comparison {
    /// Unevaluable sides count as a failed comparison.
    pub fn holds(&self, p: Vec3) -> bool {
        match (self.lhs.eval(p), self.rhs.eval(p)) {
            (Ok(a), Ok(b)) => self.op.holds(a, b),
            _ => false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GuardParseError {
    #[error("guard comparison `{0}` needs exactly one of <, <=, >, >=")]
    MissingComparison(String),
    #[error("in guard comparison `{text}`: {source}")]
    Expr {
        text: String,
        #[source]
        source: ParseError,
    },
}

/// Conjunction of disjunctions of comparisons.
#[derive(Debug, Clone, Default)]
pub struct Guard {
    clauses: Vec<Vec<Comparison>>,
}

fn aliases() -> [(&'static str, ScalarExpr); 2] {
    let (x, y, z) = (ScalarExpr::x(), ScalarExpr::y(), ScalarExpr::z());
    let r2 = x.powi(2) + y.powi(2);
    [("r", r2.sqrt()), ("rho", (r2 + z.powi(2)).sqrt())]
}

fn parse_comparison(text: &str) -> Result<Comparison, GuardParseError> {
    let text = text.trim();
    let found: Vec<(usize, CmpOp)> = text
        .char_indices()
        .filter(|(_, c)| *c == '<' || *c == '>')
        .map(|(i, c)| {
            let eq = text[i + 1..].starts_with('=');
            let op = match (c, eq) {
                ('<', false) => CmpOp::Lt,
                ('<', true) => CmpOp::Le,
                ('>', false) => CmpOp::Gt,
                _ => CmpOp::Ge,
            };
            (i, op)
        })
        .collect();
    let [(at, op)] = found[..] else {
        return Err(GuardParseError::MissingComparison(text.to_string()));
    };
    let aliases = aliases();
    let side = |s: &str| {
        ScalarExpr::parse_with_aliases(s, &aliases).map_err(|source| GuardParseError::Expr {
            text: text.to_string(),
            source,
        })
    };
    let lhs = side(&text[..at])?;
    let rhs = side(&text[at + op.symbol().len()..])?;
    let normalized = format!(
        "{} {} {}",
        text[..at].trim(),
        op.symbol(),
        text[at + op.symbol().len()..].trim()
    );
    Ok(Comparison {
        text: normalized,
        lhs,
        op,
        rhs,
    })
}

impl Guard {
    pub fn none() -> Self {
        Guard::default()
    }

    pub fn parse(src: &str) -> Result<Self, GuardParseError> {
        let src = src.trim();
        if src.is_empty() || src == "none" {
            return Ok(Guard::none());
        }
        let clauses = src
            .split("&&")
            .map(|clause| clause.split("||").map(parse_comparison).collect())
            .collect::<Result<_, _>>()?;
        Ok(Guard { clauses })
    }

    pub fn is_none(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn admits(&self, p: Vec3) -> bool {
        p.is_finite()
            && self
                .clauses
                .iter()
                .all(|alts| alts.iter().any(|c| c.holds(p)))
    }

    /// Both guards must hold. Repeated clauses are dropped.
    pub fn and(&self, other: &Guard) -> Guard {
        let mut clauses = self.clauses.clone();
        for clause in &other.clauses {
            let key = clause_text(clause);
            if !clauses.iter().any(|c| clause_text(c) == key) {
                clauses.push(clause.clone());
            }
        }
        Guard { clauses }
    }
}

fn clause_text(alts: &[Comparison]) -> String {
    alts.iter()
        .map(|c| c.text.as_str())
        .collect::<Vec<_>>()
        .join(" || ")
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<String> = self.clauses.iter().map(|c| clause_text(c)).collect();
        f.write_str(&parts.join(" && "))
    }
}

impl PartialEq for Guard {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl std::str::FromStr for Guard {
    type Err = GuardParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Guard::parse(s)
    }
}
