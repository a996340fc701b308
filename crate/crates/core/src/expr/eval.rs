use std::fmt;

use thiserror::Error;

use super::{BinaryOp, Node, Rational, ScalarExpr, UnaryOp, Var};
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    PowDomain,
    UnboundVariable(&'static str),
    Opaque(String),
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::LogNonPositive => f.write_str("log of a non-positive number"),
            DomainKind::SqrtNegative => f.write_str("square root of a negative number"),
            DomainKind::DivisionByZero => f.write_str("division by zero"),
            DomainKind::PowDomain => f.write_str("power outside its real domain"),
            DomainKind::UnboundVariable(v) => write!(f, "variable `{v}` has no value"),
            DomainKind::Opaque(msg) => f.write_str(msg),
        }
    }
}

/// Evaluation outside the domain of some node.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{node}` at {point}{}", .param.map(|s| format!(" (s = {s})")).unwrap_or_default())]
pub struct EvalError {
    pub kind: DomainKind,
    /// Printed form of the offending sub-expression, truncated.
    pub node: String,
    pub point: Vec3,
    pub param: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Env {
    p: Vec3,
    s: Option<f64>,
    spatial: bool,
}

impl Env {
    pub(crate) fn point(p: Vec3) -> Self {
        Env {
            p,
            s: None,
            spatial: true,
        }
    }

    pub(crate) fn param(s: f64) -> Self {
        Env {
            p: Vec3::ZERO,
            s: Some(s),
            spatial: false,
        }
    }
}

pub(crate) fn apply_unary(op: UnaryOp, a: f64) -> Option<f64> {
    Some(match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Exp => a.exp(),
        UnaryOp::Log => {
            if a <= 0.0 || a.is_nan() {
                return None;
            }
            a.ln()
        }
        UnaryOp::Sqrt => {
            if a < 0.0 || a.is_nan() {
                return None;
            }
            a.sqrt()
        }
        UnaryOp::Atan => a.atan(),
    })
}

pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Option<f64> {
    Some(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == 0.0 {
                return None;
            }
            a / b
        }
        BinaryOp::Atan2 => a.atan2(b),
    })
}

pub(crate) fn apply_pow(a: f64, r: Rational) -> Option<f64> {
    let (num, den) = (r.num(), r.den());
    if a == 0.0 && num < 0 {
        return None;
    }
    if den == 1 {
        return Some(match i32::try_from(num) {
            Ok(n) => a.powi(n),
            Err(_) => a.powf(num as f64),
        });
    }
    if den == 2 {
        if a < 0.0 {
            return None;
        }
        let root = a.sqrt();
        return Some(match i32::try_from(num) {
            Ok(n) => root.powi(n),
            Err(_) => root.powf(num as f64),
        });
    }
    if a < 0.0 {
        // real odd roots of negative numbers
        if den % 2 == 0 {
            return None;
        }
        let sign = if num % 2 == 0 { 1.0 } else { -1.0 };
        return Some(sign * (-a).powf(r.to_f64()));
    }
    Some(a.powf(r.to_f64()))
}

fn fail(kind: DomainKind, e: &ScalarExpr, env: Env) -> EvalError {
    let mut node = e.to_string();
    if node.len() > 96 {
        let cut = (0..=96)
            .rev()
            .find(|i| node.is_char_boundary(*i))
            .unwrap_or(0);
        node.truncate(cut);
        node.push_str("...");
    }
    EvalError {
        kind,
        node,
        point: env.p,
        param: env.s,
    }
}

pub(crate) fn eval(e: &ScalarExpr, env: Env) -> Result<f64, EvalError> {
    match e.node() {
        Node::Const(c) => Ok(*c),
        Node::Var(v) => match (v, env.spatial) {
            (Var::X, true) => Ok(env.p.x),
            (Var::Y, true) => Ok(env.p.y),
            (Var::Z, true) => Ok(env.p.z),
            (Var::S, _) if env.s.is_some() => Ok(env.s.unwrap_or_default()),
            (v, _) => Err(fail(DomainKind::UnboundVariable(v.name()), e, env)),
        },
        Node::Unary(op, a) => {
            let x = eval(a, env)?;
            apply_unary(*op, x).ok_or_else(|| {
                let kind = match op {
                    UnaryOp::Log => DomainKind::LogNonPositive,
                    _ => DomainKind::SqrtNegative,
                };
                fail(kind, e, env)
            })
        }
        Node::Binary(op, a, b) => {
            let x = eval(a, env)?;
            let y = eval(b, env)?;
            apply_binary(*op, x, y).ok_or_else(|| fail(DomainKind::DivisionByZero, e, env))
        }
        Node::Pow(a, r) => {
            let x = eval(a, env)?;
            apply_pow(x, *r).ok_or_else(|| fail(DomainKind::PowDomain, e, env))
        }
        Node::Apply(f, a) => {
            let s = eval(a, env)?;
            f.value(s).map_err(|m| fail(DomainKind::Opaque(m), e, env))
        }
        Node::Potential(f) => {
            if !env.spatial {
                return Err(fail(DomainKind::UnboundVariable("x"), e, env));
            }
            f.value(env.p)
                .map_err(|m| fail(DomainKind::Opaque(m), e, env))
        }
    }
}
