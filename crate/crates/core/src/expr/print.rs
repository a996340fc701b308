//! Display in the input grammar. For trees containing only grammar nodes
//! the printed text parses back to an identical tree.

use std::fmt::{self, Write};

use super::{BinaryOp, Node, ScalarExpr, UnaryOp};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const PREFIX: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &ScalarExpr) -> u8 {
    match e.node() {
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => SUM,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PRODUCT,
        Node::Pow(..) => POWER,
        Node::Unary(UnaryOp::Neg, _) => PREFIX,
        Node::Const(c) if c.is_sign_negative() => PREFIX,
        _ => ATOM,
    }
}

pub(crate) fn write_const(f: &mut impl Write, c: f64) -> fmt::Result {
    if c == 0.0 && c.is_sign_negative() {
        f.write_str("-0")
    } else if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &ScalarExpr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &ScalarExpr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write_const(f, *c),
        Node::Var(v) => f.write_str(v.name()),
        Node::Unary(UnaryOp::Neg, a) => {
            f.write_char('-')?;
            write_at(f, a, PREFIX)
        }
        Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
        Node::Binary(BinaryOp::Atan2, a, b) => write!(f, "atan2({a}, {b})"),
        Node::Binary(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinaryOp::Add => (" + ", SUM, PRODUCT),
                BinaryOp::Sub => (" - ", SUM, PRODUCT),
                BinaryOp::Mul => ("*", PRODUCT, POWER),
                BinaryOp::Div => ("/", PRODUCT, POWER),
                BinaryOp::Atan2 => unreachable!("handled above"),
            };
            write_at(f, a, lp)?;
            f.write_str(sym)?;
            write_at(f, b, rp)
        }
        Node::Pow(a, r) => {
            write_at(f, a, ATOM)?;
            if r.is_integer() && r.num() >= 0 {
                write!(f, "^{r}")
            } else {
                write!(f, "^({r})")
            }
        }
        Node::Apply(func, a) => write!(f, "{}({a})", func.name()),
        Node::Potential(func) => write!(f, "{}(x, y, z)", func.name()),
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(src: &str) {
        let e = ScalarExpr::parse(src).unwrap();
        let printed = e.to_string();
        let back = ScalarExpr::parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(back, e, "{src} printed as {printed}");
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            "x*cos(z) - y*sin(z)",
            "exp(x+y)/sqrt(2)",
            "x - (y - z)",
            "x/(y*z)",
            "x/y/z",
            "-x^2",
            "-(x^2)",
            "(x^2)^3",
            "x^(1/2) + y^(-3/2)",
            "--x",
            "x - -3.25",
            "2*-y",
            "atan2(y, x)*1e-7",
            "(-3)^2 + 0.1",
            "-0*x",
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn readable_output() {
        let e = ScalarExpr::parse("x*cos(z)-y*sin(z)").unwrap();
        assert_eq!(e.to_string(), "x*cos(z) - y*sin(z)");
        let e = ScalarExpr::parse("(x+y)^1").unwrap();
        assert_eq!(e.to_string(), "(x + y)^1");
        assert_eq!(ScalarExpr::parse("x^(-1)").unwrap().to_string(), "x^(-1)");
    }
}
