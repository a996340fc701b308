//! Closed-form scalar fields over R^3 as immutable expression trees.
//!
//! Trees are reference counted, so cloning an expression or sharing a
//! subtree between derivatives is cheap. Besides the grammar nodes there
//! are two opaque node kinds, [`UnivariateFn`] applications and
//! [`PotentialFn`] fields, whose values come from numerics while their
//! derivatives stay exact expressions.

mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

use std::fmt;
use std::sync::Arc;

pub use eval::{DomainKind, EvalError};
pub use parse::{ParseError, ParseErrorKind};

use crate::vec3::Vec3;

/// A variable of an expression.
///
/// `S` is the parameter of one-dimensional profiles (eikonal profiles,
/// angle profiles `F(θ)`, ratio functions `f(γ)`); spatial fields only use
/// `X`, `Y` and `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    S,
}

impl Var {
    pub const SPATIAL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::S => "s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Atan,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Atan => "atan",
        }
    }
}

/// Binary operators. `Atan2(a, b)` is the angle of the point `(b, a)`,
/// matching `f64::atan2` called as `a.atan2(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Atan2,
}

/// Reduced rational exponent `num / den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    /// Returns `None` for a zero denominator.
    pub fn new(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i64;
        let s = if den < 0 { -1 } else { 1 };
        Some(Rational {
            num: s * num / g,
            den: s * den / g,
        })
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self - 1`.
    pub fn minus_one(self) -> Self {
        Rational::new(self.num - self.den, self.den).expect("nonzero denominator")
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A one-dimensional function known numerically whose derivative is a
/// closed-form expression in [`Var::S`].
pub trait UnivariateFn: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, s: f64) -> Result<f64, String>;
    fn derivative(&self) -> &ScalarExpr;
}

/// A scalar field on R^3 known numerically whose partial derivatives are
/// closed-form expressions.
pub trait PotentialFn: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, p: Vec3) -> Result<f64, String>;
    fn partial(&self, v: Var) -> ScalarExpr;
}

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, ScalarExpr),
    Binary(BinaryOp, ScalarExpr, ScalarExpr),
    Pow(ScalarExpr, Rational),
    Apply(Arc<dyn UnivariateFn>, ScalarExpr),
    Potential(Arc<dyn PotentialFn>),
}

/// Immutable scalar expression.
#[derive(Clone)]
pub struct ScalarExpr(Arc<Node>);

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({self})")
    }
}

fn same_object<T: ?Sized>(a: &Arc<T>, b: &Arc<T>) -> bool {
    std::ptr::eq(Arc::as_ptr(a) as *const (), Arc::as_ptr(b) as *const ())
}

impl PartialEq for ScalarExpr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Unary(o1, a), Node::Unary(o2, b)) => o1 == o2 && a == b,
            (Node::Binary(o1, a1, b1), Node::Binary(o2, a2, b2)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            (Node::Pow(a, r1), Node::Pow(b, r2)) => r1 == r2 && a == b,
            (Node::Apply(f1, a), Node::Apply(f2, b)) => same_object(f1, f2) && a == b,
            (Node::Potential(f1), Node::Potential(f2)) => same_object(f1, f2),
            _ => false,
        }
    }
}

impl ScalarExpr {
    pub fn from_node(node: Node) -> Self {
        ScalarExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Parses the expression grammar over the spatial variables `x, y, z`.
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse::Parser::spatial(src).parse()
    }

    /// Parses a one-dimensional profile written in the parameter `s`.
    pub fn parse_profile(src: &str) -> Result<Self, ParseError> {
        parse::Parser::profile(src).parse()
    }

    /// Parses with extra named sub-expressions, e.g. `r` for the
    /// cylindrical radius in guard clauses.
    pub fn parse_with_aliases(
        src: &str,
        aliases: &[(&str, ScalarExpr)],
    ) -> Result<Self, ParseError> {
        parse::Parser::spatial(src).with_aliases(aliases).parse()
    }

    pub fn constant(c: f64) -> Self {
        ScalarExpr::from_node(Node::Const(c))
    }

    pub fn zero() -> Self {
        ScalarExpr::constant(0.0)
    }

    pub fn one() -> Self {
        ScalarExpr::constant(1.0)
    }

    pub fn var(v: Var) -> Self {
        ScalarExpr::from_node(Node::Var(v))
    }

    pub fn x() -> Self {
        ScalarExpr::var(Var::X)
    }

    pub fn y() -> Self {
        ScalarExpr::var(Var::Y)
    }

    pub fn z() -> Self {
        ScalarExpr::var(Var::Z)
    }

    pub fn s() -> Self {
        ScalarExpr::var(Var::S)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const_value(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    /// Applies a numerically known univariate function to `arg`.
    pub fn apply(f: Arc<dyn UnivariateFn>, arg: ScalarExpr) -> Self {
        ScalarExpr::from_node(Node::Apply(f, arg))
    }

    pub fn potential(f: Arc<dyn PotentialFn>) -> Self {
        ScalarExpr::from_node(Node::Potential(f))
    }

    /// True when the tree mentions `v`. Potential nodes count as
    /// depending on every spatial variable.
    pub fn depends_on(&self, v: Var) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Unary(_, a) | Node::Pow(a, _) | Node::Apply(_, a) => a.depends_on(v),
            Node::Binary(_, a, b) => a.depends_on(v) || b.depends_on(v),
            Node::Potential(_) => v != Var::S,
        }
    }

    /// True when the expression contains only grammar nodes, i.e. it can
    /// be printed and parsed back.
    pub fn is_closed_form(&self) -> bool {
        match self.node() {
            Node::Const(c) => c.is_finite(),
            Node::Var(_) => true,
            Node::Unary(_, a) | Node::Pow(a, _) => a.is_closed_form(),
            Node::Binary(_, a, b) => a.is_closed_form() && b.is_closed_form(),
            Node::Apply(..) | Node::Potential(_) => false,
        }
    }

    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Potential(_) => 1,
            Node::Unary(_, a) | Node::Pow(a, _) | Node::Apply(_, a) => 1 + a.node_count(),
            Node::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Replaces the profile parameter `s` by `replacement`.
    pub fn substitute_param(&self, replacement: &ScalarExpr) -> ScalarExpr {
        if !self.depends_on(Var::S) {
            return self.clone();
        }
        match self.node() {
            Node::Var(Var::S) => replacement.clone(),
            Node::Const(_) | Node::Var(_) | Node::Potential(_) => self.clone(),
            Node::Unary(op, a) => ScalarExpr::unary(*op, a.substitute_param(replacement)),
            Node::Binary(op, a, b) => ScalarExpr::binary(
                *op,
                a.substitute_param(replacement),
                b.substitute_param(replacement),
            ),
            Node::Pow(a, r) => a.substitute_param(replacement).powr(*r),
            Node::Apply(f, a) => ScalarExpr::apply(f.clone(), a.substitute_param(replacement)),
        }
    }

    // Constructors below fold constants and drop identities, so that
    // derivative trees stay small. Every rewrite is exact in IEEE
    // arithmetic: a folded constant is computed by the same routine the
    // evaluator would use.

    pub fn unary(op: UnaryOp, a: ScalarExpr) -> Self {
        if let Some(c) = a.as_const() {
            if let Some(v) = eval::apply_unary(op, c).filter(|v| v.is_finite()) {
                return ScalarExpr::constant(v);
            }
        }
        if op == UnaryOp::Neg {
            if let Node::Unary(UnaryOp::Neg, inner) = a.node() {
                return inner.clone();
            }
        }
        ScalarExpr::from_node(Node::Unary(op, a))
    }

    pub fn binary(op: BinaryOp, a: ScalarExpr, b: ScalarExpr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(v) = eval::apply_binary(op, x, y).filter(|v| v.is_finite()) {
                return ScalarExpr::constant(v);
            }
        }
        match op {
            BinaryOp::Add => {
                if a.is_const_value(0.0) {
                    return b;
                }
                if b.is_const_value(0.0) {
                    return a;
                }
            }
            BinaryOp::Sub => {
                if b.is_const_value(0.0) {
                    return a;
                }
                if a.is_const_value(0.0) {
                    return ScalarExpr::unary(UnaryOp::Neg, b);
                }
            }
            BinaryOp::Mul => {
                if a.is_const_value(0.0) || b.is_const_value(0.0) {
                    return ScalarExpr::zero();
                }
                if a.is_const_value(1.0) {
                    return b;
                }
                if b.is_const_value(1.0) {
                    return a;
                }
                if a.is_const_value(-1.0) {
                    return ScalarExpr::unary(UnaryOp::Neg, b);
                }
                if b.is_const_value(-1.0) {
                    return ScalarExpr::unary(UnaryOp::Neg, a);
                }
            }
            BinaryOp::Div => {
                if a.is_const_value(0.0) && !b.is_const_value(0.0) {
                    return ScalarExpr::zero();
                }
                if b.is_const_value(1.0) {
                    return a;
                }
            }
            BinaryOp::Atan2 => {}
        }
        ScalarExpr::from_node(Node::Binary(op, a, b))
    }

    pub fn powr(&self, r: Rational) -> Self {
        if r == Rational::integer(1) {
            return self.clone();
        }
        if r == Rational::integer(0) {
            return ScalarExpr::one();
        }
        if let Some(c) = self.as_const() {
            if let Some(v) = eval::apply_pow(c, r).filter(|v| v.is_finite()) {
                return ScalarExpr::constant(v);
            }
        }
        ScalarExpr::from_node(Node::Pow(self.clone(), r))
    }

    pub fn powi(&self, n: i64) -> Self {
        self.powr(Rational::integer(n))
    }

    pub fn sin(&self) -> Self {
        ScalarExpr::unary(UnaryOp::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        ScalarExpr::unary(UnaryOp::Cos, self.clone())
    }

    pub fn exp(&self) -> Self {
        ScalarExpr::unary(UnaryOp::Exp, self.clone())
    }

    pub fn ln(&self) -> Self {
        ScalarExpr::unary(UnaryOp::Log, self.clone())
    }

    pub fn sqrt(&self) -> Self {
        ScalarExpr::unary(UnaryOp::Sqrt, self.clone())
    }

    pub fn atan(&self) -> Self {
        ScalarExpr::unary(UnaryOp::Atan, self.clone())
    }

    pub fn atan2(&self, other: &ScalarExpr) -> Self {
        ScalarExpr::binary(BinaryOp::Atan2, self.clone(), other.clone())
    }

    pub fn differentiate(&self, v: Var) -> ScalarExpr {
        diff::differentiate(self, v)
    }

    pub fn simplify(&self) -> ScalarExpr {
        simplify::simplify(self)
    }

    /// Evaluates at a point of R^3.
    pub fn eval(&self, p: Vec3) -> Result<f64, EvalError> {
        eval::eval(self, eval::Env::point(p))
    }

    /// Evaluates a profile expression at parameter value `s`.
    pub fn eval_profile(&self, s: f64) -> Result<f64, EvalError> {
        eval::eval(self, eval::Env::param(s))
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::binary($op, self, rhs)
            }
        }
        impl std::ops::$trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::binary($op, self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::binary($op, self, ScalarExpr::constant(rhs))
            }
        }
        impl std::ops::$trait<ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::binary($op, ScalarExpr::constant(self), rhs)
            }
        }
        impl std::ops::$trait<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::binary($op, self, rhs.clone())
            }
        }
        impl std::ops::$trait<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::binary($op, self.clone(), rhs)
            }
        }
        impl std::ops::$trait<f64> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::binary($op, self.clone(), ScalarExpr::constant(rhs))
            }
        }
        impl std::ops::$trait<&ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::binary($op, ScalarExpr::constant(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::unary(UnaryOp::Neg, self)
    }
}

impl std::ops::Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::unary(UnaryOp::Neg, self.clone())
    }
}

impl std::str::FromStr for ScalarExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        ScalarExpr::parse(s)
    }
}
