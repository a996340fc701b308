use super::{Node, ScalarExpr};

/// Bottom-up constant folding and identity elimination (`0*e`, `e + 0`,
/// `e^1`, `--e`, ...). No trigonometric or algebraic rewriting.
pub(crate) fn simplify(e: &ScalarExpr) -> ScalarExpr {
    match e.node() {
        Node::Const(_) | Node::Var(_) | Node::Potential(_) => e.clone(),
        Node::Unary(op, a) => ScalarExpr::unary(*op, simplify(a)),
        Node::Binary(op, a, b) => ScalarExpr::binary(*op, simplify(a), simplify(b)),
        Node::Pow(a, r) => simplify(a).powr(*r),
        Node::Apply(f, a) => ScalarExpr::apply(f.clone(), simplify(a)),
    }
}
