use super::{BinaryOp, Node, ScalarExpr, UnaryOp, Var};

/// Exact partial derivative. Constructors fold trivial factors as the tree
/// is built, which keeps repeated differentiation tractable.
pub(crate) fn differentiate(e: &ScalarExpr, v: Var) -> ScalarExpr {
    if !e.depends_on(v) {
        return ScalarExpr::zero();
    }
    match e.node() {
        Node::Const(_) => ScalarExpr::zero(),
        Node::Var(w) => ScalarExpr::constant(if *w == v { 1.0 } else { 0.0 }),
        Node::Unary(op, a) => {
            let da = differentiate(a, v);
            match op {
                UnaryOp::Neg => -da,
                UnaryOp::Sin => a.cos() * da,
                UnaryOp::Cos => -(a.sin() * da),
                UnaryOp::Exp => e * &da,
                UnaryOp::Log => da / a.clone(),
                UnaryOp::Sqrt => da / (2.0 * e.clone()),
                UnaryOp::Atan => da / (1.0 + a.powi(2)),
            }
        }
        Node::Binary(op, a, b) => {
            let da = differentiate(a, v);
            let db = differentiate(b, v);
            match op {
                BinaryOp::Add => da + db,
                BinaryOp::Sub => da - db,
                BinaryOp::Mul => &da * b + a * &db,
                BinaryOp::Div => {
                    if db.is_const_value(0.0) {
                        da / b.clone()
                    } else {
                        (&da * b - a * &db) / b.powi(2)
                    }
                }
                BinaryOp::Atan2 => (b * &da - a * &db) / (a.powi(2) + b.powi(2)),
            }
        }
        Node::Pow(a, r) => {
            let da = differentiate(a, v);
            ScalarExpr::constant(r.to_f64()) * a.powr(r.minus_one()) * da
        }
        Node::Apply(f, a) => {
            let da = differentiate(a, v);
            f.derivative().substitute_param(a) * da
        }
        Node::Potential(f) => f.partial(v),
    }
}
