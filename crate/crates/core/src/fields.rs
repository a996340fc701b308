//! Scalar and vector fields with exact differential operators and a
//! finite-difference curl used as an independent oracle.

use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::expr::{EvalError, ScalarExpr, Var};
use crate::guard::Guard;
use crate::vec3::Vec3;

/// Default step of the finite-difference oracle.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("point {point} is excluded by the guard `{guard}`")]
    Guard { point: Vec3, guard: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: ScalarExpr,
    guard: Guard,
}

impl ScalarField {
    pub fn new(expr: ScalarExpr, guard: Guard) -> Self {
        ScalarField { expr, guard }
    }

    pub fn unguarded(expr: ScalarExpr) -> Self {
        ScalarField::new(expr, Guard::none())
    }

    pub fn expr(&self) -> &ScalarExpr {
        &self.expr
    }

    pub fn guard(&self) -> &Guard {
        &self.guard
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guard = guard;
        self
    }

    pub fn check_guard(&self, p: Vec3) -> Result<(), FieldError> {
        check_guard(&self.guard, p)
    }

    pub fn eval(&self, p: Vec3) -> Result<f64, FieldError> {
        self.check_guard(p)?;
        Ok(self.expr.eval(p)?)
    }

    pub fn gradient(&self) -> VectorField {
        gradient(self)
    }

    pub fn laplacian(&self) -> ScalarField {
        laplacian(self)
    }
}

pub(crate) fn check_guard(guard: &Guard, p: Vec3) -> Result<(), FieldError> {
    if guard.admits(p) {
        Ok(())
    } else {
        Err(FieldError::Guard {
            point: p,
            guard: guard.to_string(),
        })
    }
}

/// A Cartesian vector field `(w_x, w_y, w_z)` with one shared guard.
///
/// The symbolic curl and divergence are computed on first use and cached.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: [ScalarExpr; 3],
    guard: Guard,
    curl: OnceLock<Arc<VectorField>>,
    divergence: OnceLock<ScalarExpr>,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components && self.guard == other.guard
    }
}

impl VectorField {
    pub fn new(components: [ScalarExpr; 3], guard: Guard) -> Self {
        VectorField {
            components,
            guard,
            curl: OnceLock::new(),
            divergence: OnceLock::new(),
        }
    }

    pub fn unguarded(components: [ScalarExpr; 3]) -> Self {
        VectorField::new(components, Guard::none())
    }

    /// Parses three component expressions.
    pub fn parse(components: [&str; 3], guard: Guard) -> Result<Self, crate::expr::ParseError> {
        let [a, b, c] = components;
        Ok(VectorField::new(
            [
                ScalarExpr::parse(a)?,
                ScalarExpr::parse(b)?,
                ScalarExpr::parse(c)?,
            ],
            guard,
        ))
    }

    pub fn components(&self) -> &[ScalarExpr; 3] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarExpr {
        &self.components[i]
    }

    pub fn guard(&self) -> &Guard {
        &self.guard
    }

    pub fn with_guard(self, guard: Guard) -> Self {
        VectorField::new(self.components, guard)
    }

    pub fn check_guard(&self, p: Vec3) -> Result<(), FieldError> {
        check_guard(&self.guard, p)
    }

    pub fn eval(&self, p: Vec3) -> Result<Vec3, FieldError> {
        self.check_guard(p)?;
        self.eval_unguarded(p)
    }

    /// Evaluates without consulting the guard.
    pub fn eval_unguarded(&self, p: Vec3) -> Result<Vec3, FieldError> {
        Ok(Vec3::new(
            self.components[0].eval(p)?,
            self.components[1].eval(p)?,
            self.components[2].eval(p)?,
        ))
    }

    pub fn curl(&self) -> &VectorField {
        self.curl.get_or_init(|| Arc::new(curl(self)))
    }

    pub fn divergence(&self) -> ScalarField {
        let d = self.divergence.get_or_init(|| divergence(self).expr);
        ScalarField::new(d.clone(), self.guard.clone())
    }

    pub fn map(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> VectorField {
        let [a, b, c] = &self.components;
        VectorField::new([f(a), f(b), f(c)], self.guard.clone())
    }

    pub fn neg(&self) -> VectorField {
        self.map(|c| -c)
    }

    pub fn scale(&self, s: &ScalarExpr) -> VectorField {
        self.map(|c| s * c)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let c = |i: usize| &self.components[i] + &other.components[i];
        VectorField::new([c(0), c(1), c(2)], self.guard.and(&other.guard))
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let c = |i: usize| &self.components[i] - &other.components[i];
        VectorField::new([c(0), c(1), c(2)], self.guard.and(&other.guard))
    }

    /// Symbolic dot product.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let [a0, a1, a2] = &self.components;
        let [b0, b1, b2] = &other.components;
        ScalarField::new(a0 * b0 + a1 * b1 + a2 * b2, self.guard.and(&other.guard))
    }

    /// Symbolic cross product.
    pub fn cross(&self, other: &VectorField) -> VectorField {
        let [a0, a1, a2] = &self.components;
        let [b0, b1, b2] = &other.components;
        VectorField::new(
            [a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0],
            self.guard.and(&other.guard),
        )
    }

    pub fn simplify(&self) -> VectorField {
        self.map(ScalarExpr::simplify)
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let d = |v| f.expr.differentiate(v).simplify();
    VectorField::new([d(Var::X), d(Var::Y), d(Var::Z)], f.guard.clone())
}

pub fn curl(w: &VectorField) -> VectorField {
    let d = |i: usize, v: Var| w.components[i].differentiate(v);
    let c = [
        d(2, Var::Y) - d(1, Var::Z),
        d(0, Var::Z) - d(2, Var::X),
        d(1, Var::X) - d(0, Var::Y),
    ];
    VectorField::new(c.map(|e| e.simplify()), w.guard.clone())
}

pub fn divergence(w: &VectorField) -> ScalarField {
    let [a, b, c] = &w.components;
    let div = a.differentiate(Var::X) + b.differentiate(Var::Y) + c.differentiate(Var::Z);
    ScalarField::new(div.simplify(), w.guard.clone())
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    divergence(&gradient(f))
}

/// Central-difference stencils for [`fd_curl`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Second order, points `p ± h`.
    #[default]
    Central2,
    /// Fourth order, points `p ± h`, `p ± 2h`.
    Central4,
}

/// Jacobian `J[i][j] = ∂w_i/∂x_j` by central differences.
pub fn fd_jacobian(
    w: &VectorField,
    p: Vec3,
    h: f64,
    stencil: Stencil,
) -> Result<[[f64; 3]; 3], FieldError> {
    let mut jac = [[0.0; 3]; 3];
    for (j, col) in (0..3).map(|j| (j, Vec3::axis(j) * h)) {
        let at = |k: f64| w.eval(p + col * k);
        let d = match stencil {
            Stencil::Central2 => (at(1.0)? - at(-1.0)?) / (2.0 * h),
            Stencil::Central4 => {
                let (f1, fm1, f2, fm2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
                (fm2 - f2 + (f1 - fm1) * 8.0) / (12.0 * h)
            }
        };
        for i in 0..3 {
            jac[i][j] = d[i];
        }
    }
    Ok(jac)
}

/// Finite-difference curl at `p`. Every stencil point must pass the guard.
pub fn fd_curl(w: &VectorField, p: Vec3, h: f64, stencil: Stencil) -> Result<Vec3, FieldError> {
    let j = fd_jacobian(w, p, h, stencil)?;
    Ok(Vec3::new(
        j[2][1] - j[1][2],
        j[0][2] - j[2][0],
        j[1][0] - j[0][1],
    ))
}

/// Helicity density `h = w · ∇×w` at `p`.
pub fn helicity_density(w: &VectorField, p: Vec3) -> Result<f64, FieldError> {
    let v = w.eval(p)?;
    let c = w.curl().eval_unguarded(p)?;
    Ok(v.dot(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(src: &str) -> ScalarField {
        ScalarField::unguarded(ScalarExpr::parse(src).unwrap())
    }

    fn vf(c: [&str; 3]) -> VectorField {
        VectorField::parse(c, Guard::none()).unwrap()
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn gradients() {
        let g = sf("z").gradient();
        assert_eq!(g.eval(Vec3::new(1.0, 2.0, 3.0)).unwrap(), Vec3::Z);

        let g = sf("exp(x+y)/sqrt(2)").gradient();
        let p = Vec3::new(0.3, -0.1, 2.0);
        let e = (0.2f64).exp() / 2f64.sqrt();
        assert!(close(g.eval(p).unwrap(), Vec3::new(e, e, 0.0), 1e-15));
        assert!((g.eval(p).unwrap().norm() - 0.2f64.exp()).abs() < 1e-15);

        // finite-difference oracle at (1, 1, 0)
        let f = sf("atan2(y, x)");
        let p = Vec3::new(1.0, 1.0, 0.0);
        let h = 1e-6;
        let fd = |axis: Vec3| {
            (f.eval(p + axis * h).unwrap() - f.eval(p - axis * h).unwrap()) / (2.0 * h)
        };
        let g = f.gradient().eval(p).unwrap();
        assert!(close(g, Vec3::new(fd(Vec3::X), fd(Vec3::Y), 0.0), 1e-9));
        assert!(close(g, Vec3::new(-0.5, 0.5, 0.0), 1e-15));
    }

    #[test]
    fn reference_field_is_its_own_curl() {
        let b0 = vf(["sin(z)", "cos(z)", "0"]);
        assert_eq!(b0.curl().components(), b0.components());
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = sf("x^2+y^2+z^2").gradient();
        for c in g.curl().components() {
            assert_eq!(c.as_const(), Some(0.0));
        }
    }

    #[test]
    fn abc_flow_is_an_eigenfield() {
        let abc = vf(["sin(z) + cos(y)", "sin(x) + cos(z)", "sin(y) + cos(x)"]);
        let c = abc.curl();
        for p in [
            Vec3::ZERO,
            Vec3::new(0.4, 1.7, -2.2),
            Vec3::new(3.0, -1.0, 0.5),
        ] {
            assert!(close(c.eval(p).unwrap(), abc.eval(p).unwrap(), 1e-15));
        }
    }

    #[test]
    fn divergences() {
        let b0 = vf(["sin(z)", "cos(z)", "0"]);
        assert_eq!(b0.divergence().expr().as_const(), Some(0.0));
        assert_eq!(
            vf(["x", "y", "z"]).divergence().expr().as_const(),
            Some(3.0)
        );

        // cylindrical example: sin(theta) grad z + cos(theta) grad r
        let w = vf([
            "cos(atan2(y, x))*x/sqrt(x^2+y^2)",
            "cos(atan2(y, x))*y/sqrt(x^2+y^2)",
            "sin(atan2(y, x))",
        ]);
        let div = w.divergence();
        for (r, t) in [(1.0, 0.3), (2.0, -2.0), (0.5, 3.0)] {
            let p = Vec3::new(r * f64::cos(t), r * f64::sin(t), 0.7);
            let d = div.eval(p).unwrap();
            assert!((d - t.cos() / r).abs() < 1e-14, "{d} vs {}", t.cos() / r);
        }
    }

    #[test]
    fn laplacians() {
        let l = sf("exp(x)*sin(y)").laplacian();
        for p in [Vec3::ZERO, Vec3::new(1.0, 2.0, 3.0)] {
            assert!(l.eval(p).unwrap().abs() < 1e-14);
        }
        assert_eq!(sf("x^2").laplacian().expr().as_const(), Some(2.0));
        let l = sf("log(sqrt(x^2+y^2))").laplacian();
        let mut rng = 0.123_f64;
        for _ in 0..10 {
            rng = (rng * 997.0 + 0.31).fract();
            let r = 0.2 + 2.0 * rng;
            let t = 6.0 * rng - 3.0;
            let p = Vec3::new(r * t.cos(), r * t.sin(), rng);
            assert!(l.eval(p).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn finite_difference_curl() {
        let b0 = vf(["sin(z)", "cos(z)", "0"]);
        let c = fd_curl(&b0, Vec3::Z, DEFAULT_FD_STEP, Stencil::Central2).unwrap();
        assert!(close(c, Vec3::new(1f64.sin(), 1f64.cos(), 0.0), 1e-8));

        let k = vf(["1", "-2", "3.5"]);
        let c = fd_curl(&k, Vec3::new(5.0, 1.0, -2.0), 1e-3, Stencil::Central4).unwrap();
        assert!(c.max_abs() <= 1e-12);
    }

    #[test]
    fn fd_curl_respects_guard() {
        let w = VectorField::parse(["1/x", "0", "0"], Guard::parse("x > 0.1").unwrap()).unwrap();
        let err = fd_curl(&w, Vec3::new(0.10005, 0.0, 0.0), 1e-4, Stencil::Central2).unwrap_err();
        assert!(matches!(err, FieldError::Guard { .. }));
    }

    #[test]
    fn helicity() {
        let b0 = vf(["sin(z)", "cos(z)", "0"]);
        assert!((helicity_density(&b0, Vec3::new(0.3, 2.0, -1.0)).unwrap() - 1.0).abs() < 1e-15);
        let g = sf("x*y + z^3").gradient();
        assert_eq!(helicity_density(&g, Vec3::new(1.0, 2.0, 3.0)).unwrap(), 0.0);
    }
}
