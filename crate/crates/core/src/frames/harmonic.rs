//! Harmonic conjugates: for planar harmonic `ℓ(x, y)` the Cauchy–Riemann
//! partner `ψ` with `ψ_x = −ℓ_y`, `ψ_y = ℓ_x` makes `(ℓ, ψ, z)` an
//! orthogonal triple with `|∇ℓ| = |∇ψ|` and Jacobian `|∇ℓ|² > 0`.

use std::sync::Arc;

use super::FrameError;
use crate::expr::{PotentialFn, ScalarExpr, Var};
use crate::fields::{FieldError, ScalarField};
use crate::quad::line_integral;
use crate::vec3::{Aabb, Vec3};

/// Tolerance for harmonicity and path independence.
pub const HARMONIC_TOL: f64 = 1e-8;

const LINE_TOL: f64 = 1e-12;
const CHECK_GRID: usize = 5;

/// `ψ(p)` as the integral of `(−ℓ_y, ℓ_x, 0)` from the anchor, first along
/// x and then along y.
#[derive(Debug)]
pub struct HarmonicConjugate {
    grad: [ScalarExpr; 3],
    anchor: Vec3,
}

impl HarmonicConjugate {
    pub fn anchor(&self) -> Vec3 {
        self.anchor
    }

    fn legs(&self, p: Vec3, x_first: bool) -> Result<f64, String> {
        let start = Vec3::new(self.anchor.x, self.anchor.y, p.z);
        let corner = if x_first {
            Vec3::new(p.x, self.anchor.y, p.z)
        } else {
            Vec3::new(self.anchor.x, p.y, p.z)
        };
        Ok(line_integral(&self.grad, start, corner, LINE_TOL)?
            + line_integral(&self.grad, corner, p, LINE_TOL)?)
    }

    pub fn value_y_first(&self, p: Vec3) -> Result<f64, String> {
        self.legs(p, false)
    }
}

impl PotentialFn for HarmonicConjugate {
    fn name(&self) -> &str {
        "conjugate"
    }

    fn value(&self, p: Vec3) -> Result<f64, String> {
        self.legs(p, true)
    }

    fn partial(&self, v: Var) -> ScalarExpr {
        match v {
            Var::X => self.grad[0].clone(),
            Var::Y => self.grad[1].clone(),
            _ => ScalarExpr::zero(),
        }
    }
}

/// Builds `ψ` with `ψ(anchor) = 0`. Harmonicity of `ℓ` and agreement of two
/// integration paths are checked on a grid over `region` in the plane
/// `z = anchor.z`.
pub fn harmonic_conjugate(
    l2d: &ScalarField,
    anchor: Vec3,
    region: &Aabb,
) -> Result<ScalarField, FrameError> {
    let ell = l2d.expr();
    if ell.depends_on(Var::Z) {
        return Err(FrameError::NotPlanar(ell.to_string()));
    }
    let lx = ell.differentiate(Var::X).simplify();
    let ly = ell.differentiate(Var::Y).simplify();
    let lap = (lx.differentiate(Var::X) + ly.differentiate(Var::Y)).simplify();
    let conj = Arc::new(HarmonicConjugate {
        grad: [(-&ly).simplify(), lx, ScalarExpr::zero()],
        anchor,
    });

    let t = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (CHECK_GRID - 1) as f64;
    for i in 0..CHECK_GRID {
        for j in 0..CHECK_GRID {
            let p = Vec3::new(
                t(region.min.x, region.max.x, i),
                t(region.min.y, region.max.y, j),
                anchor.z,
            );
            if !l2d.guard().admits(p) {
                continue;
            }
            let l = lap.eval(p).map_err(FieldError::from)?;
            if !(l.abs() <= HARMONIC_TOL) {
                return Err(FrameError::NotHarmonic {
                    point: p,
                    laplacian: l,
                });
            }
            let a = conj.value(p).map_err(FrameError::Quadrature)?;
            let b = conj.value_y_first(p).map_err(FrameError::Quadrature)?;
            if !((a - b).abs() <= HARMONIC_TOL) {
                return Err(FrameError::PathMismatch {
                    point: p,
                    difference: a - b,
                });
            }
        }
    }
    Ok(ScalarField::new(
        ScalarExpr::potential(conj),
        l2d.guard().clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_beltrami, check_orthogonality, OrthoTriple};
    use crate::guard::Guard;

    fn field(src: &str) -> ScalarField {
        ScalarField::unguarded(ScalarExpr::parse(src).unwrap())
    }

    fn points() -> Vec<Vec3> {
        let mut v = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    v.push(Vec3::new(
                        -0.9 + 0.8 * i as f64,
                        -0.7 + 0.75 * j as f64,
                        -0.5 + 0.5 * k as f64,
                    ));
                }
            }
        }
        v
    }

    #[test]
    fn exponential_sine_conjugate() {
        let psi =
            harmonic_conjugate(&field("exp(x)*sin(y)"), Vec3::ZERO, &Aabb::cube(1.0)).unwrap();
        for p in points() {
            let want = -p.x.exp() * p.y.cos() + 1.0;
            assert!((psi.eval(p).unwrap() - want).abs() < 1e-10, "{p}");
        }
        assert_eq!(
            psi.expr().differentiate(Var::X).to_string(),
            "-(exp(x)*cos(y))"
        );

        let t = OrthoTriple::new(
            ScalarExpr::parse("exp(x)*sin(y)").unwrap(),
            psi.expr().clone(),
            ScalarExpr::z(),
            Guard::none(),
        );
        let r = check_orthogonality(&t, &points(), HARMONIC_TOL).unwrap();
        assert!(r.passed(), "{r}");
        let b = build_beltrami(&t, &points()).unwrap();
        for p in points() {
            let w = b.w.eval(p).unwrap();
            let c = b.w.curl().eval(p).unwrap();
            assert!((c - w).max_abs() < 1e-13);
        }
    }

    #[test]
    fn linear_and_quadratic() {
        let psi = harmonic_conjugate(&field("x"), Vec3::ZERO, &Aabb::cube(1.0)).unwrap();
        let psi2 = harmonic_conjugate(&field("x^2 - y^2"), Vec3::ZERO, &Aabb::cube(1.0)).unwrap();
        for p in points() {
            assert!((psi.eval(p).unwrap() - p.y).abs() < 1e-12);
            assert!((psi2.eval(p).unwrap() - 2.0 * p.x * p.y).abs() < 1e-12);
        }
    }

    #[test]
    fn anchor_fixes_constant() {
        let a = Vec3::new(0.5, -0.25, 0.0);
        let psi = harmonic_conjugate(&field("x"), a, &Aabb::cube(1.0)).unwrap();
        assert!(psi.eval(a).unwrap().abs() < 1e-15);
        assert!((psi.eval(Vec3::ZERO).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_harmonic() {
        assert!(matches!(
            harmonic_conjugate(&field("x^2 + y^2"), Vec3::ZERO, &Aabb::cube(1.0)),
            Err(FrameError::NotHarmonic { .. })
        ));
        assert!(matches!(
            harmonic_conjugate(&field("x + z"), Vec3::ZERO, &Aabb::cube(1.0)),
            Err(FrameError::NotPlanar(_))
        ));
    }
}
