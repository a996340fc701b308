//! Planar reduction of the eikonal system: when `α` depends only on
//! `s = n·x`, the triple `ℓ = e₁·x`, `ψ = e₂·x`, `θ = G(s)` with `G' = g`
//! satisfies all five construction conditions with `α = g(n·x)`.

use std::sync::Arc;

use super::{FrameError, OrthoTriple};
use crate::expr::{ScalarExpr, Var};
use crate::fields::ScalarField;
use crate::guard::Guard;
use crate::quad::{TabulatedAntiderivative, DEFAULT_QUAD_TOL};
use crate::vec3::{Aabb, Vec3};

/// How `θ = G(n·x)` is obtained from the profile `g`.
#[derive(Debug, Clone)]
pub enum ThetaProfile {
    /// Closed-form antiderivative `G(s)`; checked against `g` on the interval.
    Closed(ScalarExpr),
    /// Tabulated `G(s) = offset + ∫₀ˢ g`.
    Quadrature { offset: f64 },
}

#[derive(Debug, Clone)]
pub struct PlanarFrame {
    pub triple: OrthoTriple,
    /// `g(n·x)`, the expected `|∇θ|` up to sign.
    pub alpha: ScalarField,
    pub normal: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Working interval of `s = n·x`.
    pub interval: (f64, f64),
    /// Zeros of `g` inside the interval; `α` changes sign across each.
    pub zero_crossings: Vec<f64>,
}

impl PlanarFrame {
    pub fn ensure_sign_definite(&self) -> Result<(), FrameError> {
        match self.zero_crossings.first() {
            None => Ok(()),
            Some(&s) => Err(FrameError::ProfileZero {
                s,
                count: self.zero_crossings.len(),
            }),
        }
    }
}

const SCAN_POINTS: usize = 4096;

/// Unit vectors completing `n` to a right-handed orthonormal basis.
pub fn complete_basis(n: Vec3) -> (Vec3, Vec3) {
    let a = if n.z.abs() > 0.9 { Vec3::X } else { Vec3::Z };
    let e1 = n
        .cross(a)
        .normalized()
        .expect("n is not parallel to the helper axis");
    (e1, n.cross(e1))
}

fn linear(c: Vec3) -> ScalarExpr {
    Var::SPATIAL
        .iter()
        .enumerate()
        .filter(|(i, _)| c[*i] != 0.0)
        .map(|(i, &v)| c[i] * ScalarExpr::var(v))
        .reduce(|a, b| a + b)
        .unwrap_or_else(ScalarExpr::zero)
}

/// Builds the planar frame for unit normal `n` and profile `g(s)` on the
/// interval `interval` of `s = n·x`.
pub fn planar_frame(
    n: Vec3,
    g: &ScalarExpr,
    theta: ThetaProfile,
    interval: (f64, f64),
) -> Result<PlanarFrame, FrameError> {
    if !n.is_finite() || (n.norm() - 1.0).abs() > 1e-12 {
        return Err(FrameError::NotUnitNormal(n));
    }
    let univariate = |e: &ScalarExpr| !Var::SPATIAL.iter().any(|&v| e.depends_on(v));
    if !univariate(g) {
        return Err(FrameError::ProfileNotUnivariate);
    }
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(FrameError::Quadrature(format!(
            "invalid interval [{lo}, {hi}]"
        )));
    }
    let zero_crossings = scan_zeros(g, lo, hi)?;

    let big_g = match theta {
        ThetaProfile::Closed(big_g) => {
            if !univariate(&big_g) {
                return Err(FrameError::ProfileNotUnivariate);
            }
            check_antiderivative(&big_g, g, lo, hi)?;
            big_g
        }
        ThetaProfile::Quadrature { offset } => {
            let tab = TabulatedAntiderivative::new(g.clone(), offset, lo, hi, DEFAULT_QUAD_TOL)
                .map_err(FrameError::Quadrature)?;
            ScalarExpr::apply(Arc::new(tab), ScalarExpr::s())
        }
    };

    let (e1, e2) = complete_basis(n);
    let s = linear(n);
    let triple = OrthoTriple::new(
        linear(e1),
        linear(e2),
        big_g.substitute_param(&s).simplify(),
        Guard::none(),
    );
    Ok(PlanarFrame {
        triple,
        alpha: ScalarField::unguarded(g.substitute_param(&s).simplify()),
        normal: n,
        e1,
        e2,
        interval,
        zero_crossings,
    })
}

/// Same as [`planar_frame`] with the interval taken from a box.
pub fn planar_frame_on_box(
    n: Vec3,
    g: &ScalarExpr,
    theta: ThetaProfile,
    domain: &Aabb,
) -> Result<PlanarFrame, FrameError> {
    planar_frame(n, g, theta, domain.project(n))
}

fn eval_g(g: &ScalarExpr, s: f64) -> Result<f64, FrameError> {
    g.eval_profile(s)
        .map_err(|e| FrameError::Quadrature(format!("profile at s = {s}: {e}")))
}

fn scan_zeros(g: &ScalarExpr, lo: f64, hi: f64) -> Result<Vec<f64>, FrameError> {
    let at = |i: usize| lo + (hi - lo) * i as f64 / SCAN_POINTS as f64;
    let mut zeros = Vec::new();
    let mut prev = (at(0), eval_g(g, at(0))?);
    if prev.1 == 0.0 {
        zeros.push(prev.0);
    }
    for i in 1..=SCAN_POINTS {
        let s = at(i);
        let v = eval_g(g, s)?;
        if v == 0.0 {
            zeros.push(s);
        } else if prev.1 * v < 0.0 {
            zeros.push(bisect(g, prev.0, s, prev.1)?);
        }
        prev = (s, v);
    }
    Ok(zeros)
}

fn bisect(g: &ScalarExpr, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64, FrameError> {
    while b - a > 1e-13 * (1.0 + a.abs()) {
        let m = 0.5 * (a + b);
        let fm = eval_g(g, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

fn check_antiderivative(
    big_g: &ScalarExpr,
    g: &ScalarExpr,
    lo: f64,
    hi: f64,
) -> Result<(), FrameError> {
    let dg = big_g.differentiate(Var::S);
    for i in 0..=32 {
        let s = lo + (hi - lo) * i as f64 / 32.0;
        let want = eval_g(g, s)?;
        let got = dg
            .eval_profile(s)
            .map_err(|e| FrameError::Quadrature(e.to_string()))?;
        if !((got - want).abs() <= 1e-9 * (1.0 + want.abs())) {
            return Err(FrameError::AntiderivativeMismatch { s, got, want });
        }
    }
    Ok(())
}
