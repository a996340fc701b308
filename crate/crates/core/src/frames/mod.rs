//! Orthogonal coordinate triples `(ℓ, ψ, θ)` and the Beltrami fields built
//! from them.
//!
//! For an orthogonal triple with `|∇ℓ| = |∇ψ|` and `|∇θ| = |α|`,
//!
//! ```text
//! w  = cos θ ∇ψ + sin θ ∇ℓ      satisfies  ∇×w  =  σ|α| w
//! w* = sin θ ∇ψ + cos θ ∇ℓ      satisfies  ∇×w* = −σ|α| w*
//! ```
//!
//! where `σ` is the sign of the Jacobian `∇ℓ·∇ψ×∇θ`. The flow of `w` keeps
//! `θ` and `L_θ = ℓ cos θ − ψ sin θ` constant.

mod charts;
mod harmonic;
mod planar;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use charts::{catalog_chart, Chart, ChartName};
pub use harmonic::{harmonic_conjugate, HarmonicConjugate, HARMONIC_TOL};
pub use planar::{complete_basis, planar_frame, planar_frame_on_box, PlanarFrame, ThetaProfile};

use crate::expr::{ScalarExpr, Var};
use crate::fields::{FieldError, ScalarField, VectorField};
use crate::guard::Guard;
use crate::vec3::Vec3;

/// Condition tolerance for closed-form triples.
pub const SYMBOLIC_TOL: f64 = 1e-9;
/// Condition tolerance when any quadrature is involved.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Fewest samples accepted when fixing the Jacobian sign.
pub const MIN_SIGN_SAMPLES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Positive)
        } else if v < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+1",
            Sign::Negative => "-1",
        })
    }
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("no sample points given")]
    NoSamples,
    #[error("the Jacobian sign needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("the Jacobian ∇ℓ·∇ψ×∇θ vanishes at {point}")]
    DegenerateJacobian { point: Vec3 },
    #[error("the Jacobian changes sign: positive at {positive}, negative at {negative}")]
    InconsistentSign { positive: Vec3, negative: Vec3 },
    #[error("Jacobian sign hint {hint} contradicts the sampled sign {sampled}")]
    SignHintMismatch { hint: Sign, sampled: Sign },
    #[error("coordinate conditions fail:\n{0}")]
    ConditionsFailed(ConditionReport),
    #[error("normal {0} is not a unit vector")]
    NotUnitNormal(Vec3),
    #[error("profile must be an expression in `s` only")]
    ProfileNotUnivariate,
    #[error("profile vanishes at s = {s} ({count} zero crossing(s) in the working interval)")]
    ProfileZero { s: f64, count: usize },
    #[error("G' = {got} but g = {want} at s = {s}")]
    AntiderivativeMismatch { s: f64, got: f64, want: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("`{0}` depends on z; a planar harmonic function of (x, y) is required")]
    NotPlanar(String),
    #[error("not harmonic: Laplacian is {laplacian:e} at {point}")]
    NotHarmonic { point: Vec3, laplacian: f64 },
    #[error("line integrals disagree by {difference:e} at {point}")]
    PathMismatch { point: Vec3, difference: f64 },
    #[error("unknown chart `{0}` (expected cylindrical, parabolic_cylindrical or parabolic)")]
    UnknownChart(String),
}

/// Coordinate functions `(ℓ, ψ, θ)` with a shared guard.
#[derive(Debug, Clone)]
pub struct OrthoTriple {
    ell: ScalarExpr,
    psi: ScalarExpr,
    theta: ScalarExpr,
    guard: Guard,
    jacobian_sign_hint: Option<Sign>,
    grads: [VectorField; 3],
}

impl PartialEq for OrthoTriple {
    fn eq(&self, o: &Self) -> bool {
        self.ell == o.ell
            && self.psi == o.psi
            && self.theta == o.theta
            && self.guard == o.guard
            && self.jacobian_sign_hint == o.jacobian_sign_hint
    }
}

fn grad_expr(f: &ScalarExpr) -> VectorField {
    crate::fields::gradient(&ScalarField::unguarded(f.clone()))
}

impl OrthoTriple {
    pub fn new(ell: ScalarExpr, psi: ScalarExpr, theta: ScalarExpr, guard: Guard) -> Self {
        let grads = [grad_expr(&ell), grad_expr(&psi), grad_expr(&theta)];
        OrthoTriple {
            ell,
            psi,
            theta,
            guard,
            jacobian_sign_hint: None,
            grads,
        }
    }

    /// Parses the three coordinate expressions.
    pub fn parse(
        ell: &str,
        psi: &str,
        theta: &str,
        guard: Guard,
    ) -> Result<Self, crate::expr::ParseError> {
        Ok(OrthoTriple::new(
            ScalarExpr::parse(ell)?,
            ScalarExpr::parse(psi)?,
            ScalarExpr::parse(theta)?,
            guard,
        ))
    }

    pub fn with_sign_hint(mut self, hint: Sign) -> Self {
        self.jacobian_sign_hint = Some(hint);
        self
    }

    pub fn ell(&self) -> &ScalarExpr {
        &self.ell
    }

    pub fn psi(&self) -> &ScalarExpr {
        &self.psi
    }

    pub fn theta(&self) -> &ScalarExpr {
        &self.theta
    }

    pub fn guard(&self) -> &Guard {
        &self.guard
    }

    pub fn sign_hint(&self) -> Option<Sign> {
        self.jacobian_sign_hint
    }

    /// Gradients in the order `∇ℓ, ∇ψ, ∇θ` (unguarded).
    pub fn gradients(&self) -> &[VectorField; 3] {
        &self.grads
    }

    pub fn gradients_at(&self, p: Vec3) -> Result<[Vec3; 3], FieldError> {
        crate::fields::check_guard(&self.guard, p)?;
        Ok([
            self.grads[0].eval_unguarded(p)?,
            self.grads[1].eval_unguarded(p)?,
            self.grads[2].eval_unguarded(p)?,
        ])
    }

    /// Jacobian `∇ℓ · ∇ψ × ∇θ` at `p`.
    pub fn jacobian_at(&self, p: Vec3) -> Result<f64, FieldError> {
        let [gl, gp, gt] = self.gradients_at(p)?;
        Ok(gl.dot(gp.cross(gt)))
    }

    pub fn jacobian(&self) -> ScalarField {
        let [gl, gp, gt] = &self.grads;
        gl.dot(&gp.cross(gt)).with_guard(self.guard.clone())
    }

    pub fn theta_field(&self) -> ScalarField {
        ScalarField::new(self.theta.clone(), self.guard.clone())
    }

    /// The second invariant `L_θ = ℓ cos θ − ψ sin θ`.
    pub fn l_theta(&self) -> ScalarField {
        let e = &self.ell * &self.theta.cos() - &self.psi * &self.theta.sin();
        ScalarField::new(e, self.guard.clone())
    }

    /// `|∇θ|` as an expression.
    pub fn theta_gradient_norm(&self) -> ScalarExpr {
        let g = &self.grads[2];
        g.dot(g).expr().sqrt()
    }

    fn combine(&self, c_psi: &ScalarExpr, c_ell: &ScalarExpr) -> VectorField {
        let [gl, gp, _] = &self.grads;
        gp.scale(c_psi)
            .add(&gl.scale(c_ell))
            .simplify()
            .with_guard(self.guard.clone())
    }

    /// `cos θ ∇ψ + sin θ ∇ℓ`.
    pub fn beltrami_field(&self) -> VectorField {
        self.combine(&self.theta.cos(), &self.theta.sin())
    }

    /// `sin θ ∇ψ + cos θ ∇ℓ`.
    pub fn beltrami_star_field(&self) -> VectorField {
        self.combine(&self.theta.sin(), &self.theta.cos())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn from_residuals(
        names: &[&'static str],
        rows: &[(Vec3, Vec<f64>)],
        tol: f64,
    ) -> ConditionReport {
        let checks = names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let mut worst = (0.0, None);
                for (p, r) in rows {
                    let v = if r[k].is_nan() {
                        f64::INFINITY
                    } else {
                        r[k].abs()
                    };
                    if worst.1.is_none() || v > worst.0 {
                        worst = (v, Some(*p));
                    }
                }
                ConditionCheck {
                    name,
                    max_residual: worst.0,
                    tolerance: tol,
                    passed: worst.0 <= tol,
                    worst_point: worst.1,
                }
            })
            .collect();
        ConditionReport { checks }
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "  {:<16} {:>10.3e} (tol {:.0e}) {}",
                c.name,
                c.max_residual,
                c.tolerance,
                if c.passed { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

pub const CONSTRUCTION_CONDITIONS: [&str; 5] = [
    "eikonal",
    "equal_scale",
    "orth_ell_psi",
    "orth_ell_theta",
    "orth_psi_theta",
];

/// Residuals of the construction system: `|∇θ| − |α|`, `|∇ℓ| − |∇ψ|` and
/// the three pairwise orthogonality products.
pub fn check_construction_conditions(
    t: &OrthoTriple,
    alpha: &ScalarField,
    points: &[Vec3],
    tol: f64,
) -> Result<ConditionReport, FrameError> {
    if points.is_empty() {
        return Err(FrameError::NoSamples);
    }
    let rows = points
        .iter()
        .map(|&p| {
            let [gl, gp, gt] = t.gradients_at(p)?;
            let a = alpha.eval(p)?;
            Ok((
                p,
                vec![
                    gt.norm() - a.abs(),
                    gl.norm() - gp.norm(),
                    gl.dot(gp),
                    gl.dot(gt),
                    gp.dot(gt),
                ],
            ))
        })
        .collect::<Result<Vec<_>, FrameError>>()?;
    Ok(ConditionReport::from_residuals(
        &CONSTRUCTION_CONDITIONS,
        &rows,
        tol,
    ))
}

/// Orthogonality and equal scale factors only (no eikonal condition).
pub fn check_orthogonality(
    t: &OrthoTriple,
    points: &[Vec3],
    tol: f64,
) -> Result<ConditionReport, FrameError> {
    let unit = ScalarField::unguarded(ScalarExpr::one());
    let mut r = check_construction_conditions(t, &unit, points, tol)?;
    r.checks.retain(|c| c.name != "eikonal");
    Ok(r)
}

/// Residuals of the two conditions characterising Beltrami fields of the
/// form `cos θ ∇ψ + sin θ ∇ℓ`:
///
/// ```text
/// cos θ sin θ (|∇ψ|² − |∇ℓ|²) − (∇ℓ·∇ψ)(cos² θ − sin² θ)
/// sin θ ∇ℓ·∇θ + cos θ ∇ψ·∇θ
/// ```
pub fn check_representation_conditions(
    t: &OrthoTriple,
    points: &[Vec3],
    tol: f64,
) -> Result<ConditionReport, FrameError> {
    if points.is_empty() {
        return Err(FrameError::NoSamples);
    }
    let rows = points
        .iter()
        .map(|&p| {
            let [gl, gp, gt] = t.gradients_at(p)?;
            let th = t.theta.eval(p).map_err(FieldError::from)?;
            let (s, c) = th.sin_cos();
            Ok((
                p,
                vec![
                    c * s * (gp.norm_squared() - gl.norm_squared()) - gl.dot(gp) * (c * c - s * s),
                    s * gl.dot(gt) + c * gp.dot(gt),
                ],
            ))
        })
        .collect::<Result<Vec<_>, FrameError>>()?;
    Ok(ConditionReport::from_residuals(
        &["representation_a", "representation_b"],
        &rows,
        tol,
    ))
}

/// Sign of the Jacobian over the samples; it must not vanish or change.
pub fn sample_jacobian_sign(t: &OrthoTriple, samples: &[Vec3]) -> Result<Sign, FrameError> {
    jacobian_sign(samples, t.sign_hint(), |p| t.jacobian_at(p))
}

fn jacobian_sign(
    samples: &[Vec3],
    hint: Option<Sign>,
    jac: impl Fn(Vec3) -> Result<f64, FieldError>,
) -> Result<Sign, FrameError> {
    if samples.len() < MIN_SIGN_SAMPLES {
        return Err(FrameError::TooFewSamples {
            needed: MIN_SIGN_SAMPLES,
            got: samples.len(),
        });
    }
    let (mut pos, mut neg) = (None, None);
    for &p in samples {
        let h = jac(p)?;
        match Sign::of(h).filter(|_| h.is_finite()) {
            Some(Sign::Positive) => pos = pos.or(Some(p)),
            Some(Sign::Negative) => neg = neg.or(Some(p)),
            None => return Err(FrameError::DegenerateJacobian { point: p }),
        }
    }
    let sampled = match (pos, neg) {
        (Some(positive), Some(negative)) => {
            return Err(FrameError::InconsistentSign { positive, negative })
        }
        (Some(_), None) => Sign::Positive,
        _ => Sign::Negative,
    };
    match hint {
        Some(h) if h != sampled => Err(FrameError::SignHintMismatch { hint: h, sampled }),
        _ => Ok(sampled),
    }
}

/// Output of the constructors: the pair of fields and their expected
/// proportionality factors.
#[derive(Debug, Clone)]
pub struct BeltramiConstruction {
    pub w: VectorField,
    pub w_star: VectorField,
    pub sigma: Sign,
    /// Expected factor of `w`.
    pub factor: ScalarField,
    /// Expected factor of `w*` (the negative of `factor`).
    pub star_factor: ScalarField,
}

/// Builds `w`, `w*` and `σ|∇θ|` from an orthogonal triple. The triple is
/// assumed to satisfy the construction conditions; `samples` fix `σ`.
pub fn build_beltrami(
    t: &OrthoTriple,
    samples: &[Vec3],
) -> Result<BeltramiConstruction, FrameError> {
    build_beltrami_profile(t, &ScalarExpr::s(), samples)
}

/// Generalisation with an angle profile: `θ` is replaced by `F(θ)` where
/// `big_f` is a closed-form expression in `s`. The expected factor becomes
/// `σ|∇θ| f(θ)` with `f = F'`.
pub fn build_beltrami_profile(
    t: &OrthoTriple,
    big_f: &ScalarExpr,
    samples: &[Vec3],
) -> Result<BeltramiConstruction, FrameError> {
    if [Var::X, Var::Y, Var::Z]
        .iter()
        .any(|&v| big_f.depends_on(v))
    {
        return Err(FrameError::ProfileNotUnivariate);
    }
    let sigma = sample_jacobian_sign(t, samples)?;
    let angle = big_f.substitute_param(&t.theta).simplify();
    let f = big_f
        .differentiate(Var::S)
        .substitute_param(&t.theta)
        .simplify();
    let w = t.combine(&angle.cos(), &angle.sin());
    let w_star = t.combine(&angle.sin(), &angle.cos());
    let factor = (sigma.value() * t.theta_gradient_norm() * f).simplify();
    Ok(BeltramiConstruction {
        w,
        w_star,
        sigma,
        star_factor: ScalarField::new((-&factor).simplify(), t.guard.clone()),
        factor: ScalarField::new(factor, t.guard.clone()),
    })
}

/// Ratio construction from an orthogonal system `(α, β, γ)` with
/// `|∇α| = |∇β|` and a profile `f(γ)`:
///
/// ```text
/// w = (1 + f²)^(-1/2) ∇β + f (1 + f²)^(-1/2) ∇α
/// ```
///
/// The expected factor is `σ|∇γ| f'(γ) / (1 + f²)` where `σ` is the sign
/// of `∇α·∇β×∇γ`.
#[derive(Debug, Clone)]
pub struct RatioConstruction {
    pub w: VectorField,
    pub sigma: Sign,
    pub factor: ScalarField,
}

pub fn build_beltrami_ratio(
    alpha_c: &ScalarField,
    beta_c: &ScalarField,
    gamma_c: &ScalarField,
    f: &ScalarExpr,
    samples: &[Vec3],
    tol: f64,
) -> Result<RatioConstruction, FrameError> {
    if [Var::X, Var::Y, Var::Z].iter().any(|&v| f.depends_on(v)) {
        return Err(FrameError::ProfileNotUnivariate);
    }
    let guard = alpha_c.guard().and(beta_c.guard()).and(gamma_c.guard());
    let t = OrthoTriple::new(
        alpha_c.expr().clone(),
        beta_c.expr().clone(),
        gamma_c.expr().clone(),
        guard.clone(),
    );
    let report = check_orthogonality(&t, samples, tol)?;
    if !report.passed() {
        return Err(FrameError::ConditionsFailed(report));
    }
    let sigma = sample_jacobian_sign(&t, samples)?;
    let fg = f.substitute_param(t.theta()).simplify();
    let dfg = f
        .differentiate(Var::S)
        .substitute_param(t.theta())
        .simplify();
    let one_plus = 1.0 + fg.powi(2);
    let inv_root = one_plus.powr(crate::expr::Rational::new(-1, 2).expect("rational"));
    let w = t.combine(&inv_root, &(&fg * &inv_root));
    let factor = (sigma.value() * t.theta_gradient_norm() * dfg / one_plus).simplify();
    Ok(RatioConstruction {
        w,
        sigma,
        factor: ScalarField::new(factor, guard),
    })
}

/// Largest componentwise deviation between `cos θ ∇ψ + sin θ ∇ℓ` and
/// `|∇ψ|² (cos θ ∂_ψ + sin θ ∂_ℓ)`, with tangent vectors
/// `∂_ℓ = ∇ψ×∇θ / J` and `∂_ψ = ∇θ×∇ℓ / J`, `J = ∇ℓ·∇ψ×∇θ`.
pub fn tangent_basis_residual(t: &OrthoTriple, points: &[Vec3]) -> Result<f64, FrameError> {
    let mut worst: f64 = 0.0;
    for &p in points {
        let [gl, gp, gt] = t.gradients_at(p)?;
        let th = t.theta.eval(p).map_err(FieldError::from)?;
        let (s, c) = th.sin_cos();
        let jac = gl.dot(gp.cross(gt));
        if jac == 0.0 {
            return Err(FrameError::DegenerateJacobian { point: p });
        }
        let d_ell = gp.cross(gt) / jac;
        let d_psi = gt.cross(gl) / jac;
        let w = gp * c + gl * s;
        let tangent = (d_psi * c + d_ell * s) * gp.norm_squared();
        worst = worst.max((w - tangent).max_abs());
    }
    Ok(worst)
}
