//! Beltrami checks: alignment of a field with its curl, pointwise
//! proportionality factor `ĥ = h / |w|²`, classification, invariant and
//! bracket identities, and the ideal-gas continuity residual.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fields::{self, FieldError, ScalarField, VectorField};
use crate::frames::{FrameError, OrthoTriple};
use crate::vec3::Vec3;

/// Threshold of the classification tests.
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Curl magnitude below which a field counts as curl-free.
pub const DEGENERATE_CURL: f64 = 1e-12;
/// Field magnitude below which `ĥ` is undefined.
pub const MIN_FIELD_NORM: f64 = 1e-12;
/// Sample variance of `ĥ` below which the field is flagged strong.
pub const STRONG_VARIANCE: f64 = 1e-12;

const EPS: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("field magnitude {norm:e} at {point} is too small for a proportionality factor")]
    VanishingField { point: Vec3, norm: f64 },
    #[error("no sample points given")]
    NoSamples,
    #[error("ideal-gas constant k must be positive, got {0}")]
    NonPositiveGasConstant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NontrivialBeltrami,
    ComplexLamellar,
    Neither,
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::NontrivialBeltrami => "nontrivial_beltrami",
            Classification::ComplexLamellar => "complex_lamellar",
            Classification::Neither => "neither",
            Classification::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HhatSample {
    pub point: Vec3,
    pub hhat: f64,
}

/// Expected closed forms to compare against.
#[derive(Debug, Clone, Default)]
pub struct Expected {
    pub hhat: Option<ScalarField>,
    pub div: Option<ScalarField>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BeltramiReport {
    pub sample_count: usize,
    /// Max of `‖w×∇×w‖ / (‖w‖‖∇×w‖)`.
    pub max_alignment_residual: f64,
    pub worst_alignment_point: Option<Vec3>,
    /// Max of `‖∇×w − ĥw‖ / ‖w‖`.
    pub max_eigen_residual: f64,
    pub hhat_samples: Vec<HhatSample>,
    pub hhat_mean: f64,
    pub hhat_variance: f64,
    pub strong: bool,
    /// Max of `|ĥ − ĥ_expected| / (1 + |ĥ_expected|)`.
    pub hhat_expected_residual: Option<f64>,
    pub divergence_max: f64,
    /// Max of `|∇·w − div_expected| / (1 + |div_expected|)`.
    pub divergence_expected_residual: Option<f64>,
    pub classification: Classification,
}

impl BeltramiReport {
    /// Alignment and any expected values within `tol`.
    pub fn passed(&self, tol: f64) -> bool {
        self.max_alignment_residual <= tol
            && self.hhat_expected_residual.is_none_or(|r| r <= tol)
            && self.divergence_expected_residual.is_none_or(|r| r <= tol)
    }
}

#[derive(Debug, Clone, Copy)]
struct PointStats {
    point: Vec3,
    w: Vec3,
    curl: Vec3,
    align: f64,
    lamellar: f64,
}

fn point_stats(w: &VectorField, p: Vec3) -> Result<PointStats, VerifyError> {
    let v = w.eval(p)?;
    let c = w.curl().eval_unguarded(p)?;
    let denom = v.norm() * c.norm() + EPS;
    Ok(PointStats {
        point: p,
        w: v,
        curl: c,
        align: v.cross(c).norm() / denom,
        lamellar: v.dot(c).abs() / denom,
    })
}

fn hhat_of(s: &PointStats) -> Result<f64, VerifyError> {
    let n = s.w.norm();
    if !(n > MIN_FIELD_NORM) {
        return Err(VerifyError::VanishingField {
            point: s.point,
            norm: n,
        });
    }
    Ok(s.w.dot(s.curl) / s.w.norm_squared())
}

fn all_stats(w: &VectorField, points: &[Vec3]) -> Result<Vec<PointStats>, VerifyError> {
    if points.is_empty() {
        return Err(VerifyError::NoSamples);
    }
    points.par_iter().map(|&p| point_stats(w, p)).collect()
}

fn classify_stats(stats: &[PointStats]) -> Classification {
    if stats.iter().all(|s| s.curl.norm() <= DEGENERATE_CURL) {
        return Classification::Degenerate;
    }
    let aligned = stats.iter().all(|s| s.align <= CLASSIFY_TOL);
    let nonzero = stats.iter().all(|s| {
        let n2 = s.w.norm_squared();
        n2 > 0.0 && (s.w.dot(s.curl) / n2).abs() > CLASSIFY_TOL
    });
    if aligned && nonzero {
        Classification::NontrivialBeltrami
    } else if stats.iter().all(|s| s.lamellar <= CLASSIFY_TOL) {
        Classification::ComplexLamellar
    } else {
        Classification::Neither
    }
}

/// `ĥ(p) = w·∇×w / |w|²`.
pub fn proportionality_factor(w: &VectorField, p: Vec3) -> Result<f64, VerifyError> {
    hhat_of(&point_stats(w, p)?)
}

pub fn classify(w: &VectorField, points: &[Vec3]) -> Result<Classification, VerifyError> {
    Ok(classify_stats(&all_stats(w, points)?))
}

/// Alignment residual and `ĥ` samples without expected values.
pub fn beltrami_residual(w: &VectorField, points: &[Vec3]) -> Result<BeltramiReport, VerifyError> {
    verify_field(w, points, &Expected::default())
}

/// Per-point `ĥ`, eigen residual, divergence and the relative errors
/// against the expected factor and divergence.
type Row = (f64, f64, f64, Option<f64>, Option<f64>);

pub fn verify_field(
    w: &VectorField,
    points: &[Vec3],
    expected: &Expected,
) -> Result<BeltramiReport, VerifyError> {
    let stats = all_stats(w, points)?;
    let classification = classify_stats(&stats);
    let div = w.divergence();

    let rows = stats
        .par_iter()
        .map(|s| {
            let hhat = hhat_of(s)?;
            let eigen = (s.curl - s.w * hhat).norm() / s.w.norm();
            let d = div.expr().eval(s.point).map_err(FieldError::from)?;
            let rel = |got: f64, f: &Option<ScalarField>| -> Result<Option<f64>, VerifyError> {
                f.as_ref()
                    .map(|f| {
                        let want = f.expr().eval(s.point).map_err(FieldError::from)?;
                        Ok(rel_err(got, want))
                    })
                    .transpose()
            };
            Ok((
                hhat,
                eigen,
                d,
                rel(hhat, &expected.hhat)?,
                rel(d, &expected.div)?,
            ))
        })
        .collect::<Result<Vec<Row>, VerifyError>>()?;

    let (worst_align, worst_point) = stats
        .iter()
        .map(|s| (nan_max(s.align), Some(s.point)))
        .fold(
            (0.0, None),
            |a, b| if b.0 > a.0 || a.1.is_none() { b } else { a },
        );
    let hhat: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let n = hhat.len() as f64;
    let mean = hhat.iter().sum::<f64>() / n;
    let variance = hhat.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
    let max_opt = |k: fn(&Row) -> Option<f64>| {
        rows.iter()
            .map(k)
            .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(nan_max(v))))
    };

    Ok(BeltramiReport {
        sample_count: stats.len(),
        max_alignment_residual: worst_align,
        worst_alignment_point: worst_point,
        max_eigen_residual: rows.iter().map(|r| nan_max(r.1)).fold(0.0, f64::max),
        hhat_samples: stats
            .iter()
            .zip(&hhat)
            .map(|(s, &h)| HhatSample {
                point: s.point,
                hhat: h,
            })
            .collect(),
        hhat_mean: mean,
        hhat_variance: variance,
        strong: variance <= STRONG_VARIANCE,
        hhat_expected_residual: expected.hhat.as_ref().and(max_opt(|r| r.3)),
        divergence_max: rows.iter().map(|r| nan_max(r.2.abs())).fold(0.0, f64::max),
        divergence_expected_residual: expected.div.as_ref().and(max_opt(|r| r.4)),
        classification,
    })
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / (1.0 + want.abs())
}

fn nan_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Largest `|w·∇θ|` and `|w·∇L_θ|` over the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantResidual {
    pub theta: f64,
    pub l_theta: f64,
}

impl InvariantResidual {
    pub fn max(&self) -> f64 {
        self.theta.max(self.l_theta)
    }
}

pub fn invariant_gradient_check(
    w: &VectorField,
    t: &OrthoTriple,
    points: &[Vec3],
) -> Result<InvariantResidual, VerifyError> {
    let g_theta = &t.gradients()[2];
    let g_l = fields::gradient(&t.l_theta());
    let mut out = InvariantResidual {
        theta: 0.0,
        l_theta: 0.0,
    };
    for &p in points {
        t.gradients_at(p)?;
        let v = w.eval(p)?;
        out.theta = out
            .theta
            .max(nan_max(v.dot(g_theta.eval_unguarded(p)?).abs()));
        out.l_theta = out
            .l_theta
            .max(nan_max(v.dot(g_l.eval_unguarded(p)?).abs()));
    }
    Ok(out)
}

/// Largest componentwise `|ĥw − ∇θ×∇L_θ|`, absolute and relative to
/// `1 + ‖ĥw‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub absolute: f64,
    pub relative: f64,
}

pub fn nambu_identity_check(
    w: &VectorField,
    t: &OrthoTriple,
    points: &[Vec3],
) -> Result<IdentityResidual, VerifyError> {
    let g_theta = &t.gradients()[2];
    let g_l = fields::gradient(&t.l_theta());
    let mut out = IdentityResidual {
        absolute: 0.0,
        relative: 0.0,
    };
    for &p in points {
        t.gradients_at(p)?;
        let hw = w.eval(p)? * proportionality_factor(w, p)?;
        let rhs = g_theta.eval_unguarded(p)?.cross(g_l.eval_unguarded(p)?);
        let d = nan_max((hw - rhs).max_abs());
        out.absolute = out.absolute.max(d);
        out.relative = out.relative.max(d / (1.0 + hw.norm()));
    }
    Ok(out)
}

/// Largest `|w·∇ĥ|`, which vanishes for solenoidal Beltrami fields.
pub fn factor_invariance_check(w: &VectorField, points: &[Vec3]) -> Result<f64, VerifyError> {
    let h = w.dot(w.curl());
    let n2 = w.dot(w);
    let hhat = ScalarField::unguarded((h.expr() / n2.expr()).simplify());
    let g = fields::gradient(&hhat);
    let mut worst: f64 = 0.0;
    for &p in points {
        let v = w.eval(p)?;
        worst = worst.max(nan_max(v.dot(g.eval_unguarded(p)?).abs()));
    }
    Ok(worst)
}

/// Largest `|∇·(ρw)|` with `ρ = exp((c − |w|²/2)/k)`, evaluated as
/// `ρ (∇·w − ∇(|w|²)·w / (2k))`.
pub fn continuity_check_ideal_gas(
    w: &VectorField,
    k: f64,
    c: f64,
    points: &[Vec3],
) -> Result<f64, VerifyError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(VerifyError::NonPositiveGasConstant(k));
    }
    let w2 = w.dot(w);
    let grad_w2 = fields::gradient(&w2);
    let div = w.divergence();
    let mut worst: f64 = 0.0;
    for &p in points {
        let v = w.eval(p)?;
        let rho = ((c - 0.5 * v.norm_squared()) / k).exp();
        let r = rho
            * (div.expr().eval(p).map_err(FieldError::from)?
                - grad_w2.eval_unguarded(p)?.dot(v) / (2.0 * k));
        worst = worst.max(nan_max(r.abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarExpr;
    use crate::guard::Guard;

    fn field(c: [&str; 3]) -> VectorField {
        VectorField::parse(c, Guard::none()).unwrap()
    }

    fn points() -> Vec<Vec3> {
        (0..27)
            .map(|i| {
                let (a, b, c) = (i % 3, (i / 3) % 3, i / 9);
                Vec3::new(
                    0.3 + 0.6 * a as f64,
                    0.2 + 0.7 * b as f64,
                    -0.9 + 0.8 * c as f64,
                )
            })
            .collect()
    }

    #[test]
    fn reference_field_is_strong() {
        let b0 = field(["sin(z)", "cos(z)", "0"]);
        let r = beltrami_residual(&b0, &points()).unwrap();
        assert_eq!(r.max_alignment_residual, 0.0);
        assert!(r.hhat_samples.iter().all(|s| s.hhat == 1.0));
        assert!(r.strong);
        assert_eq!(r.classification, Classification::NontrivialBeltrami);
        assert_eq!(r.divergence_max, 0.0);
    }

    #[test]
    fn shear_is_perpendicular_to_curl() {
        let w = field(["y", "0", "0"]);
        let r = beltrami_residual(&w, &points()).unwrap();
        assert!((r.max_alignment_residual - 1.0).abs() < 1e-15);
        assert_eq!(r.classification, Classification::ComplexLamellar);
    }

    #[test]
    fn classification_cases() {
        let pts = points();
        assert_eq!(
            classify(
                &field(["sin(z) + cos(y)", "sin(x) + cos(z)", "sin(y) + cos(x)"]),
                &pts
            )
            .unwrap(),
            Classification::NontrivialBeltrami
        );
        assert_eq!(
            classify(&field(["2*x", "3*y^2", "0"]), &pts).unwrap(),
            Classification::Degenerate
        );
        assert_eq!(
            classify(&field(["y", "0", "0"]), &pts).unwrap(),
            Classification::ComplexLamellar
        );
        assert_eq!(
            classify(&field(["y", "z", "x"]), &pts).unwrap(),
            Classification::Neither
        );
    }

    #[test]
    fn factors() {
        // cos θ ∇r + sin θ ∇z with θ = atan2(y, x); ĥ = 1/r
        let w = VectorField::parse(
            [
                "cos(atan2(y,x))*x/sqrt(x^2+y^2)",
                "cos(atan2(y,x))*y/sqrt(x^2+y^2)",
                "sin(atan2(y,x))",
            ],
            Guard::none(),
        )
        .unwrap();
        let p = Vec3::new(2f64.sqrt(), 2f64.sqrt(), 0.3);
        assert!((proportionality_factor(&w, p).unwrap() - 0.5).abs() < 1e-15);

        let grad = field(["2*x", "3*y^2", "0"]);
        assert_eq!(
            proportionality_factor(&grad, Vec3::new(1.0, 1.0, 0.0)).unwrap(),
            0.0
        );
        assert!(matches!(
            proportionality_factor(&grad, Vec3::ZERO),
            Err(VerifyError::VanishingField { .. })
        ));
    }

    #[test]
    fn expected_values_are_compared() {
        let b0 = field(["sin(z)", "cos(z)", "0"]);
        let exp = Expected {
            hhat: Some(ScalarField::unguarded(ScalarExpr::parse("2").unwrap())),
            div: Some(ScalarField::unguarded(ScalarExpr::zero())),
        };
        let r = verify_field(&b0, &points(), &exp).unwrap();
        assert_eq!(r.hhat_expected_residual, Some(1.0 / 3.0));
        assert_eq!(r.divergence_expected_residual, Some(0.0));
        assert!(!r.passed(1e-10));
    }

    #[test]
    fn invariants_and_bracket_on_reference_field() {
        let t = OrthoTriple::parse("x", "y", "z", Guard::none()).unwrap();
        let b0 = t.beltrami_field();
        let inv = invariant_gradient_check(&b0, &t, &points()).unwrap();
        assert!(inv.max() < 1e-15);
        let nb = nambu_identity_check(&b0, &t, &points()).unwrap();
        assert!(nb.absolute < 1e-15);
        assert!(factor_invariance_check(&b0, &points()).unwrap() < 1e-15);
    }

    #[test]
    fn ideal_gas_residuals() {
        let pts = points();
        let b0 = field(["sin(z)", "cos(z)", "0"]);
        assert!(continuity_check_ideal_gas(&b0, 1.0, 1.0, &pts).unwrap() < 1e-15);
        // |w| = 1 but ∇·w = cos θ / r
        let ex2 = field([
            "cos(atan2(y,x))*x/sqrt(x^2+y^2)",
            "cos(atan2(y,x))*y/sqrt(x^2+y^2)",
            "sin(atan2(y,x))",
        ]);
        assert!(continuity_check_ideal_gas(&ex2, 1.0, 1.0, &pts).unwrap() > 1e-3);
        assert!(matches!(
            continuity_check_ideal_gas(&b0, 0.0, 1.0, &pts),
            Err(VerifyError::NonPositiveGasConstant(_))
        ));
    }
}
