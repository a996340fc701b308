//! One-dimensional quadrature: adaptive Simpson, line integrals of
//! gradient fields, and tabulated antiderivatives that plug into
//! expression trees.

use crate::expr::{ScalarExpr, UnivariateFn};
use crate::vec3::Vec3;

/// Absolute tolerance for antiderivatives computed without a closed form.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`. Works for `b < a` (returns the signed integral).
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, String>
where
    F: Fn(f64) -> Result<f64, String>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol.max(f64::MIN_POSITIVE),
        MAX_DEPTH,
    )
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, String>
where
    F: Fn(f64) -> Result<f64, String>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (m - a).abs() <= 1e-14 * (1.0 + m.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(format!(
            "adaptive Simpson did not converge on [{a}, {b}] (last error estimate {:e})",
            delta.abs() / 15.0
        ));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Integral of the gradient field `grad` along the straight segment from
/// `from` to `to`.
pub fn line_integral(
    grad: &[ScalarExpr; 3],
    from: Vec3,
    to: Vec3,
    tol: f64,
) -> Result<f64, String> {
    let d = to - from;
    let integrand = |t: f64| {
        let p = from + d * t;
        let mut acc = 0.0;
        for (i, g) in grad.iter().enumerate() {
            if d[i] != 0.0 {
                acc += d[i] * g.eval(p).map_err(|e| e.to_string())?;
            }
        }
        Ok(acc)
    };
    adaptive_simpson(&integrand, 0.0, 1.0, tol)
}

/// Antiderivative `G(s) = offset + ∫₀ˢ g` of a closed-form profile `g`,
/// tabulated on a uniform grid over a working interval and interpolated
/// with cubic Hermite polynomials using the exact slopes `g`. Outside the
/// interval the value is integrated directly from the nearest endpoint.
///
/// As an expression node its derivative is `g` itself, so fields built on
/// it differentiate exactly.
#[derive(Debug)]
pub struct TabulatedAntiderivative {
    integrand: ScalarExpr,
    offset: f64,
    lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tol: f64,
}

/// Grid spacing upper bound; Hermite error is O(step^4).
const MAX_STEP: f64 = 1.0 / 512.0;

impl TabulatedAntiderivative {
    /// `integrand` is a profile in `s`; `[lo, hi]` is the working interval.
    pub fn new(
        integrand: ScalarExpr,
        offset: f64,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> Result<Self, String> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(format!("invalid tabulation interval [{lo}, {hi}]"));
        }
        let (lo, hi) = if hi - lo < MAX_STEP {
            (lo - MAX_STEP, hi + MAX_STEP)
        } else {
            (lo, hi)
        };
        let n = (((hi - lo) / MAX_STEP).ceil() as usize).max(2);
        let step = (hi - lo) / n as f64;
        let g = |s: f64| integrand.eval_profile(s).map_err(|e| e.to_string());
        let nodes: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
        let slopes = nodes.iter().map(|&s| g(s)).collect::<Result<Vec<_>, _>>()?;
        let panel_tol = tol / (n as f64);

        let anchor = ((0.0 - lo) / step).round().clamp(0.0, n as f64) as usize;
        let mut values = vec![0.0; n + 1];
        values[anchor] = offset + adaptive_simpson(&g, 0.0, nodes[anchor], panel_tol)?;
        for i in anchor + 1..=n {
            values[i] = values[i - 1] + adaptive_simpson(&g, nodes[i - 1], nodes[i], panel_tol)?;
        }
        for i in (0..anchor).rev() {
            values[i] = values[i + 1] - adaptive_simpson(&g, nodes[i], nodes[i + 1], panel_tol)?;
        }
        Ok(TabulatedAntiderivative {
            integrand,
            offset,
            lo,
            step,
            values,
            slopes,
            tol,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (
            self.lo,
            self.lo + self.step * (self.values.len() - 1) as f64,
        )
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn integrand(&self) -> &ScalarExpr {
        &self.integrand
    }

    pub fn evaluate(&self, s: f64) -> Result<f64, String> {
        if !s.is_finite() {
            return Err(format!("non-finite argument {s}"));
        }
        let (lo, hi) = self.interval();
        let g = |t: f64| self.integrand.eval_profile(t).map_err(|e| e.to_string());
        if s < lo {
            return Ok(self.values[0] - adaptive_simpson(&g, s, lo, self.tol)?);
        }
        if s > hi {
            let last = self.values.len() - 1;
            return Ok(self.values[last] + adaptive_simpson(&g, hi, s, self.tol)?);
        }
        let n = self.values.len() - 1;
        let i = (((s - lo) / self.step).floor() as usize).min(n - 1);
        let t = (s - (lo + self.step * i as f64)) / self.step;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.values[i]
            + h10 * self.step * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * self.step * self.slopes[i + 1])
    }
}

impl UnivariateFn for TabulatedAntiderivative {
    fn name(&self) -> &str {
        "antiderivative"
    }

    fn value(&self, s: f64) -> Result<f64, String> {
        self.evaluate(s)
    }

    fn derivative(&self) -> &ScalarExpr {
        &self.integrand
    }
}
