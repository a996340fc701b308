//! Streamlines of `ẋ = w(x)` by the Dormand–Prince 5(4) pair with PI step
//! control, sampling the invariants `θ` and `L_θ` at accepted steps.

use serde::Serialize;
use thiserror::Error;

use crate::expr::ScalarExpr;
use crate::fields::{self, FieldError, ScalarField, VectorField};
use crate::frames::OrthoTriple;
use crate::vec3::Vec3;
use crate::verify::{proportionality_factor, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Upper bound on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl StepControl {
    pub fn with_rtol(rtol: f64) -> Self {
        StepControl {
            rtol,
            atol: rtol * 1e-2,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("start point: {0}")]
    Start(FieldError),
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit {0} reached")]
    TooManySteps(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The next step could not stay inside the guarded domain.
    GuardExit {
        t: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Rejections caused by a stage leaving the domain.
    pub domain_rejections: usize,
    /// Largest scaled error estimate among accepted steps.
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Streamline {
    pub times: Vec<f64>,
    pub points: Vec<Vec3>,
    /// `w` at each point (the integrator's own stage values).
    pub velocities: Vec<Vec3>,
    /// Empty when no triple is attached.
    pub theta_values: Vec<f64>,
    pub l_theta_values: Vec<f64>,
    pub stats: StepStats,
    pub termination: Termination,
}

impl Streamline {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_point(&self) -> Vec3 {
        *self
            .points
            .last()
            .expect("a streamline holds its start point")
    }

    pub fn end_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("a streamline holds its start time")
    }
}

// Dormand–Prince coefficients; the field is autonomous so the nodes c_i
// are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
/// Smallest step tried after a domain rejection before giving up.
const MIN_DOMAIN_STEP: f64 = 1e-10;

struct Trial {
    x: Vec3,
    k_last: Vec3,
    err: f64,
}

fn dp_step(
    w: &VectorField,
    x: Vec3,
    k1: Vec3,
    h: f64,
    ctrl: &StepControl,
) -> Result<Trial, FieldError> {
    let mut k = [Vec3::ZERO; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut y = x;
        for (j, kj) in k.iter().enumerate().take(s) {
            if A[s][j] != 0.0 {
                y += *kj * (h * A[s][j]);
            }
        }
        k[s] = w.eval(y)?;
        if !k[s].is_finite() {
            return Err(FieldError::Guard {
                point: y,
                guard: "finite field value".into(),
            });
        }
    }
    // Stage 7 is evaluated at the fifth-order solution (FSAL).
    let mut x_new = x;
    for j in 0..6 {
        x_new += k[j] * (h * A[6][j]);
    }
    let mut err: f64 = 0.0;
    for i in 0..3 {
        let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
        let sc = ctrl.atol + ctrl.rtol * x[i].abs().max(x_new[i].abs());
        err = err.max(e.abs() / sc);
    }
    Ok(Trial {
        x: x_new,
        k_last: k[6],
        err,
    })
}

fn initial_step(w: &VectorField, x0: Vec3, f0: Vec3, ctrl: &StepControl) -> f64 {
    let sc = |v: Vec3, x: Vec3| -> f64 {
        (0..3)
            .map(|i| (v[i] / (ctrl.atol + ctrl.rtol * x[i].abs())).powi(2))
            .sum::<f64>()
            .sqrt()
            / 3f64.sqrt()
    };
    let d0 = sc(x0, x0);
    let d1 = sc(f0, x0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(ctrl.max_step);
    let h1 = match w.eval(x0 + f0 * h0) {
        Ok(f1) => {
            let d2 = sc(f1 - f0, x0) / h0;
            if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            }
        }
        Err(_) => h0 * 1e-2,
    };
    (100.0 * h0).min(h1).min(ctrl.max_step)
}

fn check_control(ctrl: &StepControl, t_end: f64) -> Result<(), FlowError> {
    let bad = |m: &str| Err(FlowError::InvalidControl(m.to_string()));
    if !(ctrl.rtol > 0.0 && ctrl.rtol.is_finite()) {
        return bad("rtol must be positive");
    }
    if !(ctrl.atol >= 0.0 && ctrl.atol.is_finite()) {
        return bad("atol must be non-negative");
    }
    if !(ctrl.max_step > 0.0) {
        return bad("max_step must be positive");
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return bad("t_end must be finite and non-negative");
    }
    Ok(())
}

/// Integrates `ẋ = w(x)` from `x0` over `[0, t_end]`.
pub fn trace_streamline(
    w: &VectorField,
    x0: Vec3,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<Streamline, FlowError> {
    trace_with_invariants(w, None, x0, t_end, ctrl)
}

/// As [`trace_streamline`], also sampling `θ` and `L_θ` of `triple` at
/// every accepted point.
pub fn trace_with_invariants(
    w: &VectorField,
    triple: Option<&OrthoTriple>,
    x0: Vec3,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<Streamline, FlowError> {
    check_control(ctrl, t_end)?;
    let f0 = w.eval(x0).map_err(FlowError::Start)?;
    let invariants = triple.map(|t| (t.theta_field(), t.l_theta()));
    let sample = |p: Vec3| -> Result<Option<(f64, f64)>, FieldError> {
        invariants
            .as_ref()
            .map(|(th, l)| Ok((th.eval(p)?, l.eval(p)?)))
            .transpose()
    };

    let mut s = Streamline {
        times: vec![0.0],
        points: vec![x0],
        velocities: vec![f0],
        theta_values: Vec::new(),
        l_theta_values: Vec::new(),
        stats: StepStats::default(),
        termination: Termination::Completed,
    };
    let push_invariants = |s: &mut Streamline, v: Option<(f64, f64)>| {
        if let Some((th, l)) = v {
            s.theta_values.push(th);
            s.l_theta_values.push(l);
        }
    };
    push_invariants(&mut s, sample(x0).map_err(FlowError::Start)?);
    if t_end == 0.0 {
        return Ok(s);
    }

    let (mut t, mut x, mut k1) = (0.0, x0, f0);
    let mut h = initial_step(w, x0, f0, ctrl).min(t_end);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0;

    while t < t_end {
        steps += 1;
        if steps > ctrl.max_steps {
            return Err(FlowError::TooManySteps(ctrl.max_steps));
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };
        let trial = match dp_step(w, x, k1, h_try, ctrl) {
            Ok(trial) => trial,
            Err(e) => {
                s.stats.domain_rejections += 1;
                s.stats.rejected += 1;
                h = 0.5 * h_try;
                last_rejected = true;
                if h < MIN_DOMAIN_STEP * (1.0 + t.abs()) {
                    s.termination = Termination::GuardExit {
                        t,
                        reason: e.to_string(),
                    };
                    return Ok(s);
                }
                continue;
            }
        };
        let err = trial.err.max(1e-16);
        if err <= 1.0 {
            let inv = match sample(trial.x) {
                Ok(v) => v,
                Err(e) => {
                    s.termination = Termination::GuardExit {
                        t,
                        reason: e.to_string(),
                    };
                    return Ok(s);
                }
            };
            t = if last { t_end } else { t + h_try };
            x = trial.x;
            k1 = trial.k_last;
            s.times.push(t);
            s.points.push(x);
            s.velocities.push(k1);
            push_invariants(&mut s, inv);
            s.stats.accepted += 1;
            s.stats.max_error_estimate = s.stats.max_error_estimate.max(trial.err);

            let mut fac = SAFETY * err.powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h_try * fac).min(ctrl.max_step);
            err_old = err;
            last_rejected = false;
        } else {
            s.stats.rejected += 1;
            let fac = (SAFETY * err.powf(-ALPHA)).max(FAC_MIN);
            h = h_try * fac;
            last_rejected = true;
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(FlowError::StepUnderflow { t, h });
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Drift {
    /// `max |θ(t) − θ(0)|`.
    pub theta: f64,
    /// `max |L_θ(t) − L_θ(0)|`.
    pub l_theta: f64,
    /// `l_theta / (1 + |L_θ(0)|)`.
    pub l_theta_scaled: f64,
}

/// Drift of the sampled invariants; zero for traces without samples.
pub fn invariant_drift(s: &Streamline) -> Drift {
    let drift = |v: &[f64]| {
        v.first().map_or(0.0, |&v0| {
            v.iter()
                .map(|&x| {
                    if x.is_nan() {
                        f64::INFINITY
                    } else {
                        (x - v0).abs()
                    }
                })
                .fold(0.0, f64::max)
        })
    };
    let l = drift(&s.l_theta_values);
    let l0 = s.l_theta_values.first().copied().unwrap_or(0.0);
    Drift {
        theta: drift(&s.theta_values),
        l_theta: l,
        l_theta_scaled: l / (1.0 + l0.abs()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableSample {
    pub time: f64,
    pub value: f64,
    /// `ĥ⁻¹ ∇f·∇θ×∇L_θ`.
    pub bracket: f64,
    /// `d f/dt` along the computed trajectory, `∇f·ẋ` with the integrator's
    /// velocity at the accepted point.
    pub rate: f64,
    /// Central difference of `f` along the flow with a fixed small step.
    pub fd_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableSeries {
    pub samples: Vec<ObservableSample>,
    pub stats: StepStats,
    pub termination: Termination,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl ObservableSeries {
    /// Median of `|rate − bracket| / (1 + |f|)`.
    pub fn median_bracket_mismatch(&self) -> f64 {
        median(
            self.samples
                .iter()
                .map(|s| (s.rate - s.bracket).abs() / (1.0 + s.value.abs()))
                .collect(),
        )
    }

    /// Median of `|fd_rate − bracket| / (1 + |f|)`.
    pub fn median_fd_mismatch(&self) -> f64 {
        median(
            self.samples
                .iter()
                .map(|s| (s.fd_rate - s.bracket).abs() / (1.0 + s.value.abs()))
                .collect(),
        )
    }
}

/// Step of the finite-difference slope in [`evolve_observable`].
pub const FD_FLOW_STEP: f64 = 1e-4;

fn rk4(w: &VectorField, x: Vec3, h: f64) -> Result<Vec3, FieldError> {
    let k1 = w.eval(x)?;
    let k2 = w.eval(x + k1 * (0.5 * h))?;
    let k3 = w.eval(x + k2 * (0.5 * h))?;
    let k4 = w.eval(x + k3 * h)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Traces `w` from `x0` and reports `f`, its rate of change and the bracket
/// `{f, θ, L_θ}` at every accepted point.
pub fn evolve_observable(
    f: &ScalarField,
    triple: &OrthoTriple,
    w: &VectorField,
    x0: Vec3,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<ObservableSeries, FlowError> {
    let line = trace_streamline(w, x0, t_end, ctrl)?;
    let grad_f = fields::gradient(f);
    let grad_theta = &triple.gradients()[2];
    let grad_l = fields::gradient(&triple.l_theta());
    let nambu = grad_theta.cross(&grad_l);
    let value = |p: Vec3| -> Result<f64, FieldError> { Ok(f.expr().eval(p)?) };

    let mut samples = Vec::with_capacity(line.len());
    for ((&time, &p), &v) in line.times.iter().zip(&line.points).zip(&line.velocities) {
        let gf = grad_f.eval_unguarded(p)?;
        let hhat = proportionality_factor(w, p)?;
        let bracket = gf.dot(nambu.eval_unguarded(p)?) / hhat;
        let fd_rate = match (rk4(w, p, FD_FLOW_STEP), rk4(w, p, -FD_FLOW_STEP)) {
            (Ok(a), Ok(b)) => (value(a)? - value(b)?) / (2.0 * FD_FLOW_STEP),
            _ => f64::NAN,
        };
        samples.push(ObservableSample {
            time,
            value: value(p)?,
            bracket,
            rate: gf.dot(v),
            fd_rate,
        });
    }
    Ok(ObservableSeries {
        samples,
        stats: line.stats,
        termination: line.termination,
    })
}

/// Convenience: `f` given as an expression without a guard.
pub fn evolve_expr(
    f: &ScalarExpr,
    triple: &OrthoTriple,
    w: &VectorField,
    x0: Vec3,
    t_end: f64,
    ctrl: &StepControl,
) -> Result<ObservableSeries, FlowError> {
    evolve_observable(
        &ScalarField::unguarded(f.clone()),
        triple,
        w,
        x0,
        t_end,
        ctrl,
    )
}
