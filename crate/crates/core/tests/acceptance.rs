//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit
//! if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::SQRT_2;
use std::process::ExitCode;

use beltrami_core::catalog::{get_example, CatalogEntry};
use beltrami_core::fields::{fd_curl, gradient, ScalarField, Stencil, VectorField};
use beltrami_core::flow::{invariant_drift, trace_with_invariants, StepControl};
use beltrami_core::frames::{
    build_beltrami, harmonic_conjugate, planar_frame_on_box, tangent_basis_residual, OrthoTriple,
    ThetaProfile,
};
use beltrami_core::guard::Guard;
use beltrami_core::sampling::{sample_points, seed_from_env, DEFAULT_SEED};
use beltrami_core::verify::{
    classify, continuity_check_ideal_gas, factor_invariance_check, nambu_identity_check,
    verify_field, Classification, Expected,
};
use beltrami_core::{Aabb, ScalarExpr, Vec3};

const TOL: f64 = 1e-10;
const SAMPLES: usize = 200;
const TRIPLE_IDS: [&str; 9] = ["b0", "ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7", "ex8"];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn expr(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src).unwrap_or_else(|e| panic!("`{src}`: {e}"))
}

fn entry(id: &str) -> CatalogEntry {
    get_example(id).unwrap_or_else(|e| panic!("{e}"))
}

fn seed() -> u64 {
    seed_from_env(DEFAULT_SEED)
}

fn samples(e: &CatalogEntry, n: usize) -> Vec<Vec3> {
    e.sample(n, seed()).expect("guarded sampling")
}

fn triple(e: &CatalogEntry) -> &OrthoTriple {
    e.triple.as_ref().expect("catalog triple")
}

fn judge(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(failures.join("; "))
    }
}

/// The factors as stated for each example, written independently of the
/// catalog.
fn stated_factor(id: &str) -> &'static str {
    match id {
        "b0" => "1",
        "ex1" => "-1",
        "ex2" => "1/sqrt(x^2 + y^2)",
        "ex3" => "1",
        "ex4" => "1/sqrt(x^2 + y^2)",
        "ex5" => "exp(x + y)",
        "ex6" => "-cos(x - y)",
        "ex7" => "atan(x + y + z)",
        "ex8" => "1",
        _ => unreachable!(),
    }
}

fn eigen_check(id: &str, w: &VectorField, points: &[Vec3], failures: &mut Vec<String>) -> f64 {
    let exp = Expected {
        hhat: Some(ScalarField::unguarded(expr(stated_factor(id)))),
        div: None,
    };
    match verify_field(w, points, &exp) {
        Ok(r) => {
            let h = r.hhat_expected_residual.unwrap_or(f64::INFINITY);
            if !(h <= TOL && r.max_alignment_residual <= TOL) {
                failures.push(format!(
                    "{id}: hhat {h:.2e}, alignment {:.2e}",
                    r.max_alignment_residual
                ));
            }
            h.max(r.max_alignment_residual)
        }
        Err(e) => {
            failures.push(format!("{id}: {e}"));
            f64::INFINITY
        }
    }
}

fn c1() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for id in TRIPLE_IDS {
        let e = entry(id);
        worst = worst.max(eigen_check(
            id,
            &e.field,
            &samples(&e, SAMPLES),
            &mut failures,
        ));
    }
    judge(
        failures,
        format!("9 fields x {SAMPLES} points, worst residual {worst:.2e}"),
    )
}

fn c2() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let rho = "sqrt(x^2 + y^2 + z^2)";
    let ex4 = format!("(x/sqrt({rho} - z) + y/sqrt({rho} + z))/(2*sqrt(x^2 + y^2)*{rho})");
    for id in TRIPLE_IDS {
        let e = entry(id);
        let pts = samples(&e, SAMPLES);
        let stated = match id {
            // cos θ / r with θ the azimuth
            "ex2" => Some(expr("x/(x^2 + y^2)")),
            "ex4" => Some(expr(&ex4)),
            _ => None,
        };
        let r = match verify_field(
            &e.field,
            &pts,
            &Expected {
                hhat: None,
                div: stated.clone().map(ScalarField::unguarded),
            },
        ) {
            Ok(r) => r,
            Err(err) => {
                failures.push(format!("{id}: {err}"));
                continue;
            }
        };
        let res = match stated {
            Some(_) => r.divergence_expected_residual.unwrap_or(f64::INFINITY),
            None => r.divergence_max,
        };
        worst = worst.max(res);
        if !(res <= TOL) {
            failures.push(format!("{id}: {res:.2e}"));
        }
    }
    judge(failures, format!("worst divergence residual {worst:.2e}"))
}

fn c3() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for id in TRIPLE_IDS {
        let e = entry(id);
        let t = triple(&e);
        let pts = samples(&e, SAMPLES);
        let b = match build_beltrami(t, &pts) {
            Ok(b) => b,
            Err(err) => {
                failures.push(format!("{id}: {err}"));
                continue;
            }
        };
        for &p in &pts {
            let jac = t.jacobian_at(p).unwrap();
            if jac.signum() != b.sigma.value() {
                failures.push(format!(
                    "{id}: sigma {} against Jacobian {jac:e} at {p}",
                    b.sigma
                ));
                break;
            }
        }
        let alpha = t.theta_gradient_norm();
        for (w, s) in [(&b.w, 1.0), (&b.w_star, -1.0)] {
            let curl = w.curl();
            for &p in &pts {
                let k = s * b.sigma.value() * alpha.eval(p).unwrap();
                let c = curl.eval(p).unwrap();
                let d = (c - w.eval(p).unwrap() * k).max_abs() / (1.0 + c.max_abs());
                worst = worst.max(d);
                if !(d <= TOL) {
                    failures.push(format!(
                        "{id}{}: {d:.2e} at {p}",
                        if s < 0.0 { "*" } else { "" }
                    ));
                    break;
                }
            }
        }
    }
    judge(failures, format!("9 triples, w and w*, worst {worst:.2e}"))
}

struct PlanarItem {
    name: &'static str,
    n: Vec3,
    g: &'static str,
    big_g: &'static str,
    offset: f64,
    theta: &'static str,
}

fn planar_items() -> [PlanarItem; 3] {
    let s3 = 3f64.sqrt();
    [
        PlanarItem {
            name: "ex5",
            n: Vec3::new(1.0, 1.0, 0.0) / SQRT_2,
            g: "exp(sqrt(2)*s)",
            big_g: "exp(sqrt(2)*s)/sqrt(2)",
            offset: 1.0 / SQRT_2,
            theta: "exp(x + y)/sqrt(2)",
        },
        PlanarItem {
            name: "ex6",
            n: Vec3::new(1.0, -1.0, 0.0) / SQRT_2,
            g: "cos(sqrt(2)*s)",
            big_g: "sin(sqrt(2)*s)/sqrt(2)",
            offset: 0.0,
            theta: "sin(x - y)/sqrt(2)",
        },
        PlanarItem {
            name: "ex7",
            n: Vec3::new(1.0, 1.0, 1.0) / s3,
            g: "atan(sqrt(3)*s)",
            big_g: "(sqrt(3)*s*atan(sqrt(3)*s) - log(1 + 3*s^2)/2)/sqrt(3)",
            offset: 0.0,
            theta: "((x + y + z)*atan(x + y + z) - log(1 + (x + y + z)^2)/2)/sqrt(3)",
        },
    ]
}

/// Agreement to a few ulps is what "exact" means for two algebraically
/// identical expressions evaluated in floating point.
const ROUNDOFF: f64 = 1e-14;

fn c4() -> Outcome {
    let mut failures = Vec::new();
    let cube = Aabb::cube(1.0);
    let pts = sample_points(&cube, &Guard::none(), SAMPLES, seed()).unwrap();
    let (mut worst_q, mut worst_c): (f64, f64) = (0.0, 0.0);
    for item in planar_items() {
        let want = expr(item.theta);
        let g = ScalarExpr::parse_profile(item.g).unwrap();
        let profiles = [
            (
                ThetaProfile::Quadrature {
                    offset: item.offset,
                },
                1e-8,
                "quadrature",
            ),
            (
                ThetaProfile::Closed(ScalarExpr::parse_profile(item.big_g).unwrap()),
                ROUNDOFF,
                "closed",
            ),
        ];
        for (profile, tol, label) in profiles {
            let pf = match planar_frame_on_box(item.n, &g, profile, &cube) {
                Ok(pf) => pf,
                Err(e) => {
                    failures.push(format!("{} {label}: {e}", item.name));
                    continue;
                }
            };
            let mut worst: f64 = 0.0;
            for &p in &pts {
                let got = pf.triple.theta().eval(p).unwrap();
                let w = want.eval(p).unwrap();
                worst = worst.max((got - w).abs() / (1.0 + w.abs()));
            }
            if label == "quadrature" {
                worst_q = worst_q.max(worst);
            } else {
                worst_c = worst_c.max(worst);
            }
            if !(worst <= tol) {
                failures.push(format!("{} {label}: {worst:.2e}", item.name));
            }
        }
    }
    judge(
        failures,
        format!("items 5-7 on [-1,1]^3, quadrature {worst_q:.2e}, closed form {worst_c:.2e}"),
    )
}

fn c5() -> Outcome {
    let mut failures = Vec::new();
    let ell = ScalarField::unguarded(expr("exp(x)*sin(y)"));
    let square = Aabb::new(Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, 1.0, 0.0));
    let psi = match harmonic_conjugate(&ell, Vec3::ZERO, &square) {
        Ok(psi) => psi,
        Err(e) => return Err(e.to_string()),
    };
    let reference = expr("-exp(x)*cos(y)");
    let constant = psi.eval(Vec3::ZERO).unwrap() - reference.eval(Vec3::ZERO).unwrap();
    let mut worst: f64 = 0.0;
    let n = 21;
    for i in 0..n {
        for j in 0..n {
            let p = Vec3::new(
                -1.0 + 2.0 * i as f64 / (n - 1) as f64,
                -1.0 + 2.0 * j as f64 / (n - 1) as f64,
                0.0,
            );
            let d = (psi.eval(p).unwrap() - reference.eval(p).unwrap() - constant).abs();
            worst = worst.max(d);
        }
    }
    if !(worst <= 1e-8) {
        failures.push(format!("psi deviation {worst:.2e}"));
    }
    let e = entry("ex8");
    let t = OrthoTriple::new(
        ell.expr().clone(),
        psi.expr().clone(),
        expr("z"),
        e.guard().clone(),
    );
    let pts = samples(&e, SAMPLES);
    let w = t.beltrami_field();
    let eig = eigen_check("ex8", &w, &pts, &mut failures);
    judge(
        failures,
        format!(
            "|psi + exp(x)cos(y) - c| <= {worst:.2e} on a 21x21 grid, field residual {eig:.2e}"
        ),
    )
}

const DRIFT_TOL: f64 = 1e-6;
const DRIFT_SLACK: f64 = 1e-12;

fn c6() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut traces = 0;
    let base = seed();
    for id in TRIPLE_IDS {
        let e = entry(id);
        let t = triple(&e);
        for k in 0..5u64 {
            let x0 = e.sample(1, base.wrapping_add(k)).expect("start point")[0];
            let drift = |rtol: f64| -> Result<f64, String> {
                let s = trace_with_invariants(
                    &e.field,
                    Some(t),
                    x0,
                    20.0,
                    &StepControl::with_rtol(rtol),
                )
                .map_err(|err| format!("{id} from {x0}: {err}"))?;
                let d = invariant_drift(&s);
                Ok(d.theta.max(d.l_theta))
            };
            let mut run = || -> Result<(), String> {
                let d = drift(1e-10)?;
                traces += 1;
                worst = worst.max(d);
                if !(d <= DRIFT_TOL) {
                    return Err(format!("{id} from {x0}: drift {d:.2e}"));
                }
                let ladder = [drift(1e-3)?, drift(1e-6)?, drift(1e-9)?];
                if !(ladder[1] <= ladder[0] + DRIFT_SLACK && ladder[2] <= ladder[1] + DRIFT_SLACK) {
                    return Err(format!(
                        "{id} from {x0}: drift not monotone {:.2e} {:.2e} {:.2e}",
                        ladder[0], ladder[1], ladder[2]
                    ));
                }
                Ok(())
            };
            if let Err(msg) = run() {
                failures.push(msg);
            }
        }
    }
    judge(
        failures,
        format!("{traces} traces to t = 20, worst drift {worst:.2e}, monotone in rtol"),
    )
}

fn c7() -> Outcome {
    let mut failures = Vec::new();
    let (mut nambu, mut tangent, mut invariance): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for id in TRIPLE_IDS {
        let e = entry(id);
        let t = triple(&e);
        let pts = samples(&e, SAMPLES);
        match nambu_identity_check(&e.field, t, &pts) {
            Ok(r) => {
                nambu = nambu.max(r.absolute);
                if !(r.absolute <= TOL) {
                    failures.push(format!("{id} Nambu {:.2e}", r.absolute));
                }
            }
            Err(err) => failures.push(format!("{id} Nambu: {err}")),
        }
        match tangent_basis_residual(t, &pts) {
            Ok(r) => {
                tangent = tangent.max(r);
                if !(r <= TOL) {
                    failures.push(format!("{id} tangent basis {r:.2e}"));
                }
            }
            Err(err) => failures.push(format!("{id} tangent basis: {err}")),
        }
    }
    for id in ["b0", "abc", "ex1", "ex3", "ex5", "ex6", "ex7", "ex8"] {
        let e = entry(id);
        assert!(e.is_solenoidal(), "{id}");
        match factor_invariance_check(&e.field, &samples(&e, SAMPLES)) {
            Ok(r) => {
                invariance = invariance.max(r);
                if !(r <= TOL) {
                    failures.push(format!("{id} |w.grad hhat| {r:.2e}"));
                }
            }
            Err(err) => failures.push(format!("{id} |w.grad hhat|: {err}")),
        }
    }
    judge(
        failures,
        format!("Nambu {nambu:.2e}, tangent basis {tangent:.2e}, |w.grad hhat| {invariance:.2e}"),
    )
}

fn c8() -> Outcome {
    let mut failures = Vec::new();
    let mut ratios = Vec::new();
    for id in ["b0", "abc", "ex2", "ex5", "ex7"] {
        let e = entry(id);
        let pts = samples(&e, 20);
        let curl = e.field.curl();
        let err = |h: f64| -> f64 {
            pts.iter()
                .map(|&p| {
                    let fd = fd_curl(&e.field, p, h, Stencil::Central2).unwrap();
                    (fd - curl.eval(p).unwrap()).max_abs()
                })
                .sum()
        };
        let ratio = err(1e-3) / err(5e-4);
        ratios.push(format!("{id} {ratio:.3}"));
        if !((3.2..=4.8).contains(&ratio)) {
            failures.push(format!("{id}: ratio {ratio:.3}"));
        }
    }
    judge(failures, format!("error ratios {}", ratios.join(", ")))
}

fn c9() -> Outcome {
    let mut failures = Vec::new();
    let abc = entry("abc(1,1,1)");
    let lamellar = VectorField::parse(["y", "0", "0"], Guard::none()).unwrap();
    let grad = gradient(&ScalarField::unguarded(expr("x^2 + y^3")));
    let pts = sample_points(&Aabb::cube(2.0), &Guard::none(), SAMPLES, seed()).unwrap();
    let cases = [
        ("ABC(1,1,1)", &abc.field, Classification::NontrivialBeltrami),
        ("(y,0,0)", &lamellar, Classification::ComplexLamellar),
        ("grad(x^2+y^3)", &grad, Classification::Degenerate),
    ];
    let mut got = Vec::new();
    for (name, w, want) in cases {
        match classify(w, &pts) {
            Ok(c) => {
                got.push(format!("{name} {c}"));
                if c != want {
                    failures.push(format!("{name}: {c}, expected {want}"));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    judge(failures, got.join(", "))
}

fn c10() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let params = [(1.0, 1.0), (2.0, 0.5)];
    for id in ["b0", "ex5"] {
        let e = entry(id);
        let pts = samples(&e, SAMPLES);
        for (k, c) in params {
            match continuity_check_ideal_gas(&e.field, k, c, &pts) {
                Ok(r) => {
                    worst = worst.max(r);
                    if !(r <= TOL) {
                        failures.push(format!("{id} (k={k}, c={c}): {r:.2e}"));
                    }
                }
                Err(err) => failures.push(format!("{id}: {err}")),
            }
        }
    }
    let e = entry("ex2");
    let pts = samples(&e, SAMPLES);
    let mut ex2 = Vec::new();
    for (k, c) in params {
        match continuity_check_ideal_gas(&e.field, k, c, &pts) {
            Ok(r) => {
                ex2.push(format!("{r:.3e}"));
                if !(r > 1e-3) {
                    failures.push(format!(
                        "ex2 (k={k}, c={c}): residual {r:.2e} unexpectedly small"
                    ));
                }
            }
            Err(err) => failures.push(format!("ex2: {err}")),
        }
    }
    judge(
        failures,
        format!(
            "b0/ex5 worst {worst:.2e}; ex2 residual {} (not continuity-compatible)",
            ex2.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("catalog eigenvalues", c1),
        ("catalog divergences", c2),
        ("constructor w and w*", c3),
        ("planar eikonal reconstruction", c4),
        ("harmonic conjugate", c5),
        ("invariant conservation", c6),
        ("identity suite", c7),
        ("finite-difference oracle", c8),
        ("classification", c9),
        ("ideal-gas continuity", c10),
    ];
    println!("acceptance (seed {:#x})", seed());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] C{} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] C{} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
