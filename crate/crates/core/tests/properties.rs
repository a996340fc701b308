use beltrami_core::fields::{curl, divergence, gradient, ScalarField, VectorField};
use beltrami_core::guard::Guard;
use beltrami_core::{ScalarExpr, Var, Vec3};
use proptest::prelude::*;

/// Random expressions that stay finite and smooth on `[-1, 1]^3`.
fn expr_src() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        (-3i32..=3).prop_map(|c| c.to_string()),
        (1u32..=9).prop_map(|d| format!("0.{d}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(2 + sin({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("atan({a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
            inner.prop_map(|a| format!("({a})^3")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_print_round_trip(src in expr_src(), p in point()) {
        let e = ScalarExpr::parse(&src).unwrap();
        let again = ScalarExpr::parse(&e.to_string()).unwrap();
        prop_assert!(close(e.eval(p).unwrap(), again.eval(p).unwrap(), 1e-14));
        prop_assert_eq!(again.to_string(), e.to_string());
    }

    #[test]
    fn simplify_preserves_values(src in expr_src(), p in point()) {
        let e = ScalarExpr::parse(&src).unwrap();
        let s = e.simplify();
        prop_assert!(close(e.eval(p).unwrap(), s.eval(p).unwrap(), 1e-12), "{} vs {}", e, s);
        prop_assert!(s.node_count() <= e.node_count() + 2);
    }

    #[test]
    fn derivative_matches_central_difference(src in expr_src(), p in point()) {
        let e = ScalarExpr::parse(&src).unwrap();
        let h = 1e-5;
        for (v, d) in [(Var::X, Vec3::X), (Var::Y, Vec3::Y), (Var::Z, Vec3::Z)] {
            let sym = e.differentiate(v).eval(p).unwrap();
            let fd = (e.eval(p + d * h).unwrap() - e.eval(p - d * h).unwrap()) / (2.0 * h);
            let scale = 1.0 + e.eval(p).unwrap().abs() + sym.abs();
            prop_assert!((sym - fd).abs() <= 1e-5 * scale, "d{}/d{:?}: {} vs {}", e, v, sym, fd);
        }
    }

    #[test]
    fn curl_of_gradient_vanishes(src in expr_src(), p in point()) {
        let f = ScalarField::unguarded(ScalarExpr::parse(&src).unwrap());
        let g = gradient(&f);
        let c = curl(&g).eval(p).unwrap();
        let scale = 1.0 + g.eval(p).unwrap().norm();
        prop_assert!(c.max_abs() <= 1e-9 * scale, "{:?}", c);
    }

    #[test]
    fn divergence_of_curl_vanishes(a in expr_src(), b in expr_src(), c in expr_src(), p in point()) {
        let w = VectorField::parse([&a, &b, &c], Guard::none()).unwrap();
        let cw = curl(&w);
        let d = divergence(&cw).eval(p).unwrap();
        prop_assert!(d.abs() <= 1e-9 * (1.0 + cw.eval(p).unwrap().norm()), "{}", d);
    }
}
