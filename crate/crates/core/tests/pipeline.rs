use approx::assert_relative_eq;
use tempfile::TempDir;

use beltrami_core::catalog::{all_examples, get_example};
use beltrami_core::fields::ScalarField;
use beltrami_core::flow::{
    evolve_expr, invariant_drift, trace_with_invariants, StepControl, Termination,
};
use beltrami_core::frames::{
    build_beltrami, build_beltrami_profile, build_beltrami_ratio, catalog_chart,
    check_construction_conditions, ChartName, OrthoTriple, SYMBOLIC_TOL,
};
use beltrami_core::guard::Guard;
use beltrami_core::output::{
    sample_grid, write_grid_csv, write_streamline_csv, write_vtk, GridExtras,
};
use beltrami_core::sampling::sample_points;
use beltrami_core::spec::FieldSpec;
use beltrami_core::verify::{verify_field, Classification, Expected};
use beltrami_core::{Aabb, ScalarExpr, Vec3};

fn expr(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src).unwrap()
}

#[test]
fn spec_files_round_trip_through_disk() {
    let dir = TempDir::new().unwrap();
    for e in all_examples() {
        let path = dir.path().join(format!("{}.toml", e.id));
        std::fs::write(&path, FieldSpec::from_catalog(&e).to_toml_string()).unwrap();
        let spec = FieldSpec::load(&path).unwrap();
        let w = spec.vector_field().unwrap();
        let pts = e.sample(30, 3).unwrap();
        let r = verify_field(&w, &pts, &spec.expected()).unwrap();
        assert!(r.passed(1e-10), "{}", e.id);
    }
}

#[test]
fn triple_spec_to_verified_field() {
    let e = get_example("ex3").unwrap();
    let t = e.triple.clone().unwrap();
    let spec = FieldSpec::from_triple("ex3", &t, None, Some(e.domain));
    let back = FieldSpec::from_toml_str(&spec.to_toml_string()).unwrap();
    let (t2, alpha) = back.ortho_triple().unwrap();
    assert!(alpha.is_none());
    let pts = e.sample(50, 9).unwrap();
    let b = build_beltrami(&t2, &pts).unwrap();
    let r = verify_field(
        &b.w,
        &pts,
        &Expected {
            hhat: Some(b.factor.clone()),
            div: None,
        },
    )
    .unwrap();
    assert!(r.passed(1e-10));
    assert_relative_eq!(r.hhat_mean, 1.0, max_relative = 1e-12);
}

#[test]
fn charts_construct_beltrami_fields() {
    for name in ChartName::ALL {
        let chart = catalog_chart(name.as_str()).unwrap();
        let domain = Aabb::new(Vec3::new(-1.5, 0.2, -1.0), Vec3::new(1.5, 1.5, 1.0));
        let pts = sample_points(&domain, chart.triple.guard(), 60, 21).unwrap();
        let b = build_beltrami(&chart.triple, &pts).unwrap();
        for w in [(&b.w, &b.factor), (&b.w_star, &b.star_factor)] {
            let r = verify_field(
                w.0,
                &pts,
                &Expected {
                    hhat: Some(w.1.clone()),
                    div: None,
                },
            )
            .unwrap();
            assert!(r.passed(1e-10), "{}", name.as_str());
        }
    }
}

#[test]
fn profile_and_ratio_generalisations() {
    let t = OrthoTriple::parse("x", "y", "z", Guard::none()).unwrap();
    let pts = sample_points(&Aabb::cube(1.0), &Guard::none(), 40, 4).unwrap();
    // F(θ) = θ^3/3 + θ gives factor F'(z) = z^2 + 1
    let b =
        build_beltrami_profile(&t, &ScalarExpr::parse_profile("s^3/3 + s").unwrap(), &pts).unwrap();
    let r = verify_field(
        &b.w,
        &pts,
        &Expected {
            hhat: Some(b.factor.clone()),
            div: None,
        },
    )
    .unwrap();
    assert!(r.passed(1e-10));
    for &p in &pts {
        assert_relative_eq!(
            b.factor.eval(p).unwrap(),
            p.z * p.z + 1.0,
            max_relative = 1e-14
        );
    }

    let field = |s: &str| ScalarField::unguarded(expr(s));
    let rc = build_beltrami_ratio(
        &field("x"),
        &field("y"),
        &field("z"),
        &ScalarExpr::parse_profile("exp(s)").unwrap(),
        &pts,
        SYMBOLIC_TOL,
    )
    .unwrap();
    let r = verify_field(
        &rc.w,
        &pts,
        &Expected {
            hhat: Some(rc.factor.clone()),
            div: None,
        },
    )
    .unwrap();
    assert!(r.passed(1e-10));
    for &p in &pts {
        let f = p.z.exp();
        assert_relative_eq!(
            rc.factor.eval(p).unwrap(),
            f / (1.0 + f * f),
            max_relative = 1e-12
        );
    }
}

#[test]
fn construction_conditions_reject_bad_triples() {
    let t = OrthoTriple::parse("x", "2*y", "z", Guard::none()).unwrap();
    let pts = sample_points(&Aabb::cube(1.0), &Guard::none(), 20, 1).unwrap();
    let r =
        check_construction_conditions(&t, &ScalarField::unguarded(expr("1")), &pts, SYMBOLIC_TOL)
            .unwrap();
    assert!(!r.passed());
    assert!(!r.get("equal_scale").unwrap().passed);
    assert!(r.get("orth_ell_psi").unwrap().passed);
}

#[test]
fn abc_flow_is_strong() {
    let e = get_example("abc(1, 0.7, 0.4)").unwrap();
    let r = verify_field(&e.field, &e.sample(100, 2).unwrap(), &Expected::default()).unwrap();
    assert!(r.strong);
    assert_eq!(r.classification, Classification::NontrivialBeltrami);
    assert_relative_eq!(r.hhat_mean, 1.0, max_relative = 1e-12);
}

#[test]
fn streamlines_and_grids_to_files() {
    let dir = TempDir::new().unwrap();
    let e = get_example("ex5").unwrap();
    let t = e.triple.as_ref().unwrap();
    let s = trace_with_invariants(
        &e.field,
        Some(t),
        Vec3::new(0.1, -0.2, 0.3),
        20.0,
        &StepControl::with_rtol(1e-10),
    )
    .unwrap();
    assert_eq!(s.termination, Termination::Completed);
    assert!(invariant_drift(&s).l_theta < 1e-8);
    let line = dir.path().join("line.csv");
    write_streamline_csv(&s, &line).unwrap();
    let text = std::fs::read_to_string(&line).unwrap();
    assert_eq!(text.lines().count(), s.len() + 1);
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 20.0);
    assert_eq!(last[1], s.end_point().x);

    let g = sample_grid(
        &e.field,
        &e.domain,
        [6, 5, 4],
        GridExtras {
            hhat: true,
            triple: Some(t),
        },
    )
    .unwrap();
    assert_eq!(g.len(), 120);
    for (i, h) in g.scalar("hhat").unwrap().iter().enumerate() {
        let p = g.node(i);
        assert_relative_eq!(*h, (p.x + p.y).exp(), max_relative = 1e-12);
    }
    write_vtk(&g, "ex5", dir.path().join("g.vtk")).unwrap();
    write_grid_csv(&g, dir.path().join("g.csv")).unwrap();
    let vtk = std::fs::read_to_string(dir.path().join("g.vtk")).unwrap();
    assert!(vtk.contains("DIMENSIONS 6 5 4"));
    assert!(vtk.contains("SCALARS hhat double"));
}

#[test]
fn observables_follow_the_bracket() {
    let e = get_example("ex6").unwrap();
    let t = e.triple.as_ref().unwrap();
    let ctrl = StepControl::with_rtol(1e-10);
    let series = evolve_expr(
        &expr("x*y + z"),
        t,
        &e.field,
        Vec3::new(0.1, 0.2, 0.0),
        2.0,
        &ctrl,
    )
    .unwrap();
    assert!(series.samples.len() > 5);
    assert!(series.median_bracket_mismatch() < 1e-10);
}
