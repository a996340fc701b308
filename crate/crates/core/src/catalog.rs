//! Built-in Beltrami fields with their expected factors, divergences and
//! invariants. Fields are written out in Cartesian components; the
//! coordinate triples they come from are stored separately so the two can
//! be checked against each other.

use thiserror::Error;

use crate::expr::ScalarExpr;
use crate::fields::{ScalarField, VectorField};
use crate::frames::OrthoTriple;
use crate::guard::Guard;
use crate::sampling::{sample_points, SamplingError};
use crate::vec3::{Aabb, Vec3};

/// Identifiers accepted by [`get_example`]; `abc` also takes parameters as
/// `abc(A,B,C)`.
pub const CATALOG_IDS: [&str; 10] = [
    "b0", "abc", "ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7", "ex8",
];

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("unknown catalog id `{0}`; known ids: b0, abc, abc(A,B,C), ex1 ... ex8")]
    UnknownId(String),
    #[error("bad ABC parameters in `{0}`; expected abc(A,B,C) with three numbers")]
    BadAbcParameters(String),
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub title: &'static str,
    pub field: VectorField,
    pub triple: Option<OrthoTriple>,
    pub expected_hhat: ScalarField,
    pub expected_div: ScalarField,
    /// `θ` and `L_θ` when a triple is known.
    pub invariants: Option<(ScalarExpr, ScalarExpr)>,
    /// Default sampling box.
    pub domain: Aabb,
    pub notes: &'static str,
}

impl CatalogEntry {
    pub fn guard(&self) -> &Guard {
        self.field.guard()
    }

    pub fn is_solenoidal(&self) -> bool {
        self.expected_div.expr().is_const_value(0.0)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec3>, SamplingError> {
        sample_points(&self.domain, self.guard(), n, seed)
    }
}

const CUT: &str = "x > 0 || y^2 >= 0.0025";

struct Raw {
    title: &'static str,
    field: [String; 3],
    triple: Option<[&'static str; 3]>,
    hhat: &'static str,
    div: &'static str,
    guard: String,
    domain: Aabb,
    notes: &'static str,
}

fn parse(src: &str) -> ScalarExpr {
    ScalarExpr::parse(src).unwrap_or_else(|e| panic!("catalog expression `{src}`: {e}"))
}

fn boxed(lo: [f64; 3], hi: [f64; 3]) -> Aabb {
    Aabb::new(Vec3::from_array(lo), Vec3::from_array(hi))
}

fn abc(a: f64, b: f64, c: f64) -> Raw {
    Raw {
        title: "Arnold-Beltrami-Childress flow",
        field: [
            format!("{a:?}*sin(z) + {c:?}*cos(y)"),
            format!("{b:?}*sin(x) + {a:?}*cos(z)"),
            format!("{c:?}*sin(y) + {b:?}*cos(x)"),
        ],
        triple: None,
        hhat: "1",
        div: "0",
        guard: "none".into(),
        domain: Aabb::cube(3.0),
        notes: "strong Beltrami field; stagnation points are possible for some parameters",
    }
}

fn raw(id: &str) -> Result<Raw, CatalogError> {
    let f = |a: &str, b: &str, c: &str| [a.to_string(), b.to_string(), c.to_string()];
    let r = "sqrt(x^2 + y^2)";
    let rho = "sqrt(x^2 + y^2 + z^2)";
    let raw = match id {
        "b0" => Raw {
            title: "reference field (sin z, cos z, 0)",
            field: f("sin(z)", "cos(z)", "0"),
            triple: Some(["x", "y", "z"]),
            hhat: "1",
            div: "0",
            guard: "none".into(),
            domain: Aabb::cube(2.0),
            notes: "invariants z and x cos z - y sin z",
        },
        "abc" => abc(1.0, 1.0, 1.0),
        "ex1" => Raw {
            title: "cos z grad log r + sin z grad phi",
            field: f(
                "(x*cos(z) - y*sin(z))/(x^2 + y^2)",
                "(y*cos(z) + x*sin(z))/(x^2 + y^2)",
                "0",
            ),
            triple: Some(["atan2(y, x)", "log(sqrt(x^2 + y^2))", "z"]),
            hhat: "-1",
            div: "0",
            guard: format!("r >= 0.05 && {CUT}"),
            domain: boxed([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0]),
            notes: "L_z contains the azimuth itself, so its branch cut is guarded",
        },
        "ex2" => Raw {
            title: "sin phi grad z + cos phi grad r",
            field: f("x^2/(x^2 + y^2)", "x*y/(x^2 + y^2)", "y/sqrt(x^2 + y^2)"),
            triple: Some(["z", r, "atan2(y, x)"]),
            hhat: "1/sqrt(x^2 + y^2)",
            div: "cos(atan2(y, x))/sqrt(x^2 + y^2)",
            guard: format!("r >= 0.05 && {CUT}"),
            domain: boxed([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0]),
            notes: "not solenoidal; cos phi and sin phi written as x/r and y/r",
        },
        "ex3" => Raw {
            title: "cos z grad v + sin z grad u, parabolic cylindrical (u, v, z)",
            field: [
                format!("(sin(z)*sqrt({r} + x) - cos(z)*sqrt({r} - x))/(2*{r})"),
                format!("(cos(z)*sqrt({r} + x) + sin(z)*sqrt({r} - x))/(2*{r})"),
                "0".into(),
            ],
            triple: Some([
                "sqrt(sqrt(x^2 + y^2) + x)",
                "sqrt(sqrt(x^2 + y^2) - x)",
                "z",
            ]),
            hhat: "1",
            div: "0",
            guard: "r >= 0.05 && y >= 0.05".into(),
            domain: boxed([-2.0, 0.2, -1.0], [2.0, 2.0, 1.0]),
            notes: "v = sqrt(r - x) is the y > 0 branch; the factor is -1 on y < 0",
        },
        "ex4" => Raw {
            title: "cos phi grad eta + sin phi grad xi, parabolic (xi, eta, phi)",
            field: [
                format!("(x^2*sqrt({rho} + z) + x*y*sqrt({rho} - z))/(2*{rho}*(x^2 + y^2))"),
                format!("(x*y*sqrt({rho} + z) + y^2*sqrt({rho} - z))/(2*{rho}*(x^2 + y^2))"),
                format!("(y*sqrt({rho} + z) - x*sqrt({rho} - z))/(2*{rho}*{r})"),
            ],
            triple: Some([
                "sqrt(sqrt(x^2 + y^2 + z^2) + z)",
                "sqrt(sqrt(x^2 + y^2 + z^2) - z)",
                "atan2(y, x)",
            ]),
            hhat: "1/sqrt(x^2 + y^2)",
            div: "(x/sqrt(sqrt(x^2 + y^2 + z^2) - z) + y/sqrt(sqrt(x^2 + y^2 + z^2) + z))\
                  /(2*sqrt(x^2 + y^2)*sqrt(x^2 + y^2 + z^2))",
            guard: format!("rho >= 0.05 && r >= 0.05 && sqrt(rho + z) >= 0.05 && sqrt(rho - z) >= 0.05 && {CUT}"),
            domain: Aabb::cube(1.5),
            notes: "r in the factor and divergence is the cylindrical radius",
        },
        "ex5" => Raw {
            title: "planar eikonal solution with factor exp(x + y)",
            field: f(
                "cos(exp(x + y)/sqrt(2))/sqrt(2)",
                "-cos(exp(x + y)/sqrt(2))/sqrt(2)",
                "sin(exp(x + y)/sqrt(2))",
            ),
            triple: Some(["z", "(x - y)/sqrt(2)", "exp(x + y)/sqrt(2)"]),
            hhat: "exp(x + y)",
            div: "0",
            guard: "none".into(),
            domain: Aabb::cube(1.0),
            notes: "",
        },
        "ex6" => Raw {
            title: "planar eikonal solution with factor -cos(x - y)",
            field: f(
                "cos(sin(x - y)/sqrt(2))/sqrt(6) - sin(sin(x - y)/sqrt(2))/sqrt(3)",
                "cos(sin(x - y)/sqrt(2))/sqrt(6) - sin(sin(x - y)/sqrt(2))/sqrt(3)",
                "2*cos(sin(x - y)/sqrt(2))/sqrt(6) + sin(sin(x - y)/sqrt(2))/sqrt(3)",
            ),
            triple: Some([
                "(z - x - y)/sqrt(3)",
                "(x + y + 2*z)/sqrt(6)",
                "sin(x - y)/sqrt(2)",
            ]),
            hhat: "-cos(x - y)",
            div: "0",
            guard: "cos(x - y)^2 >= 0.0025".into(),
            domain: Aabb::cube(0.7),
            notes: "the Jacobian is -cos(x - y); the box keeps it single-signed",
        },
        "ex7" => Raw {
            title: "planar eikonal solution with factor atan(x + y + z)",
            field: {
                let t = "((x + y + z)*atan(x + y + z) - log(1 + (x + y + z)^2)/2)/sqrt(3)";
                [
                    format!("cos({t})/sqrt(6) + sin({t})/sqrt(2)"),
                    format!("cos({t})/sqrt(6) - sin({t})/sqrt(2)"),
                    format!("-2*cos({t})/sqrt(6)"),
                ]
            },
            triple: Some([
                "(x - y)/sqrt(2)",
                "(x + y - 2*z)/sqrt(6)",
                "((x + y + z)*atan(x + y + z) - log(1 + (x + y + z)^2)/2)/sqrt(3)",
            ]),
            hhat: "atan(x + y + z)",
            div: "0",
            guard: "(x + y + z)^2 >= 0.0025".into(),
            domain: boxed([0.05; 3], [1.0; 3]),
            notes: "the Jacobian is atan(x + y + z); the box keeps it single-signed",
        },
        "ex8" => Raw {
            title: "harmonic pair exp(x) sin y, -exp(x) cos y",
            field: f(
                "-cos(z)*exp(x)*cos(y) + sin(z)*exp(x)*sin(y)",
                "cos(z)*exp(x)*sin(y) + sin(z)*exp(x)*cos(y)",
                "0",
            ),
            triple: Some(["exp(x)*sin(y)", "-exp(x)*cos(y)", "z"]),
            hhat: "1",
            div: "0",
            guard: "x >= -4 && x <= 3".into(),
            domain: Aabb::cube(1.0),
            notes: "streamlines reach x = +inf in finite time; the guard truncates them",
        },
        other => return parse_abc(other),
    };
    Ok(raw)
}

fn parse_abc(id: &str) -> Result<Raw, CatalogError> {
    let inner = id
        .strip_prefix("abc(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| CatalogError::UnknownId(id.to_string()))?;
    let v: Vec<f64> = inner
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CatalogError::BadAbcParameters(id.to_string()))?;
    match v[..] {
        [a, b, c] if v.iter().all(|x| x.is_finite()) => Ok(abc(a, b, c)),
        _ => Err(CatalogError::BadAbcParameters(id.to_string())),
    }
}

pub fn get_example(id: &str) -> Result<CatalogEntry, CatalogError> {
    let id = id.trim();
    let raw = raw(id)?;
    let guard = Guard::parse(&raw.guard).expect("catalog guard");
    let [a, b, c] = &raw.field;
    let field = VectorField::new([parse(a), parse(b), parse(c)], guard.clone()).simplify();
    let triple = raw
        .triple
        .map(|[l, p, t]| OrthoTriple::new(parse(l), parse(p), parse(t), guard.clone()));
    let invariants = triple
        .as_ref()
        .map(|t| (t.theta().clone(), t.l_theta().expr().clone()));
    Ok(CatalogEntry {
        id: id.to_string(),
        title: raw.title,
        field,
        triple,
        expected_hhat: ScalarField::new(parse(raw.hhat), guard.clone()),
        expected_div: ScalarField::new(parse(raw.div), guard),
        invariants,
        domain: raw.domain,
        notes: raw.notes,
    })
}

/// All default entries, in [`CATALOG_IDS`] order.
pub fn all_examples() -> Vec<CatalogEntry> {
    CATALOG_IDS
        .iter()
        .map(|id| get_example(id).expect("built-in id"))
        .collect()
}
