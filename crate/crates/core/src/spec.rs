//! Field specification files.
//!
//! A spec is a TOML document:
//!
//! ```toml
//! name = "b0"
//! kind = "vector_field"        # or "ortho_triple", "planar_frame"
//! guard = "none"
//!
//! [domain]                      # optional sampling box
//! min = [-2.0, -2.0, -2.0]
//! max = [2.0, 2.0, 2.0]
//!
//! [components]                  # vector_field: w_x, w_y, w_z
//! w_x = "sin(z)"                # ortho_triple: ell, psi, theta [, alpha, jacobian_sign]
//! w_y = "cos(z)"                # planar_frame: n, g [, G, offset]
//! w_z = "0"
//!
//! [expected]                    # optional
//! hhat = "1"
//! div = "0"
//! ```

use std::fmt;
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use crate::expr::{ParseError, ScalarExpr};
use crate::fields::{ScalarField, VectorField};
use crate::frames::{OrthoTriple, Sign};
use crate::guard::{Guard, GuardParseError};
use crate::vec3::{Aabb, Vec3};
use crate::verify::Expected;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed spec: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("spec is missing required key(s): {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("unknown key(s) in {section}: {}", .keys.join(", "))]
    UnknownKeys { section: String, keys: Vec<String> },
    #[error("key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("key `{key}`: {source}")]
    Expr {
        key: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Guard(#[from] GuardParseError),
    #[error("spec kind is {found}, expected {expected}")]
    WrongKind { expected: SpecKind, found: SpecKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    VectorField,
    OrthoTriple,
    PlanarFrame,
}

impl SpecKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecKind::VectorField => "vector_field",
            SpecKind::OrthoTriple => "ortho_triple",
            SpecKind::PlanarFrame => "planar_frame",
        }
    }
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecBody {
    VectorField([ScalarExpr; 3]),
    OrthoTriple {
        ell: ScalarExpr,
        psi: ScalarExpr,
        theta: ScalarExpr,
        alpha: Option<ScalarExpr>,
        jacobian_sign: Option<Sign>,
    },
    PlanarFrame {
        n: Vec3,
        /// Profile in `s`.
        g: ScalarExpr,
        /// Closed-form antiderivative in `s`, if known.
        big_g: Option<ScalarExpr>,
        /// `G(0)` for the quadrature path.
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub guard: Guard,
    pub domain: Option<Aabb>,
    pub body: SpecBody,
    pub expected_hhat: Option<ScalarExpr>,
    pub expected_div: Option<ScalarExpr>,
}

const TOP_KEYS: [&str; 6] = ["name", "kind", "guard", "domain", "components", "expected"];

fn take_str(t: &Table, section: &str, key: &str, missing: &mut Vec<String>) -> Option<String> {
    match t.get(key) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            missing.push(format!("{section}{key} (must be a string)"));
            None
        }
        None => {
            missing.push(format!("{section}{key}"));
            None
        }
    }
}

fn expr(key: &str, src: &str) -> Result<ScalarExpr, SpecError> {
    ScalarExpr::parse(src).map_err(|source| SpecError::Expr {
        key: key.to_string(),
        source,
    })
}

fn profile(key: &str, src: &str) -> Result<ScalarExpr, SpecError> {
    ScalarExpr::parse_profile(src).map_err(|source| SpecError::Expr {
        key: key.to_string(),
        source,
    })
}

fn number(key: &str, v: &Value) -> Result<f64, SpecError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(SpecError::BadValue {
            key: key.to_string(),
            message: "expected a number".into(),
        }),
    }
}

fn vec3(key: &str, v: &Value) -> Result<Vec3, SpecError> {
    let bad = || SpecError::BadValue {
        key: key.to_string(),
        message: "expected an array of three numbers".into(),
    };
    let arr = v.as_array().ok_or_else(bad)?;
    if arr.len() != 3 {
        return Err(bad());
    }
    Ok(Vec3::new(
        number(key, &arr[0])?,
        number(key, &arr[1])?,
        number(key, &arr[2])?,
    ))
}

fn check_unknown(section: &str, t: &Table, allowed: &[&str]) -> Result<(), SpecError> {
    let keys: Vec<String> = t
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .cloned()
        .collect();
    if keys.is_empty() {
        Ok(())
    } else {
        Err(SpecError::UnknownKeys {
            section: section.to_string(),
            keys,
        })
    }
}

fn sub_table<'a>(doc: &'a Table, key: &str) -> Result<Option<&'a Table>, SpecError> {
    match doc.get(key) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(SpecError::BadValue {
            key: key.to_string(),
            message: "expected a table".into(),
        }),
    }
}

impl FieldSpec {
    pub fn kind(&self) -> SpecKind {
        match self.body {
            SpecBody::VectorField(_) => SpecKind::VectorField,
            SpecBody::OrthoTriple { .. } => SpecKind::OrthoTriple,
            SpecBody::PlanarFrame { .. } => SpecKind::PlanarFrame,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpecError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Read {
            path: path.display().to_string(),
            source,
        })?;
        FieldSpec::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SpecError> {
        let doc: Table = text.parse()?;
        check_unknown("the top level", &doc, &TOP_KEYS)?;
        let mut missing = Vec::new();
        let name = take_str(&doc, "", "name", &mut missing);
        let kind = take_str(&doc, "", "kind", &mut missing);
        let components = sub_table(&doc, "components")?;
        if components.is_none() {
            missing.push("components".into());
        }
        if !missing.is_empty() {
            return Err(SpecError::MissingKeys(missing));
        }
        let (name, kind, comps) = (name.unwrap(), kind.unwrap(), components.unwrap());

        let guard = match doc.get("guard") {
            None => Guard::none(),
            Some(Value::String(s)) => Guard::parse(s)?,
            Some(_) => {
                return Err(SpecError::BadValue {
                    key: "guard".into(),
                    message: "expected a string".into(),
                })
            }
        };

        let body = match kind.as_str() {
            "vector_field" => {
                check_unknown("[components]", comps, &["w_x", "w_y", "w_z"])?;
                let keys = ["w_x", "w_y", "w_z"];
                let srcs: Vec<Option<String>> = keys
                    .iter()
                    .map(|k| take_str(comps, "components.", k, &mut missing))
                    .collect();
                if !missing.is_empty() {
                    return Err(SpecError::MissingKeys(missing));
                }
                let e = |i: usize| {
                    expr(
                        &format!("components.{}", keys[i]),
                        srcs[i].as_deref().unwrap(),
                    )
                };
                SpecBody::VectorField([e(0)?, e(1)?, e(2)?])
            }
            "ortho_triple" => {
                check_unknown(
                    "[components]",
                    comps,
                    &["ell", "psi", "theta", "alpha", "jacobian_sign"],
                )?;
                let ell = take_str(comps, "components.", "ell", &mut missing);
                let psi = take_str(comps, "components.", "psi", &mut missing);
                let theta = take_str(comps, "components.", "theta", &mut missing);
                if !missing.is_empty() {
                    return Err(SpecError::MissingKeys(missing));
                }
                let alpha = match comps.get("alpha") {
                    None => None,
                    Some(Value::String(s)) => Some(expr("components.alpha", s)?),
                    Some(_) => {
                        return Err(SpecError::BadValue {
                            key: "components.alpha".into(),
                            message: "expected a string".into(),
                        })
                    }
                };
                let jacobian_sign = match comps.get("jacobian_sign") {
                    None => None,
                    Some(v) => match number("components.jacobian_sign", v)? {
                        1.0 => Some(Sign::Positive),
                        -1.0 => Some(Sign::Negative),
                        _ => {
                            return Err(SpecError::BadValue {
                                key: "components.jacobian_sign".into(),
                                message: "expected 1 or -1".into(),
                            })
                        }
                    },
                };
                SpecBody::OrthoTriple {
                    ell: expr("components.ell", &ell.unwrap())?,
                    psi: expr("components.psi", &psi.unwrap())?,
                    theta: expr("components.theta", &theta.unwrap())?,
                    alpha,
                    jacobian_sign,
                }
            }
            "planar_frame" => {
                check_unknown("[components]", comps, &["n", "g", "G", "offset"])?;
                let g = take_str(comps, "components.", "g", &mut missing);
                if !comps.contains_key("n") {
                    missing.push("components.n".into());
                }
                if !missing.is_empty() {
                    return Err(SpecError::MissingKeys(missing));
                }
                let big_g = match comps.get("G") {
                    None => None,
                    Some(Value::String(s)) => Some(profile("components.G", s)?),
                    Some(_) => {
                        return Err(SpecError::BadValue {
                            key: "components.G".into(),
                            message: "expected a string".into(),
                        })
                    }
                };
                SpecBody::PlanarFrame {
                    n: vec3("components.n", &comps["n"])?,
                    g: profile("components.g", &g.unwrap())?,
                    big_g,
                    offset: comps
                        .get("offset")
                        .map(|v| number("components.offset", v))
                        .transpose()?
                        .unwrap_or(0.0),
                }
            }
            other => {
                return Err(SpecError::BadValue {
                    key: "kind".into(),
                    message: format!(
                    "unknown kind `{other}`; expected vector_field, ortho_triple or planar_frame"
                ),
                })
            }
        };

        let domain = match sub_table(&doc, "domain")? {
            None => None,
            Some(t) => {
                check_unknown("[domain]", t, &["min", "max"])?;
                for k in ["min", "max"] {
                    if !t.contains_key(k) {
                        missing.push(format!("domain.{k}"));
                    }
                }
                if !missing.is_empty() {
                    return Err(SpecError::MissingKeys(missing));
                }
                let b = Aabb::new(
                    vec3("domain.min", &t["min"])?,
                    vec3("domain.max", &t["max"])?,
                );
                if !b.is_valid() {
                    return Err(SpecError::BadValue {
                        key: "domain".into(),
                        message: "min must not exceed max".into(),
                    });
                }
                Some(b)
            }
        };

        let (mut expected_hhat, mut expected_div) = (None, None);
        if let Some(t) = sub_table(&doc, "expected")? {
            check_unknown("[expected]", t, &["hhat", "div"])?;
            for (key, slot) in [("hhat", &mut expected_hhat), ("div", &mut expected_div)] {
                match t.get(key) {
                    None => {}
                    Some(Value::String(s)) => *slot = Some(expr(&format!("expected.{key}"), s)?),
                    Some(_) => {
                        return Err(SpecError::BadValue {
                            key: format!("expected.{key}"),
                            message: "expected a string".into(),
                        })
                    }
                }
            }
        }

        Ok(FieldSpec {
            name,
            guard,
            domain,
            body,
            expected_hhat,
            expected_div,
        })
    }

    pub fn to_toml_string(&self) -> String {
        let mut doc = Table::new();
        let s = |e: &ScalarExpr| Value::String(e.to_string());
        let arr = |v: Vec3| Value::Array(v.to_array().iter().map(|&x| Value::Float(x)).collect());
        doc.insert("name".into(), Value::String(self.name.clone()));
        doc.insert("kind".into(), Value::String(self.kind().to_string()));
        doc.insert("guard".into(), Value::String(self.guard.to_string()));
        if let Some(d) = &self.domain {
            let mut t = Table::new();
            t.insert("min".into(), arr(d.min));
            t.insert("max".into(), arr(d.max));
            doc.insert("domain".into(), Value::Table(t));
        }
        let mut c = Table::new();
        match &self.body {
            SpecBody::VectorField([x, y, z]) => {
                c.insert("w_x".into(), s(x));
                c.insert("w_y".into(), s(y));
                c.insert("w_z".into(), s(z));
            }
            SpecBody::OrthoTriple {
                ell,
                psi,
                theta,
                alpha,
                jacobian_sign,
            } => {
                c.insert("ell".into(), s(ell));
                c.insert("psi".into(), s(psi));
                c.insert("theta".into(), s(theta));
                if let Some(a) = alpha {
                    c.insert("alpha".into(), s(a));
                }
                if let Some(sg) = jacobian_sign {
                    c.insert("jacobian_sign".into(), Value::Integer(sg.value() as i64));
                }
            }
            SpecBody::PlanarFrame {
                n,
                g,
                big_g,
                offset,
            } => {
                c.insert("n".into(), arr(*n));
                c.insert("g".into(), s(g));
                if let Some(gg) = big_g {
                    c.insert("G".into(), s(gg));
                }
                c.insert("offset".into(), Value::Float(*offset));
            }
        }
        doc.insert("components".into(), Value::Table(c));
        if self.expected_hhat.is_some() || self.expected_div.is_some() {
            let mut t = Table::new();
            if let Some(h) = &self.expected_hhat {
                t.insert("hhat".into(), s(h));
            }
            if let Some(d) = &self.expected_div {
                t.insert("div".into(), s(d));
            }
            doc.insert("expected".into(), Value::Table(t));
        }
        toml::to_string(&doc).expect("spec tables serialize")
    }

    fn wrong_kind(&self, expected: SpecKind) -> SpecError {
        SpecError::WrongKind {
            expected,
            found: self.kind(),
        }
    }

    /// The vector field of a `vector_field` spec.
    pub fn vector_field(&self) -> Result<VectorField, SpecError> {
        match &self.body {
            SpecBody::VectorField(c) => Ok(VectorField::new(c.clone(), self.guard.clone())),
            _ => Err(self.wrong_kind(SpecKind::VectorField)),
        }
    }

    /// The triple of an `ortho_triple` spec and its `alpha`, if given.
    pub fn ortho_triple(&self) -> Result<(OrthoTriple, Option<ScalarField>), SpecError> {
        match &self.body {
            SpecBody::OrthoTriple {
                ell,
                psi,
                theta,
                alpha,
                jacobian_sign,
            } => {
                let mut t =
                    OrthoTriple::new(ell.clone(), psi.clone(), theta.clone(), self.guard.clone());
                if let Some(s) = jacobian_sign {
                    t = t.with_sign_hint(*s);
                }
                let a = alpha
                    .as_ref()
                    .map(|a| ScalarField::new(a.clone(), self.guard.clone()));
                Ok((t, a))
            }
            _ => Err(self.wrong_kind(SpecKind::OrthoTriple)),
        }
    }

    pub fn expected(&self) -> Expected {
        let f = |e: &Option<ScalarExpr>| {
            e.as_ref()
                .map(|e| ScalarField::new(e.clone(), self.guard.clone()))
        };
        Expected {
            hhat: f(&self.expected_hhat),
            div: f(&self.expected_div),
        }
    }

    /// Spec of a catalog entry as a `vector_field`.
    pub fn from_catalog(e: &crate::catalog::CatalogEntry) -> FieldSpec {
        FieldSpec {
            name: e.id.clone(),
            guard: e.guard().clone(),
            domain: Some(e.domain),
            body: SpecBody::VectorField(e.field.components().clone()),
            expected_hhat: Some(e.expected_hhat.expr().clone()),
            expected_div: Some(e.expected_div.expr().clone()),
        }
    }

    /// Spec of a triple as an `ortho_triple`.
    pub fn from_triple(
        name: &str,
        t: &OrthoTriple,
        alpha: Option<&ScalarExpr>,
        domain: Option<Aabb>,
    ) -> FieldSpec {
        FieldSpec {
            name: name.to_string(),
            guard: t.guard().clone(),
            domain,
            body: SpecBody::OrthoTriple {
                ell: t.ell().clone(),
                psi: t.psi().clone(),
                theta: t.theta().clone(),
                alpha: alpha.cloned(),
                jacobian_sign: t.sign_hint(),
            },
            expected_hhat: None,
            expected_div: None,
        }
    }
}
