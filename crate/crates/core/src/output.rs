//! Grid sampling and VTK / CSV writers.
//!
//! Numbers are written with 17 significant digits so output is exact and
//! byte-for-byte reproducible. Nodes excluded by the guard, or where the
//! field cannot be evaluated, are masked and written as `NaN`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::fields::VectorField;
use crate::flow::Streamline;
use crate::frames::OrthoTriple;
use crate::vec3::{Aabb, Vec3};
use crate::verify::MIN_FIELD_NORM;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("grid resolution must be at least 2 along every axis, got {0:?}")]
    Resolution([usize; 3]),
    #[error("invalid grid box {0:?}")]
    InvalidBox(Aabb),
    #[error("nothing to write: {0}")]
    Empty(&'static str),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GridExtras<'a> {
    pub hhat: bool,
    /// Adds `theta` and `L_theta` scalars.
    pub triple: Option<&'a OrthoTriple>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub domain: Aabb,
    pub res: [usize; 3],
    /// Node values, x index fastest; masked nodes hold NaN.
    pub vectors: Vec<Vec3>,
    /// `true` where the node passed the guard and evaluated.
    pub valid: Vec<bool>,
    pub scalars: Vec<(String, Vec<f64>)>,
}

impl GridSample {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    pub fn spacing(&self) -> Vec3 {
        let e = self.domain.extent();
        Vec3::new(
            e.x / (self.res[0] - 1) as f64,
            e.y / (self.res[1] - 1) as f64,
            e.z / (self.res[2] - 1) as f64,
        )
    }

    pub fn node(&self, idx: usize) -> Vec3 {
        node_point(&self.domain, self.res, idx)
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

fn node_point(domain: &Aabb, res: [usize; 3], idx: usize) -> Vec3 {
    let i = idx % res[0];
    let j = (idx / res[0]) % res[1];
    let k = idx / (res[0] * res[1]);
    let at = |lo: f64, hi: f64, n: usize, i: usize| {
        if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    Vec3::new(
        at(domain.min.x, domain.max.x, res[0], i),
        at(domain.min.y, domain.max.y, res[1], j),
        at(domain.min.z, domain.max.z, res[2], k),
    )
}

/// Evaluates `w` (and optional scalars) on a regular grid.
pub fn sample_grid(
    w: &VectorField,
    domain: &Aabb,
    res: [usize; 3],
    extras: GridExtras<'_>,
) -> Result<GridSample, OutputError> {
    if res.iter().any(|&n| n < 2) {
        return Err(OutputError::Resolution(res));
    }
    if !domain.is_valid() {
        return Err(OutputError::InvalidBox(*domain));
    }
    let n = res[0] * res[1] * res[2];
    let curl = extras.hhat.then(|| w.curl());
    let inv = extras.triple.map(|t| (t.theta_field(), t.l_theta()));
    let nan3 = Vec3::new(f64::NAN, f64::NAN, f64::NAN);

    let rows: Vec<(Vec3, bool, f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let p = node_point(domain, res, idx);
            let v = match w.eval(p) {
                Ok(v) if v.is_finite() => v,
                _ => return (nan3, false, f64::NAN, f64::NAN, f64::NAN),
            };
            let hhat = match curl {
                Some(c) if v.norm() > MIN_FIELD_NORM => c
                    .eval_unguarded(p)
                    .map_or(f64::NAN, |c| v.dot(c) / v.norm_squared()),
                _ => f64::NAN,
            };
            let (th, l) = match &inv {
                Some((th, l)) => (
                    th.eval(p).unwrap_or(f64::NAN),
                    l.eval(p).unwrap_or(f64::NAN),
                ),
                None => (f64::NAN, f64::NAN),
            };
            (v, true, hhat, th, l)
        })
        .collect();

    let mut scalars = Vec::new();
    if extras.hhat {
        scalars.push(("hhat".to_string(), rows.iter().map(|r| r.2).collect()));
    }
    if extras.triple.is_some() {
        scalars.push(("theta".to_string(), rows.iter().map(|r| r.3).collect()));
        scalars.push(("L_theta".to_string(), rows.iter().map(|r| r.4).collect()));
    }
    Ok(GridSample {
        domain: *domain,
        res,
        vectors: rows.iter().map(|r| r.0).collect(),
        valid: rows.iter().map(|r| r.1).collect(),
        scalars,
    })
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

/// VTK legacy ASCII `STRUCTURED_POINTS` text.
pub fn render_vtk(g: &GridSample, title: &str) -> Result<String, OutputError> {
    if g.is_empty() {
        return Err(OutputError::Empty("empty grid sample"));
    }
    let mut out = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let sp = g.spacing();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(
        out,
        "{}",
        if title.is_empty() {
            "beltrami field"
        } else {
            &title
        }
    );
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", g.res[0], g.res[1], g.res[2]);
    let _ = writeln!(
        out,
        "ORIGIN {} {} {}",
        num(g.domain.min.x),
        num(g.domain.min.y),
        num(g.domain.min.z)
    );
    let _ = writeln!(out, "SPACING {} {} {}", num(sp.x), num(sp.y), num(sp.z));
    let _ = writeln!(out, "POINT_DATA {}", g.len());
    let _ = writeln!(out, "VECTORS w double");
    for v in &g.vectors {
        let _ = writeln!(out, "{} {} {}", num(v.x), num(v.y), num(v.z));
    }
    for (name, vals) in &g.scalars {
        let _ = writeln!(out, "SCALARS {name} double 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for v in vals {
            let _ = writeln!(out, "{}", num(*v));
        }
    }
    Ok(out)
}

/// Grid as CSV: node coordinates, components, scalars and a validity flag.
pub fn render_grid_csv(g: &GridSample) -> Result<String, OutputError> {
    if g.is_empty() {
        return Err(OutputError::Empty("empty grid sample"));
    }
    let mut out = String::from("x,y,z,w_x,w_y,w_z");
    for (name, _) in &g.scalars {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",valid\n");
    for (idx, v) in g.vectors.iter().enumerate() {
        let p = g.node(idx);
        let mut row = vec![num(p.x), num(p.y), num(p.z), num(v.x), num(v.y), num(v.z)];
        row.extend(g.scalars.iter().map(|(_, s)| num(s[idx])));
        row.push(if g.valid[idx] { "1" } else { "0" }.into());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub const STREAMLINE_HEADER: &str = "t,x,y,z,theta,L_theta";

/// Streamline as CSV with columns `t,x,y,z,theta,L_theta`; the invariant
/// columns are NaN when no triple was attached.
pub fn render_streamline_csv(s: &Streamline) -> Result<String, OutputError> {
    if s.is_empty() {
        return Err(OutputError::Empty("empty streamline"));
    }
    let mut out = format!("{STREAMLINE_HEADER}\n");
    for (i, (t, p)) in s.times.iter().zip(&s.points).enumerate() {
        let th = s.theta_values.get(i).copied().unwrap_or(f64::NAN);
        let l = s.l_theta_values.get(i).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(*t),
            num(p.x),
            num(p.y),
            num(p.z),
            num(th),
            num(l)
        );
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<(), OutputError> {
    std::fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_vtk(g: &GridSample, title: &str, path: impl AsRef<Path>) -> Result<(), OutputError> {
    write_file(path.as_ref(), &render_vtk(g, title)?)
}

pub fn write_grid_csv(g: &GridSample, path: impl AsRef<Path>) -> Result<(), OutputError> {
    write_file(path.as_ref(), &render_grid_csv(g)?)
}

pub fn write_streamline_csv(s: &Streamline, path: impl AsRef<Path>) -> Result<(), OutputError> {
    write_file(path.as_ref(), &render_streamline_csv(s)?)
}
