use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use beltrami_core::catalog::{self, get_example, CatalogEntry};
use beltrami_core::fields::{ScalarField, VectorField};
use beltrami_core::flow::{invariant_drift, trace_with_invariants, StepControl, Termination};
use beltrami_core::frames::{
    build_beltrami, check_construction_conditions, check_orthogonality,
    check_representation_conditions, planar_frame_on_box, ConditionReport, OrthoTriple,
    ThetaProfile, QUADRATURE_TOL, SYMBOLIC_TOL,
};
use beltrami_core::output::{
    sample_grid, write_grid_csv, write_streamline_csv, write_vtk, GridExtras,
};
use beltrami_core::sampling::{sample_points, seed_from_env, DEFAULT_SEED};
use beltrami_core::spec::{FieldSpec, SpecBody};
use beltrami_core::verify::{verify_field, BeltramiReport, Classification, Expected};
use beltrami_core::{Aabb, ScalarExpr, Vec3};

const DEFAULT_TOL: f64 = 1e-10;
const DRIFT_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "beltrami",
    version,
    about = "Construct, verify and trace Beltrami fields"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SampleOpts {
    /// Number of random sample points.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Sampling seed (BELTRAMI_SEED overrides the default).
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling box: `h` for [-h,h]^3 or `xmin,xmax,ymin,ymax,zmin,zmax`.
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    domain: Option<Aabb>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a spec: Beltrami residuals for fields, coordinate conditions
    /// and constructed fields for triples and planar frames.
    Verify {
        spec: PathBuf,
        #[command(flatten)]
        sampling: SampleOpts,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Build the Beltrami field of an ortho_triple spec and print it as a
    /// vector_field spec.
    Construct {
        spec: PathBuf,
        /// Build w* = sin θ ∇ψ + cos θ ∇ℓ instead of w.
        #[arg(long)]
        star: bool,
        #[command(flatten)]
        sampling: SampleOpts,
    },
    /// Planar eikonal frame for a unit normal n and profile g(s).
    Planar {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        n: Vec3,
        /// Profile g(s).
        #[arg(long)]
        g: String,
        /// Closed-form antiderivative G(s); quadrature when omitted.
        #[arg(long = "G")]
        big_g: Option<String>,
        /// G(0) for the quadrature path.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
        #[command(flatten)]
        sampling: SampleOpts,
    },
    /// Integrate a streamline of a vector_field or ortho_triple spec.
    Trace {
        spec: PathBuf,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        x0: Vec3,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long)]
        atol: Option<f64>,
        #[arg(long)]
        max_step: Option<f64>,
        /// Write the streamline as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a spec on a regular grid and write VTK and/or CSV.
    Sample {
        spec: PathBuf,
        #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
        domain: Option<Aabb>,
        /// `n` or `nx,ny,nz`.
        #[arg(long, value_parser = parse_res)]
        res: [usize; 3],
        #[arg(long)]
        vtk: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Add the proportionality factor as a scalar.
        #[arg(long)]
        hhat: bool,
    },
    /// Built-in example fields.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    /// Print an entry; with --spec, print it as a spec file.
    Show {
        id: String,
        #[arg(long)]
        spec: bool,
    },
    /// Verify every entry against its expected factor and divergence.
    VerifyAll {
        #[command(flatten)]
        sampling: SampleOpts,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    match numbers(s)?[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err("expected three comma-separated numbers".into()),
    }
}

fn parse_box(s: &str) -> Result<Aabb, String> {
    let b = match numbers(s)?[..] {
        [h] => Aabb::cube(h),
        [x0, x1, y0, y1, z0, z1] => Aabb::new(Vec3::new(x0, y0, z0), Vec3::new(x1, y1, z1)),
        _ => return Err("expected `h` or `xmin,xmax,ymin,ymax,zmin,zmax`".into()),
    };
    if b.is_valid() {
        Ok(b)
    } else {
        Err("box minimum exceeds maximum".into())
    }
}

fn parse_res(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [n] => Ok([n; 3]),
        [a, b, c] => Ok([a, b, c]),
        _ => Err("expected `n` or `nx,ny,nz`".into()),
    }
}

fn seed(opt: Option<u64>) -> u64 {
    opt.unwrap_or_else(|| seed_from_env(DEFAULT_SEED))
}

fn domain_of(spec: &FieldSpec, opt: Option<Aabb>) -> Aabb {
    opt.or(spec.domain).unwrap_or_else(|| Aabb::cube(1.0))
}

struct Outcome {
    passed: bool,
    text: String,
    json: Value,
}

fn report_text(r: &BeltramiReport) -> String {
    let mut s = format!(
        "samples              {}\nclassification       {}\nalignment residual   {:.3e}\neigen residual       {:.3e}\nhhat mean            {:.12}\nhhat variance        {:.3e}{}\nmax |div w|          {:.3e}\n",
        r.sample_count,
        r.classification,
        r.max_alignment_residual,
        r.max_eigen_residual,
        r.hhat_mean,
        r.hhat_variance,
        if r.strong { " (strong)" } else { "" },
        r.divergence_max,
    );
    if let Some(h) = r.hhat_expected_residual {
        s += &format!("hhat vs expected     {h:.3e}\n");
    }
    if let Some(d) = r.divergence_expected_residual {
        s += &format!("div vs expected      {d:.3e}\n");
    }
    s
}

fn report_json(r: &BeltramiReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    if let Value::Object(m) = &mut v {
        m.remove("hhat_samples");
    }
    v
}

fn verify_vector_field(
    w: &VectorField,
    expected: &Expected,
    points: &[Vec3],
    tol: f64,
) -> Result<Outcome> {
    let r = verify_field(w, points, expected)?;
    let passed = r.passed(tol) && r.classification == Classification::NontrivialBeltrami;
    Ok(Outcome {
        passed,
        text: report_text(&r),
        json: report_json(&r),
    })
}

fn conditions_json(r: &ConditionReport) -> Value {
    serde_json::to_value(r).expect("report serializes")
}

fn verify_triple(
    t: &OrthoTriple,
    alpha: Option<&ScalarField>,
    points: &[Vec3],
    tol_cond: f64,
    tol: f64,
) -> Result<Outcome> {
    let cond = match alpha {
        Some(a) => check_construction_conditions(t, a, points, tol_cond)?,
        None => check_orthogonality(t, points, tol_cond)?,
    };
    let repr = check_representation_conditions(t, points, tol_cond)?;
    let mut text = format!("construction conditions\n{cond}representation conditions\n{repr}");
    let mut json =
        json!({ "construction": conditions_json(&cond), "representation": conditions_json(&repr) });
    let mut passed = cond.passed() && repr.passed();
    if passed {
        let b = build_beltrami(t, points)?;
        let w = verify_field(
            &b.w,
            points,
            &Expected {
                hhat: Some(b.factor.clone()),
                div: None,
            },
        )?;
        let ws = verify_field(
            &b.w_star,
            points,
            &Expected {
                hhat: Some(b.star_factor.clone()),
                div: None,
            },
        )?;
        passed = w.passed(tol) && ws.passed(tol);
        let factor = match alpha {
            Some(a) => format!("{}*|{}|", b.sigma, a.expr()),
            None => b.factor.expr().simplify().to_string(),
        };
        text += &format!(
            "sigma                {}\nexpected factor      {}\nw\n{}w*\n{}",
            b.sigma,
            factor,
            indent(&report_text(&w)),
            indent(&report_text(&ws))
        );
        json["sigma"] = json!(b.sigma.value());
        json["factor"] = json!(factor);
        json["w"] = report_json(&w);
        json["w_star"] = report_json(&ws);
    }
    Ok(Outcome { passed, text, json })
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}\n")).collect()
}

fn cmd_verify(spec_path: &PathBuf, opts: &SampleOpts, tol: f64) -> Result<Outcome> {
    let spec = FieldSpec::load(spec_path)?;
    let domain = domain_of(&spec, opts.domain);
    let points = sample_points(&domain, &spec.guard, opts.points, seed(opts.seed))?;
    let mut out = match &spec.body {
        SpecBody::VectorField(_) => {
            verify_vector_field(&spec.vector_field()?, &spec.expected(), &points, tol)?
        }
        SpecBody::OrthoTriple { .. } => {
            let (t, alpha) = spec.ortho_triple()?;
            verify_triple(&t, alpha.as_ref(), &points, SYMBOLIC_TOL, tol)?
        }
        SpecBody::PlanarFrame {
            n,
            g,
            big_g,
            offset,
        } => {
            let profile = match big_g {
                Some(gg) => ThetaProfile::Closed(gg.clone()),
                None => ThetaProfile::Quadrature { offset: *offset },
            };
            let quad = big_g.is_none();
            let pf = planar_frame_on_box(*n, g, profile, &domain)?;
            let mut o = verify_triple(
                &pf.triple,
                Some(&pf.alpha),
                &points,
                if quad { QUADRATURE_TOL } else { SYMBOLIC_TOL },
                if quad { QUADRATURE_TOL } else { tol },
            )?;
            if !pf.zero_crossings.is_empty() {
                o.passed = false;
                o.text += &format!("profile zero crossings at s = {:?}\n", pf.zero_crossings);
            }
            o.json["zero_crossings"] = json!(pf.zero_crossings);
            o
        }
    };
    out.text = format!("{} ({})\n{}", spec.name, spec.kind(), out.text);
    out.json["name"] = json!(spec.name);
    out.json["kind"] = json!(spec.kind().as_str());
    Ok(out)
}

fn cmd_construct(spec_path: &PathBuf, star: bool, opts: &SampleOpts) -> Result<Outcome> {
    let spec = FieldSpec::load(spec_path)?;
    let (t, alpha) = spec.ortho_triple()?;
    let domain = domain_of(&spec, opts.domain);
    let points = sample_points(&domain, &spec.guard, opts.points.max(9), seed(opts.seed))?;
    let cond = match &alpha {
        Some(a) => check_construction_conditions(&t, a, &points, SYMBOLIC_TOL)?,
        None => check_orthogonality(&t, &points, SYMBOLIC_TOL)?,
    };
    let b = build_beltrami(&t, &points)?;
    let (w, factor) = if star {
        (&b.w_star, &b.star_factor)
    } else {
        (&b.w, &b.factor)
    };
    let name = format!("{}{}", spec.name, if star { "_star" } else { "" });
    let out_spec = FieldSpec {
        name,
        guard: spec.guard.clone(),
        domain: spec.domain,
        body: SpecBody::VectorField(w.components().clone()),
        expected_hhat: Some(factor.expr().clone()),
        expected_div: None,
    };
    let mut text = out_spec.to_toml_string();
    if !cond.passed() {
        text = format!(
            "# coordinate conditions fail:\n{}{}",
            comment(&cond.to_string()),
            text
        );
    }
    Ok(Outcome {
        passed: cond.passed(),
        json: json!({
            "sigma": b.sigma.value(),
            "factor": factor.expr().to_string(),
            "components": w.components().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "conditions": conditions_json(&cond),
        }),
        text,
    })
}

fn comment(s: &str) -> String {
    s.lines().map(|l| format!("#{l}\n")).collect()
}

fn cmd_planar(
    n: Vec3,
    g: &str,
    big_g: Option<&str>,
    offset: f64,
    opts: &SampleOpts,
) -> Result<Outcome> {
    let domain = opts.domain.unwrap_or_else(|| Aabb::cube(1.0));
    let g = ScalarExpr::parse_profile(g).map_err(|e| anyhow!("profile g: {e}"))?;
    let profile = match big_g {
        Some(src) => ThetaProfile::Closed(
            ScalarExpr::parse_profile(src).map_err(|e| anyhow!("antiderivative G: {e}"))?,
        ),
        None => ThetaProfile::Quadrature { offset },
    };
    let quad = big_g.is_none();
    let pf = planar_frame_on_box(n, &g, profile, &domain)?;
    let points = sample_points(
        &domain,
        &beltrami_core::guard::Guard::none(),
        opts.points,
        seed(opts.seed),
    )?;
    let tol = if quad { QUADRATURE_TOL } else { SYMBOLIC_TOL };
    let cond = check_construction_conditions(&pf.triple, &pf.alpha, &points, tol)?;
    let theta = if quad {
        format!("G(n·x) by quadrature, G(0) = {offset}")
    } else {
        pf.triple.theta().to_string()
    };
    let mut text = format!(
        "e1     {}\ne2     {}\nell    {}\npsi    {}\ntheta  {}\nalpha  {}\ninterval [{}, {}]\nconditions\n{cond}",
        pf.e1,
        pf.e2,
        pf.triple.ell(),
        pf.triple.psi(),
        theta,
        pf.alpha.expr(),
        pf.interval.0,
        pf.interval.1,
    );
    if !pf.zero_crossings.is_empty() {
        text += &format!("profile changes sign at s = {:?}\n", pf.zero_crossings);
    }
    Ok(Outcome {
        passed: cond.passed() && pf.zero_crossings.is_empty(),
        json: json!({
            "e1": pf.e1.to_array(),
            "e2": pf.e2.to_array(),
            "ell": pf.triple.ell().to_string(),
            "psi": pf.triple.psi().to_string(),
            "theta": theta,
            "alpha": pf.alpha.expr().to_string(),
            "interval": [pf.interval.0, pf.interval.1],
            "zero_crossings": pf.zero_crossings,
            "conditions": conditions_json(&cond),
        }),
        text,
    })
}

/// Field and optional triple of a vector_field or ortho_triple spec.
fn field_of(spec: &FieldSpec) -> Result<(VectorField, Option<OrthoTriple>)> {
    match &spec.body {
        SpecBody::VectorField(_) => Ok((spec.vector_field()?, None)),
        SpecBody::OrthoTriple { .. } => {
            let (t, _) = spec.ortho_triple()?;
            let points = sample_points(&domain_of(spec, None), &spec.guard, 64, DEFAULT_SEED)?;
            let b = build_beltrami(&t, &points)?;
            Ok((b.w, Some(t)))
        }
        SpecBody::PlanarFrame { .. } => {
            bail!("planar_frame specs are handled by `verify` and `planar`")
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace(
    spec_path: &PathBuf,
    x0: Vec3,
    t_end: f64,
    rtol: f64,
    atol: Option<f64>,
    max_step: Option<f64>,
    out: Option<&PathBuf>,
) -> Result<Outcome> {
    let spec = FieldSpec::load(spec_path)?;
    let (w, triple) = field_of(&spec)?;
    let mut ctrl = StepControl::with_rtol(rtol);
    if let Some(a) = atol {
        ctrl.atol = a;
    }
    if let Some(m) = max_step {
        ctrl.max_step = m;
    }
    let s = trace_with_invariants(&w, triple.as_ref(), x0, t_end, &ctrl)?;
    if let Some(path) = out {
        write_streamline_csv(&s, path)?;
    }
    let d = invariant_drift(&s);
    let passed = triple.is_none() || (d.theta <= DRIFT_TOL && d.l_theta_scaled <= DRIFT_TOL);
    let term = match &s.termination {
        Termination::Completed => "completed".to_string(),
        Termination::GuardExit { t, reason } => format!("left the domain at t = {t} ({reason})"),
    };
    let mut text = format!(
        "end time       {}\nend point      {}\naccepted       {}\nrejected       {}\ntermination    {term}\n",
        s.end_time(),
        s.end_point(),
        s.stats.accepted,
        s.stats.rejected,
    );
    if triple.is_some() {
        text += &format!(
            "theta drift    {:.3e}\nL_theta drift  {:.3e}\n",
            d.theta, d.l_theta
        );
    }
    Ok(Outcome {
        passed,
        json: json!({
            "end_time": s.end_time(),
            "end_point": s.end_point().to_array(),
            "stats": s.stats,
            "termination": s.termination,
            "drift": triple.as_ref().map(|_| serde_json::to_value(d).expect("drift serializes")),
        }),
        text,
    })
}

fn cmd_sample(
    spec_path: &PathBuf,
    domain: Option<Aabb>,
    res: [usize; 3],
    vtk: Option<&PathBuf>,
    csv: Option<&PathBuf>,
    hhat: bool,
) -> Result<Outcome> {
    let spec = FieldSpec::load(spec_path)?;
    let (w, triple) = field_of(&spec)?;
    let domain = domain_of(&spec, domain);
    let g = sample_grid(
        &w,
        &domain,
        res,
        GridExtras {
            hhat,
            triple: triple.as_ref(),
        },
    )?;
    if let Some(p) = vtk {
        write_vtk(&g, &spec.name, p)?;
    }
    if let Some(p) = csv {
        write_grid_csv(&g, p)?;
    }
    Ok(Outcome {
        passed: true,
        text: format!("nodes {}\nmasked {}\n", g.len(), g.masked_count()),
        json: json!({ "nodes": g.len(), "masked": g.masked_count() }),
    })
}

fn entry_text(e: &CatalogEntry) -> String {
    let c = e.field.components();
    let mut s = format!(
        "{}  {}\nw_x   {}\nw_y   {}\nw_z   {}\nhhat  {}\ndiv   {}\nguard {}\nbox   {} .. {}\n",
        e.id,
        e.title,
        c[0],
        c[1],
        c[2],
        e.expected_hhat.expr(),
        e.expected_div.expr(),
        e.guard(),
        e.domain.min,
        e.domain.max,
    );
    if let Some((th, l)) = &e.invariants {
        s += &format!("theta {th}\nL     {l}\n");
    }
    if !e.notes.is_empty() {
        s += &format!("notes {}\n", e.notes);
    }
    s
}

fn cmd_catalog(action: &CatalogAction) -> Result<Outcome> {
    match action {
        CatalogAction::List => {
            let entries = catalog::all_examples();
            Ok(Outcome {
                passed: true,
                text: entries
                    .iter()
                    .map(|e| format!("{:<5} {}\n", e.id, e.title))
                    .collect(),
                json: json!(entries
                    .iter()
                    .map(|e| json!({ "id": e.id, "title": e.title }))
                    .collect::<Vec<_>>()),
            })
        }
        CatalogAction::Show { id, spec } => {
            let e = get_example(id)?;
            let text = if *spec {
                FieldSpec::from_catalog(&e).to_toml_string()
            } else {
                entry_text(&e)
            };
            Ok(Outcome {
                passed: true,
                json: json!({
                    "id": e.id,
                    "title": e.title,
                    "components": e.field.components().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "hhat": e.expected_hhat.expr().to_string(),
                    "div": e.expected_div.expr().to_string(),
                    "guard": e.guard().to_string(),
                    "spec": FieldSpec::from_catalog(&e).to_toml_string(),
                }),
                text,
            })
        }
        CatalogAction::VerifyAll { sampling, tol } => {
            let mut passed = true;
            let mut text = String::new();
            let mut rows = Vec::new();
            for e in catalog::all_examples() {
                let pts = sample_points(
                    &sampling.domain.unwrap_or(e.domain),
                    e.guard(),
                    sampling.points,
                    seed(sampling.seed),
                )?;
                let exp = Expected {
                    hhat: Some(e.expected_hhat.clone()),
                    div: Some(e.expected_div.clone()),
                };
                let r = verify_field(&e.field, &pts, &exp)?;
                let ok = r.passed(*tol) && r.classification == Classification::NontrivialBeltrami;
                passed &= ok;
                text += &format!(
                    "{} {:<5} align {:.2e}  hhat {:.2e}  div {:.2e}\n",
                    if ok { "[PASS]" } else { "[FAIL]" },
                    e.id,
                    r.max_alignment_residual,
                    r.hhat_expected_residual.unwrap_or(f64::NAN),
                    r.divergence_expected_residual.unwrap_or(f64::NAN),
                );
                rows.push(json!({ "id": e.id, "passed": ok, "report": report_json(&r) }));
            }
            Ok(Outcome {
                passed,
                text,
                json: json!(rows),
            })
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Verify {
            spec,
            sampling,
            tol,
        } => cmd_verify(spec, sampling, *tol),
        Command::Construct {
            spec,
            star,
            sampling,
        } => cmd_construct(spec, *star, sampling),
        Command::Planar {
            n,
            g,
            big_g,
            offset,
            sampling,
        } => cmd_planar(*n, g, big_g.as_deref(), *offset, sampling),
        Command::Trace {
            spec,
            x0,
            t_end,
            rtol,
            atol,
            max_step,
            out,
        } => cmd_trace(spec, *x0, *t_end, *rtol, *atol, *max_step, out.as_ref()),
        Command::Sample {
            spec,
            domain,
            res,
            vtk,
            csv,
            hhat,
        } => cmd_sample(spec, *domain, *res, vtk.as_ref(), csv.as_ref(), *hhat),
        Command::Catalog { action } => cmd_catalog(action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                let mut v = out.json;
                if let Value::Object(m) = &mut v {
                    m.insert("passed".into(), json!(out.passed));
                } else {
                    v = json!({ "passed": out.passed, "results": v });
                }
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                print!("{}", out.text);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
