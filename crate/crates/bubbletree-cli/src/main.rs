//! Batch front end: parse input documents, dispatch one command per process,
//! and emit machine-readable reports.
//!
//! Reports go to stdout as JSON (density grids as CSV) unless `--out` names a
//! file. Identical invocations produce byte-identical reports. Exit codes:
//! 0 success or a passing check, 1 a failed assertion (a check or a tree
//! invariant does not hold), 2 an input error, 3 a numerical budget error
//! (quadrature cap, failed extrapolation or bracketing, depth bound).

mod doc;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bubbletree::bubble::{self, BubbleConfig, BubbleTree, CurveFamily};
use bubbletree::fs::{self, DensityEvaluator};
use bubbletree::lab;
use bubbletree::poly::{MapTuple, RationalCurve};
use bubbletree::{Complex, Error as LibError};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use doc::{InputDocument, LoadError};

#[derive(Parser)]
#[command(
    name = "bubbletree",
    version,
    about = "Bubble-tree limits and Fubini-Study energy reports for rational curves"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pull the common linear factors out of a curve's defining tuple
    Factor {
        /// Curve document (JSON)
        file: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the energy density of a curve over a region
    Energy {
        /// Curve document (JSON)
        file: PathBuf,
        /// "full", "disk:cx,cy,r[,chart]", or "annulus:cx,cy,rin,rout[,chart]"
        #[arg(long, default_value = "full")]
        region: String,
        /// Absolute tolerance for the adaptive integral
        #[arg(long, default_value_t = BubbleConfig::default().quad_tol)]
        tol: f64,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-scale estimate of the energy mass a family concentrates at a point
    Mass {
        /// Family document (JSON)
        file: PathBuf,
        /// Concentration point in chart 0, as "re,im" or "re"
        #[arg(long)]
        point: String,
        /// Strictly decreasing radii, comma-separated
        #[arg(long, default_value = "0.2,0.1,0.05")]
        deltas: String,
        /// Absolute tolerance for the per-radius energy integrals
        #[arg(long, default_value_t = BubbleConfig::default().quad_tol)]
        tol: f64,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolve the bubble-tree limit of a family
    BubbleTree {
        /// Family document (JSON)
        file: PathBuf,
        /// Energy quantum: each zoom captures mass - hbar/2
        #[arg(long, default_value_t = BubbleConfig::default().hbar)]
        hbar: f64,
        /// Allowed gap between measured and algebraic masses
        #[arg(long, default_value_t = BubbleConfig::default().mass_tol)]
        mass_tol: f64,
        /// Allowed distance between parent and child maps at a node
        #[arg(long, default_value_t = BubbleConfig::default().connect_tol)]
        connect_tol: f64,
        /// Absolute tolerance for component energy integrals
        #[arg(long, default_value_t = BubbleConfig::default().quad_tol)]
        quad_tol: f64,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the energy density on a square grid, emitted as CSV x,y,rho
    DensityGrid {
        /// Curve document (JSON)
        file: PathBuf,
        /// Grid resolution per axis (at least 2)
        #[arg(long)]
        res: usize,
        /// Half-width of the sampled square, centered at the chart origin
        #[arg(long, default_value_t = 2.0)]
        window: f64,
        /// Affine chart, 0 or 1
        #[arg(long, default_value_t = 0)]
        chart: u8,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named verification check over a seeded corpus
    Verify {
        /// Check name (mean-value, order-limit, monotonicity, cylinder,
        /// isoperimetric, poincare) or a verify-config document
        check: String,
        /// Corpus seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corpus size
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the stability of a decorated tree of spheres
    Stability {
        /// Tree document (JSON)
        file: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Load(LoadError),
    Lib(LibError),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Load(e) => write!(f, "{e}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Load(e)
    }
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        CliError::Lib(e)
    }
}

fn error_exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Load(_) | CliError::Io(_) => 2,
        CliError::Lib(err) => match err {
            LibError::QuadratureBudgetExceeded { .. }
            | LibError::NoConvergence(_)
            | LibError::NoSolution(_)
            | LibError::DepthExceeded(_) => 3,
            _ => 2,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}

fn dispatch(cmd: &Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Factor { file, out } => cmd_factor(file, out.as_deref()),
        Cmd::Energy { file, region, tol, out } => cmd_energy(file, region, *tol, out.as_deref()),
        Cmd::Mass { file, point, deltas, tol, out } => {
            cmd_mass(file, point, deltas, *tol, out.as_deref())
        }
        Cmd::BubbleTree { file, hbar, mass_tol, connect_tol, quad_tol, out } => {
            let cfg = BubbleConfig {
                hbar: *hbar,
                mass_tol: *mass_tol,
                connect_tol: *connect_tol,
                quad_tol: *quad_tol,
            };
            cmd_bubble_tree(file, &cfg, out.as_deref())
        }
        Cmd::DensityGrid { file, res, window, chart, out } => {
            cmd_density_grid(file, *res, *window, *chart, out.as_deref())
        }
        Cmd::Verify { check, seed, samples, out } => {
            cmd_verify(check, *seed, *samples, out.as_deref())
        }
        Cmd::Stability { file, out } => cmd_stability(file, out.as_deref()),
    }
}

fn load_curve(path: &Path) -> Result<MapTuple, CliError> {
    match doc::load(path)? {
        InputDocument::Curve(t) => Ok(t),
        other => Err(doc::schema_err("kind", format!("a curve document, found {}", other.kind())).into()),
    }
}

fn load_family(path: &Path) -> Result<CurveFamily, CliError> {
    match doc::load(path)? {
        InputDocument::Family(f) => Ok(f),
        other => {
            Err(doc::schema_err("kind", format!("a family document, found {}", other.kind())).into())
        }
    }
}

fn load_tree(path: &Path) -> Result<doc::TreeDoc, CliError> {
    match doc::load(path)? {
        InputDocument::Tree(t) => Ok(t),
        other => Err(doc::schema_err("kind", format!("a tree document, found {}", other.kind())).into()),
    }
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(CliError::Io)
        }
        Some(p) => std::fs::write(p, text).map_err(CliError::Io),
    }
}

fn emit_json(v: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("reports contain only finite numbers");
    text.push('\n');
    emit_text(&text, out)
}

fn cmd_factor(file: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let tuple = load_curve(file)?;
    let f = tuple.common_factor()?;
    let roots: Vec<Value> = f
        .roots
        .iter()
        .map(|(p, m)| {
            json!({
                "point": doc::point_json(p),
                "affine": p.affine().map(doc::complex_json).unwrap_or(Value::Null),
                "multiplicity": m,
            })
        })
        .collect();
    let report = json!({
        "schema": 1,
        "kind": "factorization",
        "n": tuple.n(),
        "degree": tuple.degree(),
        "common_degree": f.common_degree(),
        "remainder_norm": f.remainder_norm,
        "roots": roots,
        "reduced": doc::curve_doc(&f.residual),
    });
    emit_json(&report, out)?;
    Ok(0)
}

fn cmd_energy(file: &Path, region_spec: &str, tol: f64, out: Option<&Path>) -> Result<u8, CliError> {
    let curve = RationalCurve::new(load_curve(file)?)?;
    let region = doc::parse_region(region_spec)?;
    region.validate()?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(doc::schema_err("tol", "a positive finite tolerance").into());
    }
    let e = fs::energy(&curve, &region, tol)?;
    let report = json!({
        "schema": 1,
        "kind": "energy",
        "region": region_spec,
        "tol": tol,
        "value": e.value,
        "err_estimate": e.err_estimate,
        "cells": e.cells,
    });
    emit_json(&report, out)?;
    Ok(0)
}

fn cmd_mass(
    file: &Path,
    point: &str,
    deltas: &str,
    tol: f64,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let fam = load_family(file)?;
    let z = doc::parse_complex_arg(point)?;
    let ds = doc::parse_deltas(deltas)?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(doc::schema_err("tol", "a positive finite tolerance").into());
    }
    let prof = bubble::mass_profile(&fam, z, &ds, tol)?;
    let rows: Vec<Value> = prof
        .rows
        .iter()
        .map(|r| {
            json!({
                "delta": r.delta,
                "family_limit": r.family_limit,
                "energies": r
                    .energies
                    .iter()
                    .map(|(k, e)| json!({"k": k, "energy": e}))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    let report = json!({
        "schema": 1,
        "kind": "mass",
        "point": doc::complex_json(prof.point),
        "mass": prof.mass,
        "uncertainty": prof.uncertainty,
        "rows": rows,
    });
    emit_json(&report, out)?;
    Ok(0)
}

/// The bubble-tree report doubles as a tree document: it carries `kind:
/// "tree"` and a `components` array loadable by the `stability` command.
fn tree_report(fam: &CurveFamily, tree: &BubbleTree, cfg: &BubbleConfig) -> (Value, bool) {
    let violations = tree.violations(fam.degree(), cfg);
    let (stable, offenders) = tree.stability().unwrap_or((false, Vec::new()));
    let genus = tree
        .sphere_tree()
        .ok()
        .and_then(|t| t.nodal_config().ok())
        .map(|c| c.arithmetic_genus());
    let components: Vec<Value> = tree
        .components
        .iter()
        .zip(&tree.energies)
        .map(|(c, &energy)| {
            json!({
                "id": c.id,
                "parent": c.parent,
                "attach": c.attach.map(doc::complex_json).unwrap_or(Value::Null),
                "degree": c.degree,
                "marks": 0,
                "mass": c.mass,
                "node_gap": c.node_gap,
                "energy": energy,
                "tuple": doc::tuple_json(c.curve.tuple()),
            })
        })
        .collect();
    let pass = violations.is_empty();
    let report = json!({
        "schema": 1,
        "kind": "tree",
        "n": fam.n(),
        "map_degree": fam.degree(),
        "components": components,
        "degree_sum": tree.degree_sum(),
        "energy_sum": tree.energy_sum(),
        "stable": stable,
        "offenders": offenders,
        "genus": genus,
        "violations": violations,
        "diagnostics": tree.diagnostics,
    });
    (report, pass)
}

fn cmd_bubble_tree(file: &Path, cfg: &BubbleConfig, out: Option<&Path>) -> Result<u8, CliError> {
    let fam = load_family(file)?;
    let tree = bubble::build_bubble_tree(&fam, cfg)?;
    let (report, pass) = tree_report(&fam, &tree, cfg);
    emit_json(&report, out)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_density_grid(
    file: &Path,
    res: usize,
    window: f64,
    chart: u8,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let curve = RationalCurve::new(load_curve(file)?)?;
    if res < 2 {
        return Err(doc::schema_err("res", "a resolution of at least 2").into());
    }
    if !(window > 0.0) || !window.is_finite() {
        return Err(doc::schema_err("window", "a positive finite half-width").into());
    }
    if chart > 1 {
        return Err(doc::schema_err("chart", "chart 0 or 1").into());
    }
    let ev = DensityEvaluator::new(&curve, chart);
    let step = 2.0 * window / (res - 1) as f64;
    let mut csv = String::from("x,y,rho\n");
    for iy in 0..res {
        let y = -window + step * iy as f64;
        for ix in 0..res {
            let x = -window + step * ix as f64;
            let rho = ev.density(Complex::new(x, y));
            csv.push_str(&format!("{x},{y},{rho}\n"));
        }
    }
    emit_text(&csv, out)?;
    Ok(0)
}

fn cmd_verify(check: &str, seed: u64, samples: usize, out: Option<&Path>) -> Result<u8, CliError> {
    let (name, seed, samples) = if check.ends_with(".json") || Path::new(check).is_file() {
        match doc::load(Path::new(check))? {
            InputDocument::VerifyConfig(c) => {
                (c.check, c.seed.unwrap_or(seed), c.samples.unwrap_or(samples))
            }
            other => {
                return Err(doc::schema_err(
                    "kind",
                    format!("a verify-config document, found {}", other.kind()),
                )
                .into())
            }
        }
    } else {
        (check.to_string(), seed, samples)
    };
    let report = lab::run_verify(&name, seed, samples)?;
    let pass = report.pass;
    let mut v = serde_json::to_value(&report).expect("reports contain only finite numbers");
    let obj = v.as_object_mut().expect("a verify report is an object");
    obj.insert("schema".into(), json!(1));
    obj.insert("kind".into(), json!("verify-report"));
    obj.insert("seed".into(), json!(seed));
    obj.insert("samples".into(), json!(samples));
    emit_json(&v, out)?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_stability(file: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let td = load_tree(file)?;
    let dec = td.decorated()?;
    let structural = dec.tree.validate();
    if !structural.is_empty() {
        let report = json!({
            "schema": 1,
            "kind": "stability-report",
            "components": td.parents.len(),
            "valid": false,
            "violations": structural
                .iter()
                .map(|v| json!({"axiom": v.axiom, "witnesses": v.witnesses, "detail": v.detail}))
                .collect::<Vec<_>>(),
        });
        emit_json(&report, out)?;
        return Err(LibError::Invalid("tree axioms violated; see report".into()).into());
    }
    let nodal = dec.tree.nodal_config()?;
    let nodal_violations = nodal.validate();
    let (stable, offenders) = dec.stability();
    let special: Vec<usize> = (0..td.parents.len()).map(|i| dec.special_points(i)).collect();
    let report = json!({
        "schema": 1,
        "kind": "stability-report",
        "components": td.parents.len(),
        "valid": nodal_violations.is_empty(),
        "genus": nodal.arithmetic_genus(),
        "degrees": dec.degrees,
        "marks": dec.marked,
        "special_points": special,
        "total_degree": dec.total_degree(),
        "stable": stable,
        "offenders": offenders,
    });
    emit_json(&report, out)?;
    Ok(if stable && nodal_violations.is_empty() { 0 } else { 1 })
}
