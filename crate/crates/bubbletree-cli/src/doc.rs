//! JSON input documents and the shared wire format.
//!
//! Every document is a JSON object versioned with `"schema": 1` and carrying
//! one of four payload kinds: a single `curve`, a parameter-indexed `family`
//! of curves, a decorated `tree` of spheres, or a `verify-config` for a
//! seeded check run. The kind may be declared with a `"kind"` field and is
//! otherwise inferred from the payload keys.
//!
//! Wire conventions: complex numbers are `[re, im]` pairs; a point of the
//! projective line is a pair of complex numbers (its homogeneous
//! coordinates); a tuple of homogeneous polynomials is a list of entries,
//! each a list of coefficients in descending powers of `u`.

use std::fmt;
use std::path::Path;

use bubbletree::bubble::{CurveFamily, FamilySample};
use bubbletree::fs::Region;
use bubbletree::poly::{HomogPoly, MapTuple, P1Point};
use bubbletree::tree::{DecoratedTree, RootedOrder, SphereTree};
use bubbletree::Complex;
use serde_json::{json, Map, Value};

/// Failure while reading an input document: unreadable file, malformed JSON
/// with its position, or well-formed JSON violating a named schema
/// constraint at a named field.
#[derive(Debug, Clone)]
pub enum LoadError {
    Io { message: String },
    Parse { line: usize, column: usize, message: String },
    Schema { field: String, constraint: String },
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io { message } => write!(f, "input error: {message}"),
            LoadError::Parse { line, column, message } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            LoadError::Schema { field, constraint } if field.is_empty() => {
                write!(f, "schema error: expected {constraint}")
            }
            LoadError::Schema { field, constraint } => {
                write!(f, "schema error at {field}: expected {constraint}")
            }
        }
    }
}

impl std::error::Error for LoadError {}

/// A schema violation at `field`, described by the constraint it breaks.
pub fn schema_err(field: impl Into<String>, constraint: impl Into<String>) -> LoadError {
    LoadError::Schema { field: field.into(), constraint: constraint.into() }
}

/// The bare reason of a construction error, without the error-kind prefix.
fn lib_msg(e: bubbletree::Error) -> String {
    match e {
        bubbletree::Error::Invalid(m) => m,
        other => other.to_string(),
    }
}

/// Configuration for a seeded `verify` run; absent fields fall back to the
/// command-line defaults.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub check: String,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

/// A decorated tree of spheres in wire form: parallel arrays indexed by
/// component, the root being the unique component without a parent.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDoc {
    pub parents: Vec<Option<usize>>,
    pub attaches: Vec<Option<Complex>>,
    pub degrees: Vec<usize>,
    pub marks: Vec<usize>,
}

impl TreeDoc {
    /// Builds the decorated tree; ill-formed orders (cycles, several roots,
    /// missing attachments) surface as construction or validation errors.
    pub fn decorated(&self) -> bubbletree::Result<DecoratedTree> {
        let edges: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i, p)))
            .collect();
        let order = RootedOrder::from_edges(self.parents.len(), &edges)?;
        let tree = SphereTree::new(order, self.attaches.clone())?;
        DecoratedTree::new(tree, self.degrees.clone(), self.marks.clone())
    }
}

/// A schema-validated input document.
#[derive(Debug, Clone)]
pub enum InputDocument {
    /// The defining tuple of a curve, possibly with common factors still in.
    Curve(MapTuple),
    Family(CurveFamily),
    Tree(TreeDoc),
    VerifyConfig(VerifyConfig),
}

impl InputDocument {
    pub fn kind(&self) -> &'static str {
        match self {
            InputDocument::Curve(_) => "curve",
            InputDocument::Family(_) => "family",
            InputDocument::Tree(_) => "tree",
            InputDocument::VerifyConfig(_) => "verify-config",
        }
    }
}

/// Reads and schema-validates a document from a file.
pub fn load(path: &Path) -> Result<InputDocument, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::Io { message: format!("{}: {e}", path.display()) })?;
    parse_document(&text)
}

/// Parses and schema-validates a document from JSON text.
pub fn parse_document(text: &str) -> Result<InputDocument, LoadError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = v.as_object().ok_or_else(|| schema_err("", "a top-level JSON object"))?;
    if obj.get("schema").and_then(Value::as_u64) != Some(1) {
        return Err(schema_err("schema", "schema version 1"));
    }
    let inferred = if obj.contains_key("check") {
        "verify-config"
    } else if obj.contains_key("components") {
        "tree"
    } else if obj.contains_key("samples") {
        "family"
    } else if obj.contains_key("tuple") {
        "curve"
    } else {
        return Err(schema_err("kind", "a curve, family, tree, or verify-config payload"));
    };
    match obj.get("kind") {
        None => {}
        Some(Value::String(k)) if k == inferred => {}
        Some(Value::String(k)) => {
            return Err(schema_err("kind", format!("kind \"{inferred}\" for this payload, found \"{k}\"")));
        }
        Some(_) => return Err(schema_err("kind", "the kind as a string")),
    }
    match inferred {
        "curve" => parse_curve(obj),
        "family" => parse_family(obj),
        "tree" => parse_tree(obj),
        _ => parse_verify_config(obj),
    }
}

fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<usize, LoadError> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| schema_err(key, format!("{key} as a non-negative integer")))
}

fn as_complex(v: &Value, field: &str) -> Result<Complex, LoadError> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema_err(field, "a complex number as [re, im]"))?;
    let part = |i: usize| {
        pair[i].as_f64().ok_or_else(|| schema_err(field, "a complex number as [re, im]"))
    };
    Ok(Complex::new(part(0)?, part(1)?))
}

/// Parses a tuple of homogeneous polynomials, coefficients in descending
/// powers of `u`. When `expect` pins `(n, degree)`, entry counts and lengths
/// are checked against it.
fn parse_tuple(v: &Value, field: &str, expect: Option<(usize, usize)>) -> Result<MapTuple, LoadError> {
    let entries_v = v
        .as_array()
        .ok_or_else(|| schema_err(field, "a list of polynomial entries"))?;
    if let Some((n, _)) = expect {
        if entries_v.len() != n {
            return Err(schema_err(field, format!("n = {n} entries, found {}", entries_v.len())));
        }
    }
    let mut entries = Vec::with_capacity(entries_v.len());
    for (j, ev) in entries_v.iter().enumerate() {
        let ef = format!("{field}[{j}]");
        let coeffs_v = ev
            .as_array()
            .ok_or_else(|| schema_err(&ef, "a list of complex coefficients"))?;
        if let Some((_, d)) = expect {
            if coeffs_v.len() != d + 1 {
                return Err(schema_err(
                    &ef,
                    format!("common degree ({} coefficients, found {})", d + 1, coeffs_v.len()),
                ));
            }
        }
        let mut coeffs = Vec::with_capacity(coeffs_v.len());
        for (i, cv) in coeffs_v.iter().enumerate() {
            coeffs.push(as_complex(cv, &format!("{ef}[{i}]"))?);
        }
        entries.push(HomogPoly::new(coeffs).map_err(|e| schema_err(&ef, lib_msg(e)))?);
    }
    MapTuple::new(entries).map_err(|e| schema_err(field, format!("common degree ({})", lib_msg(e))))
}

fn parse_curve(obj: &Map<String, Value>) -> Result<InputDocument, LoadError> {
    let n = get_usize(obj, "n")?;
    let degree = get_usize(obj, "degree")?;
    if n < 2 {
        return Err(schema_err("n", "n at least 2"));
    }
    let tv = obj.get("tuple").ok_or_else(|| schema_err("tuple", "a tuple field"))?;
    let tuple = parse_tuple(tv, "tuple", Some((n, degree)))?;
    Ok(InputDocument::Curve(tuple))
}

fn parse_family(obj: &Map<String, Value>) -> Result<InputDocument, LoadError> {
    let n = get_usize(obj, "n")?;
    let degree = get_usize(obj, "degree")?;
    if n < 2 {
        return Err(schema_err("n", "n at least 2"));
    }
    let samples_v = obj
        .get("samples")
        .and_then(Value::as_array)
        .ok_or_else(|| schema_err("samples", "a list of samples"))?;
    if samples_v.is_empty() {
        return Err(schema_err("samples", "at least one sample"));
    }
    let mut samples = Vec::with_capacity(samples_v.len());
    for (i, sv) in samples_v.iter().enumerate() {
        let sf = format!("samples[{i}]");
        let so = sv
            .as_object()
            .ok_or_else(|| schema_err(&sf, "an object with k and tuple fields"))?;
        let k = so
            .get("k")
            .and_then(Value::as_f64)
            .filter(|k| k.is_finite() && *k > 0.0)
            .ok_or_else(|| schema_err(format!("{sf}.k"), "a positive finite parameter k"))?;
        let tv = so
            .get("tuple")
            .ok_or_else(|| schema_err(format!("{sf}.tuple"), "a tuple field"))?;
        let tuple = parse_tuple(tv, &format!("{sf}.tuple"), Some((n, degree)))?;
        samples.push(FamilySample { k, tuple });
    }
    let limit = match obj.get("limit") {
        None | Some(Value::Null) => None,
        Some(lv) => {
            let t = parse_tuple(lv, "limit", None)?;
            if t.n() != n {
                return Err(schema_err("limit", format!("n = {n} entries, found {}", t.n())));
            }
            Some(t)
        }
    };
    let fam = CurveFamily::new(samples, limit).map_err(|e| schema_err("samples", lib_msg(e)))?;
    Ok(InputDocument::Family(fam))
}

fn parse_tree(obj: &Map<String, Value>) -> Result<InputDocument, LoadError> {
    let comps = obj
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| schema_err("components", "a list of components"))?;
    if comps.is_empty() {
        return Err(schema_err("components", "at least one component"));
    }
    let mut doc = TreeDoc {
        parents: Vec::with_capacity(comps.len()),
        attaches: Vec::with_capacity(comps.len()),
        degrees: Vec::with_capacity(comps.len()),
        marks: Vec::with_capacity(comps.len()),
    };
    for (i, cv) in comps.iter().enumerate() {
        let cf = format!("components[{i}]");
        let co = cv.as_object().ok_or_else(|| schema_err(&cf, "a component object"))?;
        let parent = match co.get("parent") {
            None | Some(Value::Null) => None,
            Some(pv) => Some(
                pv.as_u64()
                    .map(|p| p as usize)
                    .filter(|p| *p < comps.len())
                    .ok_or_else(|| schema_err(format!("{cf}.parent"), "a component index or null"))?,
            ),
        };
        let attach = match co.get("attach") {
            None | Some(Value::Null) => None,
            Some(av) => Some(as_complex(av, &format!("{cf}.attach"))?),
        };
        let degree = co
            .get("degree")
            .and_then(Value::as_u64)
            .ok_or_else(|| schema_err(format!("{cf}.degree"), "a non-negative map degree"))?;
        let marks = match co.get("marks") {
            None => 0,
            Some(mv) => mv
                .as_u64()
                .ok_or_else(|| schema_err(format!("{cf}.marks"), "a non-negative count of marked points"))?,
        };
        doc.parents.push(parent);
        doc.attaches.push(attach);
        doc.degrees.push(degree as usize);
        doc.marks.push(marks as usize);
    }
    Ok(InputDocument::Tree(doc))
}

fn parse_verify_config(obj: &Map<String, Value>) -> Result<InputDocument, LoadError> {
    let check = obj
        .get("check")
        .and_then(Value::as_str)
        .ok_or_else(|| schema_err("check", "a check name as a string"))?
        .to_string();
    let seed = match obj.get("seed") {
        None | Some(Value::Null) => None,
        Some(sv) => Some(sv.as_u64().ok_or_else(|| schema_err("seed", "a non-negative integer seed"))?),
    };
    let samples = match obj.get("samples") {
        None | Some(Value::Null) => None,
        Some(sv) => Some(
            sv.as_u64()
                .map(|s| s as usize)
                .ok_or_else(|| schema_err("samples", "a non-negative sample count"))?,
        ),
    };
    Ok(InputDocument::VerifyConfig(VerifyConfig { check, seed, samples }))
}

/// Parses a region spec string: `full`, `disk:cx,cy,r[,chart]`, or
/// `annulus:cx,cy,rin,rout[,chart]`.
pub fn parse_region(spec: &str) -> Result<Region, LoadError> {
    let bad = |constraint: String| schema_err("region", constraint);
    if spec == "full" {
        return Ok(Region::FullSphere);
    }
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| bad("one of full, disk:cx,cy,r[,chart], annulus:cx,cy,rin,rout[,chart]".into()))?;
    let parts: Vec<&str> = rest.split(',').collect();
    let num = |s: &str, what: &str| -> Result<f64, LoadError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("{what} as a number, found \"{}\"", s.trim())))
    };
    let chart = |s: Option<&&str>| -> Result<u8, LoadError> {
        match s.map(|c| c.trim()) {
            None => Ok(0),
            Some("0") => Ok(0),
            Some("1") => Ok(1),
            Some(c) => Err(bad(format!("chart 0 or 1, found \"{c}\""))),
        }
    };
    match head {
        "disk" if parts.len() == 3 || parts.len() == 4 => Ok(Region::Disk {
            center: Complex::new(num(parts[0], "cx")?, num(parts[1], "cy")?),
            r: num(parts[2], "r")?,
            chart: chart(parts.get(3))?,
        }),
        "annulus" if parts.len() == 4 || parts.len() == 5 => Ok(Region::Annulus {
            center: Complex::new(num(parts[0], "cx")?, num(parts[1], "cy")?),
            r_in: num(parts[2], "rin")?,
            r_out: num(parts[3], "rout")?,
            chart: chart(parts.get(4))?,
        }),
        "disk" => Err(bad("disk:cx,cy,r[,chart]".into())),
        "annulus" => Err(bad("annulus:cx,cy,rin,rout[,chart]".into())),
        _ => Err(bad("one of full, disk:cx,cy,r[,chart], annulus:cx,cy,rin,rout[,chart]".into())),
    }
}

/// Parses a complex command-line argument, `re,im` or bare `re`.
pub fn parse_complex_arg(s: &str) -> Result<Complex, LoadError> {
    let bad = || schema_err("point", format!("a complex number as re,im; found \"{s}\""));
    let mut it = s.split(',');
    let re = it.next().ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?;
    let im = match it.next() {
        None => 0.0,
        Some(t) => t.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if it.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex::new(re, im))
}

/// Parses a comma-separated list of radii.
pub fn parse_deltas(s: &str) -> Result<Vec<f64>, LoadError> {
    let bad = |t: &str| schema_err("deltas", format!("a comma-separated list of radii; found \"{t}\""));
    let out: Result<Vec<f64>, LoadError> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
        .collect();
    let out = out?;
    if out.is_empty() {
        return Err(bad(s));
    }
    Ok(out)
}

/// `[re, im]` wire form of a complex number.
pub fn complex_json(z: Complex) -> Value {
    json!([z.re, z.im])
}

/// Wire form of a projective-line point: its homogeneous coordinate pair.
pub fn point_json(p: &P1Point) -> Value {
    let (a, b) = p.coords();
    json!([complex_json(a), complex_json(b)])
}

/// Wire form of a tuple: entries as coefficient lists, descending in `u`.
pub fn tuple_json(t: &MapTuple) -> Value {
    Value::Array(
        t.entries()
            .iter()
            .map(|e| Value::Array(e.coeffs().iter().copied().map(complex_json).collect()))
            .collect(),
    )
}

/// A complete, reloadable curve document for a tuple.
pub fn curve_doc(t: &MapTuple) -> Value {
    json!({
        "schema": 1,
        "kind": "curve",
        "n": t.n(),
        "degree": t.degree(),
        "tuple": tuple_json(t),
    })
}
