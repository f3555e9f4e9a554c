//! TOML problem files and plain-text point files.
//!
//! ```toml
//! name = "quad2"
//! n = 2
//! kind = "explicit_polynomial"   # or "builtin"
//! degree = 2                     # optional, defaults to the actual degree
//! x0 = [1.0, 1.0]                # optional starting point
//!
//! [[terms]]
//! exponents = [2, 0]
//! coefficient = 1.0
//! ```
//!
//! Builtins name the registered function and may override parameters:
//!
//! ```toml
//! name = "rosenbrock"
//! n = 2
//! kind = "builtin"
//! id = "scaled_rosenbrock"
//!
//! [params]
//! alpha = 10.0
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::{BuiltinId, ProblemKind, ProblemSpec};
use crate::error::{Error, Result};
use crate::tensor_poly::Polynomial;

const KIND_POLY: &str = "explicit_polynomial";
const KIND_BUILTIN: &str = "builtin";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    name: String,
    n: usize,
    kind: Spanned<String>,
    degree: Option<u32>,
    id: Option<Spanned<String>>,
    x0: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    terms: Vec<Spanned<RawTerm>>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    exponents: Vec<u32>,
    coefficient: f64,
}

#[derive(Serialize)]
struct OutFile<'a> {
    name: &'a str,
    n: usize,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    terms: Vec<RawTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<&'a BTreeMap<String, f64>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses problem-file text; `origin` only labels error messages.
pub fn parse_problem(text: &str, origin: impl AsRef<Path>) -> Result<ProblemSpec> {
    let origin = origin.as_ref();
    let err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let raw: RawFile = toml::from_str(text).map_err(|e| err(e.to_string().trim_end().to_string()))?;
    let at = |span: std::ops::Range<usize>| format!("line {}", line_of(text, span.start));

    let x0 = match raw.x0 {
        Some(v) => {
            let span = v.span();
            let v = v.into_inner();
            if v.len() != raw.n {
                return Err(err(format!(
                    "{}: field `x0` has {} entries, expected n = {}",
                    at(span),
                    v.len(),
                    raw.n
                )));
            }
            Some(v)
        }
        None => None,
    };

    let kind = match raw.kind.get_ref().as_str() {
        KIND_POLY => {
            if raw.id.is_some() || !raw.params.is_empty() {
                return Err(err(format!("fields `id` and `params` are only valid for kind = \"{KIND_BUILTIN}\"")));
            }
            let mut poly = Polynomial::zero(raw.n);
            for (k, term) in raw.terms.iter().enumerate() {
                let t = term.get_ref();
                if t.exponents.len() != raw.n {
                    return Err(err(format!(
                        "{}: term {k}: exponent vector has length {}, expected n = {}",
                        at(term.span()),
                        t.exponents.len(),
                        raw.n
                    )));
                }
                if !t.coefficient.is_finite() {
                    return Err(err(format!("{}: term {k}: coefficient is not finite", at(term.span()))));
                }
                poly.add_term(t.exponents.clone(), t.coefficient);
            }
            let degree = raw.degree.unwrap_or_else(|| poly.degree());
            ProblemKind::ExplicitPolynomial { degree, poly }
        }
        KIND_BUILTIN => {
            if !raw.terms.is_empty() || raw.degree.is_some() {
                return Err(err(format!("fields `terms` and `degree` are only valid for kind = \"{KIND_POLY}\"")));
            }
            let id = raw
                .id
                .ok_or_else(|| err("field `id` is required for builtin problems".into()))?;
            let parsed = BuiltinId::parse(id.get_ref()).map_err(|_| {
                err(format!("{}: unknown builtin `{}`", at(id.span()), id.get_ref()))
            })?;
            ProblemKind::Builtin {
                id: parsed,
                params: raw.params,
            }
        }
        other => {
            return Err(err(format!(
                "{}: field `kind`: unknown value `{other}` (expected \"{KIND_POLY}\" or \"{KIND_BUILTIN}\")",
                at(raw.kind.span())
            )))
        }
    };
    let spec = ProblemSpec {
        name: raw.name,
        n: raw.n,
        kind,
        x0,
    };
    spec.validate().map_err(|e| err(e.to_string()))?;
    Ok(spec)
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_problem(&text, path)
}

pub fn problem_to_string(spec: &ProblemSpec) -> String {
    let out = match &spec.kind {
        ProblemKind::ExplicitPolynomial { degree, poly } => OutFile {
            name: &spec.name,
            n: spec.n,
            kind: KIND_POLY,
            degree: Some(*degree),
            id: None,
            x0: spec.x0.as_deref(),
            terms: poly
                .terms()
                .map(|(e, c)| RawTerm {
                    exponents: e.clone(),
                    coefficient: c,
                })
                .collect(),
            params: None,
        },
        ProblemKind::Builtin { id, params } => OutFile {
            name: &spec.name,
            n: spec.n,
            kind: KIND_BUILTIN,
            degree: None,
            id: Some(id.name()),
            x0: spec.x0.as_deref(),
            terms: Vec::new(),
            params: (!params.is_empty()).then_some(params),
        },
    };
    toml::to_string(&out).expect("problem specs serialize")
}

pub fn save_problem(spec: &ProblemSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, problem_to_string(spec)).map_err(|e| Error::io(path, e))
}

/// Reads `n` reals separated by whitespace or commas; `#` starts a comment.
pub fn load_point(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: `{tok}` is not a number", lineno + 1),
            })?;
            out.push(v);
        }
    }
    if out.len() != n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected {n} values, found {}", out.len()),
        });
    }
    Ok(out)
}
