//! Python bindings for the bashkit corpus toolkit.
//!
//! Exposes the parser, cleaner, tokenizers, template extraction and the
//! evaluation metrics as a `bashkit_py` extension module. Functions use
//! the bundled utility/flag database unless a `SpecDb` is passed.

use std::sync::{Arc, OnceLock};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use bashkit_core::ast::ScopeClassification;
use bashkit_core::nl::Stopwords;
use bashkit_core::specdb;
use bashkit_core::subtok::{self, Granularity, PairSide};
use bashkit_core::{metrics, nl, parser, template};

fn default_db() -> &'static specdb::SpecDb {
    static DB: OnceLock<specdb::SpecDb> = OnceLock::new();
    DB.get_or_init(specdb::SpecDb::bundled)
}

fn default_stopwords() -> &'static Stopwords {
    static SW: OnceLock<Stopwords> = OnceLock::new();
    SW.get_or_init(Stopwords::bundled)
}

/// Utility/flag knowledge base handle.
#[pyclass(name = "SpecDb", frozen)]
struct PySpecDb {
    inner: Arc<specdb::SpecDb>,
}

#[pymethods]
impl PySpecDb {
    /// The database bundled with the library.
    #[staticmethod]
    fn bundled() -> PySpecDb {
        PySpecDb {
            inner: Arc::new(specdb::SpecDb::bundled()),
        }
    }

    /// Load a database from a TSV file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<PySpecDb> {
        let db = specdb::SpecDb::load(std::path::Path::new(path))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PySpecDb {
            inner: Arc::new(db),
        })
    }

    fn in_scope_count(&self) -> usize {
        self.inner.in_scope_count()
    }

    /// Number of flag entries for a utility, or None if unknown.
    fn flag_count(&self, utility: &str) -> Option<usize> {
        self.inner.lookup_utility(utility).map(|u| u.flags.len())
    }

    /// Validate a flag; returns the canonical short form or raises.
    fn validate_flag(&self, utility: &str, flag: &str) -> PyResult<String> {
        match self.inner.validate_flag(utility, flag) {
            specdb::ValidationResult::Valid {
                canonical_short_form,
            } => Ok(canonical_short_form),
            specdb::ValidationResult::UnknownFlag => Err(PyValueError::new_err(format!(
                "unknown flag {flag} for {utility}"
            ))),
            specdb::ValidationResult::UnknownUtility => {
                Err(PyValueError::new_err(format!("unknown utility {utility}")))
            }
        }
    }
}

fn db_of(db: Option<&PySpecDb>) -> Arc<specdb::SpecDb> {
    match db {
        Some(d) => d.inner.clone(),
        None => Arc::new(default_db().clone()),
    }
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<PyObject> {
    Ok(match value {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64().unwrap_or(0.0).into_pyobject(py)?.unbind().into()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.unbind().into()
        }
    })
}

/// Strip prompts and sudo, replace absolute utility paths by base names.
#[pyfunction]
fn clean_command(raw: &str) -> String {
    parser::clean_command(raw)
}

/// Parse a command into an AST dict. Raises ValueError with the violation
/// list unless `permissive` is set.
#[pyfunction]
#[pyo3(signature = (raw, permissive = false, db = None))]
fn parse(py: Python<'_>, raw: &str, permissive: bool, db: Option<&PySpecDb>) -> PyResult<PyObject> {
    let db = db_of(db);
    if permissive {
        let (ast, _violations) = parser::parse_permissive(raw, &db);
        match ast {
            Some(ast) => json_to_py(py, &serde_json::to_value(&ast).unwrap()),
            None => Err(PyValueError::new_err("command does not parse")),
        }
    } else {
        match parser::parse_command(raw, &db) {
            Ok(ast) => json_to_py(py, &serde_json::to_value(&ast).unwrap()),
            Err(violations) => Err(PyValueError::new_err(format!(
                "out of scope: {}",
                violations
                    .iter()
                    .map(|v| format!("{}: {}", v.kind.tag(), v.detail))
                    .collect::<Vec<_>>()
                    .join("; ")
            ))),
        }
    }
}

/// Classify a command; returns a list of violation dicts (empty when in
/// scope).
#[pyfunction]
#[pyo3(signature = (raw, db = None))]
fn classify(py: Python<'_>, raw: &str, db: Option<&PySpecDb>) -> PyResult<PyObject> {
    let db = db_of(db);
    let violations = match parser::classify_scope(raw, &db) {
        ScopeClassification::InScope(_) => Vec::new(),
        ScopeClassification::OutOfScope(v) => v,
    };
    json_to_py(py, &serde_json::to_value(&violations).unwrap())
}

/// Canonical serialization of a command (parse then serialize).
#[pyfunction]
#[pyo3(signature = (raw, db = None))]
fn canonicalize(raw: &str, db: Option<&PySpecDb>) -> PyResult<String> {
    let db = db_of(db);
    parser::parse_command(raw, &db)
        .map(|ast| ast.serialize())
        .map_err(|v| PyValueError::new_err(format!("{} violations", v.len())))
}

/// Split a constant into its padded sub-token sequence.
#[pyfunction]
fn to_subtokens(constant: &str) -> Vec<String> {
    subtok::to_subtokens(constant)
}

/// Inverse of sub-token expansion over an item sequence.
#[pyfunction]
fn detokenize_subtokens(items: Vec<String>) -> PyResult<Vec<String>> {
    subtok::detokenize_subtokens(&items).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Encode text at `granularity` ("token" | "char" | "subtoken") for
/// `side` ("nl" | "cmd").
#[pyfunction]
#[pyo3(signature = (text, granularity, side, db = None))]
fn encode(
    text: &str,
    granularity: &str,
    side: &str,
    db: Option<&PySpecDb>,
) -> PyResult<Vec<String>> {
    let granularity = match granularity {
        "token" => Granularity::Token,
        "char" => Granularity::Char,
        "subtoken" => Granularity::Subtoken,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown granularity {other:?}"
            )))
        }
    };
    let side = match side {
        "nl" => PairSide::NaturalLanguage,
        "cmd" => PairSide::Command,
        other => return Err(PyValueError::new_err(format!("unknown side {other:?}"))),
    };
    let db = db_of(db);
    let ast = match side {
        PairSide::Command => parser::parse_permissive(text, &db).0,
        PairSide::NaturalLanguage => None,
    };
    Ok(subtok::encode(text, granularity, side, ast.as_ref()).items)
}

/// Tokenize a natural-language description.
#[pyfunction]
fn tokenize_nl(raw: &str) -> Vec<String> {
    nl::tokenize_nl(raw)
}

/// Clustering key: lowercase, stem, drop stopwords.
#[pyfunction]
fn normalize_nl(raw: &str) -> String {
    nl::normalize_for_clustering(raw, default_stopwords())
}

/// Extract the command template, e.g. `grep -l [regex] [file]`.
#[pyfunction]
#[pyo3(signature = (raw, db = None))]
fn extract_template(raw: &str, db: Option<&PySpecDb>) -> PyResult<String> {
    let db = db_of(db);
    let (ast, _) = parser::parse_permissive(raw, &db);
    match ast {
        Some(ast) => Ok(template::extract_template(&ast, &db).templatized),
        None => Err(PyValueError::new_err("command does not parse")),
    }
}

/// Template equality after flag canonicalization.
#[pyfunction]
#[pyo3(signature = (a, b, db = None))]
fn template_equal(a: &str, b: &str, db: Option<&PySpecDb>) -> PyResult<bool> {
    let db = db_of(db);
    let (ast_a, _) = parser::parse_permissive(a, &db);
    let (ast_b, _) = parser::parse_permissive(b, &db);
    match (ast_a, ast_b) {
        (Some(a), Some(b)) => Ok(template::template_equal(&a, &b, &db)),
        _ => Err(PyValueError::new_err("command does not parse")),
    }
}

/// Maximum close-vocabulary overlap between a candidate command and the
/// reference commands.
#[pyfunction]
#[pyo3(signature = (candidate, references, db = None))]
fn tm_score(candidate: &str, references: Vec<String>, db: Option<&PySpecDb>) -> PyResult<f64> {
    let db = db_of(db);
    let cand = parser::parse_permissive(&parser::clean_command(candidate), &db).0;
    let refs: Vec<_> = references
        .iter()
        .filter_map(|r| parser::parse_permissive(&parser::clean_command(r), &db).0)
        .collect();
    if refs.is_empty() {
        return Err(PyValueError::new_err("no parseable references"));
    }
    let ref_refs: Vec<&bashkit_core::CommandAst> = refs.iter().collect();
    Ok(match cand {
        Some(ast) => metrics::tm_score(&ast, &ref_refs),
        None => 0.0,
    })
}

/// Sentence BLEU over token lists (n-grams up to 4, smoothed).
#[pyfunction]
fn bleu_score(candidate: Vec<String>, references: Vec<Vec<String>>) -> f64 {
    metrics::bleu_score(&candidate, &references)
}

#[pymodule]
fn bashkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpecDb>()?;
    m.add_function(wrap_pyfunction!(clean_command, m)?)?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(to_subtokens, m)?)?;
    m.add_function(wrap_pyfunction!(detokenize_subtokens, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize_nl, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_nl, m)?)?;
    m.add_function(wrap_pyfunction!(extract_template, m)?)?;
    m.add_function(wrap_pyfunction!(template_equal, m)?)?;
    m.add_function(wrap_pyfunction!(tm_score, m)?)?;
    m.add_function(wrap_pyfunction!(bleu_score, m)?)?;
    m.add("SUB_START", subtok::SUB_START)?;
    m.add("SUB_END", subtok::SUB_END)?;
    Ok(())
}
