//! Python bindings. Specs go in as text; probabilities come out as exact
//! `"n/d"` strings, which `fractions.Fraction` accepts directly.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ptss::bisim::{bisimilarity_on, congruence_probe};
use ptss::format::{check, FormatKind};
use ptss::json::{model_to_json, spec_to_json};
use ptss::semantics::default_model;
use ptss::syntax::{parse, parse_term, render, SpecFile};
use ptss::terms::Term;
use ptss::transform::reduce_full;
use ptss::universe::from_spec;

/// `(source, label, [(term, probability)])`
pub type Step = (String, String, Vec<(String, String)>);

fn load(text: &str) -> Result<SpecFile, String> {
    parse(text).map_err(|ds| ds.iter().map(|d| d.display("<spec>")).collect::<Vec<_>>().join("\n"))
}

fn universe(s: &SpecFile, depth: Option<usize>) -> Vec<Term> {
    from_spec(&s.ptss.sig, s.universe.as_ref(), depth)
}

pub fn spec_json(text: &str) -> Result<String, String> {
    let s = load(text)?;
    serde_json::to_string(&spec_to_json(&s)).map_err(|e| e.to_string())
}

pub fn format_violations(text: &str, kind: &str) -> Result<Vec<String>, String> {
    let k = FormatKind::parse(kind).ok_or_else(|| format!("unknown format `{kind}`"))?;
    let s = load(text)?;
    Ok(check(&s.ptss, k).violations().into_iter().map(|v| format!("{}: [{}] {}", v.rule, v.tag, v.message)).collect())
}

pub fn model_steps(text: &str, depth: Option<usize>) -> Result<Vec<Step>, String> {
    let s = load(text)?;
    let tr = default_model(&s.ptss, &s.strata, &universe(&s, depth));
    Ok(model_to_json(&s.ptss, &tr)
        .into_iter()
        .map(|t| (t.source, t.label, t.distribution.into_iter().map(|w| (w.term, w.prob)).collect()))
        .collect())
}

pub fn reduce_text(text: &str, fuel: usize, depth: Option<usize>) -> Result<String, String> {
    let s = load(text)?;
    let (p, _) = reduce_full(&s.ptss, &universe(&s, depth), fuel).map_err(|e| e.to_string())?;
    Ok(render(&SpecFile { ptss: p, strata: s.strata, universe: s.universe }))
}

pub fn bisimilar_terms(text: &str, t1: &str, t2: &str, depth: Option<usize>) -> Result<bool, String> {
    let s = load(text)?;
    let u = universe(&s, depth);
    let term = |x: &str| parse_term(x, &s.ptss).map_err(|d| d.display(x));
    let (a, b) = (term(t1)?, term(t2)?);
    for t in [&a, &b] {
        if !u.contains(t) {
            return Err(format!("{t:?} is not in the universe"));
        }
    }
    let tr = default_model(&s.ptss, &s.strata, &u);
    Ok(bisimilarity_on(&tr, &u).same(&a, &b))
}

pub fn congruence_count(text: &str, samples: usize, seed: u64, depth: Option<usize>) -> Result<(usize, usize), String> {
    let s = load(text)?;
    let u = universe(&s, depth);
    let tr = default_model(&s.ptss, &s.strata, &u);
    let rep = congruence_probe(&s.ptss, &tr, &u, samples, seed);
    Ok((rep.checked, rep.counterexamples.len()))
}

fn py<T>(r: Result<T, String>) -> PyResult<T> {
    r.map_err(PyValueError::new_err)
}

/// Spec as a JSON string.
#[pyfunction]
fn spec(text: &str) -> PyResult<String> {
    py(spec_json(text))
}

/// Violations of a rule format; empty when the spec passes.
#[pyfunction]
#[pyo3(signature = (text, kind = "ntmuxtheta"))]
fn format_check(text: &str, kind: &str) -> PyResult<Vec<String>> {
    py(format_violations(text, kind))
}

#[pyfunction]
#[pyo3(signature = (text, depth = None))]
fn model(text: &str, depth: Option<usize>) -> PyResult<Vec<Step>> {
    py(model_steps(text, depth))
}

#[pyfunction]
#[pyo3(signature = (text, fuel = 3, depth = None))]
fn reduce(text: &str, fuel: usize, depth: Option<usize>) -> PyResult<String> {
    py(reduce_text(text, fuel, depth))
}

#[pyfunction]
#[pyo3(signature = (text, t1, t2, depth = None))]
fn bisimilar(text: &str, t1: &str, t2: &str, depth: Option<usize>) -> PyResult<bool> {
    py(bisimilar_terms(text, t1, t2, depth))
}

/// `(checked, counterexamples)`
#[pyfunction]
#[pyo3(signature = (text, samples = 200, seed = 7, depth = None))]
fn congruence(text: &str, samples: usize, seed: u64, depth: Option<usize>) -> PyResult<(usize, usize)> {
    py(congruence_count(text, samples, seed, depth))
}

#[pymodule]
fn ptss_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(spec, m)?)?;
    m.add_function(wrap_pyfunction!(format_check, m)?)?;
    m.add_function(wrap_pyfunction!(model, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(bisimilar, m)?)?;
    m.add_function(wrap_pyfunction!(congruence, m)?)?;
    Ok(())
}
