//! Python bindings. Instances travel as JSON strings; results come back as
//! Python dicts.

use pmi_sos::oracle::{brute_force_binary, sample_min_ball};
use pmi_sos::penalty::{choose_k, penalty_poly};
use pmi_sos::relax::{build, build_sos_dual, lower_bound};
use pmi_sos::sdp::{extract_certificate, sdpa_string};
use pmi_sos::{Domain, Instance, PenaltySpec, RelaxKind, RelaxSpec, ShiftMode};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::{Value, json};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn parse(instance: &str) -> PyResult<Instance> {
    Instance::from_json(instance).map_err(err)
}

fn kind_for(kind: &str, inst: &Instance) -> PyResult<RelaxKind> {
    match kind {
        "proposed" => Ok(RelaxKind::proposed(inst.domain)),
        other => other.parse().map_err(err),
    }
}

/// Lower bound of the order-`r` relaxation, with an optional SOS certificate.
#[pyfunction]
#[pyo3(signature = (instance, kind = "proposed", r = 3, tol = 1e-8, certify = false))]
fn solve<'py>(py: Python<'py>, instance: &str, kind: &str, r: u32, tol: f64, certify: bool) -> PyResult<Bound<'py, PyAny>> {
    let inst = parse(instance)?;
    let kind = kind_for(kind, &inst)?;
    let p = build_sos_dual(&inst.objective, &inst.g, &RelaxSpec::for_instance(kind, &inst, r)).map_err(err)?;
    let s = p.solve(tol).map_err(err)?;
    let mut out = json!({
        "kind": kind.name(),
        "r": r,
        "status": s.status,
        "lower_bound": if s.is_solved() { json!(lower_bound(&s)) } else { Value::Null },
        "solution": s.to_json(&p),
    });
    if certify && s.is_solved() {
        out["certificate"] = extract_certificate(&p, &s).map_err(err)?.to_json();
    }
    to_py(py, &out)
}

/// The moment relaxation in SDPA sparse format.
#[pyfunction]
#[pyo3(signature = (instance, kind = "proposed", r = 3))]
fn relax_sdpa(instance: &str, kind: &str, r: u32) -> PyResult<String> {
    let inst = parse(instance)?;
    let kind = kind_for(kind, &inst)?;
    let p = build(&inst.objective, &inst.g, &RelaxSpec::for_instance(kind, &inst, r)).map_err(err)?;
    sdpa_string(&p).map_err(err)
}

/// Exact minimum on the cube, or a sampled upper bound on the ball.
#[pyfunction]
#[pyo3(signature = (instance, samples = 100_000, seed = 2024))]
fn oracle<'py>(py: Python<'py>, instance: &str, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let inst = parse(instance)?;
    let o = match inst.domain {
        Domain::Binary => brute_force_binary(&inst.objective, &inst.g),
        Domain::Ball => sample_min_ball(&inst.objective, &inst.g, samples, seed),
    }
    .map_err(err)?;
    to_py(py, &o.to_json())
}

/// Penalty polynomial diagnostics; `k` defaults to the automatic choice.
#[pyfunction]
#[pyo3(signature = (lam, n_height = 1.0, v = 40, k = None, shift_mode = "theoretical"))]
fn penalty<'py>(py: Python<'py>, lam: f64, n_height: f64, v: u32, k: Option<u32>, shift_mode: &str) -> PyResult<Bound<'py, PyAny>> {
    let k = match k {
        Some(k) => k,
        None => choose_k(lam.abs(), v).map_err(err)?,
    };
    let mode: ShiftMode = shift_mode.parse().map_err(err)?;
    let spec = PenaltySpec::new(lam, n_height, k, v).map_err(err)?;
    let p = penalty_poly(&spec, mode).map_err(err)?;
    let v = serde_json::to_value(&p).map_err(err)?;
    to_py(py, &v)
}

/// A seeded random instance as JSON.
#[pyfunction]
fn random_instance(domain: &str, n: usize, m: usize, seed: u64) -> PyResult<String> {
    let d: Domain = domain.parse().map_err(err)?;
    Ok(pmi_sos::random_instance(d, n, m, seed).to_json())
}

#[pymodule]
#[pyo3(name = "pmi_sos")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(relax_sdpa, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(penalty, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    Ok(())
}
