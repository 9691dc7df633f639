//! Python module `pydstau`: subcommands as functions returning parsed JSON.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::Value;

use dstau::kacmoody::supported_types as core_types;
use dstau_cli::{merge, run as run_command, RunConfig};

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn config_from(py: Python<'_>, config: Option<&Bound<'_, PyDict>>) -> PyResult<RunConfig> {
    let Some(d) = config else {
        return Ok(RunConfig::default());
    };
    let s: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
    let map: serde_json::Map<String, Value> = serde_json::from_str(&s).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let keys: Vec<String> = map.keys().cloned().collect();
    let overrides: BTreeMap<&str, Value> = keys
        .iter()
        .map(|k| (k.as_str(), map[k].clone()))
        .collect();
    merge(RunConfig::default(), overrides).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs a subcommand (`derive`, `omega`, `verify`, `solve`, `resolvent`, `gauge-fix`, `discrete`)
/// with config keys as in the TOML file; returns the JSON report as Python objects.
#[pyfunction]
#[pyo3(signature = (command, config=None))]
fn run(py: Python<'_>, command: &str, config: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
    let cfg = config_from(py, config)?;
    let out = py.detach(|| run_command(command, &cfg)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &out.json)
}

/// `{label: [equation, ...]}` for the given flows.
#[pyfunction]
#[pyo3(signature = (kind="A1^(1)", flows="1:0,1:1"))]
fn derive(kind: &str, flows: &str) -> PyResult<BTreeMap<String, Vec<String>>> {
    let cfg = RunConfig { kind: kind.into(), flows: flows.into(), ..RunConfig::default() };
    let out = dstau_cli::cmd_derive(&cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let mut result = BTreeMap::new();
    for f in out.json["flows"].as_array().into_iter().flatten() {
        let eqs = f["equations"].as_array().into_iter().flatten().filter_map(|e| e.as_str().map(String::from)).collect();
        result.insert(f["label"].as_str().unwrap_or_default().to_string(), eqs);
    }
    Ok(result)
}

/// True iff every identity checked by `verify` has zero residual.
#[pyfunction]
#[pyo3(signature = (kind="A1^(1)", flows="1:0,1:1", gauge_check=true))]
fn verify(py: Python<'_>, kind: &str, flows: &str, gauge_check: bool) -> PyResult<bool> {
    let cfg = RunConfig { kind: kind.into(), flows: flows.into(), gauge_check, ..RunConfig::default() };
    let out = py.detach(|| dstau_cli::cmd_verify(&cfg)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(out.success)
}

#[pyfunction]
fn supported_types() -> Vec<String> {
    core_types()
}

#[pymodule]
fn pydstau(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(derive, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(supported_types, m)?)?;
    Ok(())
}
