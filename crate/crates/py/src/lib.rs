//! Python bindings. Records come back as plain dicts and lists, shaped like
//! the CLI's JSON output.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};
use serde_json::Value;

use causal_bounds::bounds::{hoeffding_halfwidth, lil_halfwidth};
use causal_bounds::counts::{self, Schema, Variable};
use causal_bounds::coverage::{run_coverage, CoverageConfig};
use causal_bounds::effects::{compute, Criterion, EffectQuery, FrontdoorForm, Regime};
use causal_bounds::graph::{check_backdoor, check_frontdoor};
use causal_bounds::prediction::prediction_set;
use causal_bounds::simulator::{replication_rng, sample_adaptive, sample_iid};
use causal_bounds::{CausalModel, Dag, PolicySpec, FORMAT_VERSION};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn record<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(err)?)
}

fn parse<T: std::str::FromStr>(text: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    text.parse().map_err(err)
}

fn query(
    criterion: &str,
    treatment_value: usize,
    outcome_value: usize,
    delta: f64,
    regime: &str,
    toy: bool,
    form: &str,
) -> PyResult<EffectQuery> {
    Ok(EffectQuery::new(parse::<Criterion>(criterion)?, treatment_value, outcome_value, delta, parse::<Regime>(regime)?)
        .toy(toy)
        .form(parse::<FrontdoorForm>(form)?))
}

fn numbered(name: &str, size: usize) -> Variable {
    let labels: Vec<String> = (0..size).map(|i| i.to_string()).collect();
    Variable::new(name, &labels.iter().map(String::as_str).collect::<Vec<_>>())
}

/// Streaming counts over index-coded observations.
#[pyclass]
struct CountTable {
    inner: counts::CountTable,
}

#[pymethods]
impl CountTable {
    /// Domain sizes of the treatment, the outcome and each adjustment variable.
    #[new]
    fn new(x_size: usize, y_size: usize, z_sizes: Vec<usize>) -> PyResult<Self> {
        let z = z_sizes.iter().enumerate().map(|(i, &k)| numbered(&format!("Z{i}"), k)).collect();
        let schema = Schema::new(numbered("X", x_size), numbered("Y", y_size), z).map_err(err)?;
        Ok(Self {
            inner: counts::CountTable::new(&schema),
        })
    }

    fn ingest(&mut self, x: usize, y: usize, z: Vec<usize>) -> PyResult<()> {
        self.inner.ingest(&counts::Observation::new(x, y, z)).map_err(err)
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n()
    }

    #[pyo3(signature = (criterion, treatment_value, outcome_value, delta, regime = "iid", toy = false, form = "expanded"))]
    #[allow(clippy::too_many_arguments)]
    fn interval<'py>(
        &self,
        py: Python<'py>,
        criterion: &str,
        treatment_value: usize,
        outcome_value: usize,
        delta: f64,
        regime: &str,
        toy: bool,
        form: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let q = query(criterion, treatment_value, outcome_value, delta, regime, toy, form)?;
        record(py, &compute(&self.inner, &q).map_err(err)?)
    }

    fn prediction_set<'py>(&self, py: Python<'py>, treatment_value: usize, delta: f64) -> PyResult<Bound<'py, PyAny>> {
        record(py, &prediction_set(&self.inner, treatment_value, delta).map_err(err)?)
    }
}

/// `(satisfied, violations)` for the back-door criterion on a graph in the text format.
#[pyfunction]
fn backdoor(graph: &str, treatment: Vec<String>, outcome: Vec<String>, adjustment: Vec<String>) -> PyResult<(bool, Vec<String>)> {
    let dag = Dag::parse(graph).map_err(err)?;
    fn refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    let report = check_backdoor(&dag, &refs(&treatment), &refs(&outcome), &refs(&adjustment)).map_err(err)?;
    Ok((report.satisfied(), report.violations().to_vec()))
}

#[pyfunction]
fn frontdoor(graph: &str, treatment: &str, outcome: &str, mediators: Vec<String>) -> PyResult<(bool, Vec<String>)> {
    let dag = Dag::parse(graph).map_err(err)?;
    let m: Vec<&str> = mediators.iter().map(String::as_str).collect();
    let report = check_frontdoor(&dag, treatment, outcome, &m).map_err(err)?;
    Ok((report.satisfied(), report.violations().to_vec()))
}

/// Observations `(x, y, z)` drawn from a model given as JSON.
#[pyfunction]
#[pyo3(signature = (model_json, n, seed = 0, policy = None))]
fn simulate(model_json: &str, n: u64, seed: u64, policy: Option<&str>) -> PyResult<Vec<(usize, usize, Vec<usize>)>> {
    let model = CausalModel::from_json(model_json).map_err(err)?;
    let mut rng = replication_rng(seed, 0);
    let obs = match policy {
        Some(p) => {
            let mut policy = parse::<PolicySpec>(p)?.build(&model).map_err(err)?;
            sample_adaptive(&model, policy.as_mut(), n, &mut rng)
        }
        None => sample_iid(&model, n, &mut rng),
    }
    .map_err(err)?;
    Ok(obs.into_iter().map(|o| (o.x, o.y, o.z)).collect())
}

#[pyfunction]
#[pyo3(signature = (model_json, criterion, treatment_value, outcome_value, delta, regime, n, replications, seed = 0, toy = false, policy = None))]
#[allow(clippy::too_many_arguments)]
fn coverage<'py>(
    py: Python<'py>,
    model_json: &str,
    criterion: &str,
    treatment_value: usize,
    outcome_value: usize,
    delta: f64,
    regime: &str,
    n: u64,
    replications: u64,
    seed: u64,
    toy: bool,
    policy: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let model = CausalModel::from_json(model_json).map_err(err)?;
    let config = CoverageConfig {
        query: query(criterion, treatment_value, outcome_value, delta, regime, toy, "expanded")?,
        policy: policy.map(parse::<PolicySpec>).transpose()?,
        n,
        replications,
        base_seed: seed,
    };
    let report = py.detach(|| run_coverage(&model, &config)).map_err(err)?;
    record(py, &report)
}

/// Fixed-`n` Hoeffding radius; `None` when unbounded.
#[pyfunction]
fn hoeffding_radius(n: u64, delta: f64) -> PyResult<Option<f64>> {
    Ok(hoeffding_halfwidth(n, delta).map_err(err)?.finite())
}

/// Iterated-log confidence-sequence radius; `None` when unbounded.
#[pyfunction]
fn lil_radius(n: u64, delta: f64) -> PyResult<Option<f64>> {
    Ok(lil_halfwidth(n, delta).map_err(err)?.finite())
}

#[pymodule(name = "causal_bounds")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CountTable>()?;
    m.add_function(wrap_pyfunction!(backdoor, m)?)?;
    m.add_function(wrap_pyfunction!(frontdoor, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(hoeffding_radius, m)?)?;
    m.add_function(wrap_pyfunction!(lil_radius, m)?)?;
    m.add("FORMAT_VERSION", FORMAT_VERSION)?;
    Ok(())
}
