//! Python bindings. Results cross the boundary as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use segmarket_core::io::{audit_equilibrium, parse_dgp, parse_market, MarketFile};
use segmarket_core::market::{MarketConfig, StrategyProfile};
use segmarket_core::panel::{
    did_estimate, generate_panel, placebo_test, DgpSpec, EventFamily, Outcome, PanelDataset,
};
use segmarket_core::solver::{solve, SolverSettings};
use segmarket_core::statics::{
    coexistence_scan, plan, run_planned, scenarios, LibraryRun, COEXISTENCE_GAPS, COEXISTENCE_RATIOS,
};
use segmarket_core::{evaluate, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Domain(_) | Error::Parse(_) | Error::Json(_) | Error::NoOp(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    pythonize::pythonize(py, value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A validated market with its solver settings.
#[pyclass(module = "segmarket", frozen)]
struct Market {
    name: String,
    config: MarketConfig,
    solver: SolverSettings,
}

#[pymethods]
impl Market {
    /// Parses a JSON market config; missing keys take their defaults.
    #[staticmethod]
    #[pyo3(signature = (text, name = "market"))]
    fn from_json(text: &str, name: &str) -> PyResult<Self> {
        let loaded = parse_market(text).map_err(py_err)?;
        Ok(Self {
            name: name.to_string(),
            config: loaded.config,
            solver: loaded.solver,
        })
    }

    /// One of the built-in scenarios.
    #[staticmethod]
    fn scenario(id: &str) -> PyResult<Self> {
        Ok(Self {
            name: id.to_string(),
            config: scenarios::by_id(id).map_err(py_err)?,
            solver: SolverSettings::default(),
        })
    }

    /// The fully explicit config as JSON.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&MarketFile::from_config(&self.config, &self.solver))
            .map_err(|e| py_err(e.into()))
    }

    #[getter]
    fn name(&self) -> &str {
        &self.name
    }

    #[getter]
    fn num_segments(&self) -> usize {
        self.config.num_segments()
    }

    #[getter]
    fn num_intermediaries(&self) -> usize {
        self.config.num_intermediaries()
    }

    fn warnings(&self) -> Vec<String> {
        self.config.warnings()
    }

    /// Outcome of a given strategy profile.
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        branches: Vec<Vec<u32>>,
        concessions: Vec<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let profile = StrategyProfile {
            branches,
            concessions,
        };
        let outcome = evaluate(&self.config, &profile).map_err(py_err)?;
        to_py(py, &outcome)
    }

    /// Iterated best response from the default start, plus the invariant audit
    /// under the `audit` key.
    #[pyo3(signature = (seed = 0))]
    fn solve<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let (eq, audit) = py
            .detach(|| {
                let eq = solve(&self.config, &self.solver, seed)?;
                let audit = audit_equilibrium(&self.config, &eq)?;
                Ok((eq, audit))
            })
            .map_err(py_err)?;
        let out = to_py(py, &eq)?;
        out.set_item("audit", to_py(py, &audit)?)?;
        Ok(out)
    }

    /// Runs the planned experiments of the given kinds (all when empty) and,
    /// with `coexistence`, the efficiency/cost scan.
    #[pyo3(signature = (kinds = Vec::new(), coexistence = true))]
    fn experiments<'py>(
        &self,
        py: Python<'py>,
        kinds: Vec<String>,
        coexistence: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let run = py
            .detach(|| -> segmarket_core::Result<_> {
                let experiments = plan(&self.config, false)
                    .iter()
                    .filter(|t| kinds.is_empty() || kinds.iter().any(|k| k == t.kind().as_str()))
                    .map(|t| run_planned(&self.name, &self.config, t, &self.solver))
                    .collect::<segmarket_core::Result<Vec<_>>>()?;
                let coexistence = if coexistence && self.config.num_intermediaries() >= 2 {
                    vec![coexistence_scan(
                        &self.name,
                        &self.config,
                        &COEXISTENCE_RATIOS,
                        &COEXISTENCE_GAPS,
                        &self.solver,
                    )?]
                } else {
                    Vec::new()
                };
                Ok(LibraryRun {
                    experiments,
                    coexistence,
                })
            })
            .map_err(py_err)?;
        to_py(py, &run)
    }

    /// Names of the experiments planned for this market.
    fn planned(&self) -> Vec<&'static str> {
        plan(&self.config, false).iter().map(|t| t.kind().as_str()).collect()
    }

    /// One planned experiment by kind name.
    fn experiment<'py>(&self, py: Python<'py>, kind: &str) -> PyResult<Bound<'py, PyAny>> {
        let task = plan(&self.config, false)
            .into_iter()
            .find(|t| t.kind().as_str() == kind)
            .ok_or_else(|| PyValueError::new_err(format!("`{kind}` is not planned for this market")))?;
        let report = py
            .detach(|| run_planned(&self.name, &self.config, &task, &self.solver))
            .map_err(py_err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Market({:?}, segments={}, intermediaries={})",
            self.name,
            self.config.num_segments(),
            self.config.num_intermediaries()
        )
    }
}

fn family(name: &str) -> PyResult<EventFamily> {
    match name {
        "entry" => Ok(EventFamily::Entry),
        "consolidation" => Ok(EventFamily::Consolidation),
        other => Err(PyValueError::new_err(format!("unknown event family `{other}`"))),
    }
}

fn outcome(name: &str) -> PyResult<Outcome> {
    match name {
        "log_number" => Ok(Outcome::LogNumber),
        "price_concession" => Ok(Outcome::PriceConcession),
        other => Err(PyValueError::new_err(format!("unknown outcome `{other}`"))),
    }
}

/// A neighbourhood-by-year panel.
#[pyclass(module = "segmarket", frozen)]
struct Panel {
    data: PanelDataset,
}

#[pymethods]
impl Panel {
    /// Simulates a panel. `spec` is a JSON DGP spec or one of the presets
    /// `"entry"`, `"consolidation"`, `"null"`.
    #[staticmethod]
    #[pyo3(signature = (spec = "entry", seed = 0))]
    fn generate(py: Python<'_>, spec: &str, seed: u64) -> PyResult<Self> {
        let spec = match spec {
            "entry" => DgpSpec::entry_calibrated(),
            "consolidation" => DgpSpec::consolidation_calibrated(),
            "null" => DgpSpec::default(),
            text => parse_dgp(text).map_err(py_err)?,
        };
        let data = py.detach(|| generate_panel(&spec, seed)).map_err(py_err)?.panel;
        Ok(Self { data })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self {
            data: PanelDataset::read_csv(text.as_bytes()).map_err(py_err)?,
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.data.write_csv(&mut buf).map_err(py_err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.data.len()
    }

    #[getter]
    fn num_units(&self) -> usize {
        self.data.num_units()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.data == other.data
    }

    /// Event-study and static DID fits for one event family and outcome.
    #[pyo3(signature = (family_name = "entry", outcome_name = "log_number"))]
    fn did<'py>(&self, py: Python<'py>, family_name: &str, outcome_name: &str) -> PyResult<Bound<'py, PyAny>> {
        let (f, o) = (family(family_name)?, outcome(outcome_name)?);
        let est = py.detach(|| did_estimate(&self.data, f, o)).map_err(py_err)?;
        to_py(py, &est)
    }

    /// Static DID re-estimated with event years shuffled across units.
    #[pyo3(signature = (family_name = "entry", reps = 500, seed = 0))]
    fn placebo<'py>(
        &self,
        py: Python<'py>,
        family_name: &str,
        reps: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let f = family(family_name)?;
        let report = py.detach(|| placebo_test(&self.data, f, reps, seed)).map_err(py_err)?;
        to_py(py, &report)
    }
}

#[pyfunction]
fn scenario_ids() -> Vec<&'static str> {
    scenarios::SCENARIO_IDS.to_vec()
}

#[pymodule]
fn segmarket(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Market>()?;
    m.add_class::<Panel>()?;
    m.add_function(wrap_pyfunction!(scenario_ids, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
