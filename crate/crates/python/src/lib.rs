//! Python bindings for the X-network simulator.
//!
//! Structured results (reports, curves) cross the boundary as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use xnet_core::analysis::{self, BerCurve, RANK_SEARCH_LIMIT};
use xnet_core::constellation::{Constellation as CoreConstellation, ConstellationKind};
use xnet_core::harness::{self, SimConfig, Suite, VerifyOptions};
use xnet_core::stbc::{self, LinearDispersionCode};
use xnet_core::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::ConfigInvalid(_)
        | Error::UnknownConstellation(_)
        | Error::UnsupportedOrder(_)
        | Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::DimensionMismatch(_)
        | Error::NotAMember(_)
        | Error::BadLabelLength { .. }
        | Error::SearchSpaceTooLarge { .. }
        | Error::InsufficientData(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn code_by_name(name: &str, theta: f64) -> PyResult<LinearDispersionCode> {
    match name {
        "proposed" => Ok(stbc::proposed_3tx_code(theta)),
        "sr" => Ok(stbc::sr_4tx_code(theta)),
        "alamouti" => Ok(stbc::alamouti_code()),
        _ => Err(PyValueError::new_err(format!("unknown code {name:?}"))),
    }
}

fn parse_kind(name: &str) -> PyResult<ConstellationKind> {
    name.parse().map_err(to_py_err)
}

/// Unit-energy Gray-labeled QAM constellation with an optional rotation.
#[pyclass(module = "xnet", frozen)]
struct Constellation {
    inner: CoreConstellation,
}

#[pymethods]
impl Constellation {
    #[new]
    #[pyo3(signature = (kind = "qpsk", phi = 0.0))]
    fn new(kind: &str, phi: f64) -> PyResult<Self> {
        let inner = CoreConstellation::new(parse_kind(kind)?, phi).map_err(to_py_err)?;
        Ok(Constellation { inner })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().name()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi()
    }

    #[getter]
    fn bits_per_symbol(&self) -> usize {
        self.inner.bits_per_symbol()
    }

    fn points(&self) -> Vec<Complex64> {
        self.inner.points().to_vec()
    }

    fn cpd(&self) -> PyResult<f64> {
        self.inner.cpd().map_err(to_py_err)
    }

    fn label_bits(&self, label: usize) -> PyResult<Vec<u8>> {
        if label >= self.inner.len() {
            return Err(PyValueError::new_err(format!("label {label} out of range")));
        }
        Ok(self.inner.label_bits(label))
    }

    fn bits_to_point(&self, bits: Vec<u8>) -> PyResult<Complex64> {
        self.inner.bits_to_point(&bits).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Constellation({:?}, phi={})", self.inner.kind().name(), self.inner.phi())
    }
}

/// Codeword matrix of `code` ("proposed", "sr" or "alamouti") as a list of rows.
#[pyfunction]
#[pyo3(signature = (code, symbols, theta = std::f64::consts::FRAC_PI_4))]
fn encode(code: &str, symbols: Vec<Complex64>, theta: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let x = code_by_name(code, theta)?.encode_matrix(&symbols).map_err(to_py_err)?;
    Ok((0..x.nrows()).map(|r| x.row(r).iter().copied().collect()).collect())
}

#[pyfunction]
#[pyo3(signature = (code, theta = std::f64::consts::FRAC_PI_4))]
fn verify_cancellation(code: &str, theta: f64) -> PyResult<bool> {
    Ok(stbc::verify_column_cancellation(&code_by_name(code, theta)?).passed())
}

#[pyfunction]
#[pyo3(signature = (code = "proposed", constellation = "qpsk", phi = 0.0, theta = std::f64::consts::FRAC_PI_4, limit = RANK_SEARCH_LIMIT))]
fn rank_search<'py>(
    py: Python<'py>,
    code: &str,
    constellation: &str,
    phi: f64,
    theta: f64,
    limit: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let code = code_by_name(code, theta)?;
    let c = CoreConstellation::new(parse_kind(constellation)?, phi).map_err(to_py_err)?;
    let rep = py.detach(|| analysis::rank_search(&code, &c, limit)).map_err(to_py_err)?;
    to_dict(py, &rep)
}

/// Determinants of the effective matrices on the fixed witness channels.
#[pyfunction]
fn certificate(py: Python<'_>, theta: f64) -> PyResult<Bound<'_, PyAny>> {
    to_dict(py, &analysis::certificate_values(theta).map_err(to_py_err)?)
}

/// Runs a BER simulation from a JSON config and returns the curve as a dict.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = SimConfig::from_json(config_json).map_err(to_py_err)?;
    let curve = py.detach(|| harness::run_ber(&cfg)).map_err(to_py_err)?;
    to_dict(py, &curve)
}

/// Same as `simulate` but returns the CSV text.
#[pyfunction]
#[pyo3(signature = (config_json, reference = false))]
fn simulate_csv(py: Python<'_>, config_json: &str, reference: bool) -> PyResult<String> {
    let cfg = SimConfig::from_json(config_json).map_err(to_py_err)?;
    let curve = py.detach(|| harness::run_ber(&cfg)).map_err(to_py_err)?;
    harness::emit_csv(&curve, reference).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (suite, draws = 1000, seed = 0))]
fn verify<'py>(py: Python<'py>, suite: &str, draws: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(to_py_err)?;
    let rep = py.detach(|| harness::run_verify(suite, VerifyOptions { draws, seed })).map_err(to_py_err)?;
    to_dict(py, &rep)
}

/// Diversity slope of the last `tail` points of a BER curve given as CSV text.
#[pyfunction]
#[pyo3(signature = (csv, tail = 3))]
fn diversity_slope(csv: &str, tail: usize) -> PyResult<f64> {
    let curve: BerCurve = harness::parse_csv(csv).map_err(to_py_err)?;
    analysis::diversity_slope(&curve, tail).map_err(to_py_err)
}

#[pyfunction]
fn reference_phi() -> f64 {
    harness::reference_phi()
}

#[pymodule]
fn xnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Constellation>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(verify_cancellation, m)?)?;
    m.add_function(wrap_pyfunction!(rank_search, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_csv, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(diversity_slope, m)?)?;
    m.add_function(wrap_pyfunction!(reference_phi, m)?)?;
    Ok(())
}
