//! Python bindings for the entanglement-swap simulator.
//!
//! Exposes the protocol runner, the raw exchange propagators (closed form
//! and dense cross-check), the closed-form evaluators, sweeps, the timing
//! budget and the self-check battery. Scalar conventions and defaults
//! match the Rust crate and its CLI.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cavity_swap::analysis::{
    self, GridRange, SweepConfig, DEFAULT_BUDGET_FACTOR, DEFAULT_CAVITY_LIFETIME,
    DEFAULT_COUPLING, DEFAULT_RADIATIVE_LIFETIME,
};
use cavity_swap::protocol::{
    self, Encoding, ProtocolParams, ProtocolResult, Variant, DEFAULT_PULSE_AREA,
    READOUT_PULSE_AREA,
};
use cavity_swap::qstate::{StateVector, SubsystemSpec, SystemLayout};
use cavity_swap::{dynamics, verify};

fn value_err(e: cavity_swap::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_variant(name: &str) -> PyResult<Variant> {
    name.parse().map_err(value_err)
}

fn parse_encoding(name: &str) -> PyResult<Encoding> {
    name.parse().map_err(value_err)
}

/// Parameters of one protocol run.
#[pyclass(name = "ProtocolParams", module = "cavity_swap_py", skip_from_py_object)]
#[derive(Clone)]
struct PyProtocolParams {
    inner: ProtocolParams,
}

#[pymethods]
impl PyProtocolParams {
    #[new]
    #[pyo3(signature = (
        b = 0.6,
        k = 0.0,
        gt = DEFAULT_PULSE_AREA,
        variant = "atom",
        encoding = "same-excitation",
        bob_readout = false,
        truncation = 3,
    ))]
    fn new(
        b: f64,
        k: f64,
        gt: f64,
        variant: &str,
        encoding: &str,
        bob_readout: bool,
        truncation: usize,
    ) -> PyResult<Self> {
        let inner = ProtocolParams {
            b,
            k,
            pulse_area: gt,
            variant: parse_variant(variant)?,
            encoding: parse_encoding(encoding)?,
            bob_readout,
            truncation,
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    #[getter]
    fn gt(&self) -> f64 {
        self.inner.pulse_area
    }

    #[getter]
    fn variant(&self) -> String {
        self.inner.variant.to_string()
    }

    #[getter]
    fn encoding(&self) -> String {
        self.inner.encoding.to_string()
    }

    #[getter]
    fn bob_readout(&self) -> bool {
        self.inner.bob_readout
    }

    #[getter]
    fn truncation(&self) -> usize {
        self.inner.truncation
    }

    fn __repr__(&self) -> String {
        format!(
            "ProtocolParams(b={}, k={}, gt={}, variant='{}', encoding='{}', \
             bob_readout={}, truncation={})",
            self.inner.b,
            self.inner.k,
            self.inner.pulse_area,
            self.inner.variant,
            self.inner.encoding,
            if self.inner.bob_readout { "True" } else { "False" },
            self.inner.truncation
        )
    }
}

/// A normalized pure state over labeled atom/cavity subsystems.
#[pyclass(name = "StateVector", module = "cavity_swap_py", skip_from_py_object)]
#[derive(Clone)]
struct PyStateVector {
    inner: StateVector,
}

fn build_layout(subsystems: Vec<(String, String, usize)>) -> PyResult<SystemLayout> {
    let mut specs = Vec::with_capacity(subsystems.len());
    for (kind, label, dim) in subsystems {
        let spec = match kind.as_str() {
            "atom" => {
                if dim != 2 {
                    return Err(PyValueError::new_err(format!(
                        "atom `{label}` must have dimension 2, got {dim}"
                    )));
                }
                SubsystemSpec::atom(label)
            }
            "cavity" => SubsystemSpec::cavity(label, dim).map_err(value_err)?,
            other => {
                return Err(PyValueError::new_err(format!(
                    "subsystem kind must be 'atom' or 'cavity', got '{other}'"
                )))
            }
        };
        specs.push(spec);
    }
    SystemLayout::new(specs).map_err(value_err)
}

#[pymethods]
impl PyStateVector {
    /// Build a state from `[(kind, label, dim), ..]` subsystem specs and a
    /// row-major amplitude list (normalized on entry).
    #[staticmethod]
    fn from_amplitudes(
        subsystems: Vec<(String, String, usize)>,
        amplitudes: Vec<Complex64>,
    ) -> PyResult<Self> {
        let layout = build_layout(subsystems)?;
        StateVector::from_amplitudes(layout, amplitudes)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Build the basis state with the given local indices.
    #[staticmethod]
    fn basis_state(
        subsystems: Vec<(String, String, usize)>,
        locals: Vec<usize>,
    ) -> PyResult<Self> {
        let layout = build_layout(subsystems)?;
        StateVector::basis_state(layout, &locals)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn labels(&self) -> Vec<String> {
        self.inner
            .layout()
            .subsystems()
            .iter()
            .map(|s| s.label().to_string())
            .collect()
    }

    fn dims(&self) -> Vec<usize> {
        self.inner
            .layout()
            .subsystems()
            .iter()
            .map(|s| s.dim())
            .collect()
    }

    /// `(ket name, amplitude)` rows for amplitudes above `threshold`.
    #[pyo3(signature = (threshold = 1e-9))]
    fn ket_table(&self, threshold: f64) -> Vec<(String, Complex64)> {
        self.inner.ket_table(threshold)
    }

    /// Squared overlap with a pure target covering a subset of this
    /// state's subsystems.
    fn fidelity_against(&self, target: &PyStateVector) -> PyResult<f64> {
        self.inner
            .fidelity_against_pure(&target.inner)
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "StateVector(labels={:?}, dim={})",
            self.labels(),
            self.inner.layout().total_dim()
        )
    }
}

/// Everything one protocol run produces.
#[pyclass(name = "SwapResult", module = "cavity_swap_py")]
struct PySwapResult {
    inner: ProtocolResult,
}

#[pymethods]
impl PySwapResult {
    #[getter]
    fn params(&self) -> PyProtocolParams {
        PyProtocolParams {
            inner: self.inner.params.clone(),
        }
    }

    #[getter]
    fn outcome_probability(&self) -> f64 {
        self.inner.outcome_probability
    }

    #[getter]
    fn fidelity(&self) -> f64 {
        self.inner.fidelity
    }

    #[getter]
    fn useful_probability(&self) -> f64 {
        self.inner.useful_probability
    }

    /// `(label, weight, target_overlap)` per branch, heaviest first.
    fn branches(&self) -> Vec<(String, f64, f64)> {
        self.inner
            .branches
            .iter()
            .map(|b| (b.label.clone(), b.weight, b.target_overlap))
            .collect()
    }

    fn post_state(&self) -> PyStateVector {
        PyStateVector {
            inner: self.inner.post_state.clone(),
        }
    }

    fn target_state(&self) -> PyStateVector {
        PyStateVector {
            inner: self.inner.target_state.clone(),
        }
    }

    fn bob_state(&self) -> Option<PyStateVector> {
        self.inner
            .bob_state
            .as_ref()
            .map(|s| PyStateVector { inner: s.clone() })
    }

    fn __repr__(&self) -> String {
        format!(
            "SwapResult(outcome_probability={}, fidelity={}, useful_probability={})",
            self.inner.outcome_probability, self.inner.fidelity, self.inner.useful_probability
        )
    }
}

/// Run the full protocol for the given parameters.
#[pyfunction]
fn run_swap(params: &PyProtocolParams) -> PyResult<PySwapResult> {
    protocol::run_swap(&params.inner)
        .map(|inner| PySwapResult { inner })
        .map_err(value_err)
}

/// Initial four-party product state for the given parameters.
#[pyfunction]
fn prepare_initial(params: &PyProtocolParams) -> PyResult<PyStateVector> {
    protocol::prepare_initial(&params.inner)
        .map(|inner| PyStateVector { inner })
        .map_err(value_err)
}

/// The pure target on (atom 1, cavity 4) for the given parameters.
#[pyfunction]
fn target_state(params: &PyProtocolParams) -> PyResult<PyStateVector> {
    protocol::target_state(&params.inner)
        .map(|inner| PyStateVector { inner })
        .map_err(value_err)
}

/// Exchange a labeled atom and cavity for a pulse of the given area,
/// using the closed-form rotation.
#[pyfunction]
fn jc_propagate(
    state: &PyStateVector,
    atom: &str,
    cavity: &str,
    pulse_area: f64,
) -> PyResult<PyStateVector> {
    dynamics::jc_propagate(&state.inner, &dynamics::JcInteraction::new(atom, cavity, pulse_area))
        .map(|inner| PyStateVector { inner })
        .map_err(value_err)
}

/// Same pulse through an explicit eigendecomposition of the coupling
/// matrix; slower, shares no code with the closed form.
#[pyfunction]
fn jc_propagate_dense(
    state: &PyStateVector,
    atom: &str,
    cavity: &str,
    pulse_area: f64,
) -> PyResult<PyStateVector> {
    dynamics::jc_propagate_dense(
        &state.inner,
        &dynamics::JcInteraction::new(atom, cavity, pulse_area),
    )
    .map(|inner| PyStateVector { inner })
    .map_err(value_err)
}

/// Append a fresh ground-state atom (`bob`) and read cavity 4 out onto it.
#[pyfunction]
#[pyo3(signature = (state, pulse_area = READOUT_PULSE_AREA))]
fn bob_readout(state: &PyStateVector, pulse_area: f64) -> PyResult<PyStateVector> {
    protocol::bob_readout(&state.inner, pulse_area)
        .map(|inner| PyStateVector { inner })
        .map_err(value_err)
}

/// The two-atom Bell state a perfect swap plus readout produces.
#[pyfunction]
fn readout_pair_target() -> PyResult<PyStateVector> {
    protocol::readout_pair_target()
        .map(|inner| PyStateVector { inner })
        .map_err(value_err)
}

/// Matched-pair fidelity closed form.
#[pyfunction]
fn ideal_fidelity(b: f64, gt: f64) -> PyResult<f64> {
    analysis::ideal_fidelity(b, gt).map_err(value_err)
}

/// Mismatched-pair fidelity closed form at a balanced pulse.
#[pyfunction]
fn mismatch_fidelity(b: f64, k: f64, gt: f64) -> PyResult<f64> {
    analysis::mismatch_fidelity(b, k, gt).map_err(value_err)
}

/// Mismatched-pair success probability at a balanced pulse.
#[pyfunction]
fn mismatch_success_probability(b: f64, k: f64) -> PyResult<f64> {
    analysis::mismatch_success_probability(b, k).map_err(value_err)
}

/// Exact post-selected fidelity at any pulse area.
#[pyfunction]
fn exact_fidelity(variant: &str, b: f64, k: f64, gt: f64) -> PyResult<f64> {
    analysis::exact_fidelity(parse_variant(variant)?, b, k, gt).map_err(value_err)
}

/// Exact success probability at any pulse area.
#[pyfunction]
fn exact_success_probability(b: f64, k: f64, gt: f64) -> PyResult<f64> {
    analysis::exact_success_probability(b, k, gt).map_err(value_err)
}

/// A sweep axis: either a single value or a `(start, stop, step)` grid.
#[derive(FromPyObject)]
enum RangeArg {
    Fixed(f64),
    Triple(f64, f64, f64),
}

impl RangeArg {
    fn grid(&self) -> GridRange {
        match *self {
            RangeArg::Fixed(v) => GridRange::fixed(v),
            RangeArg::Triple(start, stop, step) => GridRange::new(start, stop, step),
        }
    }
}

fn record_dict<'py>(
    py: Python<'py>,
    r: &analysis::SweepRecord,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("b", r.b)?;
    d.set_item("k", r.k)?;
    d.set_item("gt", r.gt)?;
    d.set_item("variant", r.variant.to_string())?;
    d.set_item("outcome_probability", r.outcome_probability)?;
    d.set_item("fidelity", r.fidelity)?;
    d.set_item("useful_probability", r.useful_probability)?;
    d.set_item("fidelity_formula", r.fidelity_formula)?;
    d.set_item("probability_formula", r.probability_formula)?;
    d.set_item("abs_deviation", r.abs_deviation)?;
    Ok(d)
}

/// Evaluate a parameter grid; returns one dict per grid point with both
/// simulated and closed-form columns. Defaults reproduce the fidelity
/// curve over b in [0.05, 0.95].
#[pyfunction]
#[pyo3(signature = (
    b = None,
    k = None,
    gt = None,
    variant = "atom",
    encoding = "same-excitation",
    truncation = 3,
))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    b: Option<RangeArg>,
    k: Option<RangeArg>,
    gt: Option<RangeArg>,
    variant: &str,
    encoding: &str,
    truncation: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let defaults = SweepConfig::default();
    let cfg = SweepConfig {
        variant: parse_variant(variant)?,
        encoding: parse_encoding(encoding)?,
        b: b.map_or(defaults.b, |r| r.grid()),
        k: k.map_or(defaults.k, |r| r.grid()),
        gt: gt.map_or(defaults.gt, |r| r.grid()),
        truncation,
    };
    let records = analysis::sweep(&cfg).map_err(value_err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

/// Pulse-time budget against the coherence lifetimes, as a dict.
#[pyfunction]
#[pyo3(signature = (
    coupling = DEFAULT_COUPLING,
    radiative_lifetime = DEFAULT_RADIATIVE_LIFETIME,
    cavity_lifetime = DEFAULT_CAVITY_LIFETIME,
    budget_factor = DEFAULT_BUDGET_FACTOR,
))]
fn timing_budget<'py>(
    py: Python<'py>,
    coupling: f64,
    radiative_lifetime: f64,
    cavity_lifetime: f64,
    budget_factor: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = analysis::timing_budget(coupling, radiative_lifetime, cavity_lifetime, budget_factor)
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("coupling_rad_per_s", t.coupling_rad_per_s)?;
    d.set_item("radiative_lifetime_s", t.radiative_lifetime_s)?;
    d.set_item("cavity_lifetime_s", t.cavity_lifetime_s)?;
    d.set_item("budget_factor", t.budget_factor)?;
    d.set_item("interaction_time_s", t.interaction_time_s)?;
    d.set_item("total_time_s", t.total_time_s)?;
    d.set_item("feasible", t.feasible)?;
    Ok(d)
}

/// Run the self-check battery; returns one dict per check.
#[pyfunction]
#[pyo3(signature = (tolerance = None))]
fn verify_checks<'py>(
    py: Python<'py>,
    tolerance: Option<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let checks = verify::run_checks(tolerance).map_err(value_err)?;
    checks
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("name", &c.name)?;
            d.set_item("deviation", c.deviation)?;
            d.set_item("tolerance", c.tolerance)?;
            d.set_item("pass", c.pass)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn cavity_swap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProtocolParams>()?;
    m.add_class::<PyStateVector>()?;
    m.add_class::<PySwapResult>()?;
    m.add_function(wrap_pyfunction!(run_swap, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_initial, m)?)?;
    m.add_function(wrap_pyfunction!(target_state, m)?)?;
    m.add_function(wrap_pyfunction!(jc_propagate, m)?)?;
    m.add_function(wrap_pyfunction!(jc_propagate_dense, m)?)?;
    m.add_function(wrap_pyfunction!(bob_readout, m)?)?;
    m.add_function(wrap_pyfunction!(readout_pair_target, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(mismatch_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(mismatch_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(exact_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(exact_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(timing_budget, m)?)?;
    m.add_function(wrap_pyfunction!(verify_checks, m)?)?;
    m.add("DEFAULT_PULSE_AREA", DEFAULT_PULSE_AREA)?;
    m.add("READOUT_PULSE_AREA", READOUT_PULSE_AREA)?;
    m.add("DEFAULT_COUPLING", DEFAULT_COUPLING)?;
    Ok(())
}
