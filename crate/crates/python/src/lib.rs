//! Python bindings: Pauli strings, channels with their PTMs, the sparse
//! analysis helpers, and the Pauli and ORUC learners.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oruc::channel::ChannelSpec;
use oruc::expectation::{Adjacency, PlanMode, TargetOracle};
use oruc::oruc_learning::{
    learn_oruc as run_oruc, OrucEstimate, OrucSettings, PauliSettings, Schedule, ScheduleMode,
    UnitarySettings,
};
use oruc::pauli::enumerate_paulis;
use oruc::pauli_learning::{simplex_rgd_run, PauliLearnState, PauliLearner, PauliMethod};
use oruc::sparse::{equivalent_pbar as pbar_of, layout_delta as delta_of, Layout, LayoutKind};
use oruc::spec_file::ChannelFile;
use oruc::unitary_learning::{default_generators, PlanSampler, UnitaryMethod};

fn py_err(e: oruc::Error) -> PyErr {
    match e {
        oruc::Error::NonFinite(_) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = oruc::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// An n-qubit Pauli string such as "XIZ"; qubit 0 is the leftmost letter.
#[pyclass(name = "PauliString", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPauliString(oruc::pauli::PauliString);

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(label: &str) -> PyResult<Self> {
        parse(label).map(Self)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    #[getter]
    fn weight(&self) -> usize {
        self.0.weight()
    }

    fn commutes_with(&self, other: &Self) -> PyResult<bool> {
        self.0.commutes_with(&other.0).map_err(py_err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.0)
    }
}

/// A quantum channel built from a TOML channel file.
#[pyclass(name = "Channel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannel(ChannelSpec);

#[pymethods]
impl PyChannel {
    /// Parses a channel file; Haar entries are drawn from their seeds here.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let file = ChannelFile::parse(text).map_err(py_err)?;
        file.to_spec().map(Self).map_err(py_err)
    }

    /// Pauli channel from a label to probability map.
    #[staticmethod]
    fn pauli(n: usize, probs: Vec<(String, f64)>) -> PyResult<Self> {
        let file = ChannelFile::Pauli {
            n,
            probs: probs.into_iter().collect(),
        };
        file.to_spec().map(Self).map_err(py_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        Ok(ChannelFile::from_spec(&self.0).map_err(py_err)?.to_toml())
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind()
    }

    #[getter]
    fn num_qubits(&self) -> PyResult<usize> {
        self.0.num_qubits().map_err(py_err)
    }

    /// `T[a][b] = Tr[s_a E(s_b)] / 2^n`, rows and columns in `pauli_labels` order.
    fn ptm(&self) -> PyResult<Vec<Vec<f64>>> {
        let t = oruc::ptm::ptm_of(&self.0).map_err(py_err)?;
        let d = t.dim();
        Ok((0..d)
            .map(|a| (0..d).map(|b| t.get(a, b)).collect())
            .collect())
    }

    fn distance(&self, other: &Self) -> PyResult<f64> {
        let a = oruc::ptm::ptm_of(&self.0).map_err(py_err)?;
        let b = oruc::ptm::ptm_of(&other.0).map_err(py_err)?;
        oruc::ptm::channel_distance(&a, &b).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Channel(kind='{}')", self.0.kind())
    }
}

/// All Pauli labels on `n` qubits in PTM order, optionally weight-bounded.
#[pyfunction]
#[pyo3(signature = (n, max_weight=None))]
fn pauli_labels(n: usize, max_weight: Option<usize>) -> PyResult<Vec<String>> {
    Ok(enumerate_paulis(n, max_weight)
        .map_err(py_err)?
        .iter()
        .map(|p| p.to_string())
        .collect())
}

#[pyfunction]
fn fidelities_from_probs(n: usize, probs: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = oruc::channel::ProbabilityVector::full(n, probs).map_err(py_err)?;
    oruc::channel::fidelities_from_probs(&p).map_err(py_err)
}

#[pyfunction]
fn probs_from_fidelities(n: usize, fidelities: Vec<f64>) -> PyResult<Vec<f64>> {
    oruc::channel::probs_from_fidelities(n, &fidelities).map_err(py_err)
}

/// `(d, N_a, N_c, delta)` of a layout's generator set.
#[pyfunction]
fn layout_delta(layout: &str, n: usize) -> PyResult<(usize, f64, f64, f64)> {
    let kind: LayoutKind = parse(layout)?;
    let s = delta_of(&Layout::new(kind, n).map_err(py_err)?).map_err(py_err)?;
    Ok((s.d, s.n_a, s.n_c, s.delta))
}

#[pyfunction]
fn equivalent_pbar(qbar: f64, n_a: f64) -> PyResult<f64> {
    pbar_of(qbar, n_a).map_err(py_err)
}

/// Pauli learning from the identity over the target's full Pauli set;
/// returns the exact loss after every update and the final probabilities.
#[pyfunction]
#[pyo3(signature = (target, method="rgd", rate=0.75, batch=0, iterations=500, shots=0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn learn_pauli(
    py: Python<'_>,
    target: &PyChannel,
    method: &str,
    rate: f64,
    batch: usize,
    iterations: usize,
    shots: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let method: PauliMethod = parse(method)?;
    let spec = target.0.clone();
    py.detach(move || {
        let n = spec.num_qubits()?;
        let oracle = TargetOracle::new(&spec, shots, oruc::dense::DEFAULT_DENSE_LIMIT)?;
        let mut learner = PauliLearner::new(PauliLearnState::full(n, rate)?, method, batch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let losses = simplex_rgd_run(&oracle, &mut learner, iterations, &mut rng)?;
        Ok((losses, learner.state.p.values().to_vec()))
    })
    .map_err(py_err)
}

/// Alternating ORUC learning; returns the per-round channel distances and
/// the final estimate as a channel.
#[pyfunction]
#[pyo3(signature = (
    target, mode="alternating", rounds=100, unitary_steps=3, pauli_steps=1, warmup=0,
    epsilon=1e-4, unitary_rate=0.1, pauli_rate=0.5, pauli_method="rgd", locality=None,
    support_weight=None, shots=0, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn learn_oruc(
    py: Python<'_>,
    target: &PyChannel,
    mode: &str,
    rounds: usize,
    unitary_steps: usize,
    pauli_steps: usize,
    warmup: usize,
    epsilon: f64,
    unitary_rate: f64,
    pauli_rate: f64,
    pauli_method: &str,
    locality: Option<usize>,
    support_weight: Option<usize>,
    shots: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, PyChannel)> {
    let mode: ScheduleMode = parse(mode)?;
    let pauli_method: PauliMethod = parse(pauli_method)?;
    let spec = target.0.clone();
    py.detach(move || {
        let n = spec.num_qubits()?;
        let settings = OrucSettings {
            schedule: Schedule {
                mode,
                unitary_steps,
                pauli_steps,
                rounds,
                epsilon,
                warmup,
            },
            unitary: UnitarySettings {
                method: UnitaryMethod::Cql,
                eta: unitary_rate,
                generators: default_generators(n, locality.unwrap_or(n))?,
                sampler: PlanSampler {
                    mode: PlanMode::Independent,
                    adjacency: Adjacency::line(n),
                    max_weight: n,
                },
                adam: false,
            },
            pauli: PauliSettings {
                method: pauli_method,
                rate: pauli_rate,
                batch: 0,
            },
        };
        let oracle = TargetOracle::new(&spec, shots, oruc::dense::DEFAULT_DENSE_LIMIT)?;
        let init = OrucEstimate::identity(enumerate_paulis(n, support_weight)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let run = run_oruc(&oracle, &settings, init, &mut rng)?;
        let distances = run.rounds.iter().map(|r| r.channel_distance).collect();
        Ok((distances, PyChannel(run.estimate.to_spec())))
    })
    .map_err(py_err)
}

#[pymodule]
fn oruc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(pauli_labels, m)?)?;
    m.add_function(wrap_pyfunction!(fidelities_from_probs, m)?)?;
    m.add_function(wrap_pyfunction!(probs_from_fidelities, m)?)?;
    m.add_function(wrap_pyfunction!(layout_delta, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent_pbar, m)?)?;
    m.add_function(wrap_pyfunction!(learn_pauli, m)?)?;
    m.add_function(wrap_pyfunction!(learn_oruc, m)?)?;
    Ok(())
}
