//! Experiment configuration: TOML with dotted keys, every key optional
//! except `target.channel`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expectation::{Adjacency, PlanMode};
use crate::oruc_learning::ScheduleMode;
use crate::pauli_learning::PauliMethod;
use crate::spec_file::ChannelFile;
use crate::unitary_learning::{Normalization, UnitaryMethod};

/// A channel file path, resolved against the config's directory, or an
/// inline channel table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetChannel {
    Path(String),
    Inline(ChannelFile),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub channel: Option<TargetChannel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Rates {
    pub pauli: f64,
    pub unitary: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            pauli: 0.5,
            unitary: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PauliSection {
    pub method: String,
    /// Rows per update; 0 measures every row.
    pub batch: usize,
    pub iterations: usize,
}

impl Default for PauliSection {
    fn default() -> Self {
        Self {
            method: "rgd".into(),
            batch: 0,
            iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitarySection {
    pub method: String,
    pub iterations: usize,
    /// Generator weight bound; defaults to the qubit count.
    pub locality: Option<usize>,
    pub plan: String,
    /// Largest plan string weight; defaults to the qubit count.
    pub max_weight: Option<usize>,
    pub adam: bool,
    pub normalization: String,
    /// Qubit graph for plan sampling: "line" or "complete".
    pub adjacency: String,
}

impl Default for UnitarySection {
    fn default() -> Self {
        Self {
            method: "cql".into(),
            iterations: 1000,
            locality: None,
            plan: "independent".into(),
            max_weight: None,
            adam: false,
            normalization: "qubits".into(),
            adjacency: "line".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub mode: String,
    pub unitary_steps: usize,
    pub pauli_steps: usize,
    pub rounds: usize,
    pub epsilon: f64,
    pub warmup: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            mode: "alternating".into(),
            unitary_steps: 3,
            pauli_steps: 1,
            rounds: 100,
            epsilon: 1e-4,
            warmup: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Weight bound of the learned Pauli support; defaults to the qubit count.
    pub max_weight: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparseSection {
    pub layouts: Vec<String>,
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
    /// Mean factor probabilities evaluated for each layout and grid point.
    pub qbar: Vec<f64>,
    /// Set size of the synthetic feasibility grid.
    pub d: usize,
    pub n_a: Vec<f64>,
}

impl Default for SparseSection {
    fn default() -> Self {
        Self {
            layouts: vec!["single_site".into()],
            n_min: 4,
            n_max: 12,
            n_step: 2,
            qbar: vec![
                1.0 / 1024.0,
                1.0 / 512.0,
                1.0 / 256.0,
                1.0 / 128.0,
                1.0 / 64.0,
            ],
            d: 256,
            n_a: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Shots per target expectation; 0 is exact.
    pub shots: usize,
    pub out: String,
    pub dense_limit: usize,
    pub target: TargetSection,
    pub rates: Rates,
    pub pauli: PauliSection,
    pub unitary: UnitarySection,
    pub schedule: ScheduleSection,
    pub model: ModelSection,
    pub sparse: SparseSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            shots: 0,
            out: "out".into(),
            dense_limit: crate::dense::DEFAULT_DENSE_LIMIT,
            target: TargetSection::default(),
            rates: Rates::default(),
            pauli: PauliSection::default(),
            unitary: UnitarySection::default(),
            schedule: ScheduleSection::default(),
            model: ModelSection::default(),
            sparse: SparseSection::default(),
            base_dir: PathBuf::new(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| config_error(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Checks everything that does not need the target; names the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(config_error("seeds must be non-empty"));
        }
        for (key, v) in [
            ("rates.pauli", self.rates.pauli),
            ("rates.unitary", self.rates.unitary),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(format!("{key} must be positive, got {v}")));
            }
        }
        if !(self.schedule.epsilon >= 0.0) {
            return Err(config_error("schedule.epsilon must be nonnegative"));
        }
        if self.sparse.n_step == 0 {
            return Err(config_error("sparse.n_step must be positive"));
        }
        self.pauli_method()?;
        self.unitary_method()?;
        self.plan_mode()?;
        self.normalization()?;
        self.schedule_mode()?;
        self.layouts()?;
        self.adjacency(1)?;
        Ok(())
    }

    fn parsed<T: std::str::FromStr<Err = Error>>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|e: Error| config_error(format!("{key}: {e}")))
    }

    pub fn pauli_method(&self) -> Result<PauliMethod> {
        Self::parsed("pauli.method", &self.pauli.method)
    }

    pub fn unitary_method(&self) -> Result<UnitaryMethod> {
        Self::parsed("unitary.method", &self.unitary.method)
    }

    pub fn plan_mode(&self) -> Result<PlanMode> {
        Self::parsed("unitary.plan", &self.unitary.plan)
    }

    pub fn normalization(&self) -> Result<Normalization> {
        Self::parsed("unitary.normalization", &self.unitary.normalization)
    }

    pub fn schedule_mode(&self) -> Result<ScheduleMode> {
        Self::parsed("schedule.mode", &self.schedule.mode)
    }

    pub fn adjacency(&self, n: usize) -> Result<Adjacency> {
        match self.unitary.adjacency.as_str() {
            "line" => Ok(Adjacency::line(n)),
            "complete" => Ok(Adjacency::complete(n)),
            other => Err(config_error(format!(
                "unitary.adjacency: unknown graph {other:?}"
            ))),
        }
    }

    /// `n_min..=n_max` in steps of `n_step`; empty ranges are rejected.
    pub fn n_range(&self) -> Result<Vec<usize>> {
        let s = &self.sparse;
        if s.n_min > s.n_max {
            return Err(config_error(format!(
                "sparse: empty N range {}..={}",
                s.n_min, s.n_max
            )));
        }
        Ok((s.n_min..=s.n_max).step_by(s.n_step).collect())
    }

    pub fn layouts(&self) -> Result<Vec<crate::sparse::LayoutKind>> {
        self.sparse
            .layouts
            .iter()
            .map(|l| Self::parsed("sparse.layouts", l))
            .collect()
    }

    /// The target channel file, read from disk when given as a path.
    pub fn target_file(&self) -> Result<ChannelFile> {
        match &self.target.channel {
            None => Err(config_error("target.channel required")),
            Some(TargetChannel::Inline(file)) => Ok(file.clone()),
            Some(TargetChannel::Path(p)) => {
                let path = self.base_dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    config_error(format!(
                        "target.channel: cannot read {}: {e}",
                        path.display()
                    ))
                })?;
                ChannelFile::parse(&text).map_err(|e| config_error(format!("target.channel: {e}")))
            }
        }
    }

    /// Fills qubit-dependent defaults so the echo names every value used.
    pub fn materialize(&mut self, n: usize) {
        self.unitary.locality.get_or_insert(n);
        self.unitary.max_weight.get_or_insert(n);
        self.model.max_weight.get_or_insert(n);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}
