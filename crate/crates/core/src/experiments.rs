//! The CLI's experiment drivers. Each command resolves the config, runs
//! every seed on its own thread with its own RNG, and writes CSV files
//! once all seeds have joined.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelSpec;
use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::expectation::TargetOracle;
use crate::oruc_learning::{
    learn_oruc, OrucEstimate, OrucSettings, PauliSettings, Schedule, UnitarySettings,
};
use crate::pauli::{enumerate_paulis, PauliString};
use crate::pauli_learning::{measure_rows, PauliLearnState, PauliLearner};
use crate::ptm::{ptm_of_pauli, ptm_of_with_limit, PauliTransferMatrix};
use crate::sparse::{feasibility_check, layout_delta, Layout, SparseChannelStats};
use crate::spec_file::ChannelFile;
use crate::unitary_learning::{
    default_generators, run_unitary_learning, PlanSampler, UnitaryLearnState, UnitaryLearner,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(Error),
    #[error("io error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) => Self::Numeric(e),
            other => Self::Config(other),
        }
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub shots: Option<usize>,
    /// Forces shots to 0.
    pub exact: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.out = out.to_string_lossy().into_owned();
        }
        if let Some(shots) = self.shots {
            cfg.shots = shots;
        }
        if self.exact {
            cfg.shots = 0;
        }
    }
}

/// Paths of every file a command wrote, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(cfg: &ExperimentConfig) -> RunResult<Self> {
        let dir = PathBuf::from(&cfg.out);
        std::fs::create_dir_all(&dir)
            .map_err(|e| RunError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> RunResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self) -> RunOutput {
        RunOutput { files: self.files }
    }
}

/// Shortest decimal that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new<S: AsRef<str>>(header: &[S]) -> RunResult<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header.iter().map(|h| h.as_ref()))?;
        Ok(Self(w))
    }

    fn row(&mut self, fields: Vec<String>) -> RunResult<()> {
        self.0.write_record(&fields)?;
        Ok(())
    }

    fn bytes(self) -> RunResult<Vec<u8>> {
        self.0.into_inner().map_err(|e| RunError::Io(e.to_string()))
    }
}

/// Loads the config (or the defaults), applies overrides, and validates.
/// The target is resolved later by each command, since `sparse-analysis`
/// does not need one.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> RunResult<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn load_target(cfg: &mut ExperimentConfig) -> RunResult<(ChannelFile, ChannelSpec)> {
    let file = cfg.target_file()?;
    let spec = file.to_spec()?;
    cfg.materialize(file.num_qubits());
    Ok((file, spec))
}

/// Runs `f` for every seed on scoped threads and returns results in seed
/// order; the first error in that order wins.
fn fan_out<T: Send>(seeds: &[u64], f: impl Fn(u64) -> RunResult<T> + Sync) -> RunResult<Vec<T>> {
    let results: Vec<RunResult<T>> = std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = seeds.iter().map(|&seed| s.spawn(move || f(seed))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

fn model_support(cfg: &ExperimentConfig, n: usize) -> RunResult<Vec<PauliString>> {
    Ok(enumerate_paulis(n, cfg.model.max_weight)?)
}

fn label_header(prefix: &[&str], labels: &[PauliString]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain(labels.iter().map(|l| format!("p_{l}")))
        .collect()
}

/// Pauli learning from the identity estimate: one CSV per seed with the
/// exact loss and every probability after each update.
pub fn cmd_learn_pauli(mut cfg: ExperimentConfig) -> RunResult<RunOutput> {
    let (_, spec) = load_target(&mut cfg)?;
    let n = spec.num_qubits()?;
    let support = model_support(&cfg, n)?;
    let method = cfg.pauli_method()?;
    let oracle_ptm = ptm_of_with_limit(&spec, cfg.dense_limit)?;
    let traces = fan_out(&cfg.seeds, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let oracle = TargetOracle::from_ptm(oracle_ptm.clone(), cfg.shots);
        let state = PauliLearnState::identity(support.clone(), cfg.rates.pauli)?;
        let mut learner = PauliLearner::new(state, method, cfg.pauli.batch)?;
        let y = learner.exact_rows(oracle.ptm());
        let mut csv = Csv::new(&label_header(&["iteration", "loss"], &support))?;
        let mut emit = |it: usize, learner: &PauliLearner| -> RunResult<()> {
            let loss = learner.loss(&y);
            if !loss.is_finite() {
                return Err(Error::NonFinite("Pauli loss").into());
            }
            let mut row = vec![it.to_string(), num(loss)];
            row.extend(learner.state.p.values().iter().map(|&v| num(v)));
            csv.row(row)
        };
        emit(0, &learner)?;
        let mut measure = |rows: &[PauliString], rng: &mut ChaCha8Rng| {
            measure_rows(&oracle, rows, None, None, rng)
        };
        for it in 1..=cfg.pauli.iterations {
            learner.step(&mut measure, &mut rng)?;
            emit(it, &learner)?;
        }
        csv.bytes()
    })?;
    let mut out = Writer::new(&cfg)?;
    out.write("learn_pauli.resolved.toml", cfg.to_toml().as_bytes())?;
    for (seed, bytes) in cfg.seeds.iter().zip(traces) {
        out.write(&format!("learn_pauli_seed{seed}.csv"), &bytes)?;
    }
    Ok(out.finish())
}

/// Unitary learning with the target's Pauli part held fixed: the identity
/// for unitary targets, the known `E_P` for ORUC targets.
pub fn cmd_learn_unitary(mut cfg: ExperimentConfig) -> RunResult<RunOutput> {
    let (_, spec) = load_target(&mut cfg)?;
    let n = spec.num_qubits()?;
    let pauli = match &spec {
        ChannelSpec::Unitary(_) => PauliTransferMatrix::identity(n),
        ChannelSpec::Oruc { p, .. } => ptm_of_pauli(p),
        other => {
            return Err(RunError::Config(Error::InvalidParameter(format!(
                "target.channel: learn-unitary needs a unitary or oruc target, got {}",
                other.kind()
            ))))
        }
    };
    let method = cfg.unitary_method()?;
    let normalization = cfg.normalization()?;
    let generators = default_generators(n, cfg.unitary.locality.unwrap_or(n))?;
    let sampler = PlanSampler {
        mode: cfg.plan_mode()?,
        adjacency: cfg.adjacency(n)?,
        max_weight: cfg.unitary.max_weight.unwrap_or(n),
    };
    let oracle_ptm = ptm_of_with_limit(&spec, cfg.dense_limit)?;
    let traces = fan_out(&cfg.seeds, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let oracle = TargetOracle::from_ptm(oracle_ptm.clone(), cfg.shots);
        let mut state = UnitaryLearnState::new(n, generators.clone(), cfg.rates.unitary)?;
        if cfg.unitary.adam {
            state = state.with_adam();
        }
        let mut learner = UnitaryLearner::new(state, method)?;
        let trace = run_unitary_learning(
            &oracle,
            &mut learner,
            &pauli,
            &sampler,
            cfg.unitary.iterations,
            normalization,
            &mut rng,
        )?;
        let loss_col = format!("loss_{}", normalization.as_str());
        let mut csv = Csv::new(&[
            "iteration",
            &loss_col,
            "grad_norm",
            "target_calls",
            "trial_calls",
        ])?;
        for r in trace {
            csv.row(vec![
                r.iteration.to_string(),
                num(r.loss),
                num(r.grad_norm),
                r.target_calls.to_string(),
                r.trial_calls.to_string(),
            ])?;
        }
        csv.bytes()
    })?;
    let mut out = Writer::new(&cfg)?;
    out.write("learn_unitary.resolved.toml", cfg.to_toml().as_bytes())?;
    for (seed, bytes) in cfg.seeds.iter().zip(traces) {
        out.write(&format!("learn_unitary_seed{seed}.csv"), &bytes)?;
    }
    Ok(out.finish())
}

/// Alternating ORUC learning: a per-round CSV and the final estimate as a
/// channel file for each seed.
pub fn cmd_learn_oruc(mut cfg: ExperimentConfig) -> RunResult<RunOutput> {
    let (_, spec) = load_target(&mut cfg)?;
    let n = spec.num_qubits()?;
    let support = model_support(&cfg, n)?;
    let settings = OrucSettings {
        schedule: Schedule {
            mode: cfg.schedule_mode()?,
            unitary_steps: cfg.schedule.unitary_steps,
            pauli_steps: cfg.schedule.pauli_steps,
            rounds: cfg.schedule.rounds,
            epsilon: cfg.schedule.epsilon,
            warmup: cfg.schedule.warmup,
        },
        unitary: UnitarySettings {
            method: cfg.unitary_method()?,
            eta: cfg.rates.unitary,
            generators: default_generators(n, cfg.unitary.locality.unwrap_or(n))?,
            sampler: PlanSampler {
                mode: cfg.plan_mode()?,
                adjacency: cfg.adjacency(n)?,
                max_weight: cfg.unitary.max_weight.unwrap_or(n),
            },
            adam: cfg.unitary.adam,
        },
        pauli: PauliSettings {
            method: cfg.pauli_method()?,
            rate: cfg.rates.pauli,
            batch: cfg.pauli.batch,
        },
    };
    settings.schedule.validate()?;
    let oracle_ptm = ptm_of_with_limit(&spec, cfg.dense_limit)?;
    let header = label_header(
        &[
            "round",
            "pauli_loss",
            "unitary_loss",
            "channel_distance",
            "target_calls",
            "trial_calls",
        ],
        &support,
    );
    let runs = fan_out(&cfg.seeds, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let oracle = TargetOracle::from_ptm(oracle_ptm.clone(), cfg.shots);
        let init = OrucEstimate::identity(support.clone())?;
        let run = learn_oruc(&oracle, &settings, init, &mut rng)?;
        let mut csv = Csv::new(&header)?;
        for r in &run.rounds {
            let mut row = vec![
                r.round.to_string(),
                num(r.pauli_loss),
                num(r.unitary_loss),
                num(r.channel_distance),
                r.target_calls.to_string(),
                r.trial_calls.to_string(),
            ];
            row.extend(r.probs.iter().map(|&v| num(v)));
            csv.row(row)?;
        }
        let final_spec = ChannelFile::from_spec(&run.estimate.to_spec())?.to_toml();
        Ok((csv.bytes()?, final_spec))
    })?;
    let mut out = Writer::new(&cfg)?;
    out.write("learn_oruc.resolved.toml", cfg.to_toml().as_bytes())?;
    for (seed, (bytes, final_spec)) in cfg.seeds.iter().zip(runs) {
        out.write(&format!("learn_oruc_seed{seed}.csv"), &bytes)?;
        out.write(
            &format!("learn_oruc_seed{seed}_final.toml"),
            final_spec.as_bytes(),
        )?;
    }
    Ok(out.finish())
}

fn feasibility_row(
    layout: &str,
    n: Option<usize>,
    stats: &SparseChannelStats,
    qbar: f64,
) -> Vec<String> {
    let r = feasibility_check(qbar, stats);
    vec![
        layout.to_string(),
        n.map(|n| n.to_string()).unwrap_or_default(),
        stats.d.to_string(),
        num(stats.n_a),
        num(stats.delta),
        num(qbar),
        num(r.pbar),
        num(r.pbar_cap_na),
        num(r.pbar_cap_d),
        r.exp_condition_met.to_string(),
        r.feasible().to_string(),
    ]
}

/// Commuting-balance table per layout and qubit count, and the feasibility
/// grid over `qbar` for each layout row plus the synthetic `(d, N_a)` sweep.
/// Pure arithmetic, so seeds are not used.
pub fn cmd_sparse_analysis(cfg: ExperimentConfig) -> RunResult<RunOutput> {
    let ns = cfg.n_range()?;
    let layouts = cfg.layouts()?;
    let mut delta = Csv::new(&["layout", "N", "d", "N_a", "N_c", "delta"])?;
    let mut grid = Csv::new(&[
        "layout",
        "N",
        "d",
        "N_a",
        "delta",
        "qbar",
        "pbar",
        "pbar_cap_na",
        "pbar_cap_d",
        "exp_condition_met",
        "feasible",
    ])?;
    for kind in &layouts {
        for &n in &ns {
            let stats = layout_delta(&Layout::new(*kind, n)?)?;
            delta.row(vec![
                kind.as_str().to_string(),
                n.to_string(),
                stats.d.to_string(),
                num(stats.n_a),
                num(stats.n_c),
                num(stats.delta),
            ])?;
            for &q in &cfg.sparse.qbar {
                grid.row(feasibility_row(kind.as_str(), Some(n), &stats, q))?;
            }
        }
    }
    for &n_a in &cfg.sparse.n_a {
        let stats = SparseChannelStats::from_counts(cfg.sparse.d, n_a);
        for &q in &cfg.sparse.qbar {
            grid.row(feasibility_row("synthetic", None, &stats, q))?;
        }
    }
    let mut out = Writer::new(&cfg)?;
    out.write("sparse_analysis.resolved.toml", cfg.to_toml().as_bytes())?;
    out.write("sparse_delta.csv", &delta.bytes()?)?;
    out.write("sparse_feasibility.csv", &grid.bytes()?)?;
    Ok(out.finish())
}

/// Resolves the target (drawing any Haar entries) and writes it back as an
/// explicit channel file together with its PTM.
pub fn cmd_make_channel(mut cfg: ExperimentConfig) -> RunResult<RunOutput> {
    let (_, spec) = load_target(&mut cfg)?;
    let ptm = ptm_of_with_limit(&spec, cfg.dense_limit)?;
    let labels = enumerate_paulis(ptm.num_qubits(), None)?;
    let mut header = vec!["row".to_string()];
    header.extend(labels.iter().map(|l| l.to_string()));
    let mut csv = Csv::new(&header)?;
    for (a, label) in labels.iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend((0..labels.len()).map(|b| num(ptm.get(a, b))));
        csv.row(row)?;
    }
    let mut out = Writer::new(&cfg)?;
    out.write("make_channel.resolved.toml", cfg.to_toml().as_bytes())?;
    out.write(
        "channel.toml",
        ChannelFile::from_spec(&spec)?.to_toml().as_bytes(),
    )?;
    out.write("channel_ptm.csv", &csv.bytes()?)?;
    Ok(out.finish())
}
