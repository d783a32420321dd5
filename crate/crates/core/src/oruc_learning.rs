//! Alternating Pauli / unitary learning of an ORUC `E_U o E_P o E_V`.

use rand::Rng;

use crate::channel::{ChannelSpec, ProbabilityVector, UnitarySpec};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::expectation::TargetOracle;
use crate::pauli::{enumerate_paulis, PauliString};
use crate::pauli_learning::{measure_rows, PauliLearnState, PauliLearner, PauliMethod};
use crate::ptm::{channel_distance, ptm_of_pauli, ptm_of_unitary, PauliTransferMatrix};
use crate::unitary_learning::{
    unitary_loss, PlanSampler, UnitaryLearnState, UnitaryLearner, UnitaryMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    PauliFirst,
    UnitaryFirst,
    Alternating,
}

impl ScheduleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PauliFirst => "pauli_first",
            Self::UnitaryFirst => "unitary_first",
            Self::Alternating => "alternating",
        }
    }
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pauli_first" => Ok(Self::PauliFirst),
            "unitary_first" => Ok(Self::UnitaryFirst),
            "alternating" => Ok(Self::Alternating),
            other => Err(Error::InvalidParameter(format!(
                "unknown schedule mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubStep {
    Unitary,
    Pauli,
}

/// Every mode spends `rounds * (unitary_steps + pauli_steps)` sub-steps, so
/// the three modes are compared at matched budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub unitary_steps: usize,
    pub pauli_steps: usize,
    pub rounds: usize,
    /// Stop once the channel distance falls below this at a round boundary.
    pub epsilon: f64,
    /// Unitary-only sub-steps before the first round. With a sparse learned
    /// support the Pauli step can otherwise lock onto a shifted vector
    /// while the unitaries are still far off.
    pub warmup: usize,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.unitary_steps + self.pauli_steps == 0 {
            return Err(Error::InvalidParameter("schedule has no sub-steps".into()));
        }
        if self.mode == ScheduleMode::Alternating && self.unitary_steps < self.pauli_steps {
            return Err(Error::InvalidParameter(
                "alternating schedule needs unitary_steps >= pauli_steps".into(),
            ));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter(
                "epsilon must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn round_len(&self) -> usize {
        self.unitary_steps + self.pauli_steps
    }

    /// The flat sub-step sequence, warm-up excluded.
    pub fn sequence(&self) -> Vec<SubStep> {
        let (u, p, k) = (self.unitary_steps, self.pauli_steps, self.rounds);
        let rep = |s, c| std::iter::repeat_n(s, c);
        match self.mode {
            ScheduleMode::Alternating => (0..k)
                .flat_map(|_| rep(SubStep::Unitary, u).chain(rep(SubStep::Pauli, p)))
                .collect(),
            ScheduleMode::PauliFirst => rep(SubStep::Pauli, p * k)
                .chain(rep(SubStep::Unitary, u * k))
                .collect(),
            ScheduleMode::UnitaryFirst => rep(SubStep::Unitary, u * k)
                .chain(rep(SubStep::Pauli, p * k))
                .collect(),
        }
    }
}

/// Current ORUC approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct OrucEstimate {
    pub u: DenseMatrix,
    pub p: ProbabilityVector,
    pub v: DenseMatrix,
}

impl OrucEstimate {
    pub fn identity(support: Vec<PauliString>) -> Result<Self> {
        let n = support
            .first()
            .ok_or(Error::Empty("Pauli support"))?
            .num_qubits();
        let mut probs = vec![0.0; support.len()];
        let id =
            support
                .iter()
                .position(PauliString::is_identity)
                .ok_or(Error::InvalidParameter(
                    "Pauli support must contain the identity".into(),
                ))?;
        probs[id] = 1.0;
        Ok(Self {
            u: DenseMatrix::identity(n),
            p: ProbabilityVector::new(support, probs)?,
            v: DenseMatrix::identity(n),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.u.num_qubits()
    }

    pub fn ptm(&self) -> Result<PauliTransferMatrix> {
        ptm_of_unitary(&self.u)
            .compose(&ptm_of_pauli(&self.p))?
            .compose(&ptm_of_unitary(&self.v))
    }

    pub fn to_spec(&self) -> ChannelSpec {
        ChannelSpec::Oruc {
            u: UnitarySpec::Matrix(self.u.clone()),
            p: self.p.clone(),
            v: UnitarySpec::Matrix(self.v.clone()),
        }
    }
}

/// `T_U^T T T_V^T`: the target with the estimated unitaries undone on both
/// sides.
pub fn transformed_pauli_target(
    target: &PauliTransferMatrix,
    est: &OrucEstimate,
) -> Result<PauliTransferMatrix> {
    ptm_of_unitary(&est.u)
        .transpose()
        .compose(target)?
        .compose(&ptm_of_unitary(&est.v).transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySettings {
    pub method: UnitaryMethod,
    pub eta: f64,
    pub generators: Vec<PauliString>,
    pub sampler: PlanSampler,
    pub adam: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliSettings {
    pub method: PauliMethod,
    pub rate: f64,
    /// Rows per update; 0 means every row.
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrucSettings {
    pub schedule: Schedule,
    pub unitary: UnitarySettings,
    pub pauli: PauliSettings,
}

/// State after each round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// `1/2 ||y - S p||^2` against the exact transformed target.
    pub pauli_loss: f64,
    pub unitary_loss: f64,
    pub channel_distance: f64,
    pub target_calls: u64,
    pub trial_calls: u64,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrucRun {
    pub estimate: OrucEstimate,
    /// Entry 0 is the initial estimate.
    pub rounds: Vec<RoundRecord>,
}

impl OrucRun {
    pub fn final_distance(&self) -> f64 {
        self.rounds.last().map_or(f64::NAN, |r| r.channel_distance)
    }
}

fn record(
    oracle: &TargetOracle,
    est: &OrucEstimate,
    learner: &PauliLearner,
    round: usize,
) -> Result<RoundRecord> {
    let trial = est.ptm()?;
    let view = transformed_pauli_target(oracle.ptm(), est)?;
    let rec = RoundRecord {
        round,
        pauli_loss: learner.loss(&learner.exact_rows(&view)),
        unitary_loss: unitary_loss(&trial, oracle.ptm()),
        channel_distance: channel_distance(&trial, oracle.ptm())?,
        target_calls: oracle.counter().target_calls(),
        trial_calls: oracle.counter().trial_calls(),
        probs: est.p.probs().to_vec(),
    };
    if !(rec.pauli_loss.is_finite()
        && rec.unitary_loss.is_finite()
        && rec.channel_distance.is_finite())
    {
        return Err(Error::NonFinite("ORUC losses"));
    }
    Ok(rec)
}

/// Runs the schedule from `init`, recording every round boundary.
pub fn learn_oruc<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    settings: &OrucSettings,
    init: OrucEstimate,
    rng: &mut R,
) -> Result<OrucRun> {
    settings.schedule.validate()?;
    let n = init.num_qubits();
    if oracle.num_qubits() != n {
        return Err(Error::LengthMismatch {
            left: oracle.num_qubits(),
            right: n,
        });
    }
    let mut ustate =
        UnitaryLearnState::new(n, settings.unitary.generators.clone(), settings.unitary.eta)?;
    if settings.unitary.adam {
        ustate = ustate.with_adam();
    }
    ustate.u = init.u.clone();
    ustate.v = init.v.clone();
    let mut ulearner = UnitaryLearner::new(ustate, settings.unitary.method)?;
    let id = DenseMatrix::identity(n);
    if ulearner.ansatz.is_some()
        && (init.u.max_abs_diff(&id) > 0.0 || init.v.max_abs_diff(&id) > 0.0)
    {
        return Err(Error::InvalidParameter(
            "PQC learning starts from identity unitaries".into(),
        ));
    }
    let pstate = PauliLearnState {
        p: crate::pauli_learning::SimplexPoint::new(init.p.probs().to_vec())?,
        support: init.p.support().to_vec(),
        rate: settings.pauli.rate,
        iteration: 0,
    };
    let mut plearner = PauliLearner::new(pstate, settings.pauli.method, settings.pauli.batch)?;
    let mut est = init;
    let mut rounds = vec![record(oracle, &est, &plearner, 0)?];
    if rounds[0].channel_distance < settings.schedule.epsilon {
        return Ok(OrucRun {
            estimate: est,
            rounds,
        });
    }
    let round_len = settings.schedule.round_len();
    let warmup = std::iter::repeat_n(SubStep::Unitary, settings.schedule.warmup);
    for (i, sub) in warmup.chain(settings.schedule.sequence()).enumerate() {
        match sub {
            SubStep::Unitary => {
                let plan = settings.unitary.sampler.sample(rng)?;
                ulearner.step(oracle, &ptm_of_pauli(&est.p), &plan, rng)?;
                est.u = ulearner.state.u.clone();
                est.v = ulearner.state.v.clone();
            }
            SubStep::Pauli => {
                let pre = ptm_of_unitary(&est.v).transpose();
                let post = ptm_of_unitary(&est.u).transpose();
                let mut measure = |rows: &[PauliString], rng: &mut R| {
                    measure_rows(oracle, rows, Some(&pre), Some(&post), rng)
                };
                plearner.step(&mut measure, rng)?;
                est.p = plearner.state.probability_vector()?;
            }
        }
        let Some(done_steps) = (i + 1).checked_sub(settings.schedule.warmup) else {
            continue;
        };
        if done_steps > 0 && done_steps.is_multiple_of(round_len) {
            let rec = record(oracle, &est, &plearner, done_steps / round_len)?;
            let done = rec.channel_distance < settings.schedule.epsilon;
            rounds.push(rec);
            if done {
                break;
            }
        }
    }
    Ok(OrucRun {
        estimate: est,
        rounds,
    })
}

/// Outcome of comparing a learned single-qubit Pauli vector with the
/// target's up to relabelling of `X, Y, Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    /// Smallest per-entry deviation over the six relabellings.
    pub max_deviation: f64,
    pub distance: f64,
}

/// Single-qubit Cliffords act on `(p_X, p_Y, p_Z)` as the full permutation
/// group, so every relabelling is an admissible local equivalence.
pub fn locally_equivalent_solutions_check(
    est: &OrucEstimate,
    target: &ChannelSpec,
) -> Result<EquivalenceReport> {
    if est.num_qubits() != 1 {
        return Err(Error::SingleQubitOnly("locally_equivalent_solutions_check"));
    }
    let tp = match target {
        ChannelSpec::Pauli(p) | ChannelSpec::Oruc { p, .. } => p.to_full_vec(),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "target kind {} has no Pauli vector",
                target.kind()
            )))
        }
    };
    let e = est.p.to_full_vec();
    let t = &tp;
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let max_deviation = PERMS
        .iter()
        .map(|perm| {
            let mut dev = (t[0] - e[0]).abs();
            for (k, &j) in perm.iter().enumerate() {
                dev = dev.max((t[1 + j] - e[1 + k]).abs());
            }
            dev
        })
        .fold(f64::INFINITY, f64::min);
    Ok(EquivalenceReport {
        equivalent: max_deviation <= 0.05,
        max_deviation,
        distance: channel_distance(&est.ptm()?, &crate::ptm::ptm_of(target)?)?,
    })
}

/// The full Pauli set, the default learned support.
pub fn full_support(n: usize) -> Result<Vec<PauliString>> {
    enumerate_paulis(n, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fidelities_from_probs;
    use crate::dense::{exp_pauli_sum, haar_unitary, GeneratorSet};
    use crate::expectation::{Adjacency, PlanMode};
    use crate::pauli_learning::pauli_twirl;
    use crate::ptm::ptm_of;
    use crate::unitary_learning::default_generators;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn rot(label: &str, c: f64) -> DenseMatrix {
        exp_pauli_sum(&GeneratorSet::new(vec![ps(label)], vec![c]).unwrap(), 1.0).unwrap()
    }

    fn fig3_target() -> ChannelSpec {
        ChannelSpec::Oruc {
            u: UnitarySpec::Matrix(rot("X", 0.5)),
            p: ProbabilityVector::full(1, vec![0.6, 0.05, 0.3, 0.05]).unwrap(),
            v: UnitarySpec::Matrix(rot("Z", -0.5)),
        }
    }

    fn settings(mode: ScheduleMode, rounds: usize, pauli: PauliMethod, rate: f64) -> OrucSettings {
        OrucSettings {
            schedule: Schedule {
                mode,
                unitary_steps: 3,
                pauli_steps: 1,
                rounds,
                epsilon: 0.0,
                warmup: 0,
            },
            unitary: UnitarySettings {
                method: UnitaryMethod::Cql,
                eta: 0.1,
                generators: default_generators(1, 1).unwrap(),
                sampler: PlanSampler {
                    mode: PlanMode::Distinct,
                    adjacency: Adjacency::line(1),
                    max_weight: 1,
                },
                adam: false,
            },
            pauli: PauliSettings {
                method: pauli,
                rate,
                batch: 0,
            },
        }
    }

    #[test]
    fn sequences_match_budget() {
        for mode in [
            ScheduleMode::Alternating,
            ScheduleMode::PauliFirst,
            ScheduleMode::UnitaryFirst,
        ] {
            let s = Schedule {
                mode,
                unitary_steps: 3,
                pauli_steps: 1,
                rounds: 4,
                epsilon: 0.0,
                warmup: 0,
            };
            let seq = s.sequence();
            assert_eq!(seq.len(), 16);
            assert_eq!(seq.iter().filter(|x| **x == SubStep::Pauli).count(), 4);
        }
        let alt = Schedule {
            mode: ScheduleMode::Alternating,
            unitary_steps: 3,
            pauli_steps: 1,
            rounds: 2,
            epsilon: 0.0,
            warmup: 0,
        };
        use SubStep::*;
        assert_eq!(
            alt.sequence(),
            vec![Unitary, Unitary, Unitary, Pauli, Unitary, Unitary, Unitary, Pauli]
        );
    }

    #[test]
    fn transformed_target_is_diagonal_at_true_unitaries() {
        let target = ptm_of(&fig3_target()).unwrap();
        let mut est = OrucEstimate::identity(full_support(1).unwrap()).unwrap();
        est.u = rot("X", 0.5);
        est.v = rot("Z", -0.5);
        let view = transformed_pauli_target(&target, &est).unwrap();
        let expect = PauliTransferMatrix::diagonal(1, &[1.0, 0.3, 0.8, 0.3]).unwrap();
        assert!(channel_distance(&view, &expect).unwrap() < 1e-12);
    }

    #[test]
    fn transformed_target_inverts_estimated_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = ptm_of(&ChannelSpec::unitary_matrix(haar_unitary(2, &mut rng))).unwrap();
        let mut est = OrucEstimate::identity(full_support(2).unwrap()).unwrap();
        est.u = haar_unitary(2, &mut rng);
        est.v = haar_unitary(2, &mut rng);
        let view = transformed_pauli_target(&target, &est).unwrap();
        let tu = ptm_of_unitary(&est.u)
            .matrix()
            .clone()
            .try_inverse()
            .unwrap();
        let tv = ptm_of_unitary(&est.v)
            .matrix()
            .clone()
            .try_inverse()
            .unwrap();
        let expect = tu * target.matrix() * tv;
        assert!((view.matrix() - expect).abs().max() < 1e-10);
    }

    #[test]
    fn identity_target_stops_immediately() {
        let oracle = TargetOracle::new(&ChannelSpec::identity(1), 0, 6).unwrap();
        let mut s = settings(ScheduleMode::Alternating, 10, PauliMethod::Rgd, 0.5);
        s.schedule.epsilon = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = learn_oruc(
            &oracle,
            &s,
            OrucEstimate::identity(full_support(1).unwrap()).unwrap(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(run.rounds.len(), 1);
        assert_eq!(run.final_distance(), 0.0);
        assert_eq!(oracle.counter().target_calls(), 0);
    }

    #[test]
    fn pauli_first_round_one_is_the_twirl() {
        let spec = fig3_target();
        let oracle = TargetOracle::new(&spec, 0, 6).unwrap();
        let s = settings(ScheduleMode::PauliFirst, 5, PauliMethod::Lstsq, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = learn_oruc(
            &oracle,
            &s,
            OrucEstimate::identity(full_support(1).unwrap()).unwrap(),
            &mut rng,
        )
        .unwrap();
        let twirl = pauli_twirl(&ptm_of(&spec).unwrap());
        for (a, b) in run.rounds[1].probs.iter().zip(&twirl) {
            assert!((a - b).abs() < 1e-8);
        }
        // the twirl of a unitary-dressed channel differs from the bare Pauli part
        assert!((twirl[2] - 0.3).abs() > 1e-3);
        let f = fidelities_from_probs(&ProbabilityVector::full(1, twirl).unwrap()).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimates_stay_valid_and_alternating_learns_fig3() {
        let spec = fig3_target();
        let oracle = TargetOracle::new(&spec, 0, 6).unwrap();
        let s = settings(ScheduleMode::Alternating, 100, PauliMethod::Rgd, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = learn_oruc(
            &oracle,
            &s,
            OrucEstimate::identity(full_support(1).unwrap()).unwrap(),
            &mut rng,
        )
        .unwrap();
        for r in &run.rounds {
            assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(r.probs.iter().all(|p| *p >= 0.0));
        }
        assert!(run.estimate.u.unitarity_error() < 1e-10);
        assert!(run.final_distance() < 0.1, "{}", run.final_distance());
        assert!(
            locally_equivalent_solutions_check(&run.estimate, &spec)
                .unwrap()
                .equivalent
        );
        assert_eq!(run.rounds.len(), 101);
    }

    #[test]
    fn warmup_runs_before_first_round_without_extra_records() {
        let spec = fig3_target();
        let init = OrucEstimate::identity(full_support(1).unwrap()).unwrap();
        let calls = |warmup: usize| {
            let oracle = TargetOracle::new(&spec, 0, 6).unwrap();
            let mut s = settings(ScheduleMode::Alternating, 2, PauliMethod::Rgd, 0.5);
            s.schedule.warmup = warmup;
            let run =
                learn_oruc(&oracle, &s, init.clone(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
            assert_eq!(run.rounds.len(), 3);
            assert_eq!(run.rounds[0].target_calls, 0);
            run.rounds[1].target_calls
        };
        // one target call per CQL step
        assert_eq!(calls(5), calls(0) + 5);
    }

    #[test]
    fn equivalence_accepts_relabellings_only() {
        let target = fig3_target();
        let mut est = OrucEstimate::identity(full_support(1).unwrap()).unwrap();
        est.p = ProbabilityVector::full(1, vec![0.6, 0.3, 0.05, 0.05]).unwrap();
        assert!(
            locally_equivalent_solutions_check(&est, &target)
                .unwrap()
                .equivalent
        );
        est.p = ProbabilityVector::full(1, vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        assert!(
            !locally_equivalent_solutions_check(&est, &target)
                .unwrap()
                .equivalent
        );
        est.u = rot("X", 0.5);
        est.v = rot("Z", -0.5);
        est.p = ProbabilityVector::full(1, vec![0.6, 0.05, 0.3, 0.05]).unwrap();
        let report = locally_equivalent_solutions_check(&est, &target).unwrap();
        assert!(report.equivalent && report.distance < 1e-12);
        let two = OrucEstimate::identity(full_support(2).unwrap()).unwrap();
        assert!(locally_equivalent_solutions_check(&two, &target).is_err());
    }
}
