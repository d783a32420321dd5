//! Learning the outer and inner unitaries of an ORUC: contracted quantum
//! learning (CQL), its resolution-of-the-identity variant, and a
//! parameter-shift variational circuit.

use rand::Rng;

use crate::dense::{exp_pauli_sum, DenseMatrix, GeneratorSet};
use crate::error::{Error, Result};
use crate::expectation::{sample_plan, Adjacency, MeasurementPlan, PlanMode, TargetOracle};
use crate::pauli::{commutator_real, enumerate_paulis, PauliString};
use crate::ptm::{ptm_of_unitary, PauliTransferMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitaryMethod {
    Cql,
    RiCql,
    Pqc,
}

impl std::str::FromStr for UnitaryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cql" => Ok(Self::Cql),
            "ri_cql" => Ok(Self::RiCql),
            "pqc" => Ok(Self::Pqc),
            other => Err(Error::InvalidParameter(format!(
                "unknown unitary method {other:?}"
            ))),
        }
    }
}

/// Divisor applied to reported unitary losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    Qubits,
    Generators,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Qubits => "qubits",
            Self::Generators => "generators",
        }
    }

    pub fn divisor(self, n: usize, generators: &[PauliString]) -> f64 {
        match self {
            Self::None => 1.0,
            Self::Qubits => n as f64,
            Self::Generators => generators
                .iter()
                .map(PauliString::weight)
                .max()
                .unwrap_or(1)
                .max(1) as f64,
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "qubits" => Ok(Self::Qubits),
            "generators" => Ok(Self::Generators),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization {other:?}"
            ))),
        }
    }
}

/// All non-identity Paulis of weight at most `locality`.
pub fn default_generators(n: usize, locality: usize) -> Result<Vec<PauliString>> {
    Ok(enumerate_paulis(n, Some(locality.min(n)))?
        .into_iter()
        .filter(|p| !p.is_identity())
        .collect())
}

/// `1/2 ||T_trial - T_target||_F^2 / 4^n`.
pub fn unitary_loss(trial: &PauliTransferMatrix, target: &PauliTransferMatrix) -> f64 {
    0.5 * (trial.matrix() - target.matrix()).norm_squared() / trial.dim() as f64
}

/// Standard Adam moments for a coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// Bias-corrected step direction for an ascent direction `g`.
    pub fn direction(&mut self, g: &[f64]) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        g.iter()
            .enumerate()
            .map(|(i, gi)| {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gi * gi;
                (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps)
            })
            .collect()
    }
}

/// Accumulated outer (`u`) and inner (`v`) unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryLearnState {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub generators: Vec<PauliString>,
    pub eta: f64,
    pub step: usize,
    adam: Option<(Adam, Adam)>,
}

impl UnitaryLearnState {
    pub fn new(n: usize, generators: Vec<PauliString>, eta: f64) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Empty("generator set"));
        }
        if let Some(bad) = generators.iter().find(|g| g.num_qubits() != n) {
            return Err(Error::LengthMismatch {
                left: n,
                right: bad.num_qubits(),
            });
        }
        Ok(Self {
            u: DenseMatrix::identity(n),
            v: DenseMatrix::identity(n),
            generators,
            eta,
            step: 0,
            adam: None,
        })
    }

    /// Switches both coefficient updates to Adam.
    pub fn with_adam(mut self) -> Self {
        let k = self.generators.len();
        self.adam = Some((Adam::new(k), Adam::new(k)));
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.u.num_qubits()
    }

    /// `T_U T_P T_V`.
    pub fn trial_ptm(&self, pauli: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
        ptm_of_unitary(&self.u)
            .compose(pauli)?
            .compose(&ptm_of_unitary(&self.v))
    }

    /// `v <- v exp(i eta sum a_k s_k)` and `u <- exp(i eta sum b_k s_k) u`.
    pub fn apply_update(&mut self, a: &[f64], b: &[f64]) -> Result<()> {
        let (a, b) = match &mut self.adam {
            Some((ma, mb)) => (ma.direction(a), mb.direction(b)),
            None => (a.to_vec(), b.to_vec()),
        };
        let ga = GeneratorSet::new(self.generators.clone(), a)?;
        let gb = GeneratorSet::new(self.generators.clone(), b)?;
        self.v = self.v.mul(&exp_pauli_sum(&ga, self.eta)?)?;
        self.u = exp_pauli_sum(&gb, self.eta)?.mul(&self.u)?;
        self.step += 1;
        Ok(())
    }
}

/// Diagnostics of one unitary update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `1/2 mean (x - y)^2` over the plan's pairs before the update.
    pub plan_loss: f64,
    /// Euclidean norm of the concatenated `(a, b)` coefficients.
    pub grad_norm: f64,
}

/// Derivatives of `x = <<sigma| E |rho>>` with respect to `a_k` (inner side,
/// `E o exp(i a_k s_k)`) and `b_k` (outer side, `exp(i b_k s_k) o E`) at zero.
pub fn cql_gradients_ptm(
    trial: &PauliTransferMatrix,
    sigma: &PauliString,
    rho: &PauliString,
    generators: &[PauliString],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = vec![0.0; generators.len()];
    let mut b = vec![0.0; generators.len()];
    for (k, g) in generators.iter().enumerate() {
        // Tr[s_a E(i[s_k, s_b])]/d with [s_k, s_b] = lambda s_c
        if let Some((c, il)) = commutator_real(g, rho)? {
            a[k] = il * trial.element(sigma, &c);
        }
        // Tr[i[s_a, s_k] E(s_b)]/d with [s_a, s_k] = lambda s_c
        if let Some((c, il)) = commutator_real(sigma, g)? {
            b[k] = il * trial.element(&c, rho);
        }
    }
    Ok((a, b))
}

/// `cql_gradients_ptm` for a channel given by its spec.
pub fn cql_gradients(
    channel: &crate::channel::ChannelSpec,
    sigma: &PauliString,
    rho: &PauliString,
    generators: &[PauliString],
) -> Result<(Vec<f64>, Vec<f64>)> {
    cql_gradients_ptm(&crate::ptm::ptm_of(channel)?, sigma, rho, generators)
}

/// Derivative of `<<sigma| exp(i t s_k) . exp(-i t s_k) |rho>>` at zero,
/// the trial-side gradient of the resolution-of-the-identity losses.
pub fn ri_delta_gradient(
    sigma: &PauliString,
    rho: &PauliString,
    generator: &PauliString,
) -> Result<f64> {
    Ok(match commutator_real(generator, rho)? {
        Some((c, il)) if &c == sigma => il,
        _ => 0.0,
    })
}

fn norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt()
}

fn scale_in_place(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// One CQL update from a single plan: one target call for `y`, one trial
/// call for `x`, and one trial call per generator side with a nonzero
/// commutator.
pub fn cql_step<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    state: &mut UnitaryLearnState,
    pauli: &PauliTransferMatrix,
    plan: &MeasurementPlan,
    rng: &mut R,
) -> Result<StepInfo> {
    let y = oracle.measure(plan, None, None, rng)?;
    let trial = state.trial_ptm(pauli)?;
    oracle.counter().add_trial(1);
    let pairs = plan.admitted_pairs();
    let k = state.generators.len();
    let (mut a, mut b) = (vec![0.0; k], vec![0.0; k]);
    let (mut used_a, mut used_b) = (vec![false; k], vec![false; k]);
    let mut loss = 0.0;
    for ((sigma, rho), yi) in pairs.iter().zip(&y) {
        let x = trial.element(sigma, rho);
        let r = yi - x;
        loss += 0.5 * r * r;
        let (ga, gb) = cql_gradients_ptm(&trial, sigma, rho, &state.generators)?;
        for i in 0..k {
            a[i] += r * ga[i];
            b[i] += r * gb[i];
            used_a[i] |= commutator_real(&state.generators[i], rho)?.is_some();
            used_b[i] |= commutator_real(sigma, &state.generators[i])?.is_some();
        }
    }
    oracle
        .counter()
        .add_trial(used_a.iter().chain(&used_b).filter(|u| **u).count() as u64);
    let m = pairs.len() as f64;
    scale_in_place(&mut a, 1.0 / m);
    scale_in_place(&mut b, 1.0 / m);
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("CQL gradient"));
    }
    state.apply_update(&a, &b)?;
    Ok(StepInfo {
        plan_loss: loss / m,
        grad_norm: norm(&a, &b),
    })
}

/// `T_V^T T_P T_U^T`, the classical wrapper of both modified losses.
fn ri_wrapper(
    state: &UnitaryLearnState,
    pauli: &PauliTransferMatrix,
) -> Result<PauliTransferMatrix> {
    ptm_of_unitary(&state.v)
        .transpose()
        .compose(pauli)?
        .compose(&ptm_of_unitary(&state.u).transpose())
}

/// Residual-weighted RI coefficients for given pair values of the two
/// wrapped targets; trial values are Kronecker deltas.
fn ri_coefficients(
    pairs: &[(PauliString, PauliString)],
    ya: &[f64],
    yb: &[f64],
    generators: &[PauliString],
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let k = generators.len();
    let (mut a, mut b) = (vec![0.0; k], vec![0.0; k]);
    let mut loss = 0.0;
    for (((sigma, rho), ya), yb) in pairs.iter().zip(ya).zip(yb) {
        let x = if sigma == rho { 1.0 } else { 0.0 };
        let (ra, rb) = (ya - x, yb - x);
        loss += 0.25 * (ra * ra + rb * rb);
        for (i, g) in generators.iter().enumerate() {
            let d = ri_delta_gradient(sigma, rho, g)?;
            a[i] += ra * d;
            b[i] += rb * d;
        }
    }
    Ok((a, b, loss))
}

/// One RI-CQL update: exactly two target calls, no trial calls.
pub fn ri_cql_step<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    state: &mut UnitaryLearnState,
    pauli: &PauliTransferMatrix,
    plan: &MeasurementPlan,
    rng: &mut R,
) -> Result<StepInfo> {
    let w = ri_wrapper(state, pauli)?;
    let ya = oracle.measure(plan, None, Some(&w), rng)?;
    let yb = oracle.measure(plan, Some(&w), None, rng)?;
    let pairs = plan.admitted_pairs();
    let (mut a, mut b, loss) = ri_coefficients(&pairs, &ya, &yb, &state.generators)?;
    let m = pairs.len() as f64;
    scale_in_place(&mut a, 1.0 / m);
    scale_in_place(&mut b, 1.0 / m);
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("RI-CQL gradient"));
    }
    state.apply_update(&a, &b)?;
    Ok(StepInfo {
        plan_loss: loss / m,
        grad_norm: norm(&a, &b),
    })
}

/// Gradients of `1/2 sum_{ab} (x_ab - y_ab)^2` over every PTM pair, with
/// respect to `a_k` and `b_k` at zero.
pub fn generic_loss_gradients(
    state: &UnitaryLearnState,
    pauli: &PauliTransferMatrix,
    target: &PauliTransferMatrix,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let trial = state.trial_ptm(pauli)?;
    let paulis = enumerate_paulis(state.num_qubits(), None)?;
    let k = state.generators.len();
    let (mut a, mut b) = (vec![0.0; k], vec![0.0; k]);
    for sigma in &paulis {
        for rho in &paulis {
            let r = trial.element(sigma, rho) - target.element(sigma, rho);
            if r == 0.0 {
                continue;
            }
            let (ga, gb) = cql_gradients_ptm(&trial, sigma, rho, &state.generators)?;
            for i in 0..k {
                a[i] += r * ga[i];
                b[i] += r * gb[i];
            }
        }
    }
    Ok((a, b))
}

/// Gradients of the modified losses `1/2 sum (delta - y^A)^2` and
/// `1/2 sum (delta - y^B)^2` over every pair.
pub fn ri_loss_gradients(
    state: &UnitaryLearnState,
    pauli: &PauliTransferMatrix,
    target: &PauliTransferMatrix,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = ri_wrapper(state, pauli)?;
    let ma = w.compose(target)?;
    let mb = target.compose(&w)?;
    let paulis = enumerate_paulis(state.num_qubits(), None)?;
    let mut pairs = Vec::new();
    let (mut ya, mut yb) = (Vec::new(), Vec::new());
    for sigma in &paulis {
        for rho in &paulis {
            ya.push(ma.element(sigma, rho));
            yb.push(mb.element(sigma, rho));
            pairs.push((sigma.clone(), rho.clone()));
        }
    }
    let (a, b, _) = ri_coefficients(&pairs, &ya, &yb, &state.generators)?;
    // coefficients are descent directions; gradients have the opposite sign
    Ok((
        a.iter().map(|v| -v).collect(),
        b.iter().map(|v| -v).collect(),
    ))
}

/// `1/2 ||I - T_V^T T_P T_U^T T_F||_F^2`, the full-pair inner-side loss.
pub fn ri_loss_a(
    state: &UnitaryLearnState,
    pauli: &PauliTransferMatrix,
    target: &PauliTransferMatrix,
) -> Result<f64> {
    let m = ri_wrapper(state, pauli)?.compose(target)?;
    let id = PauliTransferMatrix::identity(state.num_qubits());
    Ok(0.5 * (id.matrix() - m.matrix()).norm_squared())
}

/// Rotation sequence `prod_i exp(-i theta_i P_i / 2)` on the output side and
/// likewise on the input side; gate 0 acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct PQCAnsatz {
    pub output_gates: Vec<PauliString>,
    pub theta: Vec<f64>,
    pub input_gates: Vec<PauliString>,
    pub phi: Vec<f64>,
}

impl PQCAnsatz {
    pub fn new(output_gates: Vec<PauliString>, input_gates: Vec<PauliString>) -> Result<Self> {
        let first = output_gates
            .first()
            .or(input_gates.first())
            .ok_or(Error::Empty("ansatz"))?;
        let n = first.num_qubits();
        for g in output_gates.iter().chain(&input_gates) {
            if g.num_qubits() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: g.num_qubits(),
                });
            }
            if g.is_identity() {
                return Err(Error::InvalidParameter(
                    "identity rotation has no shift rule".into(),
                ));
            }
        }
        Ok(Self {
            theta: vec![0.0; output_gates.len()],
            phi: vec![0.0; input_gates.len()],
            output_gates,
            input_gates,
        })
    }

    /// Every non-identity Pauli on both sides: `2 (4^n - 1)` parameters.
    pub fn global(n: usize) -> Result<Self> {
        let g = default_generators(n, n)?;
        Self::new(g.clone(), g)
    }

    pub fn num_qubits(&self) -> usize {
        self.output_gates
            .first()
            .unwrap_or_else(|| &self.input_gates[0])
            .num_qubits()
    }

    pub fn parameter_count(&self) -> usize {
        self.theta.len() + self.phi.len()
    }

    fn sequence(n: usize, gates: &[PauliString], angles: &[f64]) -> Result<DenseMatrix> {
        let mut acc = DenseMatrix::identity(n);
        for (g, t) in gates.iter().zip(angles) {
            let rot = exp_pauli_sum(&GeneratorSet::new(vec![g.clone()], vec![-0.5 * t])?, 1.0)?;
            acc = rot.mul(&acc)?;
        }
        Ok(acc)
    }

    pub fn output_unitary(&self) -> Result<DenseMatrix> {
        Self::sequence(self.num_qubits(), &self.output_gates, &self.theta)
    }

    pub fn input_unitary(&self) -> Result<DenseMatrix> {
        Self::sequence(self.num_qubits(), &self.input_gates, &self.phi)
    }

    pub fn trial_ptm(&self, pauli: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
        ptm_of_unitary(&self.output_unitary()?)
            .compose(pauli)?
            .compose(&ptm_of_unitary(&self.input_unitary()?))
    }

    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut s = self.clone();
        if index < s.theta.len() {
            s.theta[index] += delta;
        } else {
            s.phi[index - s.theta.len()] += delta;
        }
        s
    }
}

/// Parameter-shift gradient of `sum_a (1/m) 1/2 (x_a - y_a)^2` over the
/// pairs, ordered `theta` then `phi`; two trial calls per parameter.
pub fn pqc_gradient(
    ansatz: &PQCAnsatz,
    pauli: &PauliTransferMatrix,
    pairs: &[(PauliString, PauliString)],
    y: &[f64],
    counter: &crate::expectation::CallCounter,
) -> Result<Vec<f64>> {
    if pairs.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: pairs.len(),
            right: y.len(),
        });
    }
    let trial = ansatz.trial_ptm(pauli)?;
    let m = pairs.len() as f64;
    let residual: Vec<f64> = pairs
        .iter()
        .zip(y)
        .map(|((s, r), yi)| (trial.element(s, r) - yi) / m)
        .collect();
    let half_pi = std::f64::consts::FRAC_PI_2;
    (0..ansatz.parameter_count())
        .map(|i| {
            let plus = ansatz.shifted(i, half_pi).trial_ptm(pauli)?;
            let minus = ansatz.shifted(i, -half_pi).trial_ptm(pauli)?;
            counter.add_trial(2);
            Ok(pairs
                .iter()
                .zip(&residual)
                .map(|((s, r), res)| res * 0.5 * (plus.element(s, r) - minus.element(s, r)))
                .sum())
        })
        .collect()
}

/// One PQC gradient-descent update from a single plan.
pub fn pqc_step<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    ansatz: &mut PQCAnsatz,
    pauli: &PauliTransferMatrix,
    plan: &MeasurementPlan,
    eta: f64,
    rng: &mut R,
) -> Result<StepInfo> {
    let y = oracle.measure(plan, None, None, rng)?;
    let pairs = plan.admitted_pairs();
    let trial = ansatz.trial_ptm(pauli)?;
    oracle.counter().add_trial(1);
    let loss = pairs
        .iter()
        .zip(&y)
        .map(|((s, r), yi)| 0.5 * (trial.element(s, r) - yi).powi(2))
        .sum::<f64>()
        / pairs.len() as f64;
    let g = pqc_gradient(ansatz, pauli, &pairs, &y, oracle.counter())?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PQC gradient"));
    }
    let nt = ansatz.theta.len();
    for (i, gi) in g.iter().enumerate() {
        if i < nt {
            ansatz.theta[i] -= eta * gi;
        } else {
            ansatz.phi[i - nt] -= eta * gi;
        }
    }
    Ok(StepInfo {
        plan_loss: loss,
        grad_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
    })
}

/// One of the three unitary strategies behind a common step interface.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryLearner {
    pub state: UnitaryLearnState,
    pub method: UnitaryMethod,
    /// Present for `Pqc`; rotations use the state's generators on both sides.
    pub ansatz: Option<PQCAnsatz>,
}

impl UnitaryLearner {
    pub fn new(state: UnitaryLearnState, method: UnitaryMethod) -> Result<Self> {
        let ansatz = match method {
            UnitaryMethod::Pqc => Some(PQCAnsatz::new(
                state.generators.clone(),
                state.generators.clone(),
            )?),
            _ => None,
        };
        Ok(Self {
            state,
            method,
            ansatz,
        })
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        oracle: &TargetOracle,
        pauli: &PauliTransferMatrix,
        plan: &MeasurementPlan,
        rng: &mut R,
    ) -> Result<StepInfo> {
        match (self.method, &mut self.ansatz) {
            (UnitaryMethod::Cql, _) => cql_step(oracle, &mut self.state, pauli, plan, rng),
            (UnitaryMethod::RiCql, _) => ri_cql_step(oracle, &mut self.state, pauli, plan, rng),
            (UnitaryMethod::Pqc, Some(ansatz)) => {
                let info = pqc_step(oracle, ansatz, pauli, plan, self.state.eta, rng)?;
                self.state.u = ansatz.output_unitary()?;
                self.state.v = ansatz.input_unitary()?;
                self.state.step += 1;
                Ok(info)
            }
            (UnitaryMethod::Pqc, None) => {
                Err(Error::InvalidParameter("PQC learner without ansatz".into()))
            }
        }
    }
}

/// Plan sampling for unitary updates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSampler {
    pub mode: PlanMode,
    pub adjacency: Adjacency,
    pub max_weight: usize,
}

impl PlanSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MeasurementPlan> {
        sample_plan(
            self.adjacency.num_qubits(),
            self.mode,
            &self.adjacency,
            self.max_weight,
            rng,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryTraceRow {
    pub iteration: usize,
    /// Normalized `unitary_loss` against the oracle's exact PTM.
    pub loss: f64,
    pub grad_norm: f64,
    pub target_calls: u64,
    pub trial_calls: u64,
}

/// Runs `iterations` updates with a fixed Pauli part; row 0 is the initial
/// state, with zero gradient norm.
pub fn run_unitary_learning<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    learner: &mut UnitaryLearner,
    pauli: &PauliTransferMatrix,
    sampler: &PlanSampler,
    iterations: usize,
    normalization: Normalization,
    rng: &mut R,
) -> Result<Vec<UnitaryTraceRow>> {
    let divisor = normalization.divisor(learner.state.num_qubits(), &learner.state.generators);
    let row =
        |learner: &UnitaryLearner, iteration: usize, grad_norm: f64| -> Result<UnitaryTraceRow> {
            let loss = unitary_loss(&learner.state.trial_ptm(pauli)?, oracle.ptm()) / divisor;
            if !loss.is_finite() {
                return Err(Error::NonFinite("unitary loss"));
            }
            Ok(UnitaryTraceRow {
                iteration,
                loss,
                grad_norm,
                target_calls: oracle.counter().target_calls(),
                trial_calls: oracle.counter().trial_calls(),
            })
        };
    let mut trace = vec![row(learner, 0, 0.0)?];
    for it in 1..=iterations {
        let plan = sampler.sample(rng)?;
        let info = learner.step(oracle, pauli, &plan, rng)?;
        trace.push(row(learner, it, info.grad_norm)?);
    }
    Ok(trace)
}
