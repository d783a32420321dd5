//! PTM elements from exact evaluation or simulated shots, measurement plans,
//! and quantum-call accounting.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::channel::{apply_channel_exact, ChannelSpec};
use crate::dense::{check_dense_limit, pauli_matrix, pauli_trace, DEFAULT_DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString};
use crate::ptm::{ptm_of_with_limit, PauliTransferMatrix};

/// Shared, thread-safe tallies of channel evaluations.
#[derive(Debug, Clone, Default)]
pub struct CallCounter {
    target: Arc<AtomicU64>,
    trial: Arc<AtomicU64>,
}

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn target_calls(&self) -> u64 {
        self.target.load(Ordering::Relaxed)
    }

    pub fn trial_calls(&self) -> u64 {
        self.trial.load(Ordering::Relaxed)
    }

    pub fn add_target(&self, k: u64) {
        self.target.fetch_add(k, Ordering::Relaxed);
    }

    pub fn add_trial(&self, k: u64) {
        self.trial.fetch_add(k, Ordering::Relaxed);
    }
}

/// How the output and input strings of a random plan relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// `beta = alpha`, for Pauli learning.
    Diagonal,
    /// Per-qubit letters of `alpha` and `beta` differ.
    Distinct,
    /// `alpha` and `beta` drawn independently.
    Independent,
}

impl std::str::FromStr for PlanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(Self::Diagonal),
            "distinct" => Ok(Self::Distinct),
            "independent" => Ok(Self::Independent),
            other => Err(Error::InvalidParameter(format!(
                "unknown plan mode {other:?}"
            ))),
        }
    }
}

/// Qubit interaction graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    edges: Vec<Vec<bool>>,
}

impl Adjacency {
    /// Nearest-neighbour line `0 - 1 - ... - (n-1)`.
    pub fn line(n: usize) -> Self {
        let pairs: Vec<(usize, usize)> = (1..n).map(|q| (q - 1, q)).collect();
        Self::from_edges(n, &pairs).expect("in range")
    }

    pub fn complete(n: usize) -> Self {
        Self {
            n,
            edges: vec![vec![true; n]; n],
        }
    }

    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut edges = vec![vec![false; n]; n];
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) outside {n} qubits"
                )));
            }
            edges[a][b] = true;
            edges[b][a] = true;
        }
        Ok(Self { n, edges })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Whether `qubits` induce a connected subgraph.
    pub fn is_connected(&self, qubits: &[usize]) -> bool {
        let Some(&start) = qubits.first() else {
            return true;
        };
        let mut seen = vec![start];
        let mut frontier = vec![start];
        while let Some(q) = frontier.pop() {
            for &r in qubits {
                if !seen.contains(&r) && self.edges[q][r] {
                    seen.push(r);
                    frontier.push(r);
                }
            }
        }
        seen.len() == qubits.len()
    }

    /// Connected qubit subsets of size `1..=max_size`, by size then position.
    pub fn connected_subsets(&self, max_size: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for size in 1..=max_size.min(self.n) {
            combinations(self.n, size, &mut |c| {
                if self.is_connected(c) {
                    out.push(c.to_vec());
                }
            });
        }
        out
    }
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for q in start..n {
            cur.push(q);
            rec(q + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Simultaneously measurable set of PTM elements sharing one output basis
/// `alpha` and one input basis `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    n: usize,
    alpha: PauliString,
    beta: PauliString,
    outputs: Vec<PauliString>,
    inputs: Vec<PauliString>,
    mask: Vec<Vec<bool>>,
}

fn check_full_weight(p: &PauliString) -> Result<()> {
    if p.weight() != p.num_qubits() {
        return Err(Error::NotFullWeight(p.to_string()));
    }
    Ok(())
}

fn is_substring_of(sub: &PauliString, full: &PauliString) -> bool {
    sub.support()
        .iter()
        .all(|&q| sub.letter(q) == full.letter(q))
}

/// Fill identity positions with `Z` so the string has full weight.
pub fn complete_with_z(p: &PauliString) -> PauliString {
    let mut out = p.clone();
    for q in 0..p.num_qubits() {
        if p.letter(q) == Letter::I {
            out.set_letter(q, Letter::Z);
        }
    }
    out
}

impl MeasurementPlan {
    /// A plan with explicit output and input sub-strings, all pairs admitted.
    pub fn from_parts(
        alpha: PauliString,
        beta: PauliString,
        outputs: Vec<PauliString>,
        inputs: Vec<PauliString>,
    ) -> Result<Self> {
        check_full_weight(&alpha)?;
        check_full_weight(&beta)?;
        let n = alpha.num_qubits();
        if beta.num_qubits() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: beta.num_qubits(),
            });
        }
        for (list, full) in [(&outputs, &alpha), (&inputs, &beta)] {
            if list.is_empty() {
                return Err(Error::Empty("plan pair list"));
            }
            if let Some(bad) = list
                .iter()
                .find(|p| p.num_qubits() != n || !is_substring_of(p, full))
            {
                return Err(Error::InvalidParameter(format!(
                    "{bad} is not a sub-string of {full}"
                )));
            }
        }
        let mask = vec![vec![true; inputs.len()]; outputs.len()];
        Ok(Self {
            n,
            alpha,
            beta,
            outputs,
            inputs,
            mask,
        })
    }

    /// One PTM element `(sigma, rho)`; identity letters are measured in `Z`.
    pub fn single(sigma: &PauliString, rho: &PauliString) -> Result<Self> {
        Self::from_parts(
            complete_with_z(sigma),
            complete_with_z(rho),
            vec![sigma.clone()],
            vec![rho.clone()],
        )
    }

    /// Diagonal elements `(s, s)` for each `s` in `rows`, which must share a
    /// common full-weight completion.
    pub fn diagonal(rows: &[PauliString]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("plan rows"))?;
        let mut alpha = first.clone();
        for r in rows {
            for q in r.support() {
                alpha.set_letter(q, r.letter(q));
            }
        }
        let alpha = complete_with_z(&alpha);
        let mut plan = Self::from_parts(alpha.clone(), alpha, rows.to_vec(), rows.to_vec())?;
        for (i, row) in plan.mask.iter_mut().enumerate() {
            for (j, m) in row.iter_mut().enumerate() {
                *m = i == j;
            }
        }
        Ok(plan)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &PauliString {
        &self.alpha
    }

    pub fn beta(&self) -> &PauliString {
        &self.beta
    }

    pub fn outputs(&self) -> &[PauliString] {
        &self.outputs
    }

    pub fn inputs(&self) -> &[PauliString] {
        &self.inputs
    }

    pub fn mask(&self) -> &[Vec<bool>] {
        &self.mask
    }

    pub fn candidate_count(&self) -> usize {
        self.outputs.len() * self.inputs.len()
    }

    /// Pairs `(sigma, rho)` admitted by the connectivity mask, row-major.
    pub fn admitted_pairs(&self) -> Vec<(PauliString, PauliString)> {
        let mut out = Vec::new();
        for (i, s) in self.outputs.iter().enumerate() {
            for (j, r) in self.inputs.iter().enumerate() {
                if self.mask[i][j] {
                    out.push((s.clone(), r.clone()));
                }
            }
        }
        out
    }

    /// Computational-basis input bitstrings, one per prepared state.
    pub fn input_states(&self) -> Vec<usize> {
        (0..1usize << self.n).collect()
    }
}

/// Sub-strings of `alpha` and `beta` on connected qubit sets of size at most
/// `max_weight`; a pair is admitted when the union of its supports is
/// connected and no larger than `max_weight`.
pub fn build_measurement_plan(
    alpha: &PauliString,
    beta: &PauliString,
    adjacency: &Adjacency,
    max_weight: usize,
) -> Result<MeasurementPlan> {
    let n = alpha.num_qubits();
    if adjacency.num_qubits() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: adjacency.num_qubits(),
        });
    }
    if max_weight == 0 {
        return Err(Error::InvalidParameter(
            "max_weight must be at least 1".into(),
        ));
    }
    if max_weight > n {
        return Err(Error::WeightTooLarge { max_weight, n });
    }
    let subsets = adjacency.connected_subsets(max_weight);
    let outputs: Vec<PauliString> = subsets.iter().map(|s| alpha.restrict(s)).collect();
    let inputs: Vec<PauliString> = subsets.iter().map(|s| beta.restrict(s)).collect();
    let mut plan = MeasurementPlan::from_parts(alpha.clone(), beta.clone(), outputs, inputs)?;
    for (i, a) in subsets.iter().enumerate() {
        for (j, b) in subsets.iter().enumerate() {
            let mut union = a.clone();
            union.extend(b.iter().filter(|q| !a.contains(q)));
            plan.mask[i][j] = union.len() <= max_weight && adjacency.is_connected(&union);
        }
    }
    Ok(plan)
}

fn random_letter<R: Rng + ?Sized>(rng: &mut R) -> Letter {
    [Letter::X, Letter::Y, Letter::Z][rng.random_range(0..3)]
}

/// Random full-weight bases for one plan.
pub fn sample_plan<R: Rng + ?Sized>(
    n: usize,
    mode: PlanMode,
    adjacency: &Adjacency,
    max_weight: usize,
    rng: &mut R,
) -> Result<MeasurementPlan> {
    let alpha: Vec<Letter> = (0..n).map(|_| random_letter(rng)).collect();
    let beta: Vec<Letter> = match mode {
        PlanMode::Diagonal => alpha.clone(),
        PlanMode::Independent => (0..n).map(|_| random_letter(rng)).collect(),
        PlanMode::Distinct => alpha
            .iter()
            .map(|a| {
                let others: Vec<Letter> = [Letter::X, Letter::Y, Letter::Z]
                    .into_iter()
                    .filter(|l| l != a)
                    .collect();
                others[rng.random_range(0..2)]
            })
            .collect(),
    };
    let alpha = PauliString::from_letters(&alpha);
    let beta = PauliString::from_letters(&beta);
    let mut plan = build_measurement_plan(&alpha, &beta, adjacency, max_weight.min(n))?;
    if mode == PlanMode::Diagonal {
        for (i, row) in plan.mask.iter_mut().enumerate() {
            for (j, m) in row.iter_mut().enumerate() {
                *m = i == j;
            }
        }
    }
    Ok(plan)
}

/// `sigma = sum_k s(k) |k><k|` for `sigma` over `{I, Z}`, with
/// `s(k) = (-1)^{k . z(sigma)}`; bit `n-1-q` of `k` is qubit `q`.
pub fn pauli_input_decomposition(sigma: &PauliString) -> Result<Vec<(i8, usize)>> {
    if sigma.letters().any(|l| l == Letter::X || l == Letter::Y) {
        return Err(Error::NotDiagonal(sigma.to_string()));
    }
    let (_, z) = sigma.dense_masks();
    Ok((0..1usize << sigma.num_qubits())
        .map(|k| (bit_sign(k & z as usize), k))
        .collect())
}

#[inline]
fn bit_sign(bits: usize) -> i8 {
    if bits.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Dense-index mask of the qubits in the support of `p`.
fn support_mask(p: &PauliString) -> usize {
    let (x, z) = p.dense_masks();
    (x | z) as usize
}

/// `(1/2^n) Tr[sigma E(rho)]` by dense application.
pub fn expectation_exact(
    channel: &ChannelSpec,
    sigma: &PauliString,
    rho: &PauliString,
) -> Result<f64> {
    let n = channel.validate()?;
    check_dense_limit(n, DEFAULT_DENSE_LIMIT)?;
    let out = apply_channel_exact(channel, &pauli_matrix(rho))?;
    Ok(pauli_trace(sigma, &out).re / (1u64 << n) as f64)
}

/// Probability table `p[k][j]` of outcome `j` given prepared state `k`,
/// from the PTM block over sub-strings of the plan's bases.
fn outcome_probabilities(
    block: &dyn Fn(usize, usize) -> f64,
    plan: &MeasurementPlan,
) -> Vec<Vec<f64>> {
    let d = 1usize << plan.n;
    let (ax, az) = plan.alpha.dense_masks();
    let full = (ax | az) as usize;
    let mut probs = vec![vec![0.0; d]; d];
    // sub-strings are indexed by their dense support mask
    let subs: Vec<usize> = (0..d).filter(|m| m & !full == 0).collect();
    for (k, row) in probs.iter_mut().enumerate() {
        for (j, pj) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &ms in &subs {
                for &mt in &subs {
                    let t = block(ms, mt);
                    if t != 0.0 {
                        acc += f64::from(bit_sign(j & ms)) * f64::from(bit_sign(k & mt)) * t;
                    }
                }
            }
            *pj = (acc / d as f64).max(0.0);
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    probs
}

/// Shots per prepared state: even split, remainder to the earliest states.
pub fn shot_allocation(shots_total: usize, states: usize) -> Result<Vec<usize>> {
    if shots_total < states {
        return Err(Error::TooFewShots {
            shots: shots_total,
            states,
        });
    }
    let base = shots_total / states;
    let extra = shots_total % states;
    Ok((0..states).map(|k| base + usize::from(k < extra)).collect())
}

fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Vec<u64> {
    // multinomial as a chain of conditional binomials
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots as u64;
    let mut mass = 1.0;
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j + 1 == probs.len() || mass <= 0.0 {
            counts[j] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q)
            .expect("valid binomial")
            .sample(rng);
        counts[j] = c;
        remaining -= c;
        mass -= p;
    }
    counts
}

/// Unbiased PTM estimates for the admitted pairs from empirical frequencies.
fn estimate_from_counts(plan: &MeasurementPlan, counts: &[Vec<u64>], shots: &[usize]) -> Vec<f64> {
    let d = 1usize << plan.n;
    plan.admitted_pairs()
        .iter()
        .map(|(s, r)| {
            let (ms, mr) = (support_mask(s), support_mask(r));
            let mut acc = 0.0;
            for k in 0..d {
                let sk = f64::from(bit_sign(k & mr));
                let inner: f64 = counts[k]
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| f64::from(bit_sign(j & ms)) * c as f64)
                    .sum();
                acc += sk * inner / shots[k] as f64;
            }
            acc / d as f64
        })
        .collect()
}

/// Shot-based estimates for a plan; the map is keyed by `(sigma, rho)`.
pub fn expectation_sampled<R: Rng + ?Sized>(
    channel: &ChannelSpec,
    plan: &MeasurementPlan,
    shots_total: usize,
    rng: &mut R,
) -> Result<BTreeMap<(PauliString, PauliString), f64>> {
    let oracle = TargetOracle::new(channel, shots_total, DEFAULT_DENSE_LIMIT)?;
    let values = oracle.measure(plan, None, None, rng)?;
    Ok(plan.admitted_pairs().into_iter().zip(values).collect())
}

/// The channel under study. Every `measure` is one target call.
#[derive(Debug, Clone)]
pub struct TargetOracle {
    ptm: PauliTransferMatrix,
    shots: usize,
    counter: CallCounter,
}

impl TargetOracle {
    /// `shots = 0` selects exact expectations.
    pub fn new(channel: &ChannelSpec, shots: usize, dense_limit: usize) -> Result<Self> {
        Ok(Self::from_ptm(
            ptm_of_with_limit(channel, dense_limit)?,
            shots,
        ))
    }

    pub fn from_ptm(ptm: PauliTransferMatrix, shots: usize) -> Self {
        Self {
            ptm,
            shots,
            counter: CallCounter::new(),
        }
    }

    pub fn with_counter(mut self, counter: CallCounter) -> Self {
        self.counter = counter;
        self
    }

    pub fn ptm(&self) -> &PauliTransferMatrix {
        &self.ptm
    }

    pub fn num_qubits(&self) -> usize {
        self.ptm.num_qubits()
    }

    pub fn counter(&self) -> &CallCounter {
        &self.counter
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    /// One PTM element of the target.
    pub fn expectation_exact(&self, sigma: &PauliString, rho: &PauliString) -> f64 {
        self.counter.add_target(1);
        self.ptm.element(sigma, rho)
    }

    /// Estimates of the admitted pairs of `post o target o pre`, where the
    /// optional wrappers are classical pre/post processing channels.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        plan: &MeasurementPlan,
        pre: Option<&PauliTransferMatrix>,
        post: Option<&PauliTransferMatrix>,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let n = self.num_qubits();
        if plan.n != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: plan.n,
            });
        }
        for w in [pre, post].into_iter().flatten() {
            if w.num_qubits() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: w.num_qubits(),
                });
            }
        }
        self.counter.add_target(1);
        let t = self.ptm.matrix();
        let row = |a: usize| -> nalgebra::RowDVector<f64> {
            match post {
                Some(p) => p.matrix().row(a) * t,
                None => t.row(a).into_owned(),
            }
        };
        let entry = |r: &nalgebra::RowDVector<f64>, b: usize| -> f64 {
            match pre {
                Some(p) => (r * p.matrix().column(b))[(0, 0)],
                None => r[b],
            }
        };
        if self.shots == 0 {
            let mut rows: BTreeMap<usize, nalgebra::RowDVector<f64>> = BTreeMap::new();
            return Ok(plan
                .admitted_pairs()
                .iter()
                .map(|(s, r)| {
                    let a = s.index();
                    let rv = rows.entry(a).or_insert_with(|| row(a));
                    entry(rv, r.index())
                })
                .collect());
        }
        let d = 1usize << n;
        let (ax, az) = plan.alpha.dense_masks();
        let (bx, bz) = plan.beta.dense_masks();
        let (afull, bfull) = ((ax | az) as usize, (bx | bz) as usize);
        // PTM index of the sub-string of a basis picked out by a dense mask
        let sub_index = |full: &PauliString, fmask: usize, m: usize| -> usize {
            let qubits: Vec<usize> = (0..n)
                .filter(|q| m & fmask & (1 << (n - 1 - q)) != 0)
                .collect();
            full.restrict(&qubits).index()
        };
        let mut rows: BTreeMap<usize, nalgebra::RowDVector<f64>> = BTreeMap::new();
        let mut cache = vec![vec![f64::NAN; d]; d];
        for ms in 0..d {
            if ms & !afull != 0 {
                continue;
            }
            let a = sub_index(&plan.alpha, afull, ms);
            let rv = rows.entry(a).or_insert_with(|| row(a)).clone();
            for mt in 0..d {
                if mt & !bfull == 0 {
                    cache[ms][mt] = entry(&rv, sub_index(&plan.beta, bfull, mt));
                }
            }
        }
        let probs = outcome_probabilities(&|ms, mt| cache[ms][mt], plan);
        let shots = shot_allocation(self.shots, d)?;
        let counts: Vec<Vec<u64>> = probs
            .iter()
            .zip(&shots)
            .map(|(p, &s)| sample_counts(p, s, rng))
            .collect();
        Ok(estimate_from_counts(plan, &counts, &shots))
    }
}
