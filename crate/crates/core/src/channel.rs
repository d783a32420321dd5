//! Channel families and their exact or Monte-Carlo action on density matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::dense::{
    apply_unitary_channel, exp_pauli_sum, pauli_conjugate, pauli_matrix, DenseMatrix, GeneratorSet,
    C64,
};
use crate::error::{Error, Result};
use crate::pauli::{enumerate_paulis, PauliString};

const PROB_TOL: f64 = 1e-12;

/// Convex weights over a support of distinct labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<L = PauliString> {
    support: Vec<L>,
    probs: Vec<f64>,
}

impl<L: PartialEq + std::fmt::Debug> ProbabilityVector<L> {
    pub fn new(support: Vec<L>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                left: support.len(),
                right: probs.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidProbabilities(format!(
                "entry {bad} is not a probability"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "entries sum to {total}"
            )));
        }
        for (i, a) in support.iter().enumerate() {
            if support[..i].contains(a) {
                return Err(Error::InvalidProbabilities(format!(
                    "duplicate support entry {a:?}"
                )));
            }
        }
        Ok(Self { support, probs })
    }

    pub fn support(&self) -> &[L] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&L, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    pub fn get(&self, label: &L) -> f64 {
        self.support
            .iter()
            .position(|s| s == label)
            .map_or(0.0, |i| self.probs[i])
    }
}

impl ProbabilityVector<PauliString> {
    /// Point mass on the identity.
    pub fn identity(n: usize) -> Self {
        Self {
            support: vec![PauliString::identity(n)],
            probs: vec![1.0],
        }
    }

    /// Full-support vector in canonical order.
    pub fn full(n: usize, probs: Vec<f64>) -> Result<Self> {
        Self::new(enumerate_paulis(n, None)?, probs)
    }

    pub fn num_qubits(&self) -> usize {
        self.support[0].num_qubits()
    }

    fn check_qubits(&self) -> Result<usize> {
        let n = self.num_qubits();
        if let Some(bad) = self.support.iter().find(|p| p.num_qubits() != n) {
            return Err(Error::LengthMismatch {
                left: n,
                right: bad.num_qubits(),
            });
        }
        Ok(n)
    }

    /// Dense vector over all `4^n` Paulis in canonical order.
    pub fn to_full_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1usize << (2 * self.num_qubits())];
        for (p, v) in self.iter() {
            out[p.index()] = v;
        }
        out
    }

    /// Canonical completion: full support, zeros filled in.
    pub fn to_full(&self) -> Self {
        let n = self.num_qubits();
        Self {
            support: enumerate_paulis(n, None).expect("n >= 1"),
            probs: self.to_full_vec(),
        }
    }

    pub fn is_full_canonical(&self) -> bool {
        let n = self.num_qubits();
        self.len() == 1usize << (2 * n)
            && self.support.iter().enumerate().all(|(i, p)| p.index() == i)
    }
}

/// Index of the shift-and-multiply matrix `W_{kj}` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeylIndex {
    pub d: usize,
    pub k: usize,
    pub j: usize,
}

impl WeylIndex {
    pub fn new(d: usize, k: usize, j: usize) -> Result<Self> {
        if d == 0 || k >= d || j >= d {
            return Err(Error::InvalidParameter(format!(
                "Weyl index ({k},{j}) outside dimension {d}"
            )));
        }
        Ok(Self { d, k, j })
    }

    /// Index of a matrix proportional to `W_{kj}^dagger`.
    pub fn adjoint(&self) -> Self {
        Self {
            d: self.d,
            k: (self.d - self.k) % self.d,
            j: (self.d - self.j) % self.d,
        }
    }
}

/// `W_{kj} = sum_m e^{2 pi i k m / d} |m + j><m|`.
pub fn weyl_matrix(idx: WeylIndex) -> Result<DenseMatrix> {
    let d = idx.d;
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        m[((col + idx.j) % d, col)] =
            C64::from_polar(1.0, 2.0 * PI * (idx.k * col) as f64 / d as f64);
    }
    DenseMatrix::new(m)
}

/// A unitary given either explicitly or as `exp(i sum_k c_k sigma_k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitarySpec {
    Matrix(DenseMatrix),
    Generators(GeneratorSet),
}

impl UnitarySpec {
    pub fn identity(n: usize) -> Self {
        Self::Matrix(DenseMatrix::identity(n))
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Self::Matrix(m) => m.num_qubits(),
            Self::Generators(g) => g.num_qubits(),
        }
    }

    pub fn matrix(&self) -> Result<DenseMatrix> {
        match self {
            Self::Matrix(m) => Ok(m.clone()),
            Self::Generators(g) => exp_pauli_sum(g, 1.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Matrix(m) => Self::Matrix(m.adjoint()),
            Self::Generators(g) => Self::Generators(
                GeneratorSet::new(
                    g.paulis().to_vec(),
                    g.coefficients().iter().map(|c| -c).collect(),
                )
                .expect("same shape"),
            ),
        }
    }
}

/// Every channel family the toolkit simulates.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Pauli(ProbabilityVector),
    Unitary(UnitarySpec),
    /// `rho -> sum_i p_i U sigma_i V rho V^dag sigma_i U^dag`.
    Oruc {
        u: UnitarySpec,
        p: ProbabilityVector,
        v: UnitarySpec,
    },
    /// Weyl channel in dimension `d = 2^n`.
    Weyl {
        n: usize,
        probs: ProbabilityVector<WeylIndex>,
    },
    /// Random unitary channel with arbitrary (not necessarily orthogonal) unitaries.
    GeneralRuc {
        weights: Vec<f64>,
        unitaries: Vec<DenseMatrix>,
    },
    /// Single convex combination over a weight-limited Pauli set.
    SparseAdditive(ProbabilityVector),
    /// Composition of factors `rho -> (1 - q) rho + q P rho P`.
    SparseMultiplicative {
        n: usize,
        factors: Vec<(f64, PauliString)>,
    },
    /// `[A, B, C]` is `A o B o C`: the last element acts first.
    Composition(Vec<ChannelSpec>),
}

impl ChannelSpec {
    pub fn identity(n: usize) -> Self {
        Self::Pauli(ProbabilityVector::identity(n))
    }

    pub fn unitary_matrix(u: DenseMatrix) -> Self {
        Self::Unitary(UnitarySpec::Matrix(u))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Pauli(_) => "pauli",
            Self::Unitary(_) => "unitary",
            Self::Oruc { .. } => "oruc",
            Self::Weyl { .. } => "weyl",
            Self::GeneralRuc { .. } => "general_ruc",
            Self::SparseAdditive(_) => "sparse_additive",
            Self::SparseMultiplicative { .. } => "sparse_multiplicative",
            Self::Composition(_) => "composition",
        }
    }

    /// Checks every embedded invariant and returns the qubit count.
    pub fn validate(&self) -> Result<usize> {
        match self {
            Self::Pauli(p) | Self::SparseAdditive(p) => p.check_qubits(),
            Self::Unitary(u) => Ok(u.num_qubits()),
            Self::Oruc { u, p, v } => {
                let n = p.check_qubits()?;
                for m in [u.num_qubits(), v.num_qubits()] {
                    if m != n {
                        return Err(Error::LengthMismatch { left: n, right: m });
                    }
                }
                Ok(n)
            }
            Self::Weyl { n, probs } => {
                let d = 1usize << n;
                if let Some(bad) = probs.support().iter().find(|w| w.d != d) {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: bad.d,
                    });
                }
                Ok(*n)
            }
            Self::GeneralRuc { weights, unitaries } => {
                ProbabilityVector::new((0..weights.len()).collect(), weights.clone())?;
                if weights.len() != unitaries.len() {
                    return Err(Error::DimensionMismatch {
                        left: weights.len(),
                        right: unitaries.len(),
                    });
                }
                let n = unitaries[0].num_qubits();
                if let Some(bad) = unitaries.iter().find(|u| u.num_qubits() != n) {
                    return Err(Error::LengthMismatch {
                        left: n,
                        right: bad.num_qubits(),
                    });
                }
                Ok(n)
            }
            Self::SparseMultiplicative { n, factors } => {
                for (q, p) in factors {
                    if !(0.0..=1.0).contains(q) {
                        return Err(Error::InvalidProbabilities(format!(
                            "factor rate {q} outside [0, 1]"
                        )));
                    }
                    if p.num_qubits() != *n {
                        return Err(Error::LengthMismatch {
                            left: *n,
                            right: p.num_qubits(),
                        });
                    }
                }
                Ok(*n)
            }
            Self::Composition(parts) => {
                let first = parts
                    .first()
                    .ok_or(Error::Empty("composition"))?
                    .validate()?;
                for part in &parts[1..] {
                    let m = part.validate()?;
                    if m != first {
                        return Err(Error::LengthMismatch {
                            left: first,
                            right: m,
                        });
                    }
                }
                Ok(first)
            }
        }
    }

    pub fn num_qubits(&self) -> Result<usize> {
        self.validate()
    }

    /// The adjoint channel; its PTM is the transpose of this channel's PTM.
    pub fn adjoint(&self) -> Self {
        match self {
            Self::Pauli(_) | Self::SparseAdditive(_) | Self::SparseMultiplicative { .. } => {
                self.clone()
            }
            Self::Unitary(u) => Self::Unitary(u.adjoint()),
            Self::Oruc { u, p, v } => Self::Oruc {
                u: v.adjoint(),
                p: p.clone(),
                v: u.adjoint(),
            },
            Self::Weyl { n, probs } => Self::Weyl {
                n: *n,
                probs: ProbabilityVector {
                    support: probs.support().iter().map(WeylIndex::adjoint).collect(),
                    probs: probs.probs().to_vec(),
                },
            },
            Self::GeneralRuc { weights, unitaries } => Self::GeneralRuc {
                weights: weights.clone(),
                unitaries: unitaries.iter().map(DenseMatrix::adjoint).collect(),
            },
            Self::Composition(parts) => {
                Self::Composition(parts.iter().rev().map(Self::adjoint).collect())
            }
        }
    }
}

pub fn adjoint_channel(spec: &ChannelSpec) -> ChannelSpec {
    spec.adjoint()
}

fn pauli_mix(p: &ProbabilityVector, rho: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(rho.num_qubits());
    for (s, w) in p.iter() {
        if w != 0.0 {
            out = out
                .add(&pauli_conjugate(s, rho).scale(C64::new(w, 0.0)))
                .expect("same dim");
        }
    }
    out
}

fn unitary_mix(
    weights: &[f64],
    unitaries: &[DenseMatrix],
    rho: &DenseMatrix,
) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(rho.num_qubits());
    for (w, u) in weights.iter().zip(unitaries) {
        if *w != 0.0 {
            out = out.add(&apply_unitary_channel(u, rho)?.scale(C64::new(*w, 0.0)))?;
        }
    }
    Ok(out)
}

fn weyl_unitaries(probs: &ProbabilityVector<WeylIndex>) -> Result<Vec<DenseMatrix>> {
    probs.support().iter().map(|w| weyl_matrix(*w)).collect()
}

/// Exact channel output.
pub fn apply_channel_exact(spec: &ChannelSpec, rho: &DenseMatrix) -> Result<DenseMatrix> {
    let n = spec.validate()?;
    if rho.num_qubits() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: rho.num_qubits(),
        });
    }
    match spec {
        ChannelSpec::Pauli(p) | ChannelSpec::SparseAdditive(p) => Ok(pauli_mix(p, rho)),
        ChannelSpec::Unitary(u) => apply_unitary_channel(&u.matrix()?, rho),
        ChannelSpec::Oruc { u, p, v } => {
            let inner = apply_unitary_channel(&v.matrix()?, rho)?;
            apply_unitary_channel(&u.matrix()?, &pauli_mix(p, &inner))
        }
        ChannelSpec::Weyl { probs, .. } => unitary_mix(probs.probs(), &weyl_unitaries(probs)?, rho),
        ChannelSpec::GeneralRuc { weights, unitaries } => unitary_mix(weights, unitaries, rho),
        ChannelSpec::SparseMultiplicative { factors, .. } => {
            let mut out = rho.clone();
            for (q, p) in factors {
                let flipped = pauli_conjugate(p, &out);
                out = out
                    .scale(C64::new(1.0 - q, 0.0))
                    .add(&flipped.scale(C64::new(*q, 0.0)))?;
            }
            Ok(out)
        }
        ChannelSpec::Composition(parts) => {
            let mut out = rho.clone();
            for part in parts.iter().rev() {
                out = apply_channel_exact(part, &out)?;
            }
            Ok(out)
        }
    }
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let dist =
        WeightedIndex::new(weights).map_err(|e| Error::InvalidProbabilities(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// One unitary drawn from the channel's random-unitary decomposition.
pub fn sample_unitary<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> Result<DenseMatrix> {
    let n = spec.validate()?;
    match spec {
        ChannelSpec::Pauli(p) | ChannelSpec::SparseAdditive(p) => {
            Ok(pauli_matrix(&p.support()[draw(p.probs(), rng)?]))
        }
        ChannelSpec::Unitary(u) => u.matrix(),
        ChannelSpec::Oruc { u, p, v } => {
            let s = pauli_matrix(&p.support()[draw(p.probs(), rng)?]);
            u.matrix()?.mul(&s)?.mul(&v.matrix()?)
        }
        ChannelSpec::Weyl { probs, .. } => weyl_matrix(probs.support()[draw(probs.probs(), rng)?]),
        ChannelSpec::GeneralRuc { weights, unitaries } => {
            Ok(unitaries[draw(weights, rng)?].clone())
        }
        ChannelSpec::SparseMultiplicative { factors, .. } => {
            let mut acc = DenseMatrix::identity(n);
            for (q, p) in factors {
                if rng.random::<f64>() < *q {
                    acc = pauli_matrix(p).mul(&acc)?;
                }
            }
            Ok(acc)
        }
        ChannelSpec::Composition(parts) => {
            let mut acc = DenseMatrix::identity(n);
            for part in parts.iter().rev() {
                acc = sample_unitary(part, rng)?.mul(&acc)?;
            }
            Ok(acc)
        }
    }
}

/// Average of `U_i rho U_i^dag` over `samples` unitaries drawn i.i.d.
pub fn apply_channel_sampled<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    rho: &DenseMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut out = DenseMatrix::zeros(rho.num_qubits());
    for _ in 0..samples {
        out = out.add(&apply_unitary_channel(&sample_unitary(spec, rng)?, rho)?)?;
    }
    Ok(out.scale(C64::new(1.0 / samples as f64, 0.0)))
}

fn full_sign_sum(n: usize, values: &[f64]) -> Vec<f64> {
    let paulis = enumerate_paulis(n, None).expect("n >= 1");
    paulis
        .iter()
        .map(|a| {
            paulis
                .iter()
                .zip(values)
                .map(|(b, v)| {
                    if a.commutes_with(b).expect("same n") {
                        *v
                    } else {
                        -*v
                    }
                })
                .sum()
        })
        .collect()
}

/// Pauli fidelities `f = S p` for a full-support vector.
pub fn fidelities_from_probs(p: &ProbabilityVector) -> Result<Vec<f64>> {
    if !p.is_full_canonical() {
        return Err(Error::IncompleteSupport);
    }
    Ok(full_sign_sum(p.num_qubits(), p.probs()))
}

/// Inverse transform `p = S f / 4^n`; no simplex validation.
pub fn probs_from_fidelities(n: usize, f: &[f64]) -> Result<Vec<f64>> {
    let d2 = 1usize << (2 * n);
    if f.len() != d2 {
        return Err(Error::DimensionMismatch {
            left: d2,
            right: f.len(),
        });
    }
    Ok(full_sign_sum(n, f)
        .into_iter()
        .map(|v| v / d2 as f64)
        .collect())
}

/// Single-qubit Clifford from a word over `I H S X Y Z`; the word is read as
/// a matrix product, so `"HS"` is `H S`.
pub fn clifford_matrix(word: &str) -> Result<DenseMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let mut acc = DenseMatrix::identity(1);
    for ch in word.chars() {
        let g = match ch {
            'I' => DenseMatrix::identity(1),
            'H' => DenseMatrix::from_row_major(2, &[o * r, o * r, o * r, -o * r])?,
            'S' => DenseMatrix::from_row_major(2, &[o, z, z, i])?,
            'X' | 'Y' | 'Z' => pauli_matrix(&ch.to_string().parse()?),
            _ => return Err(Error::NonClifford(word.to_string())),
        };
        acc = acc.mul(&g)?;
    }
    Ok(acc)
}

/// Probabilities of the Pauli channel `W o E_P o W^dag`.
pub fn clifford_conjugated_pauli_probs(
    p: &ProbabilityVector,
    word: &str,
) -> Result<ProbabilityVector> {
    if p.num_qubits() != 1 {
        return Err(Error::SingleQubitOnly("Clifford conjugation"));
    }
    if !p.is_full_canonical() {
        return Err(Error::IncompleteSupport);
    }
    let w = clifford_matrix(word)?;
    let paulis = enumerate_paulis(1, None)?;
    let mut out = vec![0.0; 4];
    for (k, s) in paulis.iter().enumerate() {
        let image = w.mul(&pauli_matrix(s))?.mul(&w.adjoint())?;
        // W sigma W^dag is +-sigma' for exactly one sigma'
        let target = paulis
            .iter()
            .position(|t| crate::dense::pauli_trace(t, &image).norm() > 1.0)
            .expect("Clifford maps Paulis to Paulis");
        out[target] += p.probs()[k];
    }
    ProbabilityVector::full(1, out)
}
