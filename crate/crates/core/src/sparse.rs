//! Sparse additive versus multiplicative Pauli channels: generator layouts,
//! the commuting balance of a layout, and average-fidelity matching.

use std::collections::HashSet;
use std::str::FromStr;

use crate::channel::{apply_channel_exact, ChannelSpec, ProbabilityVector};
use crate::dense::{check_dense_limit, pauli_matrix, pauli_trace, DEFAULT_DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    SingleSite,
    NnPairs,
    AllPairs,
    Triples,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 4] = [
        Self::SingleSite,
        Self::NnPairs,
        Self::AllPairs,
        Self::Triples,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SingleSite => "single_site",
            Self::NnPairs => "nn_pairs",
            Self::AllPairs => "all_pairs",
            Self::Triples => "triples",
        }
    }

    /// Size of each qubit subset.
    pub fn locality(self) -> usize {
        match self {
            Self::SingleSite => 1,
            Self::NnPairs | Self::AllPairs => 2,
            Self::Triples => 3,
        }
    }

    fn subsets(self, n: usize) -> Vec<Vec<usize>> {
        match self {
            Self::SingleSite => (0..n).map(|i| vec![i]).collect(),
            Self::NnPairs => (0..n.saturating_sub(1)).map(|i| vec![i, i + 1]).collect(),
            Self::AllPairs => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| vec![i, j]))
                .collect(),
            Self::Triples => (0..n)
                .flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| vec![i, j, k])))
                .collect(),
        }
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown layout kind {s:?}")))
    }
}

/// Generator set of a layout: every non-identity string supported inside
/// one of the kind's qubit subsets, each listed once.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub kind: LayoutKind,
    pub n: usize,
    pub generators: Vec<PauliString>,
}

impl Layout {
    pub fn new(kind: LayoutKind, n: usize) -> Result<Self> {
        if n < kind.locality() {
            return Err(Error::InvalidParameter(format!(
                "layout {} needs at least {} qubits, got {n}",
                kind.as_str(),
                kind.locality()
            )));
        }
        let mut seen = HashSet::new();
        let mut generators = Vec::new();
        for subset in kind.subsets(n) {
            let k = subset.len();
            // base-4 counter over the subset's letters, skipping all-identity
            for code in 1..4usize.pow(k as u32) {
                let mut p = PauliString::identity(n);
                for (slot, &q) in subset.iter().enumerate() {
                    p.set_letter(q, Letter::ALL[(code >> (2 * (k - 1 - slot))) & 3]);
                }
                if seen.insert(p.clone()) {
                    generators.push(p);
                }
            }
        }
        Ok(Self {
            kind,
            n,
            generators,
        })
    }
}

/// Average commuting balance over a Pauli set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseChannelStats {
    pub d: usize,
    pub n_a: f64,
    pub n_c: f64,
    /// `n_c - n_a`, equal to `d - 2 n_a`.
    pub delta: f64,
}

impl SparseChannelStats {
    /// Stats for a set of size `d` with average anticommuting count `n_a`.
    pub fn from_counts(d: usize, n_a: f64) -> Self {
        Self {
            d,
            n_a,
            n_c: d as f64 - n_a,
            delta: d as f64 - 2.0 * n_a,
        }
    }
}

/// Average over the set of commuting minus anticommuting members, each
/// string counted as commuting with itself.
pub fn layout_delta(layout: &Layout) -> Result<SparseChannelStats> {
    set_stats(&layout.generators)
}

pub fn set_stats(set: &[PauliString]) -> Result<SparseChannelStats> {
    if set.is_empty() {
        return Err(Error::Empty("layout generator set"));
    }
    let mut anti = 0usize;
    for a in set {
        for b in set {
            if !a.commutes_with(b)? {
                anti += 1;
            }
        }
    }
    Ok(SparseChannelStats::from_counts(
        set.len(),
        anti as f64 / set.len() as f64,
    ))
}

/// `(1 - 2 q)^{n_a}`.
pub fn avg_fidelity_multiplicative(qbar: f64, n_a: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&qbar) {
        return Err(Error::InvalidParameter(format!(
            "mean probability {qbar} outside [0, 1/2]"
        )));
    }
    Ok((1.0 - 2.0 * qbar).powf(n_a))
}

/// `1 - 2 n_a p`.
pub fn avg_fidelity_additive(pbar: f64, n_a: f64) -> f64 {
    1.0 - 2.0 * n_a * pbar
}

/// Additive mean probability whose average fidelity equals the
/// multiplicative one: `(1 - e^{lambda n_a}) / (2 n_a)` with
/// `lambda = ln(1 - 2 q)`.
pub fn equivalent_pbar(qbar: f64, n_a: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&qbar) {
        return Err(Error::InvalidParameter(format!(
            "mean probability {qbar} outside [0, 1/2)"
        )));
    }
    if !(n_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "anticommuting count {n_a} must be positive"
        )));
    }
    let lambda = (1.0 - 2.0 * qbar).ln();
    // -expm1 keeps the small-q limit p -> q accurate
    Ok(-(lambda * n_a).exp_m1() / (2.0 * n_a))
}

/// Positivity and normalization bounds on the additive stand-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// The matching additive mean probability.
    pub pbar: f64,
    /// `1 / (2 n_a)`, from positivity of the average fidelity.
    pub pbar_cap_na: f64,
    /// `1 / d`, from normalization.
    pub pbar_cap_d: f64,
    /// `e^{lambda n_a} >= delta / d`, the normalization cap restated in `q`.
    pub exp_condition_met: bool,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.pbar <= self.pbar_cap_na && self.exp_condition_met
    }
}

/// Evaluates all three bounds for mean factor probability `qbar`; values
/// of `qbar` at or above 1/2 fully dephase, so `e^{lambda n_a}` is taken
/// as 0 there.
pub fn feasibility_check(qbar: f64, stats: &SparseChannelStats) -> FeasibilityReport {
    let decay = (1.0 - 2.0 * qbar).max(0.0).powf(stats.n_a);
    let pbar = if stats.n_a > 0.0 {
        (1.0 - decay) / (2.0 * stats.n_a)
    } else {
        0.0
    };
    FeasibilityReport {
        pbar,
        pbar_cap_na: 1.0 / (2.0 * stats.n_a),
        pbar_cap_d: 1.0 / stats.d as f64,
        exp_condition_met: decay >= stats.delta / stats.d as f64,
    }
}

/// Additive channel with mass `pbar` on each layout generator and the rest
/// on the identity.
pub fn additive_from_layout(layout: &Layout, pbar: f64) -> Result<ChannelSpec> {
    let mut support = vec![PauliString::identity(layout.n)];
    support.extend(layout.generators.iter().cloned());
    let mut probs = vec![1.0 - pbar * layout.generators.len() as f64];
    probs.extend(std::iter::repeat_n(pbar, layout.generators.len()));
    Ok(ChannelSpec::SparseAdditive(ProbabilityVector::new(
        support, probs,
    )?))
}

/// One dephasing factor of strength `q` per layout generator.
pub fn multiplicative_from_layout(layout: &Layout, q: f64) -> ChannelSpec {
    ChannelSpec::SparseMultiplicative {
        n: layout.n,
        factors: layout.generators.iter().map(|g| (q, g.clone())).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityMode {
    /// Apply the channel to each dense Pauli matrix; bounded by the dense limit.
    Dense,
    /// Closed form from commutation signs; any qubit count.
    Symplectic,
}

impl FromStr for FidelityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "symplectic" => Ok(Self::Symplectic),
            other => Err(Error::InvalidParameter(format!(
                "unknown fidelity mode {other:?}"
            ))),
        }
    }
}

/// Pauli fidelities averaged over the channel's own generator set: the
/// non-identity support of an additive channel or the factor strings of a
/// multiplicative one.
pub fn brute_force_avg_fidelity(spec: &ChannelSpec, mode: FidelityMode) -> Result<f64> {
    let set: Vec<PauliString> = match spec {
        ChannelSpec::SparseAdditive(p) => p
            .support()
            .iter()
            .filter(|s| !s.is_identity())
            .cloned()
            .collect(),
        ChannelSpec::SparseMultiplicative { factors, .. } => {
            factors.iter().map(|(_, s)| s.clone()).collect()
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "average fidelity needs a sparse channel, got {}",
                other.kind()
            )))
        }
    };
    if set.is_empty() {
        return Err(Error::Empty("sparse generator set"));
    }
    let n = spec.validate()?;
    let fidelity = |alpha: &PauliString| -> Result<f64> {
        match mode {
            FidelityMode::Dense => {
                let out = apply_channel_exact(spec, &pauli_matrix(alpha))?;
                Ok(pauli_trace(alpha, &out).re / (1u64 << n) as f64)
            }
            FidelityMode::Symplectic => symplectic_fidelity(spec, alpha),
        }
    };
    if mode == FidelityMode::Dense {
        check_dense_limit(n, DEFAULT_DENSE_LIMIT)?;
    }
    let mut total = 0.0;
    for alpha in &set {
        total += fidelity(alpha)?;
    }
    Ok(total / set.len() as f64)
}

fn sign(a: &PauliString, b: &PauliString) -> Result<f64> {
    Ok(if a.commutes_with(b)? { 1.0 } else { -1.0 })
}

fn symplectic_fidelity(spec: &ChannelSpec, alpha: &PauliString) -> Result<f64> {
    match spec {
        ChannelSpec::SparseAdditive(p) => p.iter().map(|(s, w)| Ok(w * sign(alpha, s)?)).sum(),
        ChannelSpec::SparseMultiplicative { factors, .. } => factors
            .iter()
            .map(|(q, s)| Ok(1.0 - q + sign(alpha, s)? * q))
            .product(),
        _ => unreachable!("checked by caller"),
    }
}
