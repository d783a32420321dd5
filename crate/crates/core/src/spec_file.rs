//! Channel spec files: TOML tables tagged by `kind`.
//!
//! ```toml
//! kind = "oruc"
//! n = 1
//! probs = { I = 0.6, X = 0.05, Y = 0.3, Z = 0.05 }
//! u = { generators = { X = 0.5 } }
//! v = { haar = 7 }
//! ```
//!
//! Unitaries are `"identity"`, `{ haar = SEED }`, `{ generators = { LABEL =
//! c } }` for `exp(i sum c P)`, or `{ matrix = [[re, im, re, im, ...], ...] }`
//! with one row per matrix row.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, ProbabilityVector, UnitarySpec, WeylIndex};
use crate::dense::{haar_unitary, DenseMatrix, GeneratorSet};
use crate::error::{Error, Result};
use crate::pauli::PauliString;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelFile {
    Pauli {
        n: usize,
        probs: BTreeMap<String, f64>,
    },
    SparseAdditive {
        n: usize,
        probs: BTreeMap<String, f64>,
    },
    Unitary {
        n: usize,
        unitary: UnitaryFile,
    },
    Oruc {
        n: usize,
        u: UnitaryFile,
        probs: BTreeMap<String, f64>,
        v: UnitaryFile,
    },
    /// Keys are `"k,j"`.
    Weyl {
        n: usize,
        probs: BTreeMap<String, f64>,
    },
    GeneralRuc {
        n: usize,
        weights: Vec<f64>,
        unitaries: Vec<UnitaryFile>,
    },
    SparseMultiplicative {
        n: usize,
        factors: Vec<Factor>,
    },
    /// Last part acts first.
    Composition {
        n: usize,
        parts: Vec<ChannelFile>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub pauli: String,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitaryFile {
    Named(String),
    Haar { haar: u64 },
    Generators { generators: BTreeMap<String, f64> },
    Matrix { matrix: Vec<Vec<f64>> },
}

fn pauli_label(label: &str, n: usize) -> Result<PauliString> {
    let p: PauliString = label.parse()?;
    if p.num_qubits() != n {
        return Err(Error::InvalidParameter(format!(
            "label {label:?} does not have {n} letters"
        )));
    }
    Ok(p)
}

fn pauli_probs(probs: &BTreeMap<String, f64>, n: usize) -> Result<ProbabilityVector> {
    let support = probs
        .keys()
        .map(|k| pauli_label(k, n))
        .collect::<Result<Vec<_>>>()?;
    ProbabilityVector::new(support, probs.values().copied().collect())
}

fn label_map(p: &ProbabilityVector) -> BTreeMap<String, f64> {
    p.iter().map(|(s, w)| (s.to_string(), w)).collect()
}

impl UnitaryFile {
    pub fn to_spec(&self, n: usize) -> Result<UnitarySpec> {
        match self {
            Self::Named(name) if name == "identity" => Ok(UnitarySpec::identity(n)),
            Self::Named(name) => Err(Error::InvalidParameter(format!("unknown unitary {name:?}"))),
            Self::Haar { haar } => Ok(UnitarySpec::Matrix(haar_unitary(
                n,
                &mut ChaCha8Rng::seed_from_u64(*haar),
            ))),
            Self::Generators { generators } => {
                let paulis = generators
                    .keys()
                    .map(|k| pauli_label(k, n))
                    .collect::<Result<Vec<_>>>()?;
                Ok(UnitarySpec::Generators(GeneratorSet::new(
                    paulis,
                    generators.values().copied().collect(),
                )?))
            }
            Self::Matrix { matrix } => {
                let d = 1usize << n;
                if matrix.len() != d || matrix.iter().any(|r| r.len() != 2 * d) {
                    return Err(Error::InvalidParameter(format!(
                        "unitary matrix must have {d} rows of {} interleaved re/im entries",
                        2 * d
                    )));
                }
                let entries: Vec<Complex64> = matrix
                    .iter()
                    .flat_map(|r| r.chunks(2).map(|c| Complex64::new(c[0], c[1])))
                    .collect();
                let m = DenseMatrix::from_row_major(d, &entries)?;
                if !m.is_unitary(1e-8) {
                    return Err(Error::InvalidParameter(
                        "unitary matrix is not unitary".into(),
                    ));
                }
                Ok(UnitarySpec::Matrix(m))
            }
        }
    }

    pub fn from_matrix(m: &DenseMatrix) -> Self {
        let d = m.dim();
        let rows = m.to_row_major();
        Self::Matrix {
            matrix: rows
                .chunks(d)
                .map(|r| r.iter().flat_map(|c| [c.re, c.im]).collect())
                .collect(),
        }
    }

    fn from_spec(u: &UnitarySpec) -> Self {
        match u {
            UnitarySpec::Generators(g) => Self::Generators {
                generators: g
                    .paulis()
                    .iter()
                    .map(|p| p.to_string())
                    .zip(g.coefficients().iter().copied())
                    .collect(),
            },
            UnitarySpec::Matrix(m) => Self::from_matrix(m),
        }
    }
}

impl ChannelFile {
    pub fn num_qubits(&self) -> usize {
        match self {
            Self::Pauli { n, .. }
            | Self::SparseAdditive { n, .. }
            | Self::Unitary { n, .. }
            | Self::Oruc { n, .. }
            | Self::Weyl { n, .. }
            | Self::GeneralRuc { n, .. }
            | Self::SparseMultiplicative { n, .. }
            | Self::Composition { n, .. } => *n,
        }
    }

    /// Builds and validates the channel; Haar entries are drawn here.
    pub fn to_spec(&self) -> Result<ChannelSpec> {
        let n = self.num_qubits();
        let spec = match self {
            Self::Pauli { probs, .. } => ChannelSpec::Pauli(pauli_probs(probs, n)?),
            Self::SparseAdditive { probs, .. } => {
                ChannelSpec::SparseAdditive(pauli_probs(probs, n)?)
            }
            Self::Unitary { unitary, .. } => ChannelSpec::Unitary(unitary.to_spec(n)?),
            Self::Oruc { u, probs, v, .. } => ChannelSpec::Oruc {
                u: u.to_spec(n)?,
                p: pauli_probs(probs, n)?,
                v: v.to_spec(n)?,
            },
            Self::Weyl { probs, .. } => {
                let d = 1usize << n;
                let support = probs
                    .keys()
                    .map(|key| {
                        let parsed: Option<(usize, usize)> =
                            key.split_once(',').and_then(|(k, j)| {
                                Some((k.trim().parse().ok()?, j.trim().parse().ok()?))
                            });
                        let (k, j) = parsed.ok_or_else(|| {
                            Error::InvalidParameter(format!("Weyl key {key:?} is not \"k,j\""))
                        })?;
                        WeylIndex::new(d, k, j)
                    })
                    .collect::<Result<Vec<_>>>()?;
                ChannelSpec::Weyl {
                    n,
                    probs: ProbabilityVector::new(support, probs.values().copied().collect())?,
                }
            }
            Self::GeneralRuc {
                weights, unitaries, ..
            } => ChannelSpec::GeneralRuc {
                weights: weights.clone(),
                unitaries: unitaries
                    .iter()
                    .map(|u| u.to_spec(n)?.matrix())
                    .collect::<Result<Vec<_>>>()?,
            },
            Self::SparseMultiplicative { factors, .. } => ChannelSpec::SparseMultiplicative {
                n,
                factors: factors
                    .iter()
                    .map(|f| Ok((f.q, pauli_label(&f.pauli, n)?)))
                    .collect::<Result<Vec<_>>>()?,
            },
            Self::Composition { parts, .. } => ChannelSpec::Composition(
                parts
                    .iter()
                    .map(ChannelFile::to_spec)
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        if spec.validate()? != n {
            return Err(Error::InvalidParameter(format!(
                "channel parts do not act on n = {n} qubits"
            )));
        }
        Ok(spec)
    }

    /// Inverse of `to_spec`; unitaries are written as matrices or generator maps.
    pub fn from_spec(spec: &ChannelSpec) -> Result<Self> {
        let n = spec.num_qubits()?;
        Ok(match spec {
            ChannelSpec::Pauli(p) => Self::Pauli {
                n,
                probs: label_map(p),
            },
            ChannelSpec::SparseAdditive(p) => Self::SparseAdditive {
                n,
                probs: label_map(p),
            },
            ChannelSpec::Unitary(u) => Self::Unitary {
                n,
                unitary: UnitaryFile::from_spec(u),
            },
            ChannelSpec::Oruc { u, p, v } => Self::Oruc {
                n,
                u: UnitaryFile::from_spec(u),
                probs: label_map(p),
                v: UnitaryFile::from_spec(v),
            },
            ChannelSpec::Weyl { probs, .. } => Self::Weyl {
                n,
                probs: probs
                    .iter()
                    .map(|(w, p)| (format!("{},{}", w.k, w.j), p))
                    .collect(),
            },
            ChannelSpec::GeneralRuc { weights, unitaries } => Self::GeneralRuc {
                n,
                weights: weights.clone(),
                unitaries: unitaries.iter().map(UnitaryFile::from_matrix).collect(),
            },
            ChannelSpec::SparseMultiplicative { factors, .. } => Self::SparseMultiplicative {
                n,
                factors: factors
                    .iter()
                    .map(|(q, p)| Factor {
                        pauli: p.to_string(),
                        q: *q,
                    })
                    .collect(),
            },
            ChannelSpec::Composition(parts) => Self::Composition {
                n,
                parts: parts
                    .iter()
                    .map(Self::from_spec)
                    .collect::<Result<Vec<_>>>()?,
            },
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("channel spec: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("channel files always serialize")
    }
}
