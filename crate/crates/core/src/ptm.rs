//! Pauli transfer matrices `T_{ab} = Tr[s_a E(s_b)] / 2^n`.

use nalgebra::DMatrix;

use crate::channel::{weyl_matrix, ChannelSpec, ProbabilityVector};
use crate::dense::{check_dense_limit, DenseMatrix, PauliAction, C64, DEFAULT_DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::pauli::{enumerate_paulis, i_pow, PauliString};

/// Real `4^n x 4^n` matrix in canonical Pauli order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    n: usize,
    m: DMatrix<f64>,
}

impl PauliTransferMatrix {
    pub fn new(n: usize, m: DMatrix<f64>) -> Result<Self> {
        let d2 = 1usize << (2 * n);
        if m.nrows() != d2 || m.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                left: d2,
                right: m.nrows().max(m.ncols()),
            });
        }
        Ok(Self { n, m })
    }

    pub fn identity(n: usize) -> Self {
        let d2 = 1usize << (2 * n);
        Self {
            n,
            m: DMatrix::identity(d2, d2),
        }
    }

    pub fn diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        Self::new(
            n,
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.m[(a, b)]
    }

    /// The entry for output Pauli `sigma` and input Pauli `rho`.
    pub fn element(&self, sigma: &PauliString, rho: &PauliString) -> f64 {
        self.m[(sigma.index(), rho.index())]
    }

    pub fn transpose(&self) -> Self {
        Self {
            n: self.n,
            m: self.m.transpose(),
        }
    }

    /// PTM of `self o other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            m: &self.m * &other.m,
        })
    }

    pub fn diag(&self) -> Vec<f64> {
        self.m.diagonal().iter().copied().collect()
    }

    /// `max |T^T T - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.m.transpose() * &self.m;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

/// `||a - b||_F / 2^n`.
pub fn channel_distance(a: &PauliTransferMatrix, b: &PauliTransferMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::LengthMismatch {
            left: a.n,
            right: b.n,
        });
    }
    Ok((&a.m - &b.m).norm() / (1u64 << a.n) as f64)
}

/// PTM of `rho -> U rho U^dag`.
pub fn ptm_of_unitary(u: &DenseMatrix) -> PauliTransferMatrix {
    let n = u.num_qubits();
    let d = u.dim();
    let paulis = enumerate_paulis(n, None).expect("n >= 1");
    let actions: Vec<PauliAction> = paulis.iter().map(PauliAction::new).collect();
    // by_mask[x * d + z] is the Pauli index with dense masks (x, z)
    let mut by_mask = vec![0usize; d * d];
    for (a, p) in paulis.iter().enumerate() {
        let (x, z) = p.dense_masks();
        by_mask[x as usize * d + z as usize] = a;
    }
    let udag = u.matrix().adjoint();
    let mut m = DMatrix::zeros(actions.len(), actions.len());
    let mut us = DMatrix::<C64>::zeros(d, d);
    let mut image = DMatrix::<C64>::zeros(d, d);
    let mut w = vec![C64::new(0.0, 0.0); d];
    for (b, act) in actions.iter().enumerate() {
        // U sigma_b: column k of sigma has its entry at row k^x
        for k in 0..d {
            let (row, v) = act.column(k);
            us.column_mut(k)
                .zip_apply(&u.matrix().column(row), |o, x| *o = x * v);
        }
        us.mul_to(&udag, &mut image);
        let img = image.as_slice();
        // Tr[sigma_a M] = i^{#Y} sum_k (-1)^{z.k} M[k, k^x]: a Walsh-Hadamard
        // transform over z for each x mask
        for x in 0..d {
            for (k, wk) in w.iter_mut().enumerate() {
                *wk = img[(k ^ x) * d + k];
            }
            walsh_hadamard(&mut w);
            for (z, wz) in w.iter().enumerate() {
                let a = by_mask[x * d + z];
                let phase = i_pow(((x & z).count_ones() % 4) as u8);
                m[(a, b)] = (phase * wz).re / d as f64;
            }
        }
    }
    PauliTransferMatrix { n, m }
}

/// Unnormalized in-place transform `w[z] <- sum_k (-1)^{z.k} w[k]`.
fn walsh_hadamard(w: &mut [C64]) {
    let mut h = 1;
    while h < w.len() {
        for i in (0..w.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (w[j], w[j + h]);
                w[j] = a + b;
                w[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Diagonal PTM of a Pauli channel with arbitrary support.
pub fn ptm_of_pauli(p: &ProbabilityVector) -> PauliTransferMatrix {
    let n = p.num_qubits();
    let diag: Vec<f64> = enumerate_paulis(n, None)
        .expect("n >= 1")
        .iter()
        .map(|a| {
            p.iter()
                .map(|(b, w)| {
                    if a.commutes_with(b).expect("same n") {
                        w
                    } else {
                        -w
                    }
                })
                .sum()
        })
        .collect();
    PauliTransferMatrix::diagonal(n, &diag).expect("matching size")
}

fn ptm_of_mixture(n: usize, weights: &[f64], unitaries: &[DenseMatrix]) -> PauliTransferMatrix {
    let d2 = 1usize << (2 * n);
    let mut m = DMatrix::zeros(d2, d2);
    for (w, u) in weights.iter().zip(unitaries) {
        if *w != 0.0 {
            m += ptm_of_unitary(u).m * *w;
        }
    }
    PauliTransferMatrix { n, m }
}

pub fn ptm_of(spec: &ChannelSpec) -> Result<PauliTransferMatrix> {
    ptm_of_with_limit(spec, DEFAULT_DENSE_LIMIT)
}

pub fn ptm_of_with_limit(spec: &ChannelSpec, limit: usize) -> Result<PauliTransferMatrix> {
    let n = spec.validate()?;
    check_dense_limit(n, limit)?;
    Ok(match spec {
        ChannelSpec::Pauli(p) | ChannelSpec::SparseAdditive(p) => ptm_of_pauli(p),
        ChannelSpec::Unitary(u) => ptm_of_unitary(&u.matrix()?),
        ChannelSpec::Oruc { u, p, v } => ptm_of_unitary(&u.matrix()?)
            .compose(&ptm_of_pauli(p))?
            .compose(&ptm_of_unitary(&v.matrix()?))?,
        ChannelSpec::Weyl { probs, .. } => {
            let us = probs
                .support()
                .iter()
                .map(|w| weyl_matrix(*w))
                .collect::<Result<Vec<_>>>()?;
            ptm_of_mixture(n, probs.probs(), &us)
        }
        ChannelSpec::GeneralRuc { weights, unitaries } => ptm_of_mixture(n, weights, unitaries),
        ChannelSpec::SparseMultiplicative { factors, .. } => {
            let diag: Vec<f64> = enumerate_paulis(n, None)?
                .iter()
                .map(|a| {
                    factors
                        .iter()
                        .map(|(q, p)| {
                            if a.commutes_with(p).expect("same n") {
                                1.0
                            } else {
                                1.0 - 2.0 * q
                            }
                        })
                        .product()
                })
                .collect();
            PauliTransferMatrix::diagonal(n, &diag)?
        }
        ChannelSpec::Composition(parts) => {
            let mut acc = PauliTransferMatrix::identity(n);
            for part in parts {
                acc = acc.compose(&ptm_of_with_limit(part, limit)?)?;
            }
            acc
        }
    })
}
