//! Dense complex matrices for desk-scale systems.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pauli::{i_pow, PauliString};

pub type C64 = Complex64;

/// Largest qubit count handled by dense routines unless overridden.
pub const DEFAULT_DENSE_LIMIT: usize = 6;

/// Square complex matrix acting on `n` qubits (dimension `2^n`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<C64>);

impl DenseMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || !r.is_power_of_two() {
            return Err(Error::NotQubitOperator { rows: r, cols: c });
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(1 << n, 1 << n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(1 << n, 1 << n))
    }

    /// Row-major construction from `(re, im)` pairs.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, other: &DenseMatrix) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self(&self.0 * &other.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.0.adjoint() * &self.0;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product, `self` on the leading (leftmost) qubits.
    pub fn kron(&self, other: &DenseMatrix) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Row-major flat entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d * d).map(|k| self.0[(k / d, k % d)]).collect()
    }

    /// Computational basis projector `|k><k|`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(1 << n, 1 << n);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self(m)
    }
}

fn check_dims(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

pub fn check_dense_limit(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    Ok(())
}

/// `sigma |k> = i^{#Y} (-1)^{|z & k|} |k ^ x>` in dense index order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PauliAction {
    x: usize,
    z: usize,
    base: C64,
}

impl PauliAction {
    pub(crate) fn new(p: &PauliString) -> Self {
        let (x, z) = p.dense_masks();
        Self {
            x: x as usize,
            z: z as usize,
            base: i_pow((p.y_count() % 4) as u8),
        }
    }

    #[inline]
    fn sign(&self, k: usize) -> f64 {
        if (self.z & k).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Column `k` of sigma has its single nonzero at row `k ^ x`.
    #[inline]
    pub(crate) fn column(&self, k: usize) -> (usize, C64) {
        (k ^ self.x, self.base * self.sign(k))
    }
}

pub fn pauli_matrix(p: &PauliString) -> DenseMatrix {
    let act = PauliAction::new(p);
    let d = 1usize << p.num_qubits();
    let mut m = DMatrix::zeros(d, d);
    for k in 0..d {
        let (row, v) = act.column(k);
        m[(row, k)] = v;
    }
    DenseMatrix(m)
}

/// `Tr[sigma M]` in O(d).
pub fn pauli_trace(p: &PauliString, m: &DenseMatrix) -> C64 {
    let act = PauliAction::new(p);
    // Tr[sigma M] = sum_k sigma_{k^x, k} M_{k, k^x}
    (0..m.dim())
        .map(|k| {
            let (row, v) = act.column(k);
            v * m.0[(k, row)]
        })
        .sum()
}

/// `sigma M sigma` without forming the Pauli matrix.
pub fn pauli_conjugate(p: &PauliString, m: &DenseMatrix) -> DenseMatrix {
    let act = PauliAction::new(p);
    let d = m.dim();
    // (sigma M sigma^dag)_{r,c} = s_r M_{r^x, c^x} conj(s_c) with s the column phases of sigma.
    let phase = |k: usize| act.base * act.sign(k ^ act.x);
    let mut out = DMatrix::zeros(d, d);
    for r in 0..d {
        let pr = phase(r);
        for c in 0..d {
            out[(r, c)] = pr * m.0[(r ^ act.x, c ^ act.x)] * phase(c).conj();
        }
    }
    DenseMatrix(out)
}

/// `U rho U^dagger`.
pub fn apply_unitary_channel(u: &DenseMatrix, rho: &DenseMatrix) -> Result<DenseMatrix> {
    check_dims(u, rho)?;
    Ok(DenseMatrix(&u.0 * &rho.0 * u.0.adjoint()))
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of R's diagonal absorbed into Q.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseMatrix {
    let d = 1usize << n;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    DenseMatrix(q)
}

/// Pauli generators with real coefficients, standing for the Hermitian sum
/// `sum_k c_k sigma_k` (the anti-Hermitian operator is `i` times it).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    paulis: Vec<PauliString>,
    coefficients: Vec<f64>,
}

impl GeneratorSet {
    pub fn new(paulis: Vec<PauliString>, coefficients: Vec<f64>) -> Result<Self> {
        if paulis.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                left: paulis.len(),
                right: coefficients.len(),
            });
        }
        if paulis.is_empty() {
            return Err(Error::Empty("generator set"));
        }
        let n = paulis[0].num_qubits();
        if let Some(bad) = paulis.iter().find(|p| p.num_qubits() != n) {
            return Err(Error::LengthMismatch {
                left: n,
                right: bad.num_qubits(),
            });
        }
        Ok(Self {
            paulis,
            coefficients,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.paulis[0].num_qubits()
    }

    pub fn paulis(&self) -> &[PauliString] {
        &self.paulis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn hermitian_sum(&self) -> DenseMatrix {
        let n = self.num_qubits();
        let mut h = DenseMatrix::zeros(n);
        for (p, &c) in self.paulis.iter().zip(&self.coefficients) {
            if c == 0.0 {
                continue;
            }
            let act = PauliAction::new(p);
            for k in 0..h.dim() {
                let (row, v) = act.column(k);
                h.0[(row, k)] += v * c;
            }
        }
        h
    }
}

/// `exp(scale * sum_k i c_k sigma_k)` via the eigendecomposition of the
/// Hermitian generator.
pub fn exp_pauli_sum(g: &GeneratorSet, scale: f64) -> Result<DenseMatrix> {
    if !scale.is_finite() || g.coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("generator coefficients"));
    }
    let mut h = g.hermitian_sum();
    h.0 *= C64::new(scale, 0.0);
    Ok(exp_i_hermitian(&h))
}

/// `exp(i H)` for Hermitian `H`.
pub fn exp_i_hermitian(h: &DenseMatrix) -> DenseMatrix {
    // symmetrize so round-off does not leak into the eigensolver
    let sym = (&h.0 + h.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let q = &eig.eigenvectors;
    let d = h.dim();
    let mut scaled = q.clone();
    for j in 0..d {
        let ph = C64::from_polar(1.0, eig.eigenvalues[j]);
        for i in 0..d {
            scaled[(i, j)] *= ph;
        }
    }
    DenseMatrix(scaled * q.adjoint())
}
