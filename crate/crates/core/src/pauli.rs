//! Pauli strings in symplectic form.
//!
//! A string on `n` qubits stores one x-bit and one z-bit per qubit, packed
//! 64 qubits to a word. Each qubit carries `i^(x*z) X^x Z^z`, so `Y` is the
//! pair `x = z = 1`. Labels are written with qubit 0 leftmost.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Letter::I),
            'X' => Ok(Letter::X),
            'Y' => Ok(Letter::Y),
            'Z' => Ok(Letter::Z),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    fn code(self) -> usize {
        self as usize
    }
}

/// An `n`-qubit Pauli operator without phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
        }
    }

    /// Weight-one string with `letter` on `qubit`.
    pub fn single(n: usize, qubit: usize, letter: Letter) -> Self {
        let mut p = Self::identity(n);
        p.set_letter(qubit, letter);
        p
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> &[u64] {
        &self.x
    }

    pub fn z_bits(&self) -> &[u64] {
        &self.z
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        assert!(
            qubit < self.n,
            "qubit {qubit} out of range for {} qubits",
            self.n
        );
        let (w, b) = (qubit / 64, qubit % 64);
        Letter::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set_letter(&mut self, qubit: usize, letter: Letter) {
        assert!(
            qubit < self.n,
            "qubit {qubit} out of range for {} qubits",
            self.n
        );
        let (w, b) = (qubit / 64, qubit % 64);
        let (x, z) = letter.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n).map(move |q| self.letter(q))
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| self.letter(q) != Letter::I)
            .collect()
    }

    /// Keeps the letters on `qubits` and replaces every other letter by `I`.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut out = Self::identity(self.n);
        for &q in qubits {
            out.set_letter(q, self.letter(q));
        }
        out
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones())
            .sum()
    }

    /// x and z masks over dense basis indices: qubit `q` maps to bit `n - 1 - q`.
    pub fn dense_masks(&self) -> (u64, u64) {
        assert!(self.n <= 64, "dense masks need at most 64 qubits");
        let mut xm = 0u64;
        let mut zm = 0u64;
        for q in 0..self.n {
            let (x, z) = self.letter(q).bits();
            let bit = self.n - 1 - q;
            xm |= (x as u64) << bit;
            zm |= (z as u64) << bit;
        }
        (xm, zm)
    }

    /// Position of this string in `enumerate_paulis(n, None)`.
    pub fn index(&self) -> usize {
        assert!(self.n < 32, "full-set index needs fewer than 32 qubits");
        self.letters().fold(0, |acc, l| acc * 4 + l.code())
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut p = Self::identity(n);
        for q in (0..n).rev() {
            p.set_letter(q, Letter::ALL[index % 4]);
            index /= 4;
        }
        p
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        Ok(!symplectic_inner(self, other)?)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.letters().cmp(other.letters()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(Letter::from_char)
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Empty("Pauli label"));
        }
        Ok(Self::from_letters(&letters))
    }
}

/// A Pauli string with coefficient `i^phase_power`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhasedPauli {
    pub pauli: PauliString,
    pub phase_power: u8,
}

impl PhasedPauli {
    pub fn coefficient(&self) -> Complex64 {
        i_pow(self.phase_power)
    }
}

pub(crate) fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Matrix product `a * b` as a phased Pauli string.
pub fn pauli_product(a: &PauliString, b: &PauliString) -> Result<PhasedPauli> {
    a.check_len(b)?;
    let mut c = PauliString::identity(a.n);
    // i^{|xa za|} X^xa Z^za i^{|xb zb|} X^xb Z^zb = i^{..} (-1)^{|za xb|} X^xc Z^zc
    let mut phase: i64 = 0;
    for w in 0..a.x.len() {
        let (xa, za, xb, zb) = (a.x[w], a.z[w], b.x[w], b.z[w]);
        let (xc, zc) = (xa ^ xb, za ^ zb);
        c.x[w] = xc;
        c.z[w] = zc;
        phase += (xa & za).count_ones() as i64 + (xb & zb).count_ones() as i64
            - (xc & zc).count_ones() as i64
            + 2 * (za & xb).count_ones() as i64;
    }
    Ok(PhasedPauli {
        pauli: c,
        phase_power: phase.rem_euclid(4) as u8,
    })
}

/// Symplectic form: `true` when `a` and `b` anticommute.
pub fn symplectic_inner(a: &PauliString, b: &PauliString) -> Result<bool> {
    a.check_len(b)?;
    let ones: u32 = (0..a.x.len())
        .map(|w| ((a.x[w] & b.z[w]) ^ (a.z[w] & b.x[w])).count_ones())
        .sum();
    Ok(ones % 2 == 1)
}

/// `[a, b] = lambda * c`, or `None` when the strings commute.
pub fn commutator(a: &PauliString, b: &PauliString) -> Result<Option<(PauliString, Complex64)>> {
    if !symplectic_inner(a, b)? {
        return Ok(None);
    }
    let prod = pauli_product(a, b)?;
    let lambda = prod.coefficient() * 2.0;
    Ok(Some((prod.pauli, lambda)))
}

/// Real factor `i * lambda` for `[a, b] = lambda * c`, together with `c`.
///
/// Anticommuting Hermitian Paulis have an anti-Hermitian product, so
/// `i * lambda` is always `+2` or `-2`.
pub fn commutator_real(a: &PauliString, b: &PauliString) -> Result<Option<(PauliString, f64)>> {
    Ok(commutator(a, b)?.map(|(c, lambda)| (c, (Complex64::i() * lambda).re)))
}

/// Matrix of `(-1)^<row, col>` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    rows: Vec<PauliString>,
    cols: Vec<PauliString>,
    entries: Vec<i8>,
}

impl SignMatrix {
    pub fn rows(&self) -> &[PauliString] {
        &self.rows
    }

    pub fn cols(&self) -> &[PauliString] {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.cols.len() + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        let m = self.cols.len();
        &self.entries[i * m..(i + 1) * m]
    }

    /// Integer product `self * other`.
    pub fn int_matmul(&self, other: &SignMatrix) -> Vec<Vec<i64>> {
        assert_eq!(self.ncols(), other.nrows());
        (0..self.nrows())
            .map(|i| {
                (0..other.ncols())
                    .map(|j| {
                        (0..self.ncols())
                            .map(|k| self.get(i, k) as i64 * other.get(k, j) as i64)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j) as f64)
    }

    /// `S * v` in floating point.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols());
        (0..self.nrows())
            .map(|i| self.row(i).iter().zip(v).map(|(&s, &x)| s as f64 * x).sum())
            .collect()
    }

    /// `S^T * v` in floating point.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.nrows());
        let mut out = vec![0.0; self.ncols()];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &s) in out.iter_mut().zip(self.row(i)) {
                *o += s as f64 * vi;
            }
        }
        out
    }
}

pub fn sign_matrix(rows: &[PauliString], cols: &[PauliString]) -> Result<SignMatrix> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Empty("sign matrix index list"));
    }
    let n = rows[0].n;
    if let Some(bad) = rows.iter().chain(cols).find(|p| p.n != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: bad.n,
        });
    }
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for r in rows {
        for c in cols {
            entries.push(if symplectic_inner(r, c)? { -1 } else { 1 });
        }
    }
    Ok(SignMatrix {
        rows: rows.to_vec(),
        cols: cols.to_vec(),
        entries,
    })
}

/// All `n`-qubit Pauli strings in lexicographic `IXYZ` order, optionally
/// limited to weight at most `max_weight`.
pub fn enumerate_paulis(n: usize, max_weight: Option<usize>) -> Result<Vec<PauliString>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "qubit count must be at least 1".into(),
        ));
    }
    if let Some(k) = max_weight {
        if k > n {
            return Err(Error::WeightTooLarge { max_weight: k, n });
        }
    }
    let limit = max_weight.unwrap_or(n);
    let mut out = Vec::new();
    let mut letters = vec![Letter::I; n];
    enumerate_rec(&mut letters, 0, 0, limit, &mut out);
    Ok(out)
}

fn enumerate_rec(
    letters: &mut [Letter],
    pos: usize,
    weight: usize,
    limit: usize,
    out: &mut Vec<PauliString>,
) {
    if pos == letters.len() {
        out.push(PauliString::from_letters(letters));
        return;
    }
    for l in Letter::ALL {
        let w = weight + usize::from(l != Letter::I);
        if w > limit {
            continue;
        }
        letters[pos] = l;
        enumerate_rec(letters, pos + 1, w, limit, out);
    }
    letters[pos] = Letter::I;
}
