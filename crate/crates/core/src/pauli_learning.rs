//! Pauli-channel learning: least-squares inversion with simplex projection
//! and Riemannian gradient descent on the simplex.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;

use crate::channel::ProbabilityVector;
use crate::error::{Error, Result};
use crate::expectation::{MeasurementPlan, TargetOracle};
use crate::pauli::{enumerate_paulis, sign_matrix, PauliString, SignMatrix};
use crate::ptm::PauliTransferMatrix;

/// Interior margin for Riemannian updates.
pub const EPSILON_INTERIOR: f64 = 1e-8;

const SUM_TOL: f64 = 1e-12;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("simplex point"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidProbabilities(
                "negative or non-finite entry".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self(values))
    }

    /// Unit mass on coordinate `k`.
    pub fn vertex(d: usize, k: usize) -> Self {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Result<SimplexPoint> {
    if v.is_empty() {
        return Err(Error::Empty("vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|vi| (vi - theta).max(0.0)).collect();
    // absorb round-off so the sum is exactly representable as 1
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|xi| *xi /= total);
    Ok(SimplexPoint(x))
}

/// Projection onto `{x : x_k >= eps, sum x = 1}`.
pub fn project_simplex_floored(v: &[f64], eps: f64) -> Result<SimplexPoint> {
    let d = v.len() as f64;
    let scale = 1.0 - d * eps;
    if !(0.0..1.0).contains(&(d * eps)) {
        return Err(Error::InvalidParameter(format!(
            "floor {eps} infeasible in dimension {d}"
        )));
    }
    let shifted: Vec<f64> = v.iter().map(|x| (x - eps) / scale).collect();
    let p = project_simplex(&shifted)?;
    Ok(SimplexPoint(p.0.iter().map(|x| eps + scale * x).collect()))
}

/// `p . (g - <p, g> 1)`; orthogonal to the all-ones vector.
pub fn riemannian_grad(p: &SimplexPoint, euclid_grad: &[f64]) -> Result<Vec<f64>> {
    if p.dim() != euclid_grad.len() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: euclid_grad.len(),
        });
    }
    let inner: f64 = p.0.iter().zip(euclid_grad).map(|(a, b)| a * b).sum();
    Ok(p.0
        .iter()
        .zip(euclid_grad)
        .map(|(pk, gk)| pk * (gk - inner))
        .collect())
}

/// `S^T (S p - y)`, the gradient of `1/2 ||y - S p||^2`.
pub fn euclidean_grad(rows: &SignMatrix, p: &[f64], y: &[f64]) -> Vec<f64> {
    let sp = rows.apply(p);
    let r: Vec<f64> = sp.iter().zip(y).map(|(a, b)| a - b).collect();
    rows.apply_transpose(&r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliMethod {
    Rgd,
    Lstsq,
}

impl std::str::FromStr for PauliMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgd" => Ok(Self::Rgd),
            "lstsq" => Ok(Self::Lstsq),
            other => Err(Error::InvalidParameter(format!(
                "unknown Pauli method {other:?}"
            ))),
        }
    }
}

/// Current Pauli-channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliLearnState {
    pub p: SimplexPoint,
    pub support: Vec<PauliString>,
    pub rate: f64,
    pub iteration: usize,
}

impl PauliLearnState {
    /// Identity channel on the given support, which must contain the identity.
    pub fn identity(support: Vec<PauliString>, rate: f64) -> Result<Self> {
        let k = support
            .iter()
            .position(PauliString::is_identity)
            .ok_or_else(|| Error::InvalidParameter("support must contain the identity".into()))?;
        Ok(Self {
            p: SimplexPoint::vertex(support.len(), k),
            support,
            rate,
            iteration: 0,
        })
    }

    pub fn full(n: usize, rate: f64) -> Result<Self> {
        Self::identity(enumerate_paulis(n, None)?, rate)
    }

    pub fn probability_vector(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::new(self.support.clone(), self.p.0.clone())
    }

    pub fn num_qubits(&self) -> usize {
        self.support[0].num_qubits()
    }
}

/// Least-squares solution `S^+ y` for the given rows, or an error when the
/// square system is singular.
fn solve_rows(rows: &SignMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let n = rows.cols()[0].num_qubits();
    let d2 = 1usize << (2 * n);
    let full = rows.nrows() == d2 && rows.ncols() == d2;
    if full && rows.rows() == rows.cols() {
        // S^{-1} = S / 4^n on the full canonical set
        return Ok(rows.apply(y).iter().map(|v| v / d2 as f64).collect());
    }
    let s = rows.to_f64();
    let yv = DVector::from_column_slice(y);
    if rows.nrows() == rows.ncols() {
        let lu = s.clone().lu();
        if !lu.is_invertible() || s.determinant().abs() < 1e-9 {
            return Err(Error::SingularSignMatrix);
        }
        return Ok(lu
            .solve(&yv)
            .ok_or(Error::SingularSignMatrix)?
            .iter()
            .copied()
            .collect());
    }
    let pinv = s
        .pseudo_inverse(1e-10)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((pinv * yv).iter().copied().collect())
}

/// `p <- P((1 - mu) p + mu S^+ y)`.
pub fn lstsq_update(
    state: &PauliLearnState,
    y: &[f64],
    rows: &SignMatrix,
    mu: f64,
) -> Result<PauliLearnState> {
    if rows.ncols() != state.p.dim() {
        return Err(Error::DimensionMismatch {
            left: state.p.dim(),
            right: rows.ncols(),
        });
    }
    if y.len() != rows.nrows() {
        return Err(Error::DimensionMismatch {
            left: rows.nrows(),
            right: y.len(),
        });
    }
    let mut next = state.clone();
    next.iteration += 1;
    if mu == 0.0 {
        return Ok(next);
    }
    let solved = solve_rows(rows, y)?;
    let mixed: Vec<f64> = state
        .p
        .0
        .iter()
        .zip(&solved)
        .map(|(p, s)| (1.0 - mu) * p + mu * s)
        .collect();
    next.p = project_simplex(&mixed)?;
    Ok(next)
}

/// One Riemannian step `p <- P_eps(p - eta grad)`.
pub fn rgd_update(
    state: &PauliLearnState,
    y: &[f64],
    rows: &SignMatrix,
    eta: f64,
) -> Result<PauliLearnState> {
    let p = if state.p.0.iter().any(|v| *v < EPSILON_INTERIOR) {
        project_simplex_floored(&state.p.0, EPSILON_INTERIOR)?
    } else {
        state.p.clone()
    };
    let g = euclidean_grad(rows, &p.0, y);
    let rg = riemannian_grad(&p, &g)?;
    let stepped: Vec<f64> = p.0.iter().zip(&rg).map(|(a, b)| a - eta * b).collect();
    let mut next = state.clone();
    next.p = project_simplex_floored(&stepped, EPSILON_INTERIOR)?;
    next.iteration += 1;
    Ok(next)
}

/// Batched Pauli learner over a fixed support.
#[derive(Debug, Clone)]
pub struct PauliLearner {
    pub state: PauliLearnState,
    pub method: PauliMethod,
    /// Rows per update; 0 means every row.
    pub batch: usize,
    rows: Vec<PauliString>,
    full_signs: SignMatrix,
}

impl PauliLearner {
    /// Measured rows are the support's own Paulis.
    pub fn new(state: PauliLearnState, method: PauliMethod, batch: usize) -> Result<Self> {
        let rows = state.support.clone();
        let full_signs = sign_matrix(&rows, &state.support)?;
        Ok(Self {
            state,
            method,
            batch,
            rows,
            full_signs,
        })
    }

    pub fn rows(&self) -> &[PauliString] {
        &self.rows
    }

    /// `1/2 ||y - S p||^2` against exact fidelities of every row.
    pub fn loss(&self, y_rows: &[f64]) -> f64 {
        let sp = self.full_signs.apply(&self.state.p.0);
        0.5 * sp
            .iter()
            .zip(y_rows)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    }

    /// Exact fidelities of every row from a PTM.
    pub fn exact_rows(&self, ptm: &PauliTransferMatrix) -> Vec<f64> {
        self.rows.iter().map(|r| ptm.element(r, r)).collect()
    }

    /// Draws a batch, measures it through `measure`, and updates the state.
    /// The identity row is always included with value 1 without measurement,
    /// since trace preservation fixes it.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        measure: &mut dyn FnMut(&[PauliString], &mut R) -> Result<Vec<f64>>,
        rng: &mut R,
    ) -> Result<()> {
        let informative: Vec<usize> = (0..self.rows.len())
            .filter(|&i| !self.rows[i].is_identity())
            .collect();
        let take = if self.batch == 0 {
            informative.len()
        } else {
            self.batch.min(informative.len())
        };
        let mut chosen: Vec<usize> = if take == informative.len() {
            informative.clone()
        } else {
            sample(rng, informative.len(), take)
                .into_iter()
                .map(|i| informative[i])
                .collect()
        };
        chosen.sort_unstable();
        let measured_rows: Vec<PauliString> =
            chosen.iter().map(|&i| self.rows[i].clone()).collect();
        let measured = if measured_rows.is_empty() {
            Vec::new()
        } else {
            measure(&measured_rows, rng)?
        };
        let mut rows = Vec::with_capacity(chosen.len() + 1);
        let mut y = Vec::with_capacity(chosen.len() + 1);
        if let Some(id) = self.rows.iter().position(PauliString::is_identity) {
            rows.push(self.rows[id].clone());
            y.push(1.0);
        }
        rows.extend(measured_rows);
        y.extend(measured);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measured fidelities"));
        }
        let signs = sign_matrix(&rows, &self.state.support)?;
        self.state = match self.method {
            PauliMethod::Rgd => rgd_update(&self.state, &y, &signs, self.state.rate)?,
            PauliMethod::Lstsq => lstsq_update(&self.state, &y, &signs, self.state.rate)?,
        };
        Ok(())
    }
}

/// Measures each row's diagonal element of `post o target o pre`, one plan
/// (and one target call) per row.
pub fn measure_rows<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    rows: &[PauliString],
    pre: Option<&PauliTransferMatrix>,
    post: Option<&PauliTransferMatrix>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| Ok(oracle.measure(&MeasurementPlan::single(r, r)?, pre, post, rng)?[0]))
        .collect()
}

/// Runs `iters` updates against the oracle and returns the final state and
/// the exact loss after every update (entry 0 is the initial loss).
pub fn simplex_rgd_run<R: Rng + ?Sized>(
    oracle: &TargetOracle,
    learner: &mut PauliLearner,
    iters: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let y_exact = learner.exact_rows(oracle.ptm());
    let mut losses = vec![learner.loss(&y_exact)];
    let mut measure =
        |rows: &[PauliString], rng: &mut R| measure_rows(oracle, rows, None, None, rng);
    for _ in 0..iters {
        learner.step(&mut measure, rng)?;
        let l = learner.loss(&y_exact);
        if !l.is_finite() {
            return Err(Error::NonFinite("Pauli loss"));
        }
        losses.push(l);
    }
    Ok(losses)
}

/// `S^{-1} diag(T)`: the Pauli twirl of a channel as a full probability vector.
pub fn pauli_twirl(ptm: &PauliTransferMatrix) -> Vec<f64> {
    let n = ptm.num_qubits();
    crate::channel::probs_from_fidelities(n, &ptm.diag()).expect("matching size")
}
