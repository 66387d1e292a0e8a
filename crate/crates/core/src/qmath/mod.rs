//! Dense complex linear algebra and quantum-state primitives.
//!
//! Everything here is sized for small systems (`d ≤ MAX_DIM`). Types are
//! immutable once constructed and validate their invariants up front, so
//! downstream code can rely on them without re-checking.

mod eigen;
mod matrix;
mod state;

pub use eigen::{hermitian_eigendecomposition, Eigendecomposition};
pub use matrix::{c, r, ComplexMatrix, I};
pub use state::{DensityOperator, Observable, PureState};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 16;
/// Hermiticity / trace / positivity tolerance for validated constructors.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Eigendecomposition reconstruction and basis orthonormality tolerance.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
/// Default off-diagonal bound for classicality checks.
pub const CLASSICALITY_TOL: f64 = 1e-10;
/// Eigenvalue gap at or below which a spectrum counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;
/// Components below this modulus are skipped when fixing eigenvector phases.
pub const PHASE_FIX_THRESHOLD: f64 = 1e-9;

const IMAGINARY_FAIL: f64 = 1e-8;

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Empty);
    }
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
    }
    Ok(())
}

pub(crate) fn check_same_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// `Tr(Q ρ)`.
pub fn expectation(state: &DensityOperator, obs: &Observable) -> Result<f64> {
    check_same_dim("expectation", obs.dim(), state.dim())?;
    let value = obs.matrix().matmul(state.matrix()).trace();
    // Smaller imaginary residue is roundoff and is dropped.
    if value.im.abs() > IMAGINARY_FAIL {
        return Err(Error::Internal(format!(
            "expectation value has imaginary part {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// `⟨q_i|X|q_i⟩` for every eigenvector of `obs`, real parts, no clamping.
pub(crate) fn diagonal_in_basis(x: &ComplexMatrix, obs: &Observable) -> Vec<f64> {
    let v = obs.eigenbasis();
    (0..obs.dim())
        .map(|i| {
            let q = v.column(i);
            let xq = x.apply_vec(&q);
            q.iter().zip(&xq).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
        })
        .collect()
}

/// Outcome probabilities `P_i = ⟨q_i|ρ|q_i⟩` in ascending-eigenvalue order.
pub fn project_probabilities(state: &DensityOperator, obs: &Observable) -> Result<Vec<f64>> {
    check_same_dim("project_probabilities", obs.dim(), state.dim())?;
    let raw = diagonal_in_basis(state.matrix(), obs);
    clamp_probabilities(raw)
}

pub(crate) fn clamp_probabilities(raw: Vec<f64>) -> Result<Vec<f64>> {
    let mut probs = Vec::with_capacity(raw.len());
    for (i, p) in raw.into_iter().enumerate() {
        if p < -VALIDATION_TOL {
            return Err(Error::Internal(format!("outcome {i} has probability {p:.3e}")));
        }
        probs.push(p.clamp(0.0, 1.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > RECONSTRUCTION_TOL {
        return Err(Error::Internal(format!("probabilities sum to {total}")));
    }
    Ok(probs)
}

pub(crate) fn validate_weights(weights: &[f64], expected_len: usize) -> Result<()> {
    if weights.len() != expected_len {
        return Err(Error::InvalidWeights(format!(
            "expected {expected_len} weights, got {}",
            weights.len()
        )));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !w.is_finite() || **w < 0.0)
    {
        return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > VALIDATION_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// `Σ_k p_k |q_k⟩⟨q_k|` in the eigenbasis of `obs`.
pub fn classical_state(obs: &Observable, weights: &[f64]) -> Result<DensityOperator> {
    validate_weights(weights, obs.dim())?;
    let diag: Vec<Complex64> = weights.iter().map(|&w| r(w)).collect();
    let v = obs.eigenbasis();
    let m = v.matmul(&ComplexMatrix::diagonal(&diag)).matmul(&v.adjoint());
    DensityOperator::new(m.hermitian_part())
}

/// Outcome of a classicality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalityCheck {
    pub classical: bool,
    /// Largest off-diagonal modulus of `V†ρV`.
    pub max_off_diagonal: f64,
}

/// Largest off-diagonal modulus of `V† X V` with `V` the eigenbasis of `obs`.
pub(crate) fn max_off_diagonal(x: &ComplexMatrix, obs: &Observable) -> f64 {
    let m = x.in_basis(obs.eigenbasis());
    let mut worst: f64 = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                worst = worst.max(m.get(i, j).norm());
            }
        }
    }
    worst
}

/// Membership in the free-state set: diagonal in the eigenbasis of `obs`.
pub fn is_classical(state: &DensityOperator, obs: &Observable, tol: f64) -> Result<ClassicalityCheck> {
    check_same_dim("is_classical", obs.dim(), state.dim())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let max_off_diagonal = max_off_diagonal(state.matrix(), obs);
    Ok(ClassicalityCheck {
        classical: max_off_diagonal <= tol,
        max_off_diagonal,
    })
}
