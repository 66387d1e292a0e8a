use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::{DEGENERACY_GAP, PHASE_FIX_THRESHOLD, RECONSTRUCTION_TOL};
use crate::error::{Error, Result};

/// Spectrum of a Hermitian matrix, eigenvalues ascending, eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigendecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Eigendecomposition {
    /// True when two consecutive eigenvalues lie within the degeneracy gap.
    pub fn is_degenerate(&self) -> bool {
        has_degeneracy(&self.eigenvalues)
    }

    /// `V diag(λ) V†`.
    pub fn recompose(&self) -> ComplexMatrix {
        let diag: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect();
        let v = &self.eigenvectors;
        v.matmul(&ComplexMatrix::diagonal(&diag)).matmul(&v.adjoint())
    }
}

pub(crate) fn has_degeneracy(sorted: &[f64]) -> bool {
    sorted.windows(2).any(|w| (w[1] - w[0]).abs() <= DEGENERACY_GAP)
}

/// Rotate each column so its first component with modulus above the
/// threshold is real and positive.
pub(crate) fn fix_phases(v: &mut ComplexMatrix) {
    let m = &mut v.0;
    for j in 0..m.ncols() {
        let Some(pivot) = (0..m.nrows()).find(|&i| m[(i, j)].norm() > PHASE_FIX_THRESHOLD) else {
            continue;
        };
        let z = m[(pivot, j)];
        let rot = z.conj() / z.norm();
        for i in 0..m.nrows() {
            m[(i, j)] *= rot;
        }
        m[(pivot, j)].im = 0.0;
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending (stable for ties) and every eigenvector
/// is phase-fixed, so identical input bits give identical output bits even
/// for degenerate spectra.
pub fn hermitian_eigendecomposition(m: &ComplexMatrix) -> Result<Eigendecomposition> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let deviation = m.hermitian_deviation();
    if deviation > RECONSTRUCTION_TOL {
        return Err(Error::NotHermitian {
            deviation,
            bound: RECONSTRUCTION_TOL,
        });
    }
    let sym = m.hermitian_part();
    let eig = SymmetricEigen::new(sym.0);

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix(eig.eigenvectors.select_columns(order.iter()));
    fix_phases(&mut vectors);

    let out = Eigendecomposition {
        eigenvalues,
        eigenvectors: vectors,
    };
    let residual = out.recompose().max_abs_diff(m);
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::Internal(format!(
            "eigendecomposition reconstruction residual {residual:.3e}"
        )));
    }
    Ok(out)
}
