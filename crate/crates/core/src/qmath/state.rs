use num_complex::Complex64;

use super::eigen::{fix_phases, has_degeneracy, hermitian_eigendecomposition};
use super::matrix::ComplexMatrix;
use super::{check_dim, RECONSTRUCTION_TOL, VALIDATION_TOL};
use crate::error::{Error, Result};

/// Positive semidefinite, unit-trace, Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        check_dim(matrix.dim())?;
        let deviation = matrix.hermitian_deviation();
        if deviation > VALIDATION_TOL {
            return Err(Error::NotHermitian {
                deviation,
                bound: VALIDATION_TOL,
            });
        }
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > VALIDATION_TOL {
            return Err(Error::TraceNotOne {
                trace: trace.re,
                bound: VALIDATION_TOL,
            });
        }
        let spectrum = hermitian_eigendecomposition(&matrix)?;
        let min_eigenvalue = spectrum.eigenvalues[0];
        if min_eigenvalue < -VALIDATION_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue,
                bound: VALIDATION_TOL,
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = state.amplitudes();
        Self {
            matrix: ComplexMatrix::outer(a, a),
        }
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            matrix: ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        })
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        Ok(Self::from_pure(&PureState::basis(dim, index)?))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Convex combination `(1 − w)·self + w·other`.
    pub fn mix_with(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "state mixture",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidWeights(format!("mixing weight {weight} outside [0, 1]")));
        }
        let m = self
            .matrix
            .scale(Complex64::new(1.0 - weight, 0.0))
            .add(&other.matrix.scale(Complex64::new(weight, 0.0)));
        Self::new(m)
    }
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty);
        }
        check_dim(amplitudes.len())?;
        if let Some(row) = amplitudes
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { row, col: 0 });
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized {
                norm: norm_sq.sqrt(),
                bound: VALIDATION_TOL,
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self::new(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// Hermitian observable together with the eigenbasis that defines its
/// classical states.
///
/// Eigenvalues are ascending and every outcome-indexed quantity in the crate
/// follows this order. When the spectrum is degenerate the classical basis
/// is a choice; `is_degenerate` reports it and `with_eigenbasis` lets the
/// caller fix it explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenbasis: ComplexMatrix,
    degenerate: bool,
    explicit_basis: bool,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        check_dim(matrix.dim())?;
        let deviation = matrix.hermitian_deviation();
        if deviation > VALIDATION_TOL {
            return Err(Error::NotHermitian {
                deviation,
                bound: VALIDATION_TOL,
            });
        }
        let spectrum = hermitian_eigendecomposition(&matrix)?;
        let degenerate = spectrum.is_degenerate();
        Ok(Self {
            matrix,
            eigenvalues: spectrum.eigenvalues,
            eigenbasis: spectrum.eigenvectors,
            degenerate,
            explicit_basis: false,
        })
    }

    /// Observable with a caller-chosen orthonormal eigenbasis (columns).
    ///
    /// Columns are reordered by ascending eigenvalue (stable) and phase-fixed.
    pub fn with_eigenbasis(matrix: ComplexMatrix, basis: ComplexMatrix) -> Result<Self> {
        let plain = Self::new(matrix)?;
        if basis.rows() != plain.dim() || basis.cols() != plain.dim() {
            return Err(Error::DimensionMismatch {
                context: "observable eigenbasis",
                expected: plain.dim(),
                found: basis.rows().max(basis.cols()),
            });
        }
        let deviation = basis.isometry_deviation();
        if deviation > RECONSTRUCTION_TOL {
            return Err(Error::NotOrthonormal {
                deviation,
                bound: RECONSTRUCTION_TOL,
            });
        }
        let diag = plain.matrix.in_basis(&basis);
        let values: Vec<f64> = (0..plain.dim()).map(|i| diag.get(i, i).re).collect();
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let mut eigenbasis = ComplexMatrix(basis.0.select_columns(order.iter()));
        fix_phases(&mut eigenbasis);

        let lambda: Vec<Complex64> = eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect();
        let residual = plain
            .matrix
            .matmul(&eigenbasis)
            .max_abs_diff(&eigenbasis.matmul(&ComplexMatrix::diagonal(&lambda)));
        if residual > RECONSTRUCTION_TOL {
            return Err(Error::NotEigenbasis { residual });
        }
        Ok(Self {
            degenerate: has_degeneracy(&eigenvalues),
            matrix: plain.matrix,
            eigenvalues,
            eigenbasis,
            explicit_basis: true,
        })
    }

    pub fn pauli_z() -> Self {
        Self::new(ComplexMatrix::pauli_z()).expect("static observable")
    }

    pub fn pauli_x() -> Self {
        Self::new(ComplexMatrix::pauli_x()).expect("static observable")
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the classical basis vectors `|q_i⟩`.
    pub fn eigenbasis(&self) -> &ComplexMatrix {
        &self.eigenbasis
    }

    pub fn eigenvector(&self, index: usize) -> Vec<Complex64> {
        self.eigenbasis.column(index)
    }

    /// `|q_i⟩⟨q_i|`.
    pub fn eigenstate(&self, index: usize) -> DensityOperator {
        let v = self.eigenvector(index);
        DensityOperator {
            matrix: ComplexMatrix::outer(&v, &v),
        }
    }

    /// True when some eigenvalue gap is within the degeneracy threshold;
    /// classical-state results then depend on the basis choice.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn has_explicit_basis(&self) -> bool {
        self.explicit_basis
    }
}
