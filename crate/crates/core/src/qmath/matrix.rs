use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with finite entries.
///
/// Thin wrapper over [`DMatrix`] that refuses NaN/Inf at construction. All
/// operators in the crate (observables, generators, Kraus operators) are
/// carried by this type.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(pub(crate) DMatrix<Complex64>);

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl ComplexMatrix {
    /// Build from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                rows,
                cols,
                found: entries.len(),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Build from a list of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != ncols) {
            return Err(Error::ShapeMismatch {
                rows: nrows,
                cols: ncols,
                found: bad.len(),
            });
        }
        Self::from_row_major(nrows, ncols, rows.concat())
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| r(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Empty);
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                values[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        Self(DMatrix::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj()))
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("static matrix")
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(&[vec![r(0.0), -I], vec![I, r(0.0)]]).expect("static matrix")
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).expect("static matrix")
    }

    /// `(1/√2) [[1, 1], [1, -1]]`.
    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real_rows(&[&[s, s], &[s, -s]]).expect("static matrix")
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self(&self.0 * &rhs.0)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self(&self.0 + &rhs.0)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self(&self.0 - &rhs.0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    /// `AB - BA`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        Self(&self.0 * &rhs.0 - &rhs.0 * &self.0)
    }

    /// `M v` for a column vector.
    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖self − other‖_max`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.0.shape() != other.0.shape() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖M − M†‖_max`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `‖M†M − I‖_max`.
    pub fn isometry_deviation(&self) -> f64 {
        let gram = self.adjoint().matmul(self);
        gram.max_abs_diff(&Self::identity(self.cols()))
    }

    /// `(M + M†)/2`.
    pub(crate) fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// `V† M V`.
    pub fn in_basis(&self, basis: &Self) -> Self {
        Self(basis.0.adjoint() * &self.0 * &basis.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.6}{:+.6}i", z.re, z.im)?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_nonfinite() {
        let ragged = ComplexMatrix::from_rows(&[vec![r(1.0), r(0.0)], vec![r(1.0)]]);
        assert!(matches!(ragged, Err(Error::ShapeMismatch { .. })));
        let nan = ComplexMatrix::from_real_rows(&[&[1.0, f64::NAN]]);
        assert_eq!(nan, Err(Error::NonFinite { row: 0, col: 1 }));
        assert_eq!(ComplexMatrix::from_rows(&[]), Err(Error::Empty));
    }

    #[test]
    fn row_major_roundtrip() {
        let entries = vec![c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0), c(9.0, 0.0), c(0.0, 1.0)];
        let m = ComplexMatrix::from_row_major(2, 3, entries.clone()).unwrap();
        assert_eq!(m.get(0, 2), c(5.0, 6.0));
        assert_eq!(m.to_row_major(), entries);
    }

    #[test]
    fn paulis_and_hadamard() {
        let (x, y, z) = (
            ComplexMatrix::pauli_x(),
            ComplexMatrix::pauli_y(),
            ComplexMatrix::pauli_z(),
        );
        // XY = iZ
        assert!(x.matmul(&y).max_abs_diff(&z.scale(I)) < 1e-15);
        let h = ComplexMatrix::hadamard();
        assert!(h.isometry_deviation() < 1e-15);
        assert!(h.hermitian_deviation() == 0.0);
        assert!(x.commutator(&z).max_abs_diff(&y.scale(c(0.0, -2.0))) < 1e-15);
    }
}
