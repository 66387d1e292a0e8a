//! Seeded random sampling of matrices, states and observables.
//!
//! Every sampler takes an explicit generator; there is no shared global
//! state. `rng(seed)` gives a ChaCha8 stream, which is stable across
//! platforms, so a seed fully determines the sampled object.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::Result;
use crate::qmath::{r, ComplexMatrix, DensityOperator, Observable, PureState};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex normal: real and imaginary parts ~ N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. complex Gaussians, filled row-major.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix(DMatrix::from_row_slice(rows, cols, &entries))
}

/// Haar-distributed isometry `C^cols → C^rows` (`rows ≥ cols`).
///
/// QR of a Ginibre matrix, with each column of Q rotated by the phase of the
/// matching diagonal entry of R so the distribution is exactly Haar.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols && cols > 0, "isometry needs rows >= cols > 0");
    let g = ginibre(rows, cols, rng);
    let qr = g.0.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    for j in 0..cols {
        let d = rmat[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for i in 0..rows {
                q[(i, j)] *= phase;
            }
        }
    }
    ComplexMatrix(q)
}

pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    haar_isometry(dim, dim, rng)
}

/// `(G + G†)/2` for Ginibre `G`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(dim, dim, rng).hermitian_part()
}

/// Full-rank mixed state `GG†/Tr(GG†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityOperator> {
    let g = ginibre(dim, dim, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityOperator::new(m.scale(r(1.0 / tr)).hermitian_part())
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    let mut amps: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new(amps)
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn random_weights<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Non-degenerate observable with a Haar-random eigenbasis; consecutive
/// eigenvalues are at least 0.1 apart.
pub fn random_observable<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Observable> {
    let v = haar_unitary(dim, rng);
    let mut level = rng.random_range(-1.0..0.0);
    let values: Vec<Complex64> = (0..dim)
        .map(|_| {
            level += rng.random_range(0.1..1.0);
            r(level)
        })
        .collect();
    let q = v.matmul(&ComplexMatrix::diagonal(&values)).matmul(&v.adjoint());
    Observable::new(q.hermitian_part())
}

/// Hermitian matrix diagonal in the eigenbasis of `obs`, so it commutes with it.
pub fn commuting_hermitian<R: Rng + ?Sized>(obs: &Observable, rng: &mut R) -> ComplexMatrix {
    let values: Vec<Complex64> = (0..obs.dim())
        .map(|_| r(StandardNormal.sample(rng)))
        .collect();
    let v = obs.eigenbasis();
    v.matmul(&ComplexMatrix::diagonal(&values))
        .matmul(&v.adjoint())
        .hermitian_part()
}
