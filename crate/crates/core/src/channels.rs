//! Quantum channels in Kraus form.
//!
//! A [`KrausChannel`] is any trace-preserving Kraus list; complete positivity
//! holds by construction. Free (incoherent) channels are built constructively
//! from a [`FreeChannelSpec`] relative to an observable's eigenbasis. Kraus
//! lists produced by [`compose`] and [`mix`] are not reduced: composition
//! multiplies the Kraus count and mixing adds the counts.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmath::{
    check_dim, check_same_dim, hermitian_eigendecomposition, max_off_diagonal, r,
    validate_weights, ComplexMatrix, DensityOperator, Eigendecomposition, Observable,
    CLASSICALITY_TOL, VALIDATION_TOL,
};
use crate::random::{self, complex_gaussian, haar_isometry, random_weights};

/// Bound on `‖Σ K†K − I‖_max`.
pub const TP_TOL: f64 = 1e-9;
/// Unitarity bound for [`unitary_channel`].
pub const UNITARY_TOL: f64 = 1e-9;
/// Maximum number of resamples in [`random_free_channel`].
pub const FREE_SAMPLING_CAP: usize = 1000;
/// Post-selected branches with smaller weight are not normalized.
const BRANCH_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
    tp_residual: f64,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty)?;
        if !first.is_square() {
            return Err(Error::NotSquare {
                rows: first.rows(),
                cols: first.cols(),
            });
        }
        let dim = first.dim();
        check_dim(dim)?;
        for k in &kraus {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator",
                    expected: dim,
                    found: k.rows().max(k.cols()),
                });
            }
        }
        let mut gram = ComplexMatrix::zeros(dim, dim);
        for k in &kraus {
            gram = gram.add(&k.adjoint().matmul(k));
        }
        let tp_residual = gram.max_abs_diff(&ComplexMatrix::identity(dim));
        if tp_residual > TP_TOL {
            return Err(Error::TraceNotPreserved {
                residual: tp_residual,
                bound: TP_TOL,
            });
        }
        Ok(Self {
            dim,
            kraus,
            tp_residual,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Self::new(vec![ComplexMatrix::identity(dim)])
    }

    /// Conjugation by σ_z.
    pub fn pauli_z() -> Self {
        unitary_channel(&ComplexMatrix::pauli_z()).expect("static channel")
    }

    /// Conjugation by σ_x (bit flip).
    pub fn pauli_x() -> Self {
        unitary_channel(&ComplexMatrix::pauli_x()).expect("static channel")
    }

    pub fn hadamard() -> Self {
        unitary_channel(&ComplexMatrix::hadamard()).expect("static channel")
    }

    /// Complete dephasing in the eigenbasis of `obs`: Kraus `{|q_i⟩⟨q_i|}`.
    pub fn dephasing(obs: &Observable) -> Self {
        let kraus = (0..obs.dim())
            .map(|i| obs.eigenstate(i).into_matrix())
            .collect();
        Self::new(kraus).expect("projectors onto an orthonormal basis are trace preserving")
    }

    /// `ρ ↦ (1 − p) ρ + p I/d`, via the d² Weyl operators.
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "depolarizing probability {p} outside [0, 1]"
            )));
        }
        let d = dim as f64;
        let omega = 2.0 * std::f64::consts::PI / d;
        let mut kraus = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let weight = if a == 0 && b == 0 {
                    1.0 - p + p / (d * d)
                } else {
                    p / (d * d)
                };
                let mut w = ComplexMatrix::zeros(dim, dim);
                for k in 0..dim {
                    let phase = Complex64::from_polar(1.0, omega * (b * k) as f64);
                    w.0[((k + a) % dim, k)] = phase * weight.sqrt();
                }
                kraus.push(w);
            }
        }
        Self::new(kraus)
    }

    /// Classical stochastic channel for a column-stochastic `T` (`T[j][i]` is
    /// the probability of `q_i → q_j`), with Kraus `{√T_ji |q_j⟩⟨q_i|}`.
    pub fn stochastic(obs: &Observable, transition: &[Vec<f64>]) -> Result<Self> {
        free_channel(&FreeChannelSpec::stochastic(transition)?, obs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    /// `‖Σ K†K − I‖_max` measured at construction.
    pub fn tp_residual(&self) -> f64 {
        self.tp_residual
    }

    /// `Σ_l K_l X K_l†` for an arbitrary square matrix; linear, no validation
    /// of the output.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_same_dim("channel input", self.dim, x.rows())?;
        check_same_dim("channel input", self.dim, x.cols())?;
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out.0 += &k.0 * &x.0 * k.0.adjoint();
        }
        Ok(out)
    }

    pub fn apply(&self, state: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(state.matrix())?;
        DensityOperator::new(out).map_err(|e| {
            Error::Internal(format!("channel output failed state validation: {e}"))
        })
    }
}

/// `ρ ↦ Σ_l K_l ρ K_l†`.
pub fn apply(channel: &KrausChannel, state: &DensityOperator) -> Result<DensityOperator> {
    channel.apply(state)
}

/// Single-Kraus channel `{u}`.
pub fn unitary_channel(u: &ComplexMatrix) -> Result<KrausChannel> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let deviation = u.isometry_deviation();
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary {
            deviation,
            bound: UNITARY_TOL,
        });
    }
    KrausChannel::new(vec![u.clone()])
}

/// Hermitian generator `A` of the imprint `U(θ) = e^{−iAθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGenerator {
    matrix: ComplexMatrix,
    spectrum: Eigendecomposition,
}

impl UnitaryGenerator {
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
        Ok(Self { matrix, spectrum })
    }

    pub fn pauli_x() -> Self {
        Self::new(ComplexMatrix::pauli_x()).expect("static generator")
    }

    pub fn pauli_z() -> Self {
        Self::new(ComplexMatrix::pauli_z()).expect("static generator")
    }

    /// `cos α σ_x + sin α σ_z`.
    pub fn alpha_family(alpha: f64) -> Result<Self> {
        let m = ComplexMatrix::pauli_x()
            .scale(r(alpha.cos()))
            .add(&ComplexMatrix::pauli_z().scale(r(alpha.sin())));
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `e^{−iAθ}` from the spectral decomposition of `A`.
    pub fn unitary(&self, theta: f64) -> ComplexMatrix {
        let phases: Vec<Complex64> = self
            .spectrum
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * theta))
            .collect();
        let v = &self.spectrum.eigenvectors;
        v.matmul(&ComplexMatrix::diagonal(&phases)).matmul(&v.adjoint())
    }

    /// `‖[A, Q]‖_max`.
    pub fn commutator_norm(&self, obs: &Observable) -> Result<f64> {
        check_same_dim("generator commutator", self.dim(), obs.dim())?;
        Ok(self.matrix.commutator(obs.matrix()).max_abs())
    }
}

/// Unitary channel `η_θ ρ = U(θ) ρ U(θ)†`.
pub fn imprint_channel(generator: &UnitaryGenerator, theta: f64) -> KrausChannel {
    let u = generator.unitary(theta);
    KrausChannel::new(vec![u]).expect("spectral exponential of a Hermitian matrix is unitary")
}

/// `outer ∘ inner`, Kraus `{K_a L_b}`.
pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    check_same_dim("compose", outer.dim, inner.dim)?;
    let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
    for k in &outer.kraus {
        for l in &inner.kraus {
            kraus.push(k.matmul(l));
        }
    }
    KrausChannel::new(kraus)
}

/// Convex combination `Σ p_k Φ_k`, Kraus `{√p_k K_l^(k)}`.
pub fn mix(channels: &[KrausChannel], weights: &[f64]) -> Result<KrausChannel> {
    let first = channels.first().ok_or(Error::Empty)?;
    validate_weights(weights, channels.len())?;
    let mut kraus = Vec::new();
    for (ch, &w) in channels.iter().zip(weights) {
        check_same_dim("mix", first.dim, ch.dim)?;
        let s = r(w.sqrt());
        kraus.extend(ch.kraus.iter().map(|k| k.scale(s)));
    }
    KrausChannel::new(kraus)
}

/// One Kraus operator of incoherent form: `K = Σ_i c(i) |q_{j(i)}⟩⟨q_i|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeKrausTerm {
    pub index_map: Vec<usize>,
    pub coefficients: Vec<Complex64>,
}

/// Kraus list in incoherent form relative to an observable's eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeChannelSpec {
    dim: usize,
    terms: Vec<FreeKrausTerm>,
}

impl FreeChannelSpec {
    pub fn new(dim: usize, terms: Vec<FreeKrausTerm>) -> Result<Self> {
        check_dim(dim)?;
        if terms.is_empty() {
            return Err(Error::Empty);
        }
        for (l, term) in terms.iter().enumerate() {
            if term.index_map.len() != dim || term.coefficients.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "free Kraus term {l} needs {dim} indices and coefficients"
                )));
            }
            if let Some(&j) = term.index_map.iter().find(|&&j| j >= dim) {
                return Err(Error::InvalidArgument(format!(
                    "free Kraus term {l} maps to index {j} outside 0..{dim}"
                )));
            }
            if term
                .coefficients
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(Error::InvalidArgument(format!(
                    "free Kraus term {l} has a non-finite coefficient"
                )));
            }
        }
        Ok(Self { dim, terms })
    }

    /// Single Kraus operator permuting the basis: `|q_i⟩ ↦ |q_{perm[i]}⟩`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let dim = perm.len();
        let mut seen = vec![false; dim];
        for &j in perm {
            if j >= dim || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        Self::new(
            dim,
            vec![FreeKrausTerm {
                index_map: perm.to_vec(),
                coefficients: vec![r(1.0); dim],
            }],
        )
    }

    /// Projective dephasing: one term per basis vector.
    pub fn dephasing(dim: usize) -> Result<Self> {
        let terms = (0..dim)
            .map(|k| FreeKrausTerm {
                index_map: (0..dim).collect(),
                coefficients: (0..dim).map(|i| r(if i == k { 1.0 } else { 0.0 })).collect(),
            })
            .collect();
        Self::new(dim, terms)
    }

    /// One single-column term `√T_ji |q_j⟩⟨q_i|` per positive entry of a
    /// column-stochastic `T`.
    pub fn stochastic(transition: &[Vec<f64>]) -> Result<Self> {
        let dim = transition.len();
        check_dim(dim)?;
        for (j, row) in transition.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "stochastic matrix row {j} has {} entries, expected {dim}",
                    row.len()
                )));
            }
        }
        for i in 0..dim {
            let column: Vec<f64> = transition.iter().map(|row| row[i]).collect();
            validate_weights(&column, dim).map_err(|e| {
                Error::InvalidArgument(format!("stochastic matrix column {i}: {e}"))
            })?;
        }
        let mut terms = Vec::new();
        for (j, row) in transition.iter().enumerate() {
            for (i, &t) in row.iter().enumerate() {
                if t > 0.0 {
                    let mut coefficients = vec![r(0.0); dim];
                    coefficients[i] = r(t.sqrt());
                    terms.push(FreeKrausTerm {
                        index_map: vec![j; dim],
                        coefficients,
                    });
                }
            }
        }
        Self::new(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[FreeKrausTerm] {
        &self.terms
    }

    /// Kraus matrices in the observable's eigenbasis, `V M V†`.
    fn assemble(&self, obs: &Observable) -> Vec<ComplexMatrix> {
        let v = obs.eigenbasis();
        self.terms
            .iter()
            .map(|term| {
                let mut m = ComplexMatrix::zeros(self.dim, self.dim);
                for (i, (&j, &coef)) in term.index_map.iter().zip(&term.coefficients).enumerate() {
                    m.0[(j, i)] += coef;
                }
                v.matmul(&m).matmul(&v.adjoint())
            })
            .collect()
    }
}

/// Assemble and certify a free channel.
///
/// The TP bound is checked on the assembled list, then every eigenstate of
/// `obs` is pushed through the channel and its output checked for
/// classicality.
pub fn free_channel(spec: &FreeChannelSpec, obs: &Observable) -> Result<KrausChannel> {
    check_same_dim("free channel", obs.dim(), spec.dim)?;
    let channel = KrausChannel::new(spec.assemble(obs))?;
    for i in 0..obs.dim() {
        let out = channel.apply(&obs.eigenstate(i))?;
        let off_diagonal = max_off_diagonal(out.matrix(), obs);
        if off_diagonal > CLASSICALITY_TOL {
            return Err(Error::ClassicalityViolated {
                index: i,
                off_diagonal,
            });
        }
    }
    Ok(channel)
}

/// Result of the selective-Kraus freeness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreenessReport {
    pub free: bool,
    /// Worst off-diagonal of `Φ(|q_i⟩⟨q_i|)` over eigenstates.
    pub nonselective_off_diagonal: f64,
    /// Worst off-diagonal of the normalized branches `K_l|q_i⟩⟨q_i|K_l†`.
    pub selective_off_diagonal: f64,
    pub test: &'static str,
}

impl FreenessReport {
    pub fn worst_off_diagonal(&self) -> f64 {
        self.nonselective_off_diagonal.max(self.selective_off_diagonal)
    }
}

/// Operational freeness test for the given Kraus representation.
///
/// Passing means every eigenstate stays classical under the channel and
/// under every post-selected Kraus branch. This certifies the representation
/// at hand; it does not decide whether some other Kraus representation of a
/// failing channel is incoherent.
pub fn is_free(channel: &KrausChannel, obs: &Observable, tol: f64) -> Result<FreenessReport> {
    check_same_dim("is_free", obs.dim(), channel.dim)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut nonselective: f64 = 0.0;
    let mut selective: f64 = 0.0;
    for i in 0..obs.dim() {
        let input = obs.eigenstate(i);
        let out = channel.apply_matrix(input.matrix())?;
        nonselective = nonselective.max(max_off_diagonal(&out, obs));

        let q = obs.eigenvector(i);
        for k in &channel.kraus {
            let branch = k.apply_vec(&q);
            let weight: f64 = branch.iter().map(|z| z.norm_sqr()).sum();
            let mut post = ComplexMatrix::outer(&branch, &branch);
            if weight > BRANCH_FLOOR {
                post = post.scale(r(1.0 / weight));
            }
            selective = selective.max(max_off_diagonal(&post, obs));
        }
    }
    Ok(FreenessReport {
        free: nonselective <= tol && selective <= tol,
        nonselective_off_diagonal: nonselective,
        selective_off_diagonal: selective,
        test: "selective-Kraus test",
    })
}

/// Haar-random channel: a Haar isometry `C^d → C^{d·env_dim}` cut into
/// `env_dim` Kraus blocks.
pub fn random_channel(dim: usize, env_dim: usize, seed: u64) -> Result<KrausChannel> {
    check_dim(dim)?;
    if env_dim == 0 {
        return Err(Error::InvalidArgument("env_dim must be at least 1".into()));
    }
    let iso = haar_isometry(dim * env_dim, dim, &mut random::rng(seed));
    let kraus = (0..env_dim)
        .map(|k| ComplexMatrix(iso.0.rows(k * dim, dim).into_owned()))
        .collect();
    KrausChannel::new(kraus)
}

/// Random channel of incoherent form with `kraus_count` operators.
///
/// Each attempt draws index maps uniformly and Gaussian coefficients, then
/// normalizes so `Σ_l |c_l(i)|² = 1`. That makes the list TP exactly when no
/// cross terms survive; attempts whose TP residual exceeds the bound are
/// redrawn, at most [`FREE_SAMPLING_CAP`] times.
pub fn random_free_channel(obs: &Observable, kraus_count: usize, seed: u64) -> Result<KrausChannel> {
    if kraus_count == 0 {
        return Err(Error::InvalidArgument("kraus_count must be at least 1".into()));
    }
    let dim = obs.dim();
    let mut rng = random::rng(seed);
    for _ in 0..FREE_SAMPLING_CAP {
        let mut terms: Vec<FreeKrausTerm> = (0..kraus_count)
            .map(|_| FreeKrausTerm {
                index_map: (0..dim).map(|_| rng.random_range(0..dim)).collect(),
                coefficients: (0..dim).map(|_| complex_gaussian(&mut rng)).collect(),
            })
            .collect();
        for i in 0..dim {
            let norm = terms
                .iter()
                .map(|t| t.coefficients[i].norm_sqr())
                .sum::<f64>()
                .sqrt();
            for t in &mut terms {
                t.coefficients[i] /= norm;
            }
        }
        let spec = FreeChannelSpec::new(dim, terms)?;
        match free_channel(&spec, obs) {
            Ok(channel) => return Ok(channel),
            Err(Error::TraceNotPreserved { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SamplingFailed {
        cap: FREE_SAMPLING_CAP,
    })
}

/// Classical stochastic channel with independent flat-Dirichlet columns.
pub fn random_stochastic_channel(obs: &Observable, seed: u64) -> Result<KrausChannel> {
    let dim = obs.dim();
    let mut rng = random::rng(seed);
    let columns: Vec<Vec<f64>> = (0..dim).map(|_| random_weights(dim, &mut rng)).collect();
    let transition: Vec<Vec<f64>> = (0..dim)
        .map(|j| (0..dim).map(|i| columns[i][j]).collect())
        .collect();
    KrausChannel::stochastic(obs, &transition)
}

/// Diagonal of `Φ(|q_i⟩⟨q_i|)` for each `i`, as the columns of a matrix
/// `T[j][i]`. For channels whose outputs on eigenstates are classical this is
/// the induced classical transition matrix.
pub fn induced_transition(channel: &KrausChannel, obs: &Observable) -> Result<Vec<Vec<f64>>> {
    check_same_dim("induced_transition", obs.dim(), channel.dim)?;
    let dim = obs.dim();
    let mut t = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        let out = channel.apply_matrix(obs.eigenstate(i).matrix())?;
        for (j, p) in crate::qmath::diagonal_in_basis(&out, obs).into_iter().enumerate() {
            t[j][i] = p;
        }
    }
    Ok(t)
}
