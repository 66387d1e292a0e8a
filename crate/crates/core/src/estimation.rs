//! Fisher information of the imprint-then-channel family `θ ↦ Φ(η_θ ρ)`.
//!
//! The parameter enters only through the unitary imprint `η_θ` generated by
//! a Hermitian `A`; the channel `Φ` is θ-independent. Probabilities are those
//! of the projective measurement onto the eigenbasis of `Q`, in ascending
//! eigenvalue order. Analytic derivatives use `∂_θ η_θ ρ = −i[A, η_θ ρ]` and
//! the linearity of `Φ`; central finite differences are available as a
//! cross-check.

use serde::Serialize;

use crate::channels::{imprint_channel, KrausChannel, UnitaryGenerator};
use crate::error::{Error, Result};
use crate::qmath::{
    c, check_same_dim, clamp_probabilities, diagonal_in_basis, hermitian_eigendecomposition,
    classical_state, ComplexMatrix, DensityOperator, Observable,
};

/// Outcomes at or below this probability are handled by the singularity policy.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Derivative magnitude above which a zero-probability outcome is singular.
pub const DERIVATIVE_FLOOR: f64 = 1e-9;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const MAX_FD_STEP: f64 = 0.1;
/// Eigenvalue-pair sums at or below this are dropped from the SLD sum.
pub const SLD_FLOOR: f64 = 1e-12;
/// Tolerance on `Σ_l P'_l = 0`.
const DERIVATIVE_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { h: f64 },
}

impl DerivativeMode {
    pub fn finite_difference() -> Self {
        Self::FiniteDifference { h: DEFAULT_FD_STEP }
    }

    fn validate(self) -> Result<Self> {
        if let Self::FiniteDifference { h } = self {
            if !(h > 0.0 && h <= MAX_FD_STEP) {
                return Err(Error::InvalidStep { h });
            }
        }
        Ok(self)
    }
}

impl Default for DerivativeMode {
    fn default() -> Self {
        Self::Analytic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricScenario {
    input_state: DensityOperator,
    generator: UnitaryGenerator,
    channel: KrausChannel,
    observable: Observable,
    theta: f64,
}

impl ParametricScenario {
    pub fn new(
        input_state: DensityOperator,
        generator: UnitaryGenerator,
        channel: KrausChannel,
        observable: Observable,
        theta: f64,
    ) -> Result<Self> {
        let d = observable.dim();
        check_same_dim("scenario input state", d, input_state.dim())?;
        check_same_dim("scenario generator", d, generator.dim())?;
        check_same_dim("scenario channel", d, channel.dim())?;
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("theta must be finite, got {theta}")));
        }
        Ok(Self {
            input_state,
            generator,
            channel,
            observable,
            theta,
        })
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }

    pub fn with_input(&self, input_state: DensityOperator) -> Result<Self> {
        check_same_dim("scenario input state", self.dim(), input_state.dim())?;
        Ok(Self {
            input_state,
            ..self.clone()
        })
    }

    pub fn with_channel(&self, channel: KrausChannel) -> Result<Self> {
        check_same_dim("scenario channel", self.dim(), channel.dim())?;
        Ok(Self {
            channel,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    pub fn input_state(&self) -> &DensityOperator {
        &self.input_state
    }

    pub fn generator(&self) -> &UnitaryGenerator {
        &self.generator
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn imprinted(&self) -> Result<DensityOperator> {
        imprint_channel(&self.generator, self.theta).apply(&self.input_state)
    }

    /// `ρ_f(θ) = Φ(η_θ ρ)`.
    pub fn final_state(&self) -> Result<DensityOperator> {
        self.channel.apply(&self.imprinted()?)
    }

    /// `∂_θ ρ_f = Φ(−i[A, η_θ ρ])`.
    pub fn final_state_derivative(&self) -> Result<ComplexMatrix> {
        let sigma = self.imprinted()?;
        let d = self
            .generator
            .matrix()
            .commutator(sigma.matrix())
            .scale(c(0.0, -1.0));
        self.channel.apply_matrix(&d)
    }
}

/// `P_l(θ) = ⟨q_l|Φ(η_θ ρ)|q_l⟩`.
pub fn outcome_probabilities(s: &ParametricScenario) -> Result<Vec<f64>> {
    let rho_f = s.final_state()?;
    clamp_probabilities(diagonal_in_basis(rho_f.matrix(), &s.observable))
}

/// `P'_l(θ)`, analytic or by central difference.
pub fn probability_derivatives(s: &ParametricScenario, mode: DerivativeMode) -> Result<Vec<f64>> {
    let derivs = match mode.validate()? {
        DerivativeMode::Analytic => diagonal_in_basis(&s.final_state_derivative()?, &s.observable),
        DerivativeMode::FiniteDifference { h } => {
            let plus = outcome_probabilities(&s.with_theta(s.theta + h))?;
            let minus = outcome_probabilities(&s.with_theta(s.theta - h))?;
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect()
        }
    };
    let total: f64 = derivs.iter().sum();
    if total.abs() > DERIVATIVE_SUM_TOL {
        return Err(Error::Internal(format!(
            "probability derivatives sum to {total:.3e}"
        )));
    }
    Ok(derivs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeContribution {
    pub probability: f64,
    pub derivative: f64,
    /// `P'²/P`, or 0 under the zero-probability policy.
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherResult {
    pub value: f64,
    pub contributions: Vec<OutcomeContribution>,
    pub mode: DerivativeMode,
    /// Outcomes with `P ≤ PROBABILITY_FLOOR` but `|P'| > DERIVATIVE_FLOOR`.
    /// Always empty from the strict entry points, which error instead.
    pub singular_outcomes: Vec<usize>,
}

/// `Σ_l P'_l²/P_l` with the zero-probability policy.
///
/// Outcomes at the probability floor contribute 0 when their derivative is
/// also negligible. Otherwise they are singular: strict evaluation returns
/// [`Error::SingularOutcome`], lenient evaluation records the index and
/// leaves the term out of the sum.
pub fn fisher_from_probabilities(
    probabilities: &[f64],
    derivatives: &[f64],
    mode: DerivativeMode,
    strict: bool,
) -> Result<FisherResult> {
    if probabilities.len() != derivatives.len() {
        return Err(Error::DimensionMismatch {
            context: "fisher terms",
            expected: probabilities.len(),
            found: derivatives.len(),
        });
    }
    let mut contributions = Vec::with_capacity(probabilities.len());
    let mut singular_outcomes = Vec::new();
    let mut value = 0.0;
    for (index, (&p, &dp)) in probabilities.iter().zip(derivatives).enumerate() {
        let term = if p > PROBABILITY_FLOOR {
            dp * dp / p
        } else if dp.abs() <= DERIVATIVE_FLOOR {
            0.0
        } else if strict {
            return Err(Error::SingularOutcome {
                index,
                probability: p,
                derivative: dp,
            });
        } else {
            singular_outcomes.push(index);
            contributions.push(OutcomeContribution {
                probability: p,
                derivative: dp,
                term: f64::INFINITY,
            });
            continue;
        };
        value += term;
        contributions.push(OutcomeContribution {
            probability: p,
            derivative: dp,
            term,
        });
    }
    Ok(FisherResult {
        value,
        contributions,
        mode,
        singular_outcomes,
    })
}

/// Classical Fisher information of the `{|q⟩⟨q|}` measurement.
pub fn fisher_information(s: &ParametricScenario, mode: DerivativeMode) -> Result<FisherResult> {
    let probs = outcome_probabilities(s)?;
    let derivs = probability_derivatives(s, mode)?;
    fisher_from_probabilities(&probs, &derivs, mode, true)
}

/// As [`fisher_information`], but singular outcomes are recorded rather
/// than raised.
pub fn fisher_information_lenient(
    s: &ParametricScenario,
    mode: DerivativeMode,
) -> Result<FisherResult> {
    let probs = outcome_probabilities(s)?;
    let derivs = probability_derivatives(s, mode)?;
    fisher_from_probabilities(&probs, &derivs, mode, false)
}

/// Invasiveness quantifier `I(Φ∘η_θ)`: analytic Fisher information of the
/// final state in the eigenbasis of `Q`.
pub fn invasiveness_quantifier(s: &ParametricScenario) -> Result<f64> {
    Ok(fisher_information(s, DerivativeMode::Analytic)?.value)
}

/// `4 sin²θ cos²α / (1 − cos²θ cos²α)`.
pub fn closed_form_alpha_family(theta: f64, alpha: f64) -> Result<f64> {
    let (ct, ca) = (theta.cos().powi(2), alpha.cos().powi(2));
    let denominator = 1.0 - ct * ca;
    if denominator <= 1e-12 {
        return Err(Error::RemovableSingularity { theta, alpha });
    }
    Ok(4.0 * theta.sin().powi(2) * ca / denominator)
}

/// Quantum Fisher information from the symmetric logarithmic derivative:
/// `2 Σ_{m,n} |⟨m|∂ρ|n⟩|² / (λ_m + λ_n)` over pairs with `λ_m + λ_n > SLD_FLOOR`.
pub fn quantum_fisher_information(s: &ParametricScenario) -> Result<f64> {
    let rho_f = s.final_state()?;
    let spectrum = hermitian_eigendecomposition(rho_f.matrix())?;
    let d_rho = s.final_state_derivative()?.in_basis(&spectrum.eigenvectors);
    let lambda = &spectrum.eigenvalues;
    let mut total = 0.0;
    for m in 0..lambda.len() {
        for n in 0..lambda.len() {
            let denom = lambda[m] + lambda[n];
            if denom > SLD_FLOOR {
                total += 2.0 * d_rho.get(m, n).norm_sqr() / denom;
            }
        }
    }
    Ok(total)
}

/// Cramér–Rao lower bound on the standard deviation, `1/√(ν F)`.
pub fn cramer_rao_bound(realizations: f64, fisher: f64) -> Result<f64> {
    if !(realizations > 0.0) || !(fisher >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need realizations > 0 and fisher >= 0, got {realizations} and {fisher}"
        )));
    }
    Ok(1.0 / (realizations * fisher).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSupremum {
    pub value: f64,
    /// Weights of the maximizing classical input.
    pub weights: Vec<f64>,
    pub grid_points: usize,
    /// Grid points skipped because an outcome was singular.
    pub singular_points: usize,
}

/// All weight vectors with entries in `{0, 1/steps, …, 1}` summing to 1.
pub(crate) fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn fill(prefix: &mut Vec<usize>, remaining: usize, slots: usize, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            fill(prefix, remaining - k, slots - 1, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    fill(&mut Vec::new(), steps, dim, &mut raw);
    raw.into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / steps as f64).collect())
        .collect()
}

/// Quantifier maximized over classical inputs on a simplex grid (`d ≤ 3`).
///
/// The grid includes every eigenstate. Fisher information is convex under
/// θ-independent mixing of the input, so the exact supremum over classical
/// inputs sits at an eigenstate and the grid maximum equals it.
pub fn quantifier_sup_over_classical(s: &ParametricScenario, steps: usize) -> Result<ClassicalSupremum> {
    let d = s.dim();
    if d > 3 {
        return Err(Error::InvalidArgument(format!(
            "classical-input grid is limited to d <= 3, got {d}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("grid steps must be at least 1".into()));
    }
    let grid = simplex_grid(d, steps);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut singular_points = 0;
    for weights in &grid {
        let input = classical_state(&s.observable, weights)?;
        match fisher_information(&s.with_input(input)?, DerivativeMode::Analytic) {
            Ok(f) => {
                if best.as_ref().is_none_or(|(v, _)| f.value > *v) {
                    best = Some((f.value, weights.clone()));
                }
            }
            Err(Error::SingularOutcome { .. }) => singular_points += 1,
            Err(e) => return Err(e),
        }
    }
    let (value, weights) = best.ok_or_else(|| {
        Error::Internal("every classical grid point had a singular outcome".into())
    })?;
    Ok(ClassicalSupremum {
        value,
        weights,
        grid_points: grid.len(),
        singular_points,
    })
}
