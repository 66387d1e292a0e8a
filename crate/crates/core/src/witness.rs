//! Two-experiment invasiveness witness with control experiments.
//!
//! Experiment 1 applies the channel before measuring; experiment 2 skips it.
//! An optional post transform runs in both experiments right before the
//! measurement, and in every control run. The witness is
//! `W = ⟨Q⟩₁ − ⟨Q⟩₂`; the controls `W_q` repeat the protocol with each
//! eigenstate of `Q` as input.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::Serialize;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::qmath::{check_same_dim, expectation, project_probabilities, DensityOperator, Observable};
use crate::random;

/// Default verdict tolerance for exact evaluation.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessScenario {
    input_state: DensityOperator,
    channel: KrausChannel,
    post_transform: Option<KrausChannel>,
    observable: Observable,
}

impl WitnessScenario {
    pub fn new(
        input_state: DensityOperator,
        channel: KrausChannel,
        post_transform: Option<KrausChannel>,
        observable: Observable,
    ) -> Result<Self> {
        let d = observable.dim();
        check_same_dim("witness input state", d, input_state.dim())?;
        check_same_dim("witness channel", d, channel.dim())?;
        if let Some(post) = &post_transform {
            check_same_dim("witness post transform", d, post.dim())?;
        }
        Ok(Self {
            input_state,
            channel,
            post_transform,
            observable,
        })
    }

    pub fn input_state(&self) -> &DensityOperator {
        &self.input_state
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn post_transform(&self) -> Option<&KrausChannel> {
        self.post_transform.as_ref()
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    /// Same protocol with a different input state.
    pub fn with_input(&self, input_state: DensityOperator) -> Result<Self> {
        Self::new(
            input_state,
            self.channel.clone(),
            self.post_transform.clone(),
            self.observable.clone(),
        )
    }

    fn post(&self, state: DensityOperator) -> Result<DensityOperator> {
        match &self.post_transform {
            Some(t) => t.apply(&state),
            None => Ok(state),
        }
    }

    /// States reaching the detector in experiments 1 and 2.
    pub fn measured_states(&self) -> Result<(DensityOperator, DensityOperator)> {
        let first = self.post(self.channel.apply(&self.input_state)?)?;
        let second = self.post(self.input_state.clone())?;
        Ok((first, second))
    }

    /// `(⟨Q⟩₁, ⟨Q⟩₂)`.
    pub fn experiments(&self) -> Result<ExperimentPair> {
        let (first, second) = self.measured_states()?;
        Ok(ExperimentPair {
            with_channel: expectation(&first, &self.observable)?,
            without_channel: expectation(&second, &self.observable)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentPair {
    pub with_channel: f64,
    pub without_channel: f64,
}

impl ExperimentPair {
    pub fn witness(&self) -> f64 {
        self.with_channel - self.without_channel
    }

    /// Experiment roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            with_channel: self.without_channel,
            without_channel: self.with_channel,
        }
    }
}

/// `W = Tr(Q·T(Φ(ρ))) − Tr(Q·T(ρ))`, `T` the post transform.
pub fn run_witness(scenario: &WitnessScenario) -> Result<f64> {
    Ok(scenario.experiments()?.witness())
}

/// `W_q` for each eigenstate of `Q`, ascending eigenvalue order.
pub fn run_controls(scenario: &WitnessScenario) -> Result<Vec<f64>> {
    let obs = scenario.observable();
    (0..obs.dim())
        .map(|i| run_witness(&scenario.with_input(obs.eigenstate(i))?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub w: f64,
    pub controls: Vec<f64>,
    pub band: (f64, f64),
    /// `|W| > tol` with every `|W_q| ≤ tol`.
    pub verdict_strict: bool,
    /// `W` outside `[min W_q, max W_q]` by more than `tol`.
    pub verdict_band: bool,
    pub tolerance: f64,
}

impl WitnessReport {
    pub fn assemble(w: f64, controls: Vec<f64>, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        let lo = controls.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = controls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let controls_quiet = controls.iter().all(|x| x.abs() <= tolerance);
        Ok(Self {
            w,
            band: (lo, hi),
            verdict_strict: w.abs() > tolerance && controls_quiet,
            verdict_band: w < lo - tolerance || w > hi + tolerance,
            controls,
            tolerance,
        })
    }
}

pub fn witness_report(scenario: &WitnessScenario, tolerance: f64) -> Result<WitnessReport> {
    WitnessReport::assemble(run_witness(scenario)?, run_controls(scenario)?, tolerance)
}

/// Witness estimated from `shots` simulated detector clicks per experiment.
///
/// Every experiment (main pair, then each control pair in eigenvalue order)
/// draws from one seeded stream, so a seed fixes the whole report.
pub fn sampled_witness_report(
    scenario: &WitnessScenario,
    shots: usize,
    seed: u64,
    tolerance: f64,
) -> Result<WitnessReport> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let mut rng = random::rng(seed);
    let obs = scenario.observable();
    let mut estimate = |state: &DensityOperator| -> Result<f64> {
        let probs = project_probabilities(state, obs)?;
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::Internal(format!("outcome distribution: {e}")))?;
        let total: f64 = (0..shots)
            .map(|_| obs.eigenvalues()[dist.sample(&mut rng)])
            .sum();
        Ok(total / shots as f64)
    };
    let mut sampled_w = |s: &WitnessScenario| -> Result<f64> {
        let (first, second) = s.measured_states()?;
        Ok(estimate(&first)? - estimate(&second)?)
    };
    let w = sampled_w(scenario)?;
    let controls = (0..obs.dim())
        .map(|i| sampled_w(&scenario.with_input(obs.eigenstate(i))?))
        .collect::<Result<Vec<_>>>()?;
    WitnessReport::assemble(w, controls, tolerance)
}
