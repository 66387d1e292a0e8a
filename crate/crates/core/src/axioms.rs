//! Randomized certification of the quantifier axioms.
//!
//! Each suite runs independent trials; trial `t` uses seed `seed + t` and
//! dimension `dims[t % dims.len()]`, and [`run_trial`] rebuilds any trial from
//! its `(suite, seed, dimension)` alone. A failing inequality is recorded as
//! data on the trial, never raised.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    compose, imprint_channel, mix, random_channel, random_free_channel, random_stochastic_channel,
    FreeChannelSpec, KrausChannel, UnitaryGenerator, free_channel,
};
use crate::error::{Error, Result};
use crate::estimation::{
    fisher_from_probabilities, fisher_information, outcome_probabilities, probability_derivatives,
    simplex_grid, DerivativeMode, ParametricScenario,
};
use crate::qmath::{
    check_same_dim, classical_state, max_off_diagonal, DensityOperator, Observable, MAX_DIM,
};
use crate::random::{self, commuting_hermitian, random_density, random_hermitian, random_observable, random_weights, SeededRng};

/// Slack allowed on every certified inequality.
pub const AXIOM_TOL: f64 = 1e-9;
/// Tolerance for the exact identities (endpoint equalities, mixture probabilities).
pub const IDENTITY_TOL: f64 = 1e-10;
/// Probability floor for the per-outcome convexity inequality.
pub const OUTCOME_FLOOR: f64 = 1e-10;
/// Quantifier level above which the coherence link must show coherence.
pub const INFORMATIVE_LEVEL: f64 = 1e-6;
/// Bound on the deviation of a classical input under a commuting imprint.
const FREE_IMPRINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Positivity,
    Monotonicity,
    Convexity,
    Coherence,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Positivity,
        Suite::Monotonicity,
        Suite::Convexity,
        Suite::Coherence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Positivity => "positivity",
            Suite::Monotonicity => "monotonicity",
            Suite::Convexity => "convexity",
            Suite::Coherence => "coherence",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown axiom suite `{s}`")))
    }
}

/// One inequality `lhs ≤ rhs + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    /// `max(0, lhs − rhs − tolerance)`.
    pub violation: f64,
}

impl InequalityCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let excess = lhs - rhs - tolerance;
        Self {
            name: name.into(),
            lhs,
            rhs,
            tolerance,
            // NaN on either side counts as a violation.
            violation: if excess.is_nan() { f64::INFINITY } else { excess.max(0.0) },
        }
    }

    /// `|a − b| ≤ tolerance`.
    pub fn equal(name: impl Into<String>, a: f64, b: f64, tolerance: f64) -> Self {
        Self::new(name, (a - b).abs(), 0.0, tolerance)
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomTrial {
    pub suite: Suite,
    pub seed: u64,
    pub dimension: usize,
    pub theta: f64,
    /// `γ` for convexity trials.
    pub mixing_weight: Option<f64>,
    pub checks: Vec<InequalityCheck>,
    /// Set when the trial could not be evaluated; such a trial fails.
    pub error: Option<String>,
    #[serde(skip)]
    pub scenario: Option<ParametricScenario>,
    #[serde(skip)]
    pub free_pre: Option<KrausChannel>,
    #[serde(skip)]
    pub free_post: Option<KrausChannel>,
}

impl AxiomTrial {
    fn empty(suite: Suite, seed: u64, dimension: usize) -> Self {
        Self {
            suite,
            seed,
            dimension,
            theta: 0.0,
            mixing_weight: None,
            checks: Vec::new(),
            error: None,
            scenario: None,
            free_pre: None,
            free_post: None,
        }
    }

    pub fn violation(&self) -> f64 {
        if self.error.is_some() {
            return f64::INFINITY;
        }
        self.checks.iter().map(|c| c.violation).fold(0.0, f64::max)
    }

    /// Largest `lhs − rhs` over the checks: how close the trial came to failing.
    pub fn worst_margin(&self) -> f64 {
        if self.error.is_some() {
            return f64::INFINITY;
        }
        self.checks
            .iter()
            .map(InequalityCheck::margin)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.violation() == 0.0
    }

    fn push(&mut self, check: InequalityCheck) {
        self.checks.push(check);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub checks: usize,
    pub worst_violation: f64,
    pub worst_margin: f64,
    /// Seeds of the five trials with the largest margin, worst first.
    pub worst_seeds: Vec<u64>,
}

impl SuiteReport {
    pub fn summarize(suite: Suite, trials: &[AxiomTrial]) -> Self {
        let passed = trials.iter().filter(|t| t.passed()).count();
        let mut ranked: Vec<&AxiomTrial> = trials.iter().collect();
        // Stable sort keeps trial order among ties.
        ranked.sort_by(|a, b| b.worst_margin().total_cmp(&a.worst_margin()));
        Self {
            suite,
            trials: trials.len(),
            passed,
            failed: trials.len() - passed,
            errors: trials.iter().filter(|t| t.error.is_some()).count(),
            checks: trials.iter().map(|t| t.checks.len()).sum(),
            worst_violation: trials.iter().map(AxiomTrial::violation).fold(0.0, f64::max),
            worst_margin: ranked.first().map_or(f64::NEG_INFINITY, |t| t.worst_margin()),
            worst_seeds: ranked.iter().take(5).map(|t| t.seed).collect(),
        }
    }

    pub fn clean(&self) -> bool {
        self.failed == 0
    }
}

fn validate_suite_args(trials: usize, dims: &[usize]) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if dims.is_empty() {
        return Err(Error::InvalidArgument("at least one dimension is required".into()));
    }
    if let Some(d) = dims.iter().find(|d| !(2..=MAX_DIM).contains(*d)) {
        return Err(Error::InvalidArgument(format!(
            "dimension {d} outside 2..={MAX_DIM}"
        )));
    }
    Ok(())
}

/// Runs `trials` trials in parallel; results come back in trial order.
pub fn run_suite(suite: Suite, trials: usize, dims: &[usize], seed: u64) -> Result<Vec<AxiomTrial>> {
    validate_suite_args(trials, dims)?;
    Ok((0..trials)
        .into_par_iter()
        .map(|t| run_trial(suite, seed.wrapping_add(t as u64), dims[t % dims.len()]))
        .collect())
}

/// Rebuilds and evaluates a single trial.
pub fn run_trial(suite: Suite, seed: u64, dimension: usize) -> AxiomTrial {
    let mut trial = AxiomTrial::empty(suite, seed, dimension);
    let outcome = match suite {
        Suite::Positivity => positivity_trial(&mut trial),
        Suite::Monotonicity => monotonicity_trial(&mut trial),
        Suite::Convexity => convexity_trial(&mut trial),
        Suite::Coherence => coherence_trial(&mut trial),
    };
    if let Err(e) = outcome {
        trial.error = Some(e.to_string());
    }
    trial
}

pub fn check_positivity(trials: usize, dims: &[usize], seed: u64) -> Result<Vec<AxiomTrial>> {
    run_suite(Suite::Positivity, trials, dims, seed)
}

pub fn check_monotonicity(trials: usize, dims: &[usize], seed: u64) -> Result<Vec<AxiomTrial>> {
    run_suite(Suite::Monotonicity, trials, dims, seed)
}

pub fn check_convexity(trials: usize, dims: &[usize], seed: u64) -> Result<Vec<AxiomTrial>> {
    run_suite(Suite::Convexity, trials, dims, seed)
}

pub fn check_coherence_link(trials: usize, dims: &[usize], seed: u64) -> Result<Vec<AxiomTrial>> {
    run_suite(Suite::Coherence, trials, dims, seed)
}

/// `Σ_{i≠j} |ρ_ij|` in the eigenbasis of `obs`.
pub fn l1_coherence(state: &DensityOperator, obs: &Observable) -> Result<f64> {
    check_same_dim("l1_coherence", obs.dim(), state.dim())?;
    let m = state.matrix().in_basis(obs.eigenbasis());
    let mut total = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                total += m.get(i, j).norm();
            }
        }
    }
    Ok(total)
}

fn draw_theta(rng: &mut SeededRng) -> f64 {
    rng.random_range(0.05..std::f64::consts::PI - 0.05)
}

/// A certified-free channel of one of four kinds.
fn draw_free_channel(obs: &Observable, rng: &mut SeededRng) -> Result<KrausChannel> {
    let sub_seed: u64 = rng.random();
    match rng.random_range(0..4) {
        0 => random_free_channel(obs, rng.random_range(1..=2), sub_seed),
        1 => random_stochastic_channel(obs, sub_seed),
        2 => free_channel(&FreeChannelSpec::dephasing(obs.dim())?, obs),
        _ => {
            let mut perm: Vec<usize> = (0..obs.dim()).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            free_channel(&FreeChannelSpec::permutation(&perm)?, obs)
        }
    }
}

/// Random mixed input, observable, Stinespring channel and generator.
fn draw_scenario(dim: usize, rng: &mut SeededRng) -> Result<ParametricScenario> {
    let obs = random_observable(dim, rng)?;
    let rho = random_density(dim, rng)?;
    let channel = random_channel(dim, 2, rng.random())?;
    let generator = UnitaryGenerator::new(random_hermitian(dim, rng))?;
    ParametricScenario::new(rho, generator, channel, obs, draw_theta(rng))
}

fn quantifier(s: &ParametricScenario) -> Result<f64> {
    Ok(fisher_information(s, DerivativeMode::Analytic)?.value)
}

fn positivity_trial(trial: &mut AxiomTrial) -> Result<()> {
    let mut rng = random::rng(trial.seed);
    let base = draw_scenario(trial.dimension, &mut rng)?;
    trial.theta = base.theta();
    trial.push(InequalityCheck::new("I >= 0", 0.0, quantifier(&base)?, 0.0));

    // Free channel, classical input, commuting generator: no information.
    let obs = base.observable().clone();
    let free = draw_free_channel(&obs, &mut rng)?;
    let classical = classical_state(&obs, &random_weights(trial.dimension, &mut rng))?;
    let generator = UnitaryGenerator::new(commuting_hermitian(&obs, &mut rng))?;
    let null = ParametricScenario::new(classical, generator, free.clone(), obs, base.theta())?;
    trial.push(InequalityCheck::new("I(free) <= 0", quantifier(&null)?, 0.0, AXIOM_TOL));

    trial.scenario = Some(base);
    trial.free_post = Some(free);
    Ok(())
}

fn simplex_steps(dim: usize) -> usize {
    match dim {
        2 => 10,
        3 => 6,
        _ => 1,
    }
}

/// Largest quantifier over the classical grid inputs, each mapped by `prepare`.
/// Grid points with a singular outcome are skipped.
fn classical_supremum(
    s: &ParametricScenario,
    prepare: impl Fn(DensityOperator) -> Result<DensityOperator>,
) -> Result<f64> {
    let obs = s.observable();
    let mut best = f64::NEG_INFINITY;
    for w in simplex_grid(obs.dim(), simplex_steps(obs.dim())) {
        let input = prepare(classical_state(obs, &w)?)?;
        match quantifier(&s.with_input(input)?) {
            Ok(v) => best = best.max(v),
            Err(Error::SingularOutcome { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Internal("no regular classical grid point".into()));
    }
    Ok(best)
}

/// Monotonicity under free dressing.
///
/// The post-composition check uses the base input directly. The
/// pre-composition check compares suprema over classical inputs: a free
/// pre-operation maps classical states to classical states, and the
/// θ-dependent free factor `[η_θ]_Free` (generated by a Hermitian diagonal in
/// the `Q` basis) leaves them unchanged, which is verified on every grid point.
fn monotonicity_trial(trial: &mut AxiomTrial) -> Result<()> {
    let mut rng = random::rng(trial.seed);
    let base = draw_scenario(trial.dimension, &mut rng)?;
    trial.theta = base.theta();
    let obs = base.observable().clone();
    let pre = draw_free_channel(&obs, &mut rng)?;
    let post = draw_free_channel(&obs, &mut rng)?;
    let free_imprint = imprint_channel(
        &UnitaryGenerator::new(commuting_hermitian(&obs, &mut rng))?,
        base.theta(),
    );

    let i_base = quantifier(&base)?;
    let post_only = base.with_channel(compose(&post, base.channel())?)?;
    trial.push(InequalityCheck::new(
        "I(post . phi) <= I(phi)",
        quantifier(&post_only)?,
        i_base,
        AXIOM_TOL,
    ));

    let sup_base = classical_supremum(&base, Ok)?;
    let worst_shift = std::cell::Cell::new(0.0_f64);
    let sup_dressed = classical_supremum(&post_only, |gamma| {
        let moved = pre.apply(&gamma)?;
        let imprinted = free_imprint.apply(&moved)?;
        worst_shift.set(worst_shift.get().max(imprinted.matrix().max_abs_diff(moved.matrix())));
        Ok(imprinted)
    })?;
    trial.push(InequalityCheck::new(
        "free imprint fixes classical inputs",
        worst_shift.get(),
        0.0,
        FREE_IMPRINT_TOL,
    ));
    trial.push(InequalityCheck::new(
        "sup I(post . phi . pre) <= sup I(phi)",
        sup_dressed,
        sup_base,
        AXIOM_TOL,
    ));

    trial.scenario = Some(base);
    trial.free_pre = Some(pre);
    trial.free_post = Some(post);
    Ok(())
}

/// Per-outcome terms of the mixed family, checked against the convexity
/// inequality and the exact gap identity
/// `rhs − lhs = γ(1−γ)(P G' − G P')² / (P G M)`, `M = (1−γ)P + γG`.
fn per_outcome_checks(
    trial: &mut AxiomTrial,
    gamma: f64,
    (p, dp): (&[f64], &[f64]),
    (g, dg): (&[f64], &[f64]),
) {
    for l in 0..p.len() {
        if p[l] <= OUTCOME_FLOOR || g[l] <= OUTCOME_FLOOR {
            continue;
        }
        let m = (1.0 - gamma) * p[l] + gamma * g[l];
        let dm = (1.0 - gamma) * dp[l] + gamma * dg[l];
        let lhs = dm * dm / m;
        let rhs = (1.0 - gamma) * dp[l] * dp[l] / p[l] + gamma * dg[l] * dg[l] / g[l];
        let scale = rhs.abs().max(1.0);
        trial.push(InequalityCheck::new(
            format!("outcome {l}: mixed term <= mixed terms"),
            lhs,
            rhs,
            AXIOM_TOL * scale,
        ));
        let pivot = p[l] * dg[l] - g[l] * dp[l];
        let predicted_gap = gamma * (1.0 - gamma) * pivot * pivot / (p[l] * g[l] * m);
        trial.push(InequalityCheck::equal(
            format!("outcome {l}: gap identity"),
            rhs - lhs,
            predicted_gap,
            AXIOM_TOL * scale,
        ));
    }
}

/// Convexity of the quantifier in the channel.
///
/// One in eight trials uses `Φ₂ = Φ₁`, where every pivot vanishes and the
/// inequality is tight.
fn convexity_trial(trial: &mut AxiomTrial) -> Result<()> {
    let mut rng = random::rng(trial.seed);
    let first = draw_scenario(trial.dimension, &mut rng)?;
    trial.theta = first.theta();
    let tight = rng.random_range(0..8) == 0;
    let other = if tight {
        first.channel().clone()
    } else {
        random_channel(trial.dimension, rng.random_range(1..=3), rng.random())?
    };
    let second = first.with_channel(other.clone())?;
    let gamma: f64 = rng.random_range(0.0..=1.0);
    trial.mixing_weight = Some(gamma);

    let mode = DerivativeMode::Analytic;
    let (p, dp) = (outcome_probabilities(&first)?, probability_derivatives(&first, mode)?);
    let (g, dg) = (outcome_probabilities(&second)?, probability_derivatives(&second, mode)?);
    let f1 = fisher_from_probabilities(&p, &dp, mode, true)?.value;
    let f2 = fisher_from_probabilities(&g, &dg, mode, true)?.value;

    let m: Vec<f64> = p.iter().zip(&g).map(|(a, b)| (1.0 - gamma) * a + gamma * b).collect();
    let dm: Vec<f64> = dp.iter().zip(&dg).map(|(a, b)| (1.0 - gamma) * a + gamma * b).collect();
    let f_mix = fisher_from_probabilities(&m, &dm, mode, true)?.value;
    let rhs = (1.0 - gamma) * f1 + gamma * f2;
    trial.push(InequalityCheck::new("F(mix) <= (1-g) F1 + g F2", f_mix, rhs, AXIOM_TOL));

    // The mixed channel itself produces the mixed probabilities.
    let mixed = first.with_channel(mix(&[first.channel().clone(), other], &[1.0 - gamma, gamma])?)?;
    let m_channel = outcome_probabilities(&mixed)?;
    let worst = m
        .iter()
        .zip(&m_channel)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    trial.push(InequalityCheck::new("mixture probabilities", worst, 0.0, IDENTITY_TOL));

    per_outcome_checks(trial, gamma, (&p, &dp), (&g, &dg));

    if tight {
        trial.push(InequalityCheck::equal("tight: F(mix) = F1", f_mix, f1, AXIOM_TOL * f1.max(1.0)));
        for l in 0..p.len() {
            let pivot = p[l] * dg[l] - g[l] * dp[l];
            let scale = (p[l] * dg[l]).abs().max((g[l] * dp[l]).abs()).max(1.0);
            trial.push(InequalityCheck::new(
                format!("tight: outcome {l} pivot"),
                pivot.abs(),
                0.0,
                AXIOM_TOL * scale,
            ));
        }
    }
    trial.scenario = Some(first);
    Ok(())
}

/// Free operations create no coherence, and with a commuting generator any
/// information about θ requires coherence upstream of the imprint.
///
/// Pipeline for the second part: `τ → Φ_gen → η_θ → Φ_read → measure Q`
/// with `τ` classical and `[A, Q] = 0`. Half the trials draw a free
/// `Φ_gen`, which must then give no information at all.
fn coherence_trial(trial: &mut AxiomTrial) -> Result<()> {
    let mut rng = random::rng(trial.seed);
    let d = trial.dimension;
    let obs = random_observable(d, &mut rng)?;
    let free = draw_free_channel(&obs, &mut rng)?;
    let tau = classical_state(&obs, &random_weights(d, &mut rng))?;
    trial.push(InequalityCheck::new(
        "l1(free(tau)) <= 0",
        l1_coherence(&free.apply(&tau)?, &obs)?,
        0.0,
        AXIOM_TOL,
    ));

    let generator_is_free = rng.random_bool(0.5);
    let prep = if generator_is_free {
        draw_free_channel(&obs, &mut rng)?
    } else {
        random_channel(d, 2, rng.random())?
    };
    let readout = random_channel(d, 2, rng.random())?;
    let a = UnitaryGenerator::new(commuting_hermitian(&obs, &mut rng))?;
    let mid = prep.apply(&tau)?;
    let coherence = l1_coherence(&mid, &obs)?;
    let s = ParametricScenario::new(mid, a, readout, obs.clone(), draw_theta(&mut rng))?;
    trial.theta = s.theta();
    let info = quantifier(&s)?;
    if info > INFORMATIVE_LEVEL {
        trial.push(InequalityCheck::new("I > 0 implies coherence", AXIOM_TOL, coherence, 0.0));
    }
    if generator_is_free {
        trial.push(InequalityCheck::new("I(free preparation) <= 0", info, 0.0, AXIOM_TOL));
        trial.push(InequalityCheck::new(
            "free preparation stays classical",
            max_off_diagonal(s.input_state().matrix(), &obs),
            0.0,
            AXIOM_TOL,
        ));
    }
    trial.free_pre = Some(free);
    trial.scenario = Some(s);
    Ok(())
}
