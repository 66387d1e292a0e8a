//! Bundled scenarios and the numbers they must reproduce.

use anyhow::Result;
use serde::Serialize;

use invlab::estimation::{fisher_information, outcome_probabilities, DerivativeMode};
use invlab::qmath::{DensityOperator, PureState, r};
use invlab::witness::run_controls;

use crate::commands::{self, fmt_f64};
use crate::config::Scenario;

pub const HADAMARD_WITNESS: &str = include_str!("../configs/hadamard_witness.cfg");
pub const SIGMAX_FISHER: &str = include_str!("../configs/sigmax_fisher.cfg");
pub const CLASSICAL_NULL: &str = include_str!("../configs/classical_null.cfg");
pub const ALPHA_QUARTER: &str = include_str!("../configs/alpha_quarter.cfg");
pub const ALPHA_EXTREMES: &str = include_str!("../configs/alpha_extremes.cfg");
pub const ALPHA_SWEEP: &str = include_str!("../configs/alpha_sweep.cfg");

/// Bundled scenario files by name.
pub const BUNDLED: [(&str, &str); 6] = [
    ("hadamard_witness.cfg", HADAMARD_WITNESS),
    ("sigmax_fisher.cfg", SIGMAX_FISHER),
    ("classical_null.cfg", CLASSICAL_NULL),
    ("alpha_quarter.cfg", ALPHA_QUARTER),
    ("alpha_extremes.cfg", ALPHA_EXTREMES),
    ("alpha_sweep.cfg", ALPHA_SWEEP),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub config: &'static str,
    pub check: &'static str,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Expectation {
    fn new(config: &'static str, check: &'static str, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            config,
            check,
            observed,
            expected,
            tolerance,
            passed: (observed - expected).abs() <= tolerance,
        }
    }

    /// Largest deviation of `values` from `expected`, reported at `expected ± worst`.
    fn uniform(config: &'static str, check: &'static str, values: &[f64], expected: f64, tolerance: f64) -> Self {
        let worst = values
            .iter()
            .copied()
            .max_by(|a, b| (a - expected).abs().total_cmp(&(b - expected).abs()))
            .unwrap_or(f64::NAN);
        Self::new(config, check, worst, expected, tolerance)
    }

    fn flag(config: &'static str, check: &'static str, observed: bool) -> Self {
        let v = if observed { 1.0 } else { 0.0 };
        Self::new(config, check, v, 1.0, 0.0)
    }

    pub fn line(&self) -> String {
        format!(
            "{}  {:<20} {:<44} observed={} expected={} tol={:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.config,
            self.check,
            fmt_f64(self.observed),
            fmt_f64(self.expected),
            self.tolerance
        )
    }
}

fn max_diff(a: &DensityOperator, b: &DensityOperator) -> f64 {
    a.matrix().max_abs_diff(b.matrix())
}

fn fisher_column(s: &Scenario) -> Result<Vec<f64>> {
    let (table, _) = commands::fisher(s, DerivativeMode::Analytic)?;
    table
        .rows
        .iter()
        .map(|row| Ok(row[1].parse::<f64>()?))
        .collect()
}

/// Runs every bundled scenario and compares against the stored expectations.
/// `seed` replaces the seeds of the bundled files.
pub fn reproduce(seed: Option<u64>) -> Result<Vec<Expectation>> {
    let mut out = Vec::new();

    let name = "hadamard_witness.cfg";
    let s = Scenario::parse(HADAMARD_WITNESS, seed)?;
    let scenario = commands::witness_scenario(&s)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = PureState::new(vec![r(h), r(h)])?.density();
    let after_phase = scenario.channel().apply(scenario.input_state())?;
    out.push(Expectation::new(name, "phase flip maps input to |+><+|", max_diff(&after_phase, &plus), 0.0, 1e-12));
    let (first, _) = scenario.measured_states()?;
    out.push(Expectation::new(name, "readout of experiment 1 is |0><0|", max_diff(&first, &DensityOperator::basis(2, 0)?), 0.0, 1e-12));
    let report = commands::witness(&s, None)?;
    out.push(Expectation::new(name, "W", report.w, 2.0, 1e-12));
    let controls = run_controls(&scenario)?;
    out.push(Expectation::new(name, "W_0", controls[0], 0.0, 1e-12));
    out.push(Expectation::new(name, "W_1", controls[1], 0.0, 1e-12));
    out.push(Expectation::flag(name, "verdict_strict", report.verdict_strict));

    let name = "sigmax_fisher.cfg";
    let s = Scenario::parse(SIGMAX_FISHER, seed)?;
    let at = commands::parametric(&s, "fisher", None)?.with_theta(0.3);
    let p = outcome_probabilities(&at)?;
    out.push(Expectation::new(name, "P(q=-1) at theta=0.3 is sin^2", p[0], 0.3f64.sin().powi(2), 1e-14));
    out.push(Expectation::new(name, "P(q=+1) at theta=0.3 is cos^2", p[1], 0.3f64.cos().powi(2), 1e-14));
    out.push(Expectation::uniform(name, "fisher over theta grid", &fisher_column(&s)?, 4.0, 1e-8));

    let name = "classical_null.cfg";
    let s = Scenario::parse(CLASSICAL_NULL, seed)?;
    let base = commands::parametric(&s, "fisher", None)?.with_theta(0.4);
    let shifted = outcome_probabilities(&base.with_theta(0.4 + 0.37))?;
    let drift = outcome_probabilities(&base)?
        .iter()
        .zip(&shifted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(Expectation::new(name, "probabilities independent of theta", drift, 0.0, 1e-12));
    out.push(Expectation::uniform(name, "fisher over theta grid", &fisher_column(&s)?, 0.0, 1e-9));

    let name = "alpha_quarter.cfg";
    let s = Scenario::parse(ALPHA_QUARTER, seed)?;
    let theta = Scenario::require(&s.theta, "theta", "fisher")?[0];
    let at = commands::parametric(&s, "fisher", None)?.with_theta(theta);
    let f = fisher_information(&at, DerivativeMode::Analytic)?.value;
    out.push(Expectation::new(name, "fisher at alpha=pi/4, theta=pi/4", f, 4.0 / 3.0, 1e-8));

    let name = "alpha_extremes.cfg";
    let s = Scenario::parse(ALPHA_EXTREMES, seed)?;
    let rows = commands::sweep_alpha_rows(&s, DerivativeMode::Analytic)?;
    let column = |alpha: f64| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.alpha == alpha)
            .map(|r| r.numeric.unwrap_or(f64::NAN))
            .collect()
    };
    out.push(Expectation::uniform(name, "fisher at alpha=0", &column(0.0), 4.0, 1e-8));
    out.push(Expectation::uniform(name, "fisher at alpha=pi/2", &column(std::f64::consts::FRAC_PI_2), 0.0, 1e-8));

    Ok(out)
}

/// The report as printed: one line per check, then a summary line.
pub fn render(results: &[Expectation]) -> String {
    let mut text = String::new();
    for e in results {
        text.push_str(&e.line());
        text.push('\n');
    }
    let passed = results.iter().filter(|e| e.passed).count();
    text.push_str(&format!("{passed}/{} checks passed\n", results.len()));
    text
}
