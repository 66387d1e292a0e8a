//! Command implementations, independent of argument parsing and I/O.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use invlab::axioms::{run_suite, AxiomTrial, Suite, SuiteReport};
use invlab::channels::UnitaryGenerator;
use invlab::estimation::{
    closed_form_alpha_family, cramer_rao_bound, fisher_information, quantum_fisher_information,
    DerivativeMode, ParametricScenario,
};
use invlab::witness::{sampled_witness_report, witness_report, WitnessReport, WitnessScenario};
use invlab::Error;

use crate::config::Scenario;

/// Marker written in place of a number at a singular grid point.
pub const SINGULAR: &str = "singular";

/// 17 significant digits: every value re-parses to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().context("flushing CSV output")
    }
}

pub fn witness_scenario(s: &Scenario) -> Result<WitnessScenario> {
    let state = Scenario::require(&s.state, "state", "witness")?;
    let channel = Scenario::require(&s.channel, "channel", "witness")?;
    Ok(WitnessScenario::new(
        state.clone(),
        channel.clone(),
        s.post_transform.clone(),
        s.observable.clone(),
    )?)
}

/// Exact report, or a sampled one when `shots` is given.
pub fn witness(s: &Scenario, shots: Option<usize>) -> Result<WitnessReport> {
    let scenario = witness_scenario(s)?;
    Ok(match shots {
        Some(n) => sampled_witness_report(&scenario, n, s.seed, s.witness_tolerance)?,
        None => witness_report(&scenario, s.witness_tolerance)?,
    })
}

/// Scenario at the first grid angle, for commands that sweep θ.
pub fn parametric(s: &Scenario, command: &str, generator: Option<UnitaryGenerator>) -> Result<ParametricScenario> {
    let state = Scenario::require(&s.state, "state", command)?;
    let channel = Scenario::require(&s.channel, "channel", command)?;
    let generator = match generator {
        Some(g) => g,
        None => Scenario::require(&s.generator, "generator", command)?.clone(),
    };
    Ok(ParametricScenario::new(
        state.clone(),
        generator,
        channel.clone(),
        s.observable.clone(),
        0.0,
    )?)
}

pub fn derivative_mode(name: &str, h: Option<f64>, s: &Scenario) -> Result<DerivativeMode> {
    match name {
        "analytic" => {
            if h.is_some() {
                bail!("--h only applies to --mode fd");
            }
            Ok(DerivativeMode::Analytic)
        }
        "fd" => Ok(DerivativeMode::FiniteDifference {
            h: h.or(s.fd_step).unwrap_or(invlab::estimation::DEFAULT_FD_STEP),
        }),
        other => bail!("unknown derivative mode `{other}` (expected analytic or fd)"),
    }
}

/// `Ok(None)` for a singular grid point.
fn fisher_or_singular(s: &ParametricScenario, mode: DerivativeMode) -> Result<Option<f64>> {
    match fisher_information(s, mode) {
        Ok(f) => Ok(Some(f.value)),
        Err(Error::SingularOutcome { .. }) => Ok(None),
        Err(e) => Err(e).with_context(|| format!("at theta = {}", s.theta())),
    }
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| SINGULAR.to_string(), fmt_f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub rows: usize,
    pub singular: usize,
}

/// Rows `(theta, fisher, qfi)`.
pub fn fisher(s: &Scenario, mode: DerivativeMode) -> Result<(Table, GridSummary)> {
    let base = parametric(s, "fisher", None)?;
    let thetas = Scenario::require(&s.theta, "theta", "fisher")?;
    let rows = thetas
        .par_iter()
        .map(|&theta| {
            let at = base.with_theta(theta);
            let f = fisher_or_singular(&at, mode)?;
            let q = quantum_fisher_information(&at)?;
            Ok((f, vec![fmt_f64(theta), cell(f), fmt_f64(q)]))
        })
        .collect::<Result<Vec<_>>>()?;
    let singular = rows.iter().filter(|(f, _)| f.is_none()).count();
    let table = Table {
        header: vec!["theta", "fisher", "qfi"],
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    };
    let summary = GridSummary {
        rows: table.rows.len(),
        singular,
    };
    Ok((table, summary))
}

/// Rows `(theta, qfi, cramer_rao)`, the bound taken for a single realization.
pub fn qfi(s: &Scenario) -> Result<Table> {
    let base = parametric(s, "qfi", None)?;
    let thetas = Scenario::require(&s.theta, "theta", "qfi")?;
    let rows = thetas
        .par_iter()
        .map(|&theta| {
            let q = quantum_fisher_information(&base.with_theta(theta))?;
            Ok(vec![fmt_f64(theta), fmt_f64(q), fmt_f64(cramer_rao_bound(1.0, q)?)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        header: vec!["theta", "qfi", "cramer_rao"],
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub singular: usize,
    /// Over rows where both values exist.
    pub max_abs_error: Option<f64>,
}

pub struct SweepRow {
    pub theta: f64,
    pub alpha: f64,
    pub numeric: Option<f64>,
    pub closed_form: Option<f64>,
}

impl SweepRow {
    pub fn abs_error(&self) -> Option<f64> {
        Some((self.numeric? - self.closed_form?).abs())
    }
}

/// Every (θ, α) pair, θ-major, for the α-family generator.
pub fn sweep_alpha_rows(s: &Scenario, mode: DerivativeMode) -> Result<Vec<SweepRow>> {
    if s.generator.is_some() {
        bail!("config field `generator`: sweep-alpha builds the generator from the alpha grid; remove this section");
    }
    let thetas = Scenario::require(&s.theta, "theta", "sweep-alpha")?;
    let alphas = Scenario::require(&s.alpha, "alpha", "sweep-alpha")?;
    let base = parametric(s, "sweep-alpha", Some(UnitaryGenerator::pauli_x()))?;
    let points: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&t| alphas.iter().map(move |&a| (t, a)))
        .collect();
    points
        .par_iter()
        .map(|&(theta, alpha)| {
            let at = ParametricScenario::new(
                base.input_state().clone(),
                UnitaryGenerator::alpha_family(alpha)?,
                base.channel().clone(),
                base.observable().clone(),
                theta,
            )?;
            let closed_form = match closed_form_alpha_family(theta, alpha) {
                Ok(v) => Some(v),
                Err(Error::RemovableSingularity { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(SweepRow {
                theta,
                alpha,
                numeric: fisher_or_singular(&at, mode)?,
                closed_form,
            })
        })
        .collect()
}

/// Rows `(theta, alpha, fisher_numeric, closed_form, abs_error)`.
pub fn sweep_alpha(s: &Scenario, mode: DerivativeMode) -> Result<(Table, SweepSummary)> {
    let rows = sweep_alpha_rows(s, mode)?;
    let max_abs_error = rows
        .iter()
        .filter_map(SweepRow::abs_error)
        .reduce(f64::max);
    let summary = SweepSummary {
        rows: rows.len(),
        singular: rows.iter().filter(|r| r.abs_error().is_none()).count(),
        max_abs_error,
    };
    let table = Table {
        header: vec!["theta", "alpha", "fisher_numeric", "closed_form", "abs_error"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.theta),
                    fmt_f64(r.alpha),
                    cell(r.numeric),
                    cell(r.closed_form),
                    cell(r.abs_error()),
                ]
            })
            .collect(),
    };
    Ok((table, summary))
}

pub struct SuiteRun {
    pub report: SuiteReport,
    pub trials: Vec<AxiomTrial>,
}

pub fn axioms(suites: &[Suite], trials: usize, dims: &[usize], seed: u64) -> Result<Vec<SuiteRun>> {
    suites
        .iter()
        .map(|&suite| {
            let trials = run_suite(suite, trials, dims, seed)?;
            Ok(SuiteRun {
                report: SuiteReport::summarize(suite, &trials),
                trials,
            })
        })
        .collect()
}

/// One line per suite; no timing, so identical runs print identical bytes.
pub fn axioms_table(runs: &[SuiteRun]) -> Table {
    Table {
        header: vec![
            "suite",
            "trials",
            "passed",
            "failed",
            "errors",
            "checks",
            "worst_violation",
            "worst_margin",
            "worst_seeds",
        ],
        rows: runs
            .iter()
            .map(|run| {
                let r = &run.report;
                vec![
                    r.suite.to_string(),
                    r.trials.to_string(),
                    r.passed.to_string(),
                    r.failed.to_string(),
                    r.errors.to_string(),
                    r.checks.to_string(),
                    fmt_f64(r.worst_violation),
                    fmt_f64(r.worst_margin),
                    r.worst_seeds
                        .iter()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 4.0, 1e-300, -2.5e17, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(4.0), "4.0000000000000000e0");
    }

    #[test]
    fn singular_points_are_marked() {
        let text = r#"
            [state]
            basis = 0
            [observable]
            preset = "pauli_z"
            [channel]
            preset = "identity"
            [generator]
            preset = "pauli_x"
            [theta]
            values = [0.0, "pi/2", 0.3]
        "#;
        let s = Scenario::parse(text, None).unwrap();
        let (table, summary) = fisher(&s, DerivativeMode::Analytic).unwrap();
        // θ = 0: P = (0, 1) with P' = 0, a removable zero.
        assert_eq!(table.rows[0][1], fmt_f64(0.0));
        assert_eq!(summary.singular, 0);
        let csv = String::from_utf8(table.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("theta,fisher,qfi\n"));

        // θ = 3e-7: P ≈ 9e-14 sits under the floor while |P'| ≈ 6e-7 does not.
        let tiny = text.replace("values = [0.0, \"pi/2\", 0.3]", "values = [0.3, 3e-7]");
        let s = Scenario::parse(&tiny, None).unwrap();
        let (table, summary) = fisher(&s, DerivativeMode::Analytic).unwrap();
        assert_eq!(summary.singular, 1);
        assert_eq!(table.rows[1][1], SINGULAR);
        assert_ne!(table.rows[0][1], SINGULAR);
    }
}
