use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use invlab_cli::commands::{self, Table};
use invlab_cli::config::Scenario;
use invlab_cli::bundled;
use invlab_cli::record::{digest, RunRecord};
use invlab::axioms::Suite;

/// Exit status when a computation succeeded but certified a violation or mismatch.
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "invlab", version, about = "Quantum invasiveness witnesses, Fisher-information quantifiers and axiom checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the run record to this file instead of stderr.
    #[arg(long, global = true)]
    record: Option<PathBuf>,

    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "INVLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Write data here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DerivativeArgs {
    #[arg(long, value_enum, default_value_t = Mode::Analytic)]
    mode: Mode,
    /// Central-difference step for `--mode fd`.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Analytic,
    Fd,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Fd => "fd",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Positivity,
    Monotonicity,
    Convexity,
    Coherence,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Positivity => vec![Suite::Positivity],
            SuiteArg::Monotonicity => vec![Suite::Monotonicity],
            SuiteArg::Convexity => vec![Suite::Convexity],
            SuiteArg::Coherence => vec![Suite::Coherence],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Two-experiment witness with control runs (JSON report).
    Witness {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Estimate expectations from this many simulated clicks per experiment.
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Fisher information and QFI over the theta grid (CSV).
    Fisher {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        derivative: DerivativeArgs,
    },
    /// Alpha-family quantifier against its closed form over a (theta, alpha) grid (CSV).
    SweepAlpha {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        derivative: DerivativeArgs,
    },
    /// Quantum Fisher information and single-shot Cramér–Rao bound over the theta grid (CSV).
    Qfi {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Randomized certification of the quantifier axioms.
    Axioms {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Comma-separated dimensions, cycled over trials.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write every trial as a JSON line to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun the bundled scenarios and diff against stored expectations.
    ReproducePaper {
        /// Override the seeds of the bundled scenarios.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<serde_json::Value> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(json!(path.display().to_string()))
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(json!("stdout"))
        }
    }
}

fn emit_table(out: &Option<PathBuf>, table: &Table) -> Result<serde_json::Value> {
    emit(out, &table.to_csv()?)
}

fn write_record(path: &Option<PathBuf>, record: &RunRecord) -> Result<()> {
    let text = serde_json::to_string(record)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display())),
        None => {
            eprintln!("{text}");
            Ok(())
        }
    }
}

fn load(args: &ScenarioArgs) -> Result<(Scenario, String)> {
    Scenario::load(Path::new(&args.config), args.seed)
}

/// Returns the record and whether the run certified everything it checked.
fn run(command: Command) -> Result<(RunRecord, bool)> {
    let started = Instant::now();
    match command {
        Command::Witness { scenario: args, shots } => {
            let (s, text) = load(&args)?;
            let report = commands::witness(&s, shots)?;
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            let dest = emit(&args.out, &bytes)?;
            let outputs = json!({ "report": report, "data": dest, "shots": shots });
            let seed = shots.map(|_| s.seed);
            Ok((RunRecord::new("witness").with_config(&text).finish(seed, started.elapsed(), outputs), true))
        }
        Command::Fisher { scenario: args, derivative } => {
            let (s, text) = load(&args)?;
            let mode = commands::derivative_mode(derivative.mode.name(), derivative.h, &s)?;
            let (table, summary) = commands::fisher(&s, mode)?;
            let dest = emit_table(&args.out, &table)?;
            let outputs = json!({ "csv": dest, "mode": mode, "summary": summary });
            Ok((RunRecord::new("fisher").with_config(&text).finish(Some(s.seed), started.elapsed(), outputs), true))
        }
        Command::SweepAlpha { scenario: args, derivative } => {
            let (s, text) = load(&args)?;
            let mode = commands::derivative_mode(derivative.mode.name(), derivative.h, &s)?;
            let (table, summary) = commands::sweep_alpha(&s, mode)?;
            let dest = emit_table(&args.out, &table)?;
            let outputs = json!({ "csv": dest, "mode": mode, "summary": summary });
            Ok((RunRecord::new("sweep-alpha").with_config(&text).finish(Some(s.seed), started.elapsed(), outputs), true))
        }
        Command::Qfi { scenario: args } => {
            let (s, text) = load(&args)?;
            let table = commands::qfi(&s)?;
            let dest = emit_table(&args.out, &table)?;
            let outputs = json!({ "csv": dest, "rows": table.rows.len() });
            Ok((RunRecord::new("qfi").with_config(&text).finish(Some(s.seed), started.elapsed(), outputs), true))
        }
        Command::Axioms { suite, trials, dims, seed, out } => {
            let runs = commands::axioms(&suite.suites(), trials as usize, &dims, seed)?;
            let table = commands::axioms_table(&runs);
            std::io::stdout().write_all(&table.to_csv()?)?;
            let trial_file = match &out {
                Some(path) => {
                    let mut lines = String::new();
                    for run in &runs {
                        for t in &run.trials {
                            lines.push_str(&serde_json::to_string(t)?);
                            lines.push('\n');
                        }
                    }
                    emit(&out, lines.as_bytes())?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            let clean = runs.iter().all(|r| r.report.clean());
            let reports: Vec<_> = runs.iter().map(|r| &r.report).collect();
            let outputs = json!({ "dims": dims, "trials": trials, "reports": reports, "trial_file": trial_file });
            Ok((RunRecord::new("axioms").finish(Some(seed), started.elapsed(), outputs), clean))
        }
        Command::ReproducePaper { seed, out } => {
            let results = bundled::reproduce(seed)?;
            let text = bundled::render(&results);
            let dest = emit(&out, text.as_bytes())?;
            let clean = results.iter().all(|e| e.passed);
            let bundled: String = bundled::BUNDLED.iter().map(|(_, t)| *t).collect();
            let mut record = RunRecord::new("reproduce-paper");
            record.config_digest = Some(digest(bundled.as_bytes()));
            let outputs = json!({ "report": dest, "checks": results.len(), "failed": results.iter().filter(|e| !e.passed).count() });
            Ok((record.finish(seed, started.elapsed(), outputs), clean))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: thread count must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let record_path = cli.record.clone();
    match run(cli.command) {
        Ok((record, clean)) => {
            if let Err(e) = write_record(&record_path, &record) {
                eprintln!("error: {e:#}");
                return ExitCode::FAILURE;
            }
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
