//! Scenario files.
//!
//! A scenario is a TOML document with named sections. Complex numbers are
//! `[re, im]` pairs (a bare number is read as real), matrices are row-major
//! arrays of rows, and any real number may also be written as a string such
//! as `"pi/4"` or `"-3*pi/8"`.
//!
//! ```toml
//! seed = 7
//!
//! [state]
//! amplitudes = [0.7071067811865476, -0.7071067811865476]
//!
//! [observable]
//! preset = "pauli_z"
//!
//! [channel]
//! preset = "pauli_z"
//!
//! [post_transform]
//! preset = "hadamard"
//!
//! [generator]
//! preset = "alpha_family(pi/4)"
//!
//! [theta]
//! start = 0.1
//! stop = 1.5
//! count = 15
//! ```

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;

use invlab::channels::{
    free_channel, random_channel, random_free_channel, FreeChannelSpec, FreeKrausTerm,
    KrausChannel, UnitaryGenerator,
};
use invlab::qmath::{classical_state, ComplexMatrix, DensityOperator, Observable, PureState};
use invlab::witness::DEFAULT_TOLERANCE;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Value(f64),
    Expr(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Entry {
    Pair([Number; 2]),
    Real(Number),
}

type RawMatrix = Vec<Vec<Entry>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: Option<usize>,
    seed: Option<u64>,
    state: Option<RawState>,
    observable: Option<RawObservable>,
    channel: Option<RawChannel>,
    post_transform: Option<RawChannel>,
    generator: Option<RawGenerator>,
    theta: Option<RawGrid>,
    alpha: Option<RawGrid>,
    #[serde(default)]
    tolerances: RawTolerances,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    amplitudes: Option<Vec<Entry>>,
    matrix: Option<RawMatrix>,
    weights: Option<Vec<Number>>,
    basis: Option<usize>,
    preset: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    preset: Option<String>,
    matrix: Option<RawMatrix>,
    eigenbasis: Option<RawMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFreeTerm {
    index_map: Vec<usize>,
    coefficients: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    preset: Option<String>,
    kraus: Option<Vec<RawMatrix>>,
    free: Option<Vec<RawFreeTerm>>,
    transition: Option<Vec<Vec<Number>>>,
    unitary: Option<RawMatrix>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    preset: Option<String>,
    matrix: Option<RawMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    value: Option<Number>,
    values: Option<Vec<Number>>,
    start: Option<Number>,
    stop: Option<Number>,
    count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    witness: Option<Number>,
    fd_step: Option<Number>,
}

/// A validated scenario. Sections absent from the file are `None`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dimension: usize,
    pub seed: u64,
    pub state: Option<DensityOperator>,
    pub observable: Observable,
    pub channel: Option<KrausChannel>,
    pub post_transform: Option<KrausChannel>,
    pub generator: Option<UnitaryGenerator>,
    pub theta: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub witness_tolerance: f64,
    pub fd_step: Option<f64>,
}

fn field(path: &str, message: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("config field `{path}`: {message}")
}

/// Evaluates sums of terms like `x`, `pi`, `k*pi`, `kpi`, each optionally
/// divided by a number or `pi`: `"pi/4"`, `"pi/2 - 0.05"`, `"-3*pi/8"`.
pub fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let s: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase()
        .replace('π', "pi");
    let fail = || format!("cannot read `{text}` as a number");
    let factor = |t: &str| -> std::result::Result<f64, String> {
        let (sign, body) = match t.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, t.strip_prefix('+').unwrap_or(t)),
        };
        let value = match body.strip_suffix("pi") {
            Some(coef) => {
                let coef = coef.strip_suffix('*').unwrap_or(coef);
                let k = if coef.is_empty() { Ok(1.0) } else { coef.parse::<f64>() };
                k.map(|k| k * PI)
            }
            None => body.parse::<f64>(),
        };
        value.map(|v| sign * v).map_err(|_| fail())
    };
    // Split into additive terms, keeping exponent signs such as `1e-3`.
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        if i > start && (ch == '+' || ch == '-') && !matches!(s[..i].chars().last(), Some('e' | '*' | '/')) {
            terms.push(&s[start..i]);
            start = i;
        }
    }
    terms.push(&s[start..]);
    let mut value = 0.0;
    for term in terms {
        value += match term.split_once('/') {
            Some((num, den)) => factor(num)? / factor(den)?,
            None => factor(term)?,
        };
    }
    if !value.is_finite() {
        return Err(format!("`{text}` is not a finite number"));
    }
    Ok(value)
}

fn real(n: &Number, path: &str) -> Result<f64> {
    match n {
        Number::Value(v) if v.is_finite() => Ok(*v),
        Number::Value(v) => Err(field(path, format!("{v} is not finite"))),
        Number::Expr(s) => parse_real(s).map_err(|e| field(path, e)),
    }
}

fn complex(e: &Entry, path: &str) -> Result<Complex64> {
    match e {
        Entry::Real(n) => Ok(Complex64::new(real(n, path)?, 0.0)),
        Entry::Pair([re, im]) => Ok(Complex64::new(real(re, path)?, real(im, path)?)),
    }
}

fn vector(entries: &[Entry], path: &str) -> Result<Vec<Complex64>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| complex(e, &format!("{path}[{i}]")))
        .collect()
}

fn matrix(raw: &RawMatrix, path: &str) -> Result<ComplexMatrix> {
    let rows = raw
        .iter()
        .enumerate()
        .map(|(i, row)| vector(row, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_rows(&rows).map_err(|e| field(path, e))
}

fn reals(values: &[Number], path: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, n)| real(n, &format!("{path}[{i}]")))
        .collect()
}

/// Splits `name(arg)` into its parts; plain names have no argument.
fn call(preset: &str) -> (&str, Option<&str>) {
    match preset.split_once('(') {
        Some((name, rest)) => (name.trim(), Some(rest.trim_end().trim_end_matches(')').trim())),
        None => (preset.trim(), None),
    }
}

fn check_dim(path: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        bail!(field(
            path,
            format!("dimension {found} does not match the observable dimension {expected}")
        ));
    }
    Ok(())
}

/// Exactly one of the named options must be present.
fn exactly_one(path: &str, options: &[(&str, bool)]) -> Result<()> {
    let present: Vec<&str> = options.iter().filter(|(_, p)| *p).map(|(n, _)| *n).collect();
    if present.len() != 1 {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        bail!(field(
            path,
            format!("expected exactly one of {}, found {}", names.join(", "), present.len())
        ));
    }
    Ok(())
}

fn observable(raw: &RawObservable, dimension: Option<usize>) -> Result<Observable> {
    let path = "observable";
    exactly_one(path, &[("preset", raw.preset.is_some()), ("matrix", raw.matrix.is_some())])?;
    let obs = if let Some(preset) = &raw.preset {
        match preset.as_str() {
            "pauli_z" => Observable::pauli_z(),
            "pauli_x" => Observable::pauli_x(),
            other => bail!(field("observable.preset", format!("unknown preset `{other}`"))),
        }
    } else {
        let m = matrix(raw.matrix.as_ref().unwrap(), "observable.matrix")?;
        match &raw.eigenbasis {
            Some(b) => Observable::with_eigenbasis(m, matrix(b, "observable.eigenbasis")?)
                .map_err(|e| field("observable.eigenbasis", e))?,
            None => Observable::new(m).map_err(|e| field("observable.matrix", e))?,
        }
    };
    if let Some(d) = dimension {
        if obs.dim() != d {
            bail!(field(path, format!("dimension {} does not match `dimension = {d}`", obs.dim())));
        }
    }
    Ok(obs)
}

fn state(raw: &RawState, obs: &Observable) -> Result<DensityOperator> {
    let path = "state";
    exactly_one(
        path,
        &[
            ("amplitudes", raw.amplitudes.is_some()),
            ("matrix", raw.matrix.is_some()),
            ("weights", raw.weights.is_some()),
            ("basis", raw.basis.is_some()),
            ("preset", raw.preset.is_some()),
        ],
    )?;
    let d = obs.dim();
    if let Some(amps) = &raw.amplitudes {
        let v = vector(amps, "state.amplitudes")?;
        check_dim("state.amplitudes", v.len(), d)?;
        return Ok(PureState::new(v).map_err(|e| field("state.amplitudes", e))?.density());
    }
    if let Some(m) = &raw.matrix {
        let m = matrix(m, "state.matrix")?;
        check_dim("state.matrix", m.rows(), d)?;
        return DensityOperator::new(m).map_err(|e| field("state.matrix", e));
    }
    if let Some(w) = &raw.weights {
        let w = reals(w, "state.weights")?;
        check_dim("state.weights", w.len(), d)?;
        return classical_state(obs, &w).map_err(|e| field("state.weights", e));
    }
    if let Some(i) = raw.basis {
        return DensityOperator::basis(d, i).map_err(|e| field("state.basis", e));
    }
    match raw.preset.as_deref().unwrap() {
        "maximally_mixed" => DensityOperator::maximally_mixed(d).map_err(|e| field("state.preset", e)),
        other => bail!(field("state.preset", format!("unknown preset `{other}`"))),
    }
}

fn channel(raw: &RawChannel, path: &str, obs: &Observable, seed: u64) -> Result<KrausChannel> {
    exactly_one(
        path,
        &[
            ("preset", raw.preset.is_some()),
            ("kraus", raw.kraus.is_some()),
            ("free", raw.free.is_some()),
            ("unitary", raw.unitary.is_some()),
        ],
    )?;
    let d = obs.dim();
    let seed = raw.seed.unwrap_or(seed);
    let preset_path = format!("{path}.preset");
    let ch = if let Some(preset) = &raw.preset {
        let (name, arg) = call(preset);
        let number = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| field(&preset_path, format!("`{name}` needs {what}")))?;
            parse_real(a).map_err(|e| field(&preset_path, e))
        };
        let count = |what: &str| -> Result<usize> {
            let v = number(what)?;
            if v < 1.0 || v.fract() != 0.0 {
                bail!(field(&preset_path, format!("{what} must be a positive integer")));
            }
            Ok(v as usize)
        };
        let built = match name {
            "identity" => KrausChannel::identity(d),
            "pauli_z" | "pauli_x" | "hadamard" if d != 2 => {
                bail!(field(&preset_path, format!("`{name}` is a qubit channel, observable has dimension {d}")))
            }
            "pauli_z" => Ok(KrausChannel::pauli_z()),
            "pauli_x" => Ok(KrausChannel::pauli_x()),
            "hadamard" => Ok(KrausChannel::hadamard()),
            "dephase" => Ok(KrausChannel::dephasing(obs)),
            "depolarize" => KrausChannel::depolarizing(d, number("a probability")?),
            "stochastic" => {
                let rows = raw
                    .transition
                    .as_ref()
                    .ok_or_else(|| field(&format!("{path}.transition"), "required by `stochastic`"))?;
                let t = rows
                    .iter()
                    .enumerate()
                    .map(|(j, row)| reals(row, &format!("{path}.transition[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                check_dim(&format!("{path}.transition"), t.len(), d)?;
                KrausChannel::stochastic(obs, &t)
            }
            "random" => random_channel(d, count("an environment dimension")?, seed),
            "random_free" => random_free_channel(obs, count("a Kraus count")?, seed),
            other => bail!(field(&preset_path, format!("unknown preset `{other}`"))),
        };
        built.map_err(|e| field(&preset_path, e))?
    } else if let Some(ops) = &raw.kraus {
        let ops = ops
            .iter()
            .enumerate()
            .map(|(k, m)| matrix(m, &format!("{path}.kraus[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(ops).map_err(|e| field(&format!("{path}.kraus"), e))?
    } else if let Some(u) = &raw.unitary {
        let u = matrix(u, &format!("{path}.unitary"))?;
        invlab::channels::unitary_channel(&u).map_err(|e| field(&format!("{path}.unitary"), e))?
    } else {
        let terms = raw
            .free
            .as_ref()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(l, t)| {
                Ok(FreeKrausTerm {
                    index_map: t.index_map.clone(),
                    coefficients: vector(&t.coefficients, &format!("{path}.free[{l}].coefficients"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = FreeChannelSpec::new(d, terms).map_err(|e| field(&format!("{path}.free"), e))?;
        free_channel(&spec, obs).map_err(|e| field(&format!("{path}.free"), e))?
    };
    check_dim(path, ch.dim(), d)?;
    Ok(ch)
}

fn generator(raw: &RawGenerator, d: usize) -> Result<UnitaryGenerator> {
    exactly_one("generator", &[("preset", raw.preset.is_some()), ("matrix", raw.matrix.is_some())])?;
    let g = if let Some(preset) = &raw.preset {
        let (name, arg) = call(preset);
        match (name, arg) {
            ("pauli_x", None) => UnitaryGenerator::pauli_x(),
            ("pauli_z", None) => UnitaryGenerator::pauli_z(),
            ("alpha_family", Some(a)) => {
                let alpha = parse_real(a).map_err(|e| field("generator.preset", e))?;
                UnitaryGenerator::alpha_family(alpha).map_err(|e| field("generator.preset", e))?
            }
            _ => bail!(field("generator.preset", format!("unknown preset `{preset}`"))),
        }
    } else {
        let m = matrix(raw.matrix.as_ref().unwrap(), "generator.matrix")?;
        UnitaryGenerator::new(m).map_err(|e| field("generator.matrix", e))?
    };
    check_dim("generator", g.dim(), d)?;
    Ok(g)
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
        .collect()
}

fn grid(raw: &RawGrid, path: &str) -> Result<Vec<f64>> {
    let range = raw.start.is_some() || raw.stop.is_some() || raw.count.is_some();
    exactly_one(
        path,
        &[
            ("value", raw.value.is_some()),
            ("values", raw.values.is_some()),
            ("start/stop/count", range),
        ],
    )?;
    if let Some(v) = &raw.value {
        return Ok(vec![real(v, &format!("{path}.value"))?]);
    }
    if let Some(vs) = &raw.values {
        if vs.is_empty() {
            bail!(field(&format!("{path}.values"), "must not be empty"));
        }
        return reals(vs, &format!("{path}.values"));
    }
    let need = |n: &Option<Number>, name: &str| -> Result<f64> {
        let p = format!("{path}.{name}");
        real(n.as_ref().ok_or_else(|| field(&p, "missing"))?, &p)
    };
    let start = need(&raw.start, "start")?;
    let stop = need(&raw.stop, "stop")?;
    let count = raw.count.ok_or_else(|| field(&format!("{path}.count"), "missing"))?;
    if count == 0 {
        bail!(field(&format!("{path}.count"), "must be at least 1"));
    }
    Ok(linspace(start, stop, count))
}

impl Scenario {
    /// Parses and validates. `seed_override` replaces the file's seed.
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).context("invalid scenario file")?;
        let seed = seed_override.or(raw.seed).unwrap_or(0);
        let raw_obs = raw
            .observable
            .as_ref()
            .ok_or_else(|| field("observable", "missing section"))?;
        let observable = observable(raw_obs, raw.dimension)?;
        let d = observable.dim();
        let state = raw.state.as_ref().map(|s| state(s, &observable)).transpose()?;
        let channel_ = raw
            .channel
            .as_ref()
            .map(|c| channel(c, "channel", &observable, seed))
            .transpose()?;
        let post_transform = raw
            .post_transform
            .as_ref()
            .map(|c| channel(c, "post_transform", &observable, seed.wrapping_add(1)))
            .transpose()?;
        let generator = raw.generator.as_ref().map(|g| generator(g, d)).transpose()?;
        let theta = raw.theta.as_ref().map(|g| grid(g, "theta")).transpose()?;
        let alpha = raw.alpha.as_ref().map(|g| grid(g, "alpha")).transpose()?;
        let witness_tolerance = match &raw.tolerances.witness {
            Some(n) => real(n, "tolerances.witness")?,
            None => DEFAULT_TOLERANCE,
        };
        if !(witness_tolerance > 0.0) {
            bail!(field("tolerances.witness", "must be positive"));
        }
        let fd_step = raw
            .tolerances
            .fd_step
            .as_ref()
            .map(|n| real(n, "tolerances.fd_step"))
            .transpose()?;
        Ok(Self {
            dimension: d,
            seed,
            state,
            observable,
            channel: channel_,
            post_transform,
            generator,
            theta,
            alpha,
            witness_tolerance,
            fd_step,
        })
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))?;
        let scenario = Self::parse(&text, seed_override)
            .with_context(|| format!("in scenario file {}", path.display()))?;
        Ok((scenario, text))
    }

    pub fn require<'a, T>(value: &'a Option<T>, section: &str, command: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| field(section, format!("missing section, required by `{command}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_expressions() {
        let cases = [
            ("0.5", 0.5),
            ("pi", PI),
            ("pi/4", PI / 4.0),
            ("-pi/2", -PI / 2.0),
            ("3*pi/8", 3.0 * PI / 8.0),
            ("2pi", 2.0 * PI),
            (" π / 3 ", PI / 3.0),
            ("1/3", 1.0 / 3.0),
            ("pi/2 - 0.05", PI / 2.0 - 0.05),
            ("1e-3+pi", 1e-3 + PI),
            ("-2.5e-1", -0.25),
        ];
        for (text, expected) in cases {
            assert_eq!(parse_real(text).unwrap(), expected, "{text}");
        }
        for bad in ["", "pie", "1/0", "x*pi", "pi/", "1--2", "1/2/3"] {
            assert!(parse_real(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(0.1, 1.5, 15);
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[14], 1.5);
        assert!((g[2] - 0.3).abs() < 1e-15);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    const HADAMARD: &str = r#"
        [state]
        amplitudes = [0.7071067811865476, -0.7071067811865476]
        [observable]
        preset = "pauli_z"
        [channel]
        preset = "pauli_z"
        [post_transform]
        preset = "hadamard"
    "#;

    #[test]
    fn parses_sections() {
        let s = Scenario::parse(HADAMARD, None).unwrap();
        assert_eq!(s.dimension, 2);
        assert!(s.state.is_some() && s.channel.is_some() && s.post_transform.is_some());
        assert!(s.generator.is_none() && s.theta.is_none());
        assert_eq!(s.witness_tolerance, DEFAULT_TOLERANCE);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_dim = HADAMARD.replace(
            "amplitudes = [0.7071067811865476, -0.7071067811865476]",
            "amplitudes = [1, 0, 0]",
        );
        let msg = format!("{:#}", Scenario::parse(&bad_dim, None).unwrap_err());
        assert!(msg.contains("`state.amplitudes`") && msg.contains("dimension 3"), "{msg}");

        let bad_kraus = r#"
            [observable]
            preset = "pauli_z"
            [channel]
            kraus = [[[1, 0], [0, 0]]]
        "#;
        let msg = format!("{:#}", Scenario::parse(bad_kraus, None).unwrap_err());
        assert!(msg.contains("`channel.kraus`"), "{msg}");

        let bad_number = r#"
            [observable]
            preset = "pauli_z"
            [theta]
            value = "pi/x"
        "#;
        let msg = format!("{:#}", Scenario::parse(bad_number, None).unwrap_err());
        assert!(msg.contains("`theta.value`"), "{msg}");

        let both = r#"
            [observable]
            preset = "pauli_z"
            [generator]
            preset = "pauli_x"
            matrix = [[1, 0], [0, -1]]
        "#;
        let msg = format!("{:#}", Scenario::parse(both, None).unwrap_err());
        assert!(msg.contains("`generator`") && msg.contains("exactly one"), "{msg}");

        let unknown = "[observable]\npreset = \"pauli_z\"\nbogus = 1\n";
        assert!(Scenario::parse(unknown, None).is_err());
        assert!(format!("{:#}", Scenario::parse("", None).unwrap_err()).contains("`observable`"));
    }

    #[test]
    fn explicit_matrices_and_presets() {
        let text = r#"
            seed = 3
            [observable]
            matrix = [[1, 0, 0], [0, 2, 0], [0, 0, 3]]
            [state]
            weights = ["1/2", "1/4", "1/4"]
            [channel]
            preset = "random_free(2)"
            [post_transform]
            preset = "stochastic"
            transition = [[1, 1, 0], [0, 0, 0], [0, 0, 1]]
            [generator]
            matrix = [[0, [0, -1], 0], [[0, 1], 0, 0], [0, 0, 1]]
            [theta]
            values = [0.1, "pi/3"]
        "#;
        let s = Scenario::parse(text, None).unwrap();
        assert_eq!(s.dimension, 3);
        assert_eq!(s.seed, 3);
        assert_eq!(s.theta.unwrap(), vec![0.1, PI / 3.0]);
        let again = Scenario::parse(text, None).unwrap();
        assert_eq!(again.channel, s.channel);
        let reseeded = Scenario::parse(text, Some(4)).unwrap();
        assert_ne!(reseeded.channel, s.channel);
    }
}
