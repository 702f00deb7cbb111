//! Scenario resolution: catalog defaults, then a flat `key = value` config
//! file, then command-line flags (flags win).

use std::collections::BTreeMap;
use std::path::PathBuf;

use bohmsim_core::scenario::{ScenarioName, ScenarioSpec};

use crate::{CliError, CliResult};

pub struct ResolvedRun {
    pub scenario: ScenarioSpec,
    pub out_dir: PathBuf,
}

#[derive(Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: [&str; 14] = [
    "scenario",
    "epsilon",
    "modes",
    "tsteps",
    "dt",
    "seeds",
    "x0",
    "length",
    "stride",
    "out",
    "density",
    "branches",
    "measures",
    "audit_doubling",
];

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and
/// malformed lines are rejected with their line number.
pub fn parse_config_file(path: &str) -> CliResult<Overrides> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
    let mut over = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{path}:{}: expected 'key = value', got {raw:?}",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "{path}:{}: unknown key '{key}'",
                lineno + 1
            )));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!(
                "{path}:{}: empty value for '{key}'",
                lineno + 1
            )));
        }
        if key == "scenario" {
            over.scenario = Some(value.to_string());
        } else {
            over.entries.insert(key.to_string(), value.to_string());
        }
    }
    Ok(over)
}

/// Parses `--key value` flags into overrides; `--config FILE` is loaded
/// first so that flags win.
pub fn parse_flags(args: &[String]) -> CliResult<Overrides> {
    let mut over = Overrides::default();
    let mut config_path = None;
    let mut i = 0;
    while i < args.len() {
        let flag = &args[i];
        let Some(key) = flag.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument {flag:?}")));
        };
        let value = args
            .get(i + 1)
            .ok_or_else(|| CliError::Config(format!("flag --{key} needs a value")))?
            .clone();
        match key {
            "config" => config_path = Some(value),
            "scenario" => over.scenario = Some(value),
            "epsilon" | "modes" | "tsteps" | "dt" | "seeds" | "x0" | "length" | "stride"
            | "out" | "density" | "branches" | "measures" | "audit_doubling"
            | "epsilon-list" => {
                over.entries.insert(key.to_string(), value);
            }
            other => return Err(CliError::Config(format!("unknown flag --{other}"))),
        }
        i += 2;
    }
    if let Some(path) = config_path {
        let mut base = parse_config_file(&path)?;
        if over.scenario.is_some() {
            base.scenario = over.scenario;
        }
        base.entries.extend(over.entries);
        Ok(base)
    } else {
        Ok(over)
    }
}

fn parse_f64(key: &str, value: &str) -> CliResult<f64> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("{key} expects a number, got {value:?}")))
}

fn parse_usize(key: &str, value: &str) -> CliResult<usize> {
    if let Ok(v) = value.parse::<usize>() {
        return Ok(v);
    }
    // accept forms like 1e4 for step counts
    match value.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 => Ok(v as usize),
        _ => Err(CliError::Config(format!("{key} expects an integer, got {value:?}"))),
    }
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("{key} expects true/false, got {value:?}"))),
    }
}

/// Applies overrides on top of the scenario catalog and validates the result.
pub fn build_spec(over: &Overrides) -> CliResult<(ScenarioSpec, PathBuf)> {
    let name_str = over
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Config("no scenario given (use --scenario <name>)".into()))?;
    let name: ScenarioName = name_str
        .parse()
        .map_err(|e: bohmsim_core::CoreError| CliError::Config(e.to_string()))?;
    let mut spec = ScenarioSpec::catalog(name);
    let mut out_dir = PathBuf::from(format!("runs/{name}"));
    for (key, value) in &over.entries {
        match key.as_str() {
            "epsilon" => spec.epsilon = parse_f64(key, value)?,
            "modes" => spec.modes = parse_usize(key, value)?,
            "tsteps" => spec.steps = parse_usize(key, value)?,
            "dt" => spec.dt = parse_f64(key, value)?,
            "seeds" => spec.seed_count = parse_usize(key, value)?,
            "x0" => spec.x0 = parse_f64(key, value)?,
            "length" => spec.length = parse_f64(key, value)?,
            "stride" => spec.snapshot_stride = parse_usize(key, value)?,
            "out" => out_dir = PathBuf::from(value),
            "density" => spec.outputs.density = parse_bool(key, value)?,
            "branches" => spec.outputs.branches = parse_bool(key, value)?,
            "measures" => spec.outputs.measures = parse_bool(key, value)?,
            "audit_doubling" => spec.outputs.audit_doubling = parse_bool(key, value)?,
            "epsilon-list" => {}
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
    }
    spec.validate().map_err(CliError::from)?;
    Ok((spec, out_dir))
}

pub fn resolve(args: &[String]) -> CliResult<ResolvedRun> {
    let over = parse_flags(args)?;
    let (scenario, out_dir) = build_spec(&over)?;
    Ok(ResolvedRun { scenario, out_dir })
}

/// Epsilon list for `sweep`.
pub fn epsilon_list(over: &Overrides) -> CliResult<Vec<f64>> {
    let raw = over
        .entries
        .get("epsilon-list")
        .ok_or_else(|| CliError::Config("sweep requires --epsilon-list E1,E2,...".into()))?;
    let mut out = Vec::new();
    for part in raw.split(',') {
        let eps = parse_f64("epsilon-list", part.trim())?;
        out.push(eps);
    }
    if out.is_empty() {
        return Err(CliError::Config("epsilon list is empty".into()));
    }
    Ok(out)
}
