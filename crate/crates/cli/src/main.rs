//! `bohmsim`: scenario runner for the semiclassical Bohmian dynamics toolkit.
//!
//! Subcommands:
//!   run    --scenario <name> [--epsilon E] [--modes N] [--tsteps K] [--dt D]
//!          [--seeds M] [--out DIR] [--config FILE]
//!   sweep  --scenario <name> --epsilon-list 1e-1,1e-2,1e-3 [--out DIR]
//!   report --in DIR
//!
//! Exit codes: 0 success, 2 audit failure, 3 configuration error,
//! 4 numerical abort. `BOHMSIM_THREADS` caps the worker count.

mod config;
mod csvio;
mod report;
mod runcmd;

use bohmsim_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerics(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 3,
            CliError::Numerics(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerics(m) => write!(f, "numerical abort: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::BadConfig(_)
            | CoreError::BadGridSize(_)
            | CoreError::BadGridLength(_)
            | CoreError::Invalid(_) => CliError::Config(e.to_string()),
            other => CliError::Numerics(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

const USAGE: &str = "\
usage:
  bohmsim run    --scenario <name> [--epsilon E] [--modes N] [--tsteps K]
                 [--dt D] [--seeds M] [--out DIR] [--config FILE]
  bohmsim sweep  --scenario <name> --epsilon-list E1,E2,... [--out DIR]
                 [run options]
  bohmsim report --in DIR
  bohmsim list

scenarios: vortex, wavepacket, harmonic_focus, free_caustic, free_plane,
rarefaction. Exit codes: 0 ok, 2 audit failure, 3 config error, 4 numerical
abort. BOHMSIM_THREADS caps the worker count.";

fn init_threads() {
    if let Ok(v) = std::env::var("BOHMSIM_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid BOHMSIM_THREADS = {v:?}"),
        }
    }
}

fn main() {
    init_threads();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match dispatch(&args) {
        Ok(audits_ok) => {
            if audits_ok {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

/// Returns whether all audits passed.
fn dispatch(args: &[String]) -> CliResult<bool> {
    let Some(cmd) = args.first() else {
        println!("{USAGE}");
        return Ok(true);
    };
    match cmd.as_str() {
        "run" => {
            let spec = config::resolve(&args[1..])?;
            runcmd::run(&spec.scenario, &spec.out_dir).map(|summary| summary.audits_ok())
        }
        "sweep" => runcmd::sweep(&args[1..]),
        "report" => {
            report::report(&args[1..])?;
            Ok(true)
        }
        "list" => {
            for name in bohmsim_core::scenario::ScenarioName::ALL {
                println!("{name}");
            }
            Ok(true)
        }
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(true)
        }
        other => Err(CliError::Config(format!("unknown command '{other}'\n{USAGE}"))),
    }
}
