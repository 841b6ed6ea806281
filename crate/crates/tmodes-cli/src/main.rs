//! `tmodes` — config-driven runner for the temporal-mode toolkit.
//!
//! Exit codes: 0 success, 2 configuration error (bad flags, bad JSON,
//! unknown keys, impossible parameters), 3 numerical failure (a mandatory
//! stage did not converge; partial artifacts are still written).

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod config;
mod run;

use config::{parse_config, preset_text, ResolvedConfig};
use run::Stages;

/// Errors surfacing to the process boundary, tagged with an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: flags, config document, impossible parameters. Exit 2.
    Config(String),
    /// A mandatory numerical stage failed. Exit 3.
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tmodes",
    version,
    about = "Temporal-mode toolkit: exact Schmidt decomposition, \
             measurement-feedback mode extraction, and homodyne covariance \
             prediction for pulse-pumped parametric amplifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Path to an experiment config (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Name of a bundled preset config (fig2_chirped_gaussian,
    /// supp_nli_fiber, paper_gains_measurement)
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (overrides the config's output_dir)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweep points (orchestration stays single-threaded)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Override the measurement RNG seed from the config
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Exact route: Schmidt modes, weight manifest, kernel heat map
    Decompose,
    /// Feedback extraction: traces, final modes, gain and summary tables
    Iterate,
    /// Quadrature covariances, twin-beam correlations, loss correction
    Measure,
    /// All three stages on one shared kernel
    All,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(cli: &Cli) -> Result<ResolvedConfig, CliError> {
    let (text, origin): (String, String) = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--config and --preset are mutually exclusive".to_string(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --config PATH or --preset NAME is required".to_string(),
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            (text, path.display().to_string())
        }
        (None, Some(name)) => (preset_text(name)?.to_string(), format!("preset {name}")),
    };
    parse_config(&text, &origin)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load(&cli)?;
    if let (Some(seed), Some(m)) = (cli.seed, cfg.measurement.as_mut()) {
        m.rng_seed = seed;
    }

    let stages = match cli.command {
        Cmd::Decompose => Stages { decompose: true, iterate: false, measure: false },
        Cmd::Iterate => Stages { decompose: false, iterate: true, measure: false },
        Cmd::Measure => Stages { decompose: false, iterate: false, measure: true },
        Cmd::All => Stages { decompose: true, iterate: true, measure: true },
    };
    if stages.measure && cfg.measurement.is_none() {
        return Err(CliError::Config(
            "the measure stage needs a measurement section in the config".to_string(),
        ));
    }

    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            CliError::Config(
                "no output directory: pass --out DIR or set output_dir in the config"
                    .to_string(),
            )
        })?;

    run::execute(&cfg, stages, &out_dir, cli.threads.max(1))
}
