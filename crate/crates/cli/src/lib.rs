//! Command-line front end for `eia-core`: argument parsing, config
//! resolution and output rendering.

pub mod commands;
pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use commands::Output;
use config::RunConfig;
use eia_core::{ModelKind, PairingMode};

#[derive(Debug, Parser)]
#[command(
    name = "eia",
    version,
    about = "Interference alignment by channel pairing: simulations and rate evaluation"
)]
pub struct Cli {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (.json or .csv); defaults to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the finite-field alignment protocol and report decoding errors.
    SimulateFf(SimulateArgs),
    /// Test a rate tuple against the finite-field capacity region.
    Region(RegionArgs),
    /// Compare the Gaussian achievable rate with half the pairwise bound.
    Sweep(SweepArgs),
    /// Pairing and typicality statistics for a channel-state sequence.
    PairingStats(PairingArgs),
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Field size (odd prime).
    #[arg(long)]
    q: Option<u32>,
    /// Number of users.
    #[arg(long)]
    k: Option<usize>,
    /// Probability that the noise symbol is nonzero.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Channel uses.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Message symbols per codeword.
    #[arg(long)]
    m: Option<usize>,
    /// Codeword length; defaults to `m` (uncoded).
    #[arg(long)]
    block_len: Option<usize>,
    #[arg(long, value_parser = parse_pairing)]
    pairing: Option<PairingMode>,
    /// Also write a per-block CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Rate tuple as a JSON list, e.g. '[1.2, 1.2, 1.2]'.
    #[arg(long, value_parser = parse_rates)]
    rates: Option<Rates>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// SNR grid in dB, comma separated (default -10..30 in 1 dB steps).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Monte Carlo samples per grid point.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PairingArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Channel model: ff or gauss.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quantizer step (gauss).
    #[arg(long)]
    gamma: Option<f64>,
    /// Truncation radius (gauss).
    #[arg(long)]
    tau: Option<f64>,
    /// Typicality tolerance.
    #[arg(long)]
    delta: Option<f64>,
    /// Independent sequences used for the typicality frequency.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_parser = parse_pairing)]
    pairing: Option<PairingMode>,
    /// Also write the per-slot pairing plan as CSV.
    #[arg(long)]
    plan: Option<PathBuf>,
}

fn parse_pairing(s: &str) -> Result<PairingMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown pairing mode {s:?} (causal, offline)"))
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown model {s:?} (ff, gauss)"))
}

#[derive(Debug, Clone)]
pub struct Rates(Vec<f64>);

fn parse_rates(s: &str) -> Result<Rates, String> {
    serde_json::from_str(s)
        .map(Rates)
        .map_err(|e| format!("rates must be a JSON list of numbers: {e}"))
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<eia_core::Error> for CliError {
    fn from(e: eia_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

fn output_format(path: Option<&Path>) -> Result<Option<Format>, CliError> {
    let Some(path) = path else { return Ok(None) };
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("json") => Ok(Some(Format::Json)),
        Some("csv") => Ok(Some(Format::Csv)),
        _ => Err(CliError::Validation(format!(
            "cannot infer the output format of {} (use .json or .csv)",
            path.display()
        ))),
    }
}

fn field_flags(f: FieldArgs) -> RunConfig {
    RunConfig {
        q: f.q,
        k: f.k,
        rho: f.rho,
        ..Default::default()
    }
}

/// Runs one command, writing to `stdout` unless `--output` is given.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = output_format(cli.output.as_deref())?;
    let base = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Validation)?,
        None => RunConfig::default(),
    };
    let threads = RunConfig {
        threads: cli.threads,
        ..Default::default()
    };
    let base = base.overlay(threads);
    let output = match base.threads {
        Some(0) => return Err(CliError::Validation("threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| dispatch(cli.command, base, format))?,
        None => dispatch(cli.command, base, format)?,
    };

    let text = match output {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Runtime(e.to_string()))?;
            s.push('\n');
            s
        }
        Output::Csv(s) => s,
    };
    match &cli.output {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn dispatch(command: Command, base: RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let json_only = |name: &str| {
        if format == Some(Format::Csv) {
            Err(CliError::Validation(format!(
                "{name} writes JSON; use a .json output path"
            )))
        } else {
            Ok(())
        }
    };
    Ok(match command {
        Command::SimulateFf(a) => {
            json_only("simulate-ff")?;
            let flags = RunConfig {
                n: a.n,
                seed: a.seed,
                m: a.m,
                block_len: a.block_len,
                pairing: a.pairing,
                ..field_flags(a.field)
            };
            commands::simulate_ff(base.overlay(flags), a.trace.as_deref())?
        }
        Command::Region(a) => {
            json_only("region")?;
            let flags = RunConfig {
                rates: a.rates.map(|r| r.0),
                ..field_flags(a.field)
            };
            commands::region(base.overlay(flags))?
        }
        Command::Sweep(a) => {
            let flags = RunConfig {
                snr_db: a.snr_db,
                samples: a.samples,
                seed: a.seed,
                ..Default::default()
            };
            commands::sweep(base.overlay(flags), format == Some(Format::Json))?
        }
        Command::PairingStats(a) => {
            json_only("pairing-stats")?;
            let flags = RunConfig {
                model: a.model,
                n: a.n,
                seed: a.seed,
                gamma: a.gamma,
                tau: a.tau,
                delta: a.delta,
                trials: a.trials,
                pairing: a.pairing,
                ..field_flags(a.field)
            };
            commands::pairing_stats(base.overlay(flags), a.plan.as_deref())?
        }
    })
}
