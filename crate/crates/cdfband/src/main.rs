use std::path::PathBuf;
use std::process::ExitCode;

use cdfband::commands;
use cdfband::config::{RawConfig, RunConfig};
use cdfband::output::write_output;
use cdfband::{CliError, Result};
use clap::Parser;

/// Anytime-valid confidence bands for the CDF of a data stream.
///
/// Settings come from an optional key=value file, then the flags below,
/// then `--set key=value` pairs; later sources win.
#[derive(Debug, Parser)]
#[command(name = "cdfband", version)]
struct Args {
    /// Config file of `key = value` lines (`#` starts a comment).
    #[arg(long)]
    config: Option<PathBuf>,
    /// band | simulate | sweep | compare-oracles | coverage
    #[arg(long)]
    command: Option<String>,
    /// iid-beta | iid-lognormal | iid-gaussian | iid-uniform-eps | polya | iw-polya | iid-iw
    #[arg(long)]
    generator: Option<String>,
    /// bernoulli | subgaussian | empbern | ddrm
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// `N:lo:hi` or a comma-separated list of probe values.
    #[arg(long)]
    grid: Option<String>,
    /// Number of Monte-Carlo replicates.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output path, `-` for stdout.
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated stream lengths at which bands are reported.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve(args: &Args) -> Result<RunConfig> {
    let mut raw = RawConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        raw.merge(RawConfig::parse_text(&text)?);
    }
    let flags = [
        ("command", &args.command),
        ("generator", &args.generator),
        ("oracle", &args.oracle),
        ("alpha", &args.alpha),
        ("horizon", &args.horizon),
        ("grid", &args.grid),
        ("seeds", &args.seeds),
        ("seed", &args.seed),
        ("out", &args.out),
        ("format", &args.format),
        ("checkpoints", &args.checkpoints),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, v)?;
        }
    }
    for kv in &args.set {
        raw.set_assignment(kv)?;
    }
    RunConfig::from_raw(&raw)
}

fn run(args: &Args) -> Result<()> {
    let cfg = resolve(args)?;
    let table = commands::run(&cfg)?;
    write_output(&cfg.out, &table.render(cfg.format, &cfg.echo))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cdfband: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
