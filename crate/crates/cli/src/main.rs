use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use genbound::row::emit;
use genbound::{compute, rows_exit_code, CliError, Experiment, ExperimentConfig, Format};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Runs one experiment suite and writes its result table.
#[derive(Debug, Parser)]
#[command(name = "genbound", version)]
struct Args {
    /// Suite name, e.g. bounds_eval or covering_verify.
    experiment: Experiment,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output_path`. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Replaces the configured seed list with one seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("GENBOUND_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("GENBOUND_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

fn execute(args: Args) -> Result<i32, CliError> {
    if let Some(n) = threads()? {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = ExperimentConfig::from_file(args.experiment, &args.config)?;
    if let Some(out) = args.out {
        cfg.output_path = Some(out);
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    let rows = compute(&cfg)?;
    emit(&rows, cfg.format, cfg.output_path.as_deref())?;
    Ok(rows_exit_code(&rows))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("genbound: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
