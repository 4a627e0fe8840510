use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quartercar::cli::{self, CliError};
use quartercar::config::RoadKind;
use quartercar::ModelKind;

#[derive(Parser)]
#[command(name = "quartercar", version, about = "Quarter-car suspension experiments")]
struct Args {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Road case: random or step.
    #[arg(long, global = true)]
    road: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the road trace (and its PSD for random roads).
    Road {
        /// Trace length in seconds; defaults to the simulation horizon.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Simulate one model with the configured parameters.
    Simulate {
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
    },
    /// Optimize the twin-accumulator elements.
    Optimize,
    /// Tune the integral gain of the active suspension.
    Tune,
    /// Compare passive, optimized twin and PI-active suspensions.
    Compare,
    /// Print the default configuration.
    DefaultConfig,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "passive" => Ok(ModelKind::Passive),
        "twin" => Ok(ModelKind::Twin),
        "active" => Ok(ModelKind::Active),
        _ => Err(format!("unknown model {s:?}; expected passive, twin or active")),
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let mut cfg = cli::load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(road) = &args.road {
        cfg.road = road.parse::<RoadKind>().map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let written = match args.command {
        Command::Road { duration } => cli::cmd_road(&cfg, duration)?,
        Command::Simulate { model } => cli::cmd_simulate(&cfg, model)?,
        Command::Optimize => cli::cmd_optimize(&cfg)?,
        Command::Tune => cli::cmd_tune(&cfg)?,
        Command::Compare => cli::cmd_compare(&cfg)?,
        Command::DefaultConfig => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
