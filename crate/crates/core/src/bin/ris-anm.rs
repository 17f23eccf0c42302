use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ris_anm::harness::config::parse_sweep;
use ris_anm::harness::{run_experiment, ExperimentConfig, Overrides};
use ris_anm::Error;

#[derive(Parser)]
#[command(version, about = "Monte Carlo runner for two-stage hybrid-RIS channel estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a power sweep and write metrics.csv, config.json and SVG plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Table row 1, 2 or 3 (replaces the configured setups).
        #[arg(long)]
        setup: Option<u8>,
        /// Transmit powers in dBm as start:step:stop.
        #[arg(long = "pt-sweep")]
        pt_sweep: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and print it fully resolved.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => 3,
        _ => 2,
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.validate()?;
            println!("{}", cfg.to_json()?);
        }
        Command::Run {
            config,
            setup,
            pt_sweep,
            trials,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            let p_t_sweep_dbm = pt_sweep.as_deref().map(parse_sweep).transpose()?;
            cfg.apply(&Overrides {
                setup,
                p_t_sweep_dbm,
                n_trials: trials,
                seed,
                output_dir: out,
            });
            let report = run_experiment(&cfg)?;
            for c in &report.cells {
                eprintln!(
                    "{} P_t={} dBm: {} trials, {} failed, {} solver capped, {:.1} s",
                    c.setup, c.p_t_dbm, c.n_trials, c.failed, c.solver_capped, c.wall_clock_secs
                );
            }
            println!("wrote results to {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
