//! Command-line front end: `agisim simulate | scenario | verify | ingest`.
//!
//! Exit status: 0 on success, 1 when `verify` finds an RMSE threshold
//! violated, 2 on any operational error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use agisim::config::{load_config, RunConfig};
use agisim::pipeline;

#[derive(Parser)]
#[command(
    name = "agisim",
    version,
    about = "Gimbal-mounted airborne IMU signal simulator with closed-loop verification"
)]
struct Cli {
    /// Run configuration file (section.key = value format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the run seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate imu.csv, truth.csv, platform.csv and the run manifest.
    Simulate,
    /// Run a named unit-test scenario: pan, tilt or ptr-takeoff.
    Scenario {
        /// Scenario name.
        name: String,
    },
    /// Re-integrate the simulated signals and check RMSE thresholds.
    Verify,
    /// Record a live UDP telemetry feed for later replay.
    Ingest {
        /// UDP port to listen on.
        #[arg(long)]
        port: Option<u16>,
        /// Capture duration in seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
    },
}

fn load(cli: &Cli) -> Result<RunConfig, agisim::config::ConfigError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Simulate => {
            let out_dir = cfg.out_dir.clone();
            let s = pipeline::cmd_simulate(&cfg, &out_dir)?;
            println!(
                "simulate: {} platform poses -> {} truth poses -> {} imu samples, outputs in {}",
                s.platform_samples,
                s.truth_samples,
                s.imu_samples,
                s.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenario { name } => {
            let out_dir = cli
                .out
                .clone()
                .unwrap_or_else(|| cfg.out_dir.join(format!("scenario-{name}")));
            let s = pipeline::cmd_scenario(name, &cfg, &out_dir)?;
            println!(
                "scenario {name}: {} imu samples, outputs in {}",
                s.imu_samples,
                s.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let out_dir = cfg.out_dir.clone();
            let v = pipeline::cmd_verify(&cfg, &out_dir)?;
            print!("{}", v.summary_text);
            if v.passed {
                println!("verify: PASS");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("verify: FAIL (see {}/summary.txt)", out_dir.display());
                Ok(ExitCode::from(1))
            }
        }
        Command::Ingest { port, duration } => {
            let port = port.unwrap_or(cfg.trajectory.port);
            let out_dir = cfg.out_dir.clone();
            let s = pipeline::cmd_ingest(
                port,
                Duration::from_secs_f64(*duration),
                &cfg,
                &out_dir,
            )?;
            println!(
                "ingest: {} samples captured, {} malformed dropped ({:.1} Hz), raw {} replayable {}",
                s.received,
                s.dropped,
                s.received as f64 / duration.max(1e-9),
                s.raw_path.display(),
                s.capture_path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
