use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ks_cli::config::parse_samples;
use ks_cli::{cmd_evolve, cmd_steady, cmd_sweep, cmd_verify, parse_config, CliError, RunConfig};
use ks_core::SweepAxis;

#[derive(Parser)]
#[command(
    name = "ks",
    version,
    about = "Boundary spike/layer steady states and their stability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Chi,
    Eps,
}

#[derive(Subcommand)]
enum Command {
    /// Write the steady profiles U, W, V on the grid.
    Steady(Common),
    /// Evolve a perturbed steady state and record diagnostics.
    Evolve(Common),
    /// Sweep chi or eps and tabulate spike/layer measures.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// Comma-separated sample values.
        #[arg(long)]
        samples: Option<String>,
    },
    /// Run the verification suite and write verify.txt.
    Verify(Common),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let text =
        std::fs::read_to_string(&common.config).map_err(|e| CliError::io(&common.config, e))?;
    let base = common.config.parent().map(Path::to_path_buf);
    let mut cfg = parse_config(&text, base.as_deref())?;
    if let Some(note) = cfg.params.advisory() {
        log::warn!("{note}");
    }
    if let Some(out) = &common.out {
        cfg.outputs.dir = out.clone();
    }
    let out = cfg.outputs.dir.clone();
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Steady(common) => {
            let (cfg, out) = load(&common)?;
            cmd_steady(&cfg, &out)?;
            Ok(0)
        }
        Command::Evolve(common) => {
            let (cfg, out) = load(&common)?;
            let run = cmd_evolve(&cfg, &out)?;
            println!("status = {} after {} steps", run.status.as_str(), run.steps);
            Ok(0)
        }
        Command::Sweep {
            common,
            axis,
            samples,
        } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(a) = axis {
                cfg.sweep.axis = Some(match a {
                    Axis::Chi => SweepAxis::Chi,
                    Axis::Eps => SweepAxis::Eps,
                });
            }
            if let Some(text) = samples {
                cfg.sweep.samples = parse_samples(&text).map_err(|message| {
                    CliError::Config(ks_cli::ConfigError::Parse { line: 0, message })
                })?;
            }
            let axis = cfg
                .sweep
                .axis
                .ok_or(CliError::Config(ks_cli::ConfigError::MissingKey(
                    "sweep.axis",
                )))?;
            let samples = cfg.sweep.samples.clone();
            let rows = cmd_sweep(&cfg, axis, &samples, &out)?;
            let invalid = rows.iter().filter(|r| r.result.is_err()).count();
            if invalid > 0 {
                eprintln!("{invalid} of {} samples were invalid", rows.len());
                return Ok(2);
            }
            Ok(0)
        }
        Command::Verify(common) => {
            let (cfg, out) = load(&common)?;
            let items = cmd_verify(&cfg, &out)?;
            for item in &items {
                println!("{}", item.line());
            }
            Ok(if items.iter().all(|i| i.pass) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ks: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
