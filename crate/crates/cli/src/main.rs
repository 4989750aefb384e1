//! `ostrovsky`: runs experiments described by TOML configuration files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ostrovsky_core::experiments::{run, ExperimentConfig, VERSION};

#[derive(Parser)]
#[command(name = "ostrovsky", about = "Ostrovsky equation experiments", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Print the library version.
    Version,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let cfg = ExperimentConfig::load(path).and_then(|cfg| cfg.validate().map(|()| cfg));
    cfg.map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("ostrovsky {VERSION}");
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: valid {} config", config.display(), cfg.kind.name());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            match run(&cfg) {
                Ok((outcome, paths)) => {
                    for path in &paths {
                        println!("wrote {}", path.display());
                    }
                    for (k, v) in &outcome.summary {
                        println!("{k}: {v}");
                    }
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
