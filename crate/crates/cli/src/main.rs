use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use motionread_cli::{default_config, CliError, Experiment, RunConfig};

/// Simulation and analysis of trapped-ion state detection by coherent motion.
#[derive(Parser)]
#[command(name = "motionread", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its data files and manifest.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        /// Replace the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads. Output does not depend on this.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Replace the output directory from the config file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Report every invariant violation in a config without running it.
    Validate {
        #[command(flatten)]
        source: ConfigSource,
    },
    /// Print a run file with all overrides at their defaults.
    Defaults {
        experiment: Experiment,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigSource {
    /// Path to a JSON run file.
    #[arg(value_name = "CONFIG", required_unless_present = "config", conflicts_with = "config")]
    path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl ConfigSource {
    fn load(&self) -> Result<RunConfig, CliError> {
        let path = self.path.as_ref().or(self.config.as_ref()).expect("clap enforces one source");
        RunConfig::from_path(path)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run { source, seed, workers, output } => {
            let mut cfg = source.load()?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(dir) = output {
                cfg.output_dir = dir;
            }
            let manifest = motionread_cli::run(&cfg, workers)?;
            for f in &manifest.files {
                println!("{}  {}", f.sha256, cfg.output_dir.join(&f.name).display());
            }
            println!("{} finished in {:.3} s", cfg.experiment.name(), manifest.wall_time_s);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { source } => {
            let cfg = source.load()?;
            let violations = motionread_cli::validate(&cfg)?;
            let text = serde_json::to_string_pretty(&violations).map_err(|e| CliError::Io(e.to_string()))?;
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Defaults { experiment, seed, output } => {
            let dir = output.unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
            let cfg = default_config(experiment, seed, dir);
            let text = serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Io(e.to_string()))?;
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
