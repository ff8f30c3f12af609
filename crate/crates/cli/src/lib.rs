//! Config-driven experiment runners for the `motionread` binary.
//!
//! A run file names one experiment, a mandatory seed and an output
//! directory. Every data file a run writes is listed with its SHA-256 in
//! `manifest.json`; data files depend only on the resolved config and seed.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

pub use config::{Experiment, Params, RunConfig};
pub use output::FileRecord;
use output::Outputs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<motionread_core::Error> for CliError {
    fn from(e: motionread_core::Error) -> Self {
        CliError::Invariant(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub overrides: Params,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub motionread_core: &'static str,
    pub motionread_cli: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub seed: u64,
    pub workers: usize,
    pub resolved_config: ResolvedConfig,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Resolves overrides and reports every invariant violation without running.
pub fn validate(cfg: &RunConfig) -> Result<Vec<motionread_core::Violation>, CliError> {
    Ok(cfg.params()?.violations())
}

/// Runs one experiment on a pool of `workers` threads and writes its data
/// files plus the manifest into `cfg.output_dir`.
pub fn run(cfg: &RunConfig, workers: usize) -> Result<Manifest, CliError> {
    let params = cfg.params()?;
    let violations = params.violations();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CliError::Invariant(list.join("; ")));
    }
    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;

    let start = Instant::now();
    let mut out = Outputs::create(&cfg.output_dir)?;
    pool.install(|| {
        use experiments::*;
        match &params {
            Params::BetaTable(p) => beta_table_run(p, &mut out),
            Params::RsbCalibrate(p) => rsb_calibrate_run(p, cfg.seed, &mut out),
            Params::ClockDetect(p) => clock_detect_run(p, cfg.seed, &mut out),
            Params::ZeemanJumps(p) => zeeman_jumps_run(p, cfg.seed, &mut out),
            Params::NmrScan(p) => nmr_scan_run(p, cfg.seed, &mut out),
            Params::FidelitySweep(p) => fidelity_sweep_run(p, cfg.seed, &mut out),
        }
    })?;
    let dir = out.dir().to_path_buf();
    let manifest = Manifest {
        experiment: cfg.experiment,
        seed: cfg.seed,
        workers,
        resolved_config: ResolvedConfig {
            experiment: cfg.experiment,
            seed: cfg.seed,
            output_dir: cfg.output_dir.clone(),
            overrides: params,
        },
        versions: Versions { motionread_core: motionread_core::VERSION, motionread_cli: env!("CARGO_PKG_VERSION") },
        wall_time_s: start.elapsed().as_secs_f64(),
        files: out.into_records(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(manifest)
}

/// A run file with every override at its default.
pub fn default_config(experiment: Experiment, seed: u64, output_dir: PathBuf) -> RunConfig {
    let base = RunConfig { experiment, seed, output_dir, overrides: serde_json::json!({}) };
    let params = base.params().expect("empty overrides always resolve");
    RunConfig { overrides: serde_json::to_value(params).expect("params serialize"), ..base }
}
