use std::path::{Path, PathBuf};

use motionread_core::nmr::ReadoutMap;
use motionread_core::{
    ClassifierConfig, ClockTrajectoryConfig, NmrConfig, SidebandConfig, Validate, Violation, ZeemanDriveConfig,
    ZeemanTrajectoryConfig,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BetaTable,
    RsbCalibrate,
    ClockDetect,
    ZeemanJumps,
    NmrScan,
    FidelitySweep,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::BetaTable,
        Experiment::RsbCalibrate,
        Experiment::ClockDetect,
        Experiment::ZeemanJumps,
        Experiment::NmrScan,
        Experiment::FidelitySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BetaTable => "beta-table",
            Experiment::RsbCalibrate => "rsb-calibrate",
            Experiment::ClockDetect => "clock-detect",
            Experiment::ZeemanJumps => "zeeman-jumps",
            Experiment::NmrScan => "nmr-scan",
            Experiment::FidelitySweep => "fidelity-sweep",
        }
    }
}

/// Top-level run file. `overrides` is deserialized into the parameter type
/// of the selected experiment; omitted keys keep their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "empty_object")]
    pub overrides: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn params(&self) -> Result<Params, CliError> {
        fn parse<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T, CliError> {
            T::deserialize(v).map_err(|e| CliError::Parse(format!("overrides: {e}")))
        }
        let v = &self.overrides;
        Ok(match self.experiment {
            Experiment::BetaTable => Params::BetaTable(parse(v)?),
            Experiment::RsbCalibrate => Params::RsbCalibrate(parse(v)?),
            Experiment::ClockDetect => Params::ClockDetect(parse(v)?),
            Experiment::ZeemanJumps => Params::ZeemanJumps(parse(v)?),
            Experiment::NmrScan => Params::NmrScan(parse(v)?),
            Experiment::FidelitySweep => Params::FidelitySweep(parse(v)?),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    BetaTable(BetaTableParams),
    RsbCalibrate(RsbCalibrateParams),
    ClockDetect(ClockDetectParams),
    ZeemanJumps(ZeemanJumpsParams),
    NmrScan(NmrScanParams),
    FidelitySweep(FidelitySweepParams),
}

impl Params {
    pub fn violations(&self) -> Vec<Violation> {
        match self {
            Params::BetaTable(p) => p.violations(),
            Params::RsbCalibrate(p) => p.violations(),
            Params::ClockDetect(p) => p.violations(),
            Params::ZeemanJumps(p) => p.violations(),
            Params::NmrScan(p) => p.violations(),
            Params::FidelitySweep(p) => p.violations(),
        }
    }
}

fn nested(out: &mut Vec<Violation>, prefix: &str, inner: Vec<Violation>) {
    out.extend(inner.into_iter().map(|v| v.nested(prefix)));
}

fn check(out: &mut Vec<Violation>, ok: bool, key: &str, message: &str) {
    if !ok {
        out.push(Violation::new(key, message));
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaTableParams {
    pub drive: ZeemanDriveConfig,
    /// Calibration anchor for the stretched state.
    pub beta_stretched: f64,
}

impl Default for BetaTableParams {
    fn default() -> Self {
        Self { drive: ZeemanDriveConfig::default(), beta_stretched: 2.15 }
    }
}

impl Validate for BetaTableParams {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        nested(&mut out, "drive", self.drive.violations());
        check(&mut out, self.beta_stretched.is_finite() && self.beta_stretched >= 0.0, "beta_stretched", "must be >= 0");
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsbCalibrateParams {
    pub sideband: SidebandConfig,
    /// Amplitudes to calibrate; `None` uses the calibrated Zeeman table.
    pub betas: Option<Vec<f64>>,
    pub drive: ZeemanDriveConfig,
    pub beta_stretched: f64,
    /// Longest sideband pulse, s.
    pub t_max: f64,
    pub n_points: usize,
    pub trials_per_point: u64,
}

impl Default for RsbCalibrateParams {
    fn default() -> Self {
        Self {
            sideband: SidebandConfig::default(),
            betas: None,
            drive: ZeemanDriveConfig::default(),
            beta_stretched: 2.15,
            t_max: 40.0e-6,
            n_points: 41,
            trials_per_point: 100,
        }
    }
}

impl Validate for RsbCalibrateParams {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        nested(&mut out, "sideband", self.sideband.violations());
        nested(&mut out, "drive", self.drive.violations());
        if let Some(b) = &self.betas {
            check(&mut out, !b.is_empty(), "betas", "must not be empty");
            check(&mut out, b.iter().all(|x| x.is_finite() && *x >= 0.0), "betas", "must be >= 0");
        }
        check(&mut out, self.beta_stretched.is_finite() && self.beta_stretched >= 0.0, "beta_stretched", "must be >= 0");
        check(&mut out, self.t_max > 0.0, "t_max", "must be > 0");
        check(&mut out, self.n_points >= 5, "n_points", "must be >= 5");
        check(&mut out, self.trials_per_point >= 1, "trials_per_point", "must be >= 1");
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockDetectParams {
    pub trajectory: ClockTrajectoryConfig,
    pub classifier: ClassifierConfig,
    pub histogram_bin_width: f64,
}

impl Default for ClockDetectParams {
    fn default() -> Self {
        Self {
            trajectory: ClockTrajectoryConfig::default(),
            classifier: ClassifierConfig::default(),
            histogram_bin_width: 0.005,
        }
    }
}

impl Validate for ClockDetectParams {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        nested(&mut out, "trajectory", self.trajectory.violations());
        nested(&mut out, "classifier", self.classifier.violations());
        check(&mut out, self.histogram_bin_width > 0.0, "histogram_bin_width", "must be > 0");
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeemanJumpsParams {
    pub trajectory: ZeemanTrajectoryConfig,
    /// Separation, in per-point standard deviations on each side of the
    /// decision point, below which neighbouring levels are merged.
    pub resolution_z: f64,
    pub histogram_bin_width: f64,
}

impl Default for ZeemanJumpsParams {
    fn default() -> Self {
        Self { trajectory: ZeemanTrajectoryConfig::default(), resolution_z: 2.5, histogram_bin_width: 0.2 }
    }
}

impl Validate for ZeemanJumpsParams {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        nested(&mut out, "trajectory", self.trajectory.violations());
        check(&mut out, self.resolution_z > 0.0, "resolution_z", "must be > 0");
        check(&mut out, self.histogram_bin_width > 0.0, "histogram_bin_width", "must be > 0");
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmrScanParams {
    /// `delta_b` is replaced by each entry of `detunings_in_rabi`.
    pub nmr: NmrConfig,
    /// Detunings as multiples of the resonant Rabi rate.
    pub detunings_in_rabi: Vec<f64>,
    pub n_points: usize,
    pub zeeman: ZeemanTrajectoryConfig,
    /// Per-detection depumping probability applied in the readout map.
    pub depump: f64,
    pub cycles_per_point: usize,
}

impl Default for NmrScanParams {
    fn default() -> Self {
        Self {
            nmr: NmrConfig::default(),
            detunings_in_rabi: vec![0.0, 2.0],
            n_points: 31,
            zeeman: ZeemanTrajectoryConfig::default(),
            depump: 0.0,
            cycles_per_point: 200,
        }
    }
}

impl NmrScanParams {
    pub fn curve_config(&self, ratio: f64) -> NmrConfig {
        NmrConfig { delta_b: ratio * self.nmr.omega_b_rabi, ..self.nmr.clone() }
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_points.max(2);
        (0..n).map(|i| self.nmr.t_max * i as f64 / (n - 1) as f64).collect()
    }

    pub fn readout(&self) -> motionread_core::Result<ReadoutMap> {
        Ok(ReadoutMap { depump: self.depump, ..ReadoutMap::from_zeeman(&self.zeeman)? })
    }
}

impl Validate for NmrScanParams {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        // delta_b is replaced per curve, so the step bound is checked for each
        for (i, &r) in self.detunings_in_rabi.iter().enumerate() {
            if !r.is_finite() {
                out.push(Violation::new(format!("detunings_in_rabi[{i}]"), "must be finite"));
                continue;
            }
            for v in self.curve_config(r).violations() {
                if !out.iter().any(|o| o.key == format!("nmr.{}", v.key)) {
                    out.push(v.nested("nmr"));
                }
            }
        }
        check(&mut out, !self.detunings_in_rabi.is_empty(), "detunings_in_rabi", "must not be empty");
        check(&mut out, self.n_points >= 8, "n_points", "must be >= 8");
        nested(&mut out, "zeeman", self.zeeman.violations());
        check(&mut out, (0.0..=1.0).contains(&self.depump), "depump", "must lie in [0, 1]");
        check(&mut out, self.cycles_per_point >= 2, "cycles_per_point", "must be >= 2");
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelitySweepParams {
    pub trajectory: ClockTrajectoryConfig,
    /// Integration times swept at the configured mean rate, s.
    pub integration_times: Vec<f64>,
    /// Mean detected rates swept at `reference_time`, 1/s.
    pub mean_rates: Vec<f64>,
    pub reference_time: f64,
    pub trajectories: usize,
}

impl Default for FidelitySweepParams {
    fn default() -> Self {
        Self {
            trajectory: ClockTrajectoryConfig::default(),
            integration_times: vec![0.01, 0.02, 0.04, 0.08, 0.16],
            mean_rates: vec![2.5e3, 5.0e3, 1.0e4, 2.0e4, 4.0e4],
            reference_time: 0.08,
            trajectories: 2000,
        }
    }
}

impl Validate for FidelitySweepParams {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        nested(&mut out, "trajectory", self.trajectory.violations());
        let seq = self.trajectory.sequence_time;
        check(
            &mut out,
            self.integration_times.iter().all(|&t| t >= seq),
            "integration_times",
            "every entry must cover at least one sequence",
        );
        check(&mut out, self.mean_rates.iter().all(|&r| r.is_finite() && r >= 0.0), "mean_rates", "must be >= 0");
        check(&mut out, self.reference_time >= seq, "reference_time", "must cover at least one sequence");
        check(&mut out, self.trajectories >= 1, "trajectories", "must be >= 1");
        out
    }
}
