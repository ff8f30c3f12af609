//! State detection of trapped ions through state-dependent coherent motion.
//!
//! The crate models the two readout protocols for a spectroscopy ion that is
//! co-trapped with a control ion:
//!
//! * a modulated-fluorescence protocol, where the control ion's Doppler-shifted
//!   scattering rate is folded into motional-phase bins and demodulated
//!   ([`fluorescence`], [`estimators`]);
//! * a resolved-sideband protocol, where the Fock distribution of the driven
//!   mode is probed with a red-sideband pulse ([`motional`]).
//!
//! [`atomic`] maps Zeeman sublevels to coherent amplitudes, [`trajectory`]
//! composes everything into quantum-jump records and [`nmr`] integrates the
//! driven spin-5/2 dynamics used for magnetic-resonance scans.

pub mod atomic;
pub mod constants;
pub mod error;
pub mod estimators;
pub mod fluorescence;
pub mod motional;
pub mod nmr;
pub mod numeric;
pub mod rng;
pub mod trajectory;
pub mod validate;

pub use atomic::{HalfInt, ZeemanDriveConfig, ZeemanLabel};
pub use error::{Error, Result};
pub use estimators::{ClassifierConfig, Fidelity, Histogram, Jump};
pub use fluorescence::{BinnedCounts, FluorescenceConfig, Pulse};
pub use motional::{FockDistribution, SidebandConfig, Truncation};
pub use nmr::{NmrConfig, ReadoutMap, SpinState};
pub use rng::TrialSeed;
pub use trajectory::{
    ClockState, ClockTrajectoryConfig, TrajectoryRecord, TransitionEvent, ZeemanReadout,
    ZeemanTrajectoryConfig,
};
pub use validate::{Validate, Violation};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
