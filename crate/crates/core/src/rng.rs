//! Deterministic random streams.
//!
//! Every independent trial draws from its own ChaCha stream keyed by
//! `(seed, trial)`, with optional sub-streams, so results never depend on the
//! order in which a thread pool schedules trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub seed: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self { seed, trial }
    }

    /// Stream `sub` of this trial.
    pub fn rng(&self, sub: u64) -> ChaCha8Rng {
        let key = splitmix64(self.seed ^ splitmix64(self.trial.wrapping_add(0x5851_f42d_4c95_7f2d)));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(sub);
        rng
    }

    /// A child trial seed, for nesting ensembles inside ensembles.
    pub fn child(&self, index: u64) -> TrialSeed {
        TrialSeed { seed: splitmix64(self.seed ^ self.trial.rotate_left(32)), trial: index }
    }
}
