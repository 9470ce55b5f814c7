//! Deterministic random streams.
//!
//! Every trial owns one seed, derived by counter from a master seed. The
//! seed is expanded into two independent ChaCha streams, one for the
//! allocator and one for the environment, so algorithm randomness never
//! perturbs an oblivious adversary's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const ALGORITHM_STREAM: u64 = 1;
const ENVIRONMENT_STREAM: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `counter`-th child of `master`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(counter.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// A single seedable stream.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The two streams owned by one trial.
#[derive(Debug, Clone)]
pub struct TrialRngs {
    pub algorithm: SimRng,
    pub environment: SimRng,
}

impl TrialRngs {
    pub fn from_seed(seed: u64) -> Self {
        let mut algorithm = ChaCha8Rng::seed_from_u64(seed);
        algorithm.set_stream(ALGORITHM_STREAM);
        let mut environment = ChaCha8Rng::seed_from_u64(seed);
        environment.set_stream(ENVIRONMENT_STREAM);
        Self { algorithm, environment }
    }

    pub fn for_trial(master: u64, trial: u64) -> Self {
        Self::from_seed(derive_seed(master, trial))
    }
}
