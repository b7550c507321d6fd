//! Per-trial random streams.
//!
//! Every stream is keyed by `(master seed, trial index, stream)` and seeded through
//! SplitMix64, so a trial's randomness does not depend on which other trials ran, in what
//! order, or on how many threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Independent purposes a trial draws randomness for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    KgpBob,
    KgpCharlie,
    Symmetrise,
    Adversary,
    Message,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::KgpBob => 1,
            Stream::KgpCharlie => 2,
            Stream::Symmetrise => 3,
            Stream::Adversary => 4,
            Stream::Message => 5,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha12 generator for one `(master, trial, stream)` triple.
pub fn stream_rng(master: u64, trial: u64, stream: Stream) -> ChaCha12Rng {
    let mut state = master;
    let a = splitmix64(&mut state);
    let mut state = a ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let b = splitmix64(&mut state);
    let mut state = b ^ stream.tag().wrapping_mul(0x8CB9_2BA7_2F3D_8DD7);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}

/// Generator for a single standalone call that only has a seed.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    stream_rng(seed, 0, Stream::Adversary)
}
