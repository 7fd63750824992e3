//! Reproducible random streams.
//!
//! Every replication owns an independent generator derived from
//! `(master_seed, experiment, replication)`. The triple is mixed with
//! SplitMix64 into a 256-bit ChaCha8 key, so streams for different indices
//! never overlap and results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(master_seed: u64, experiment: u64, replication: u64) -> Stream {
    let mut state = master_seed;
    let mut seed = [0u8; 32];
    let words = [
        splitmix64(&mut state) ^ experiment.wrapping_mul(0xD6E8_FEB8_6659_FD93),
        splitmix64(&mut state) ^ replication.wrapping_mul(0xA076_1D64_78BD_642F),
        splitmix64(&mut state),
        splitmix64(&mut state),
    ];
    let mut mix = words[0] ^ words[1].rotate_left(17);
    for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
        let v = splitmix64(&mut mix) ^ w;
        chunk.copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Child stream for a named sub-purpose inside one replication (arrivals,
/// service times, residuals, …).
pub fn substream(master_seed: u64, experiment: u64, replication: u64, purpose: u64) -> Stream {
    let mut rng = stream(master_seed, experiment, replication);
    rng.set_stream(purpose);
    rng
}

/// Scalar seed for a replication, for components that take a `u64` seed
/// and derive their own substreams from it.
pub fn derive_seed(master_seed: u64, experiment: u64, replication: u64) -> u64 {
    use rand::RngCore;
    stream(master_seed, experiment, replication).next_u64()
}
