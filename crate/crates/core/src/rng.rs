//! Counter-based random streams.
//!
//! Every stochastic work item (a path, a field realization, a disorder
//! sample) owns a ChaCha stream selected by `(master seed, domain, index)`.
//! The stream is a pure function of those three numbers, so results do not
//! depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Separates the stream families drawn from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Paths = 0x7061_7468,
    Field = 0x6669_656c,
    Disorder = 0x6469_736f,
}

/// Stream generator for item `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, used when one seeded object spawns another
/// family of streams (e.g. the field inside each disorder realization).
pub fn child_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, domain, index).next_u64()
}
