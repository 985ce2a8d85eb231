//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by the
//! master seed and positioned on a 64-bit stream id. The stream id packs a
//! domain tag (which experiment) in the top 16 bits and a task index (which
//! sample, block or grid point) in the low 48 bits, so a task's draws depend
//! only on `(seed, domain, index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Domain {
    Path = 1,
    Block = 2,
    MonteCarlo = 3,
    Induced = 4,
    Ldt = 5,
    Clt = 6,
    Variance = 7,
    OperatorMc = 8,
    Scan = 9,
    Corpus = 10,
}

const INDEX_BITS: u32 = 48;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

pub fn stream_id(domain: Domain, index: u64) -> u64 {
    ((domain as u64) << INDEX_BITS) | (index & INDEX_MASK)
}

/// Generator for task `index` of `domain` under the master `seed`.
pub fn stream_rng(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(domain, index));
    rng
}

/// Combines a master seed with a sub-label (e.g. a grid index) into a new
/// master seed. SplitMix64 finalizer.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
