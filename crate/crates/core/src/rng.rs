//! Keyed random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream addressed
//! by `(seed, domain, t, index)`. ChaCha is a counter-mode generator, so a
//! stream is fully determined by its key and the position of the draw
//! within it; rounds can be regenerated in any order and two policies run
//! on the same seed see the same contexts and reward noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream. Distinct domains never share keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Features = 1,
    Noise = 2,
    Reward = 3,
    ThetaStar = 4,
    Policy = 5,
    Gradient = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a, used to turn policy labels into stable stream indices.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Stream for draw sequence `(seed, domain, t, index)`.
pub fn stream(seed: u64, domain: Domain, t: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        seed,
        domain as u64,
        splitmix64(seed ^ splitmix64(domain as u64)),
        0x6261_6e64_6974_6c61,
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(splitmix64(t) ^ index.rotate_left(32) ^ splitmix64(index.wrapping_add(0x51)));
    rng
}
