//! Counter-based random streams.
//!
//! A stream is a ChaCha8 keystream selected by `(seed, stream id)`; the draw
//! index is the keystream position, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines two words into a well-mixed word.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix(splitmix(a) ^ b.rotate_left(17))
}

/// Hashes a tag string into a word.
pub fn tag(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, c| (h ^ c as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed derived from a parent seed, a tag and an index.
pub fn derive_seed(seed: u64, tag_name: &str, index: u64) -> u64 {
    mix(mix(seed, tag(tag_name)), index)
}

/// Seed derived from the bit pattern of a vector (order-independent of its position in a list).
pub fn seed_from_point(seed: u64, x: &[f64]) -> u64 {
    x.iter().fold(mix(seed, tag("point")), |h, v| mix(h, v.to_bits()))
}

/// Independent stream `stream_id` under `seed`.
pub fn stream(seed: u64, stream_id: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream_id);
    r
}
