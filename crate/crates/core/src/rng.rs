//! Named, counter-based random streams split off a master seed.
//!
//! A stream is addressed by `(master, tag, words)` and is independent of the
//! order in which streams are requested, which is what lets nested regions
//! and lazily explored space-time share one realization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cylinders of the space-time field, per (anchor, time block).
pub const TAG_FIELD: u64 = 0x66_6965_6c64;
/// Per-replica master seeds.
pub const TAG_REPLICA: u64 = 0x7265_706c;
/// Lifetimes of initial cylinders in the uniqueness coupling.
pub const TAG_INITIAL: u64 = 0x696e_6974;
/// Free-process slabs drawn directly from a region catalog.
pub const TAG_SLAB: u64 = 0x736c_6162;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a stream address to 64 bits.
pub fn mix(master: u64, tag: u64, words: &[i64]) -> u64 {
    let mut state = master;
    let mut h = splitmix64(&mut state) ^ tag.rotate_left(17);
    for &w in words {
        state ^= h;
        state = state.wrapping_add(w as u64);
        h = splitmix64(&mut state);
    }
    state ^= words.len() as u64;
    splitmix64(&mut state) ^ h
}

/// The stream at `(master, tag, words)`.
pub fn stream(master: u64, tag: u64, words: &[i64]) -> ChaCha8Rng {
    let mut state = mix(master, tag, words);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Master seed of replica `i`.
pub fn replica_seed(master: u64, i: u64) -> u64 {
    mix(master, TAG_REPLICA, &[i as i64])
}
