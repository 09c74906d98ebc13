//! Named random substreams.
//!
//! Every stochastic step draws from a ChaCha8 stream derived from one master
//! seed plus a name (and optionally an epoch and an index), so any step can be
//! replayed in isolation and parallel work never shares a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn fnv1a(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for a named phase.
pub fn substream(seed: u64, name: &str) -> StreamRng {
    stream(seed, name, 0, 0)
}

/// Stream for item `index` of epoch `epoch` within a named phase.
pub fn stream(seed: u64, name: &str, epoch: u64, index: u64) -> StreamRng {
    let key = splitmix64(seed ^ fnv1a(name)) ^ splitmix64(epoch.wrapping_add(0x5151));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Draw an index from a probability vector by inverse CDF.
pub fn categorical<R: rand::Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    // x landed in the rounding gap above the final partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
