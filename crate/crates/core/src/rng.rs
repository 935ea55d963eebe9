//! Counter-based random streams: every Monte Carlo sample draws from its own
//! ChaCha stream keyed by `(seed, domain)` and selected by the sample index,
//! so results do not depend on how samples are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream families for different samplers sharing one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    PreDeposition = 1,
    PostDeposition = 2,
    Synthetic = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Factory for per-index generators.
#[derive(Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64, domain: Domain) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ ((domain as u64) << 56);
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { base: ChaCha8Rng::from_seed(key) }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}
