//! Deterministic hashing and seeded pseudo-randomness.
//!
//! Everything downstream of these primitives (MinHash signatures, the hash
//! embedder, k-means initialization) must be reproducible run-to-run, so we
//! avoid hashers with process-local keys and use a fixed FNV-1a / SplitMix64
//! combination instead.

/// One step of the SplitMix64 generator: mixes `state` into a well-distributed
/// 64-bit value and advances it.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash of a byte string (no process-local state).
#[inline]
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Stable keyed hash: FNV-1a of the bytes mixed with `key` via SplitMix64.
///
/// Distinct keys give effectively independent hash functions over the same
/// input, which is what MinHash permutations need.
#[inline]
pub fn keyed_hash64(key: u64, bytes: &[u8]) -> u64 {
    let mut state = key ^ fnv1a64(bytes);
    splitmix64(&mut state)
}

/// Minimal deterministic RNG over SplitMix64, sufficient for index
/// initialization and synthetic fixtures.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Creates a generator from a seed; equal seeds yield equal streams.
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    /// Uniform value in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform value in `[0, bound)`; `bound` must be non-zero.
    pub fn next_below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}
