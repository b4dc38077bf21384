//! Counter-based hashing used for every random quantity in the crate.

pub(crate) const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` of a master seed. Used for replicas and
/// for separating the instruction, configuration and scheduler streams.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ 0x632b_e59b_d9b4_e019).wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Top 53 bits as a uniform float in `[0, 1)`.
#[inline]
pub(crate) fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Named sub-streams of a replica seed.
pub(crate) mod stream {
    pub const STACKS: u64 = 1;
    pub const CONFIG: u64 = 2;
    pub const INJECT: u64 = 4;
}
