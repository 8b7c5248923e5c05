//! Deterministic seed derivation.
//!
//! Every source of randomness in the workspace draws from a child seed that is
//! a pure function of `(root seed, stream, index)`. Jobs that run concurrently
//! therefore produce bit-identical results no matter how they are scheduled,
//! because no generator is ever shared between them.
//!
//! The mix is the SplitMix64 finalizer applied to the root with the stream and
//! index folded in via odd multiplicative constants.

/// Named streams keep unrelated consumers of the same root seed decorrelated.
pub mod stream {
    pub const TOPOLOGY: u64 = 0x01;
    pub const NODE_SIZES: u64 = 0x02;
    pub const INPUT_SIGNS: u64 = 0x03;
    pub const TERMINALS: u64 = 0x04;
    pub const TASK_INPUT: u64 = 0x05;
    pub const TRIAL: u64 = 0x06;
    pub const RETRY: u64 = 0x07;
}

/// SplitMix64 finalizer: a bijective 64-bit mix with good avalanche.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(root, stream, index)`.
pub fn derive(root: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(root ^ stream.wrapping_mul(0xa076_1d64_78bd_642f));
    splitmix64(a ^ index.wrapping_mul(0xe703_7ed1_a0b4_28db))
}

/// Child seed for one (grid cell, trial) job of an experiment.
pub fn cell_trial_seed(root: u64, cell: u64, trial: u64) -> u64 {
    derive(derive(root, stream::TRIAL, trial), cell.wrapping_add(0x9e), 0)
}
