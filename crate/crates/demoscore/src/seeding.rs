//! Deterministic seed derivation.
//!
//! Every stage, rollout, and sampler derives its own seed from a base
//! seed and a stream index, so one master seed pins down the entire
//! pipeline without any shared RNG state.

/// SplitMix64 finalizer over the base seed and stream index.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named pipeline streams, so call sites do not collide on indices.
pub mod streams {
    pub const GEN_DEMOS: u64 = 1;
    pub const FEASIBLE: u64 = 2;
    pub const INVDYN_TRAIN: u64 = 3;
    pub const CALIBRATION: u64 = 4;
    pub const POLICY_TRAIN: u64 = 5;
    pub const POLICY_SAMPLE: u64 = 6;
    pub const EVALUATION: u64 = 7;
}
