//! Per-stage seed derivation so every pipeline stage of every repetition is
//! independently reproducible.

/// Pipeline stages with independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Training-pool generation (synthetic) or test carve-out (CSV).
    Data,
    /// Fresh test-set generation (synthetic sources).
    Test,
    /// Train/calibration split.
    Split,
    /// Regressor fitting.
    Fit,
    /// Jitter noise inside the fairness transform.
    Jitter,
    /// Tie-breaking uniforms for test-point synchronization.
    TieBreak,
}

impl Stage {
    fn tag(&self) -> u64 {
        match self {
            Stage::Data => 0x64617461,      // "data"
            Stage::Test => 0x74657374,      // "test"
            Stage::Split => 0x73706c74,     // "splt"
            Stage::Fit => 0x666e6974,       // "fit"
            Stage::Jitter => 0x6a697474,    // "jitt"
            Stage::TieBreak => 0x74696575,  // "tieu"
        }
    }
}

/// SplitMix64 finalizer; a bijection on u64 with good avalanche behavior.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Stage seed for repetition `rep`: the repetition seed `base + rep` mixed
/// with the stage tag through SplitMix64.
pub fn derive_seed(base_seed: u64, rep: u64, stage: Stage) -> u64 {
    splitmix64(splitmix64(base_seed.wrapping_add(rep)) ^ stage.tag())
}
