//! Sub-seeding scheme.
//!
//! Every random source in a run derives from one user seed plus a fixed
//! per-purpose offset, so the synthetic EEG noise and the Random-condition
//! drone coin can each be reproduced independently of the other.

/// Offset for the synthetic EEG generator.
pub const SYNTH_OFFSET: u64 = 0x0000_0000;
/// Offset for the Random-condition drone coin.
pub const DRONE_OFFSET: u64 = 0x00D5_0E00;

pub fn synth_seed(seed: u64) -> u64 {
    seed.wrapping_add(SYNTH_OFFSET)
}

pub fn drone_seed(seed: u64) -> u64 {
    seed.wrapping_add(DRONE_OFFSET)
}
