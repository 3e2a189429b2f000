//! Deterministic experiment runner, acceptance suites and the self-test.

pub mod commands;
pub mod config;
pub mod fixtures;
pub mod runner;
pub mod suites;

pub use config::ExperimentConfig;
pub use runner::{run_trials, summarize, Summary, TrialRecord};

/// One step of the splitmix64 generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`, independent of scheduling.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut s = master ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut s);
    splitmix64(&mut s)
}
