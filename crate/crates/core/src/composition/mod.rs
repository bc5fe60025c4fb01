//! Composition counterexamples built from Encrypermute.

pub mod computational;
pub mod encrypermute;
pub mod perm;
pub mod sd;

pub use computational::{
    prg_composition_attack, prg_decrypt, prg_encrypermute, prg_seed_len, run_prg_composition,
    PrgCompositionPlan,
};
pub use encrypermute::{
    composition_attack, decrypt_round, default_width, encrypermute, encrypermute_independence_test,
    encrypermute_uniformity_test, expected_membership_gap, run_composition, AttackFailure,
    CompositionAttack, CompositionSchedule, CompositionTranscript, DatasetSource,
    EncrypermuteParams,
};
pub use perm::{decode_block, encode_block, factorial, perm_rank, PermRank};
pub use sd::{default_sd_bits, low_bits_sd, sd_sweep, within_inverse_sqrt, SdSweep};
