//! Seed derivation and the simulation RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Every game and mechanism draws from ChaCha8, whose stream is fixed
/// across platforms and crate versions.
pub type SimRng = ChaCha8Rng;

fn digest(label: &str, seed: u64, extra: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"phg-seed-v1");
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    h.update(seed.to_be_bytes());
    h.update(extra.to_be_bytes());
    h.finalize().into()
}

/// Seed of trial `index` under `master`: the first eight bytes of a
/// SHA-256 digest, so trial seeds do not depend on execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let d = digest("trial", master, index);
    u64::from_be_bytes(d[..8].try_into().expect("digest holds 32 bytes"))
}

/// An independent generator for one named role within a game.
pub fn stream(seed: u64, label: &str) -> SimRng {
    SimRng::from_seed(digest(label, seed, 0))
}

/// `Ber(p)` threshold on a 32-bit uniform draw; `p = 0` and `p = 1` are exact.
#[inline]
pub fn bernoulli_threshold(p: f64) -> u64 {
    let scaled = (p.clamp(0.0, 1.0) * 4_294_967_296.0).round();
    scaled as u64
}

#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, threshold: u64) -> bool {
    u64::from(rng.next_u32()) < threshold
}
