//! Deterministic seed expanders.
//!
//! The default expander runs SHA-256 in counter mode: output block `c` is
//! `SHA256(domain || len(seed) || seed || c)` and the output bit string is
//! the concatenation of the blocks, most significant bit first. Output is
//! byte-exact across runs and platforms.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use rand::SeedableRng;
use sha2::{Digest, Sha256};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const MIN_SEED_BITS: usize = 16;

pub trait Expander: Send + Sync + fmt::Debug {
    fn expand(&self, seed: &BitVector, out_len: usize) -> BitVector;

    /// Bit `index` of the expansion.
    fn bit(&self, seed: &BitVector, index: usize) -> bool {
        self.expand(seed, index + 1).get(index)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Sha256Expander;

const DOMAIN: &[u8] = b"phg-expander-v1";

impl Sha256Expander {
    fn block(seed: &BitVector, counter: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update((seed.len() as u64).to_be_bytes());
        h.update(seed.to_bytes());
        h.update(counter.to_be_bytes());
        h.finalize().into()
    }
}

impl Expander for Sha256Expander {
    fn expand(&self, seed: &BitVector, out_len: usize) -> BitVector {
        let mut out = BitVector::zeros(out_len);
        let mut j = 0;
        let mut counter = 0u64;
        while j < out_len {
            let block = Self::block(seed, counter);
            for byte in block {
                for b in (0..8).rev() {
                    if j == out_len {
                        break;
                    }
                    out.set(j, (byte >> b) & 1 == 1);
                    j += 1;
                }
            }
            counter += 1;
        }
        out
    }

    fn bit(&self, seed: &BitVector, index: usize) -> bool {
        let block = Self::block(seed, (index / 256) as u64);
        let within = index % 256;
        (block[within / 8] >> (7 - within % 8)) & 1 == 1
    }
}

/// `G(seed)` truncated to `out_len` bits under the default expander.
pub fn prg_expand(seed: &BitVector, out_len: usize) -> Result<BitVector> {
    check_seed(seed)?;
    Ok(Sha256Expander.expand(seed, out_len))
}

pub fn check_seed(seed: &BitVector) -> Result<()> {
    if seed.len() < MIN_SEED_BITS {
        return Err(Error::InvalidParameter(format!(
            "expander seeds need at least {MIN_SEED_BITS} bits, got {}",
            seed.len()
        )));
    }
    Ok(())
}

/// A lazily sampled truly random function: the first request for a seed
/// draws a fresh uniform row from an internal generator, later requests
/// replay it. Rows are drawn with [`BitVector::random`], so a fresh ideal
/// expander hands out exactly the rows a mask table drawn from the same
/// generator would hold.
pub struct IdealExpander {
    row_len: usize,
    state: Mutex<(SimRng, HashMap<BitVector, BitVector>)>,
}

impl IdealExpander {
    pub fn new(rng: SimRng, row_len: usize) -> Self {
        Self {
            row_len,
            state: Mutex::new((rng, HashMap::new())),
        }
    }

    pub fn from_seed(seed: u64, row_len: usize) -> Self {
        Self::new(SimRng::seed_from_u64(seed), row_len)
    }
}

impl fmt::Debug for IdealExpander {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdealExpander")
            .field("row_len", &self.row_len)
            .finish()
    }
}

impl Expander for IdealExpander {
    fn expand(&self, seed: &BitVector, out_len: usize) -> BitVector {
        let mut guard = self.state.lock().expect("ideal expander lock poisoned");
        let (rng, table) = &mut *guard;
        let row = table
            .entry(seed.clone())
            .or_insert_with(|| BitVector::random(self.row_len.max(out_len), rng));
        if row.len() < out_len {
            let extra = BitVector::random(out_len - row.len(), rng);
            row.extend_from(&extra);
        }
        row.slice(0, out_len)
    }
}
