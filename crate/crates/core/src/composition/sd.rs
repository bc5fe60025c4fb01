//! Exact statistical distance of the low bits of a uniform integer.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_EXHAUSTIVE_N: u64 = 1 << 24;

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        u64::BITS - (n - 1).leading_zeros()
    }
}

/// `floor(log2(n) / 2)`.
pub fn default_sd_bits(n: u64) -> u32 {
    n.max(1).ilog2() / 2
}

/// Statistical distance between the `ell` least significant bits of a
/// uniform draw from `0..n` and the uniform distribution on `ell` bits,
/// by counting every residue.
pub fn low_bits_sd(n: u64, ell: u32) -> Result<Ratio<u128>> {
    if n == 0 || n > MAX_EXHAUSTIVE_N {
        return Err(Error::InvalidParameter(format!(
            "n must lie in 1..={MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    if ell > ceil_log2(n) {
        return Err(Error::InvalidParameter(format!(
            "ell = {ell} exceeds ceil(log2 {n})"
        )));
    }
    let cells = 1u64 << ell;
    let mut counts = vec![0u64; cells as usize];
    for x in 0..n {
        counts[(x & (cells - 1)) as usize] += 1;
    }
    // sum_s |count_s / n - 2^-ell| / 2, over the common denominator 2 n 2^ell.
    let num: u128 = counts
        .iter()
        .map(|&c| (u128::from(c) * u128::from(cells)).abs_diff(u128::from(n)))
        .sum();
    Ok(Ratio::new(num, 2 * u128::from(n) * u128::from(cells)))
}

/// `sd <= 1 / sqrt(n)`, decided exactly as `num^2 n <= den^2`.
pub fn within_inverse_sqrt(sd: &Ratio<u128>, n: u64) -> bool {
    let num = sd.numer();
    let den = sd.denom();
    num * num * u128::from(n) <= den * den
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdSweep {
    pub max_n: u64,
    pub checked: u64,
    pub violations: Vec<u64>,
    /// Largest observed `sd * sqrt(n)`.
    pub worst_ratio: f64,
    pub worst_n: u64,
}

/// Checks every `n` in `1..=max_n` at `ell = floor(log2(n) / 2)`.
pub fn sd_sweep(max_n: u64) -> Result<SdSweep> {
    let mut out = SdSweep {
        max_n,
        checked: 0,
        violations: Vec::new(),
        worst_ratio: 0.0,
        worst_n: 1,
    };
    for n in 1..=max_n {
        let sd = low_bits_sd(n, default_sd_bits(n))?;
        out.checked += 1;
        if !within_inverse_sqrt(&sd, n) {
            out.violations.push(n);
        }
        let ratio = *sd.numer() as f64 / *sd.denom() as f64 * (n as f64).sqrt();
        if ratio > out.worst_ratio {
            out.worst_ratio = ratio;
            out.worst_n = n;
        }
    }
    Ok(out)
}
