//! Encrypermute, the prefix revealer and the chained decryption attack.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::query::{phg_gap, GapReport, Query};
use crate::stats::{chi_square_two_sample, chi_square_uniform, ChiSquare};
use crate::universe::{Dataset, Population};

use super::perm::{decode_block, encode_block, factorial, perm_rank, uniform_below};

/// Largest modulus the statistical tests tabulate.
pub const MAX_TABULATED_MODULUS: usize = 10_000;

/// `5 * ceil(log2 n)` bits per element.
pub fn default_width(n: usize) -> usize {
    let ceil_log2 = if n <= 1 { 0 } else { (usize::BITS - (n - 1).leading_zeros()) as usize };
    5 * ceil_log2
}

/// Whether `2^bits <= k!`.
pub fn fits_in_factorial(bits: usize, k: usize) -> bool {
    factorial(k).bits() > bits as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncrypermuteParams {
    pub k: usize,
    pub t: usize,
    pub d: usize,
    pub n: usize,
}

impl EncrypermuteParams {
    pub fn new(k: usize, t: usize, d: usize, n: usize) -> Result<Self> {
        if k == 0 || t == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!(
                "k, t and d must be positive (k={k}, t={t}, d={d})"
            )));
        }
        if k + t > n {
            return Err(Error::InvalidParameter(format!("k + t = {} exceeds n = {n}", k + t)));
        }
        if !fits_in_factorial(d * t, k) {
            return Err(Error::InvalidParameter(format!(
                "2^(d t) = 2^{} exceeds {k}!",
                d * t
            )));
        }
        Ok(Self { k, t, d, n })
    }

    pub fn modulus(&self) -> BigUint {
        factorial(self.k)
    }
}

fn check_rows(rows: &[BitVector], n: usize, d: usize) -> Result<()> {
    if rows.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: rows.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    Ok(())
}

/// Rows of a bit-string dataset; errors on any other point type.
pub fn dataset_rows(x: &Dataset) -> Result<Vec<BitVector>> {
    let rows = x.bit_strings();
    if rows.len() != x.len() {
        return Err(Error::InvalidParameter("dataset must hold bit strings".into()));
    }
    Ok(rows)
}

pub fn all_distinct(rows: &[BitVector]) -> bool {
    let mut seen = HashSet::with_capacity(rows.len());
    rows.iter().all(|r| seen.insert(r))
}

/// `c = (m + r) mod k!` on distinct rows, otherwise uniform on `0..k!`.
pub fn encrypermute_rows<R: Rng + ?Sized>(
    rows: &[BitVector],
    params: &EncrypermuteParams,
    rng: &mut R,
) -> Result<BigUint> {
    check_rows(rows, params.n, params.d)?;
    let modulus = params.modulus();
    if !all_distinct(rows) {
        return Ok(uniform_below(&modulus, rng));
    }
    let r = perm_rank(&rows[..params.k])?.value;
    let m = encode_block(&rows[params.k..params.k + params.t]);
    Ok((m + r) % modulus)
}

pub fn encrypermute<R: Rng + ?Sized>(x: &Dataset, params: &EncrypermuteParams, rng: &mut R) -> Result<BigUint> {
    encrypermute_rows(&dataset_rows(x)?, params, rng)
}

/// Recovers rows `k..k+t` from `c` and the first `k` rows.
pub fn decrypt_round(c: &BigUint, known_prefix: &[BitVector], params: &EncrypermuteParams) -> Result<Vec<BitVector>> {
    if known_prefix.len() != params.k {
        return Err(Error::LengthMismatch {
            expected: params.k,
            actual: known_prefix.len(),
        });
    }
    let modulus = params.modulus();
    if c >= &modulus {
        return Err(Error::InvalidParameter("ciphertext not below k!".into()));
    }
    let r = perm_rank(known_prefix)?.value;
    let m = (c + &modulus - r) % &modulus;
    decode_block(&m, params.t, params.d)
}

/// The mechanism that publishes the first `k` rows.
pub fn reveal_prefix(rows: &[BitVector], k: usize) -> Vec<BitVector> {
    rows[..k.min(rows.len())].to_vec()
}

/// `ceil(n^alpha)`, robust to the power landing a hair above an integer.
pub fn prefix_len(n: usize, alpha: f64) -> usize {
    let raw = (n as f64).powf(alpha);
    let nearest = raw.round();
    let c = if (raw - nearest).abs() < 1e-9 { nearest } else { raw.ceil() };
    (c as usize).clamp(1, n)
}

/// Smallest `k` with `k! >= 2^bits`.
pub fn min_prefix_for(bits: usize) -> usize {
    let mut k = 1;
    while !fits_in_factorial(bits, k) {
        k += 1;
    }
    k
}

/// Stages `(k_i, t_i)` chaining Encrypermute copies from the revealed
/// prefix to the whole dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionSchedule {
    pub n: usize,
    pub alpha: f64,
    pub d: usize,
    pub first: usize,
    pub stages: Vec<EncrypermuteParams>,
}

impl CompositionSchedule {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        Self::with_width(n, alpha, default_width(n))
    }

    pub fn with_width(n: usize, alpha: f64, d: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("element width must be positive".into()));
        }
        // The first stage needs k! >= 2^d even at t = 1.
        let first = prefix_len(n, alpha).max(min_prefix_for(d)).min(n);
        let mut stages = Vec::new();
        let mut k = first;
        while k < n {
            let mut t = ((alpha * k as f64 / 20.0).floor() as usize).clamp(1, n - k);
            while t > 1 && !fits_in_factorial(d * t, k) {
                t -= 1;
            }
            stages.push(EncrypermuteParams::new(k, t, d, n)?);
            k += t;
        }
        Ok(Self {
            n,
            alpha,
            d,
            first,
            stages,
        })
    }

    pub fn population(&self) -> Population {
        Population::UniformBits { width: self.d }
    }
}

/// What the composed mechanisms publish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionTranscript {
    pub prefix: Vec<BitVector>,
    pub outputs: Vec<BigUint>,
}

pub fn run_composition<R: Rng + ?Sized>(
    rows: &[BitVector],
    schedule: &CompositionSchedule,
    rng: &mut R,
) -> Result<CompositionTranscript> {
    check_rows(rows, schedule.n, schedule.d)?;
    let outputs = schedule
        .stages
        .iter()
        .map(|p| encrypermute_rows(rows, p, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompositionTranscript {
        prefix: reveal_prefix(rows, schedule.first),
        outputs,
    })
}

/// The reconstructed sample and the membership query on it.
#[derive(Debug)]
pub struct CompositionAttack {
    pub rows: Vec<BitVector>,
    pub query: Query,
}

impl CompositionAttack {
    pub fn gap(&self, width: usize) -> Result<GapReport> {
        let x = Dataset::from_bit_strings(&self.rows)?;
        phg_gap(&self.query, &x, &Population::UniformBits { width })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("reconstruction failed at stage {stage}: {cause}")]
pub struct AttackFailure {
    pub stage: usize,
    pub cause: Error,
}

/// Membership query `+1` on `rows`, `-1` elsewhere.
pub fn membership_query(rows: &[BitVector], width: usize) -> Result<Query> {
    Query::membership(rows.iter().cloned().collect(), width)
}

pub fn composition_attack(
    m1_output: &[BitVector],
    encrypermute_outputs: &[BigUint],
    schedule: &CompositionSchedule,
) -> std::result::Result<CompositionAttack, AttackFailure> {
    let fail = |stage, cause| AttackFailure { stage, cause };
    if encrypermute_outputs.len() != schedule.stages.len() {
        let cause = Error::LengthMismatch {
            expected: schedule.stages.len(),
            actual: encrypermute_outputs.len(),
        };
        return Err(fail(0, cause));
    }
    let mut known = m1_output.to_vec();
    for (stage, (params, c)) in schedule.stages.iter().zip(encrypermute_outputs).enumerate() {
        if known.len() < params.k {
            let cause = Error::LengthMismatch {
                expected: params.k,
                actual: known.len(),
            };
            return Err(fail(stage, cause));
        }
        let block = decrypt_round(c, &known[..params.k], params).map_err(|e| fail(stage, e))?;
        known.truncate(params.k);
        known.extend(block);
    }
    if !all_distinct(&known) {
        return Err(fail(schedule.stages.len(), Error::DuplicateElements));
    }
    let query = membership_query(&known, schedule.d).map_err(|e| fail(schedule.stages.len(), e))?;
    Ok(CompositionAttack { rows: known, query })
}

/// `2 - 2n / 2^d`.
pub fn expected_membership_gap(n: usize, d: usize) -> f64 {
    2.0 - 2.0 * n as f64 / 2f64.powi(d as i32)
}

/// Where the tested datasets come from.
#[derive(Clone, Debug)]
pub enum DatasetSource {
    /// A fixed multiset, shuffled independently in every trial.
    Shuffled(Vec<BitVector>),
    /// Fresh iid uniform rows of the parameter width.
    Fresh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub counts: Vec<u64>,
    pub chi_square: ChiSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
    pub chi_square: ChiSquare,
}

fn tabulated_modulus(params: &EncrypermuteParams) -> Result<usize> {
    params
        .modulus()
        .to_usize()
        .filter(|&m| m <= MAX_TABULATED_MODULUS)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{}! is too large to tabulate (limit {MAX_TABULATED_MODULUS})",
                params.k
            ))
        })
}

fn tabulate<R: Rng + ?Sized>(
    params: &EncrypermuteParams,
    source: &DatasetSource,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let cells = tabulated_modulus(params)?;
    let mut counts = vec![0u64; cells];
    let mut rows = match source {
        DatasetSource::Shuffled(rows) => rows.clone(),
        DatasetSource::Fresh => Vec::new(),
    };
    for _ in 0..trials {
        match source {
            DatasetSource::Shuffled(_) => rows.shuffle(rng),
            DatasetSource::Fresh => {
                rows.clear();
                rows.extend((0..params.n).map(|_| BitVector::random(params.d, rng)));
            }
        }
        let c = encrypermute_rows(&rows, params, rng)?;
        let cell = c.to_usize().expect("ciphertext below a tabulated modulus");
        counts[cell] += 1;
    }
    Ok(counts)
}

/// Chi-square test of `c` against the uniform distribution on `0..k!`.
pub fn encrypermute_uniformity_test<R: Rng + ?Sized>(
    params: &EncrypermuteParams,
    source: &DatasetSource,
    trials: usize,
    rng: &mut R,
) -> Result<UniformityReport> {
    let counts = tabulate(params, source, trials, rng)?;
    let chi_square = chi_square_uniform(&counts)?;
    Ok(UniformityReport { counts, chi_square })
}

/// Two-sample test that the output law is the same for two fixed multisets.
pub fn encrypermute_independence_test<R: Rng + ?Sized>(
    params: &EncrypermuteParams,
    a: &[BitVector],
    b: &[BitVector],
    trials: usize,
    rng: &mut R,
) -> Result<IndependenceReport> {
    let counts_a = tabulate(params, &DatasetSource::Shuffled(a.to_vec()), trials, rng)?;
    let counts_b = tabulate(params, &DatasetSource::Shuffled(b.to_vec()), trials, rng)?;
    let chi_square = chi_square_two_sample(&counts_a, &counts_b)?;
    Ok(IndependenceReport {
        counts_a,
        counts_b,
        chi_square,
    })
}
