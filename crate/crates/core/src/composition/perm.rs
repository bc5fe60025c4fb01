//! Permutation ranks and block encodings.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// A rank in `0..k!` together with its modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermRank {
    pub value: BigUint,
    pub modulus: BigUint,
}

pub fn factorial(k: usize) -> BigUint {
    (2..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// The lexicographic rank of the permutation `sigma` that sorts `prefix`
/// ascending, comparing elements as big-endian integers.
pub fn perm_rank(prefix: &[BitVector]) -> Result<PermRank> {
    if prefix.is_empty() {
        return Err(Error::Empty);
    }
    let width = prefix[0].len();
    if let Some(x) = prefix.iter().find(|x| x.len() != width) {
        return Err(Error::LengthMismatch {
            expected: width,
            actual: x.len(),
        });
    }
    let mut sigma: Vec<usize> = (0..prefix.len()).collect();
    sigma.sort_by(|&a, &b| prefix[a].cmp(&prefix[b]));
    if sigma.windows(2).any(|w| prefix[w[0]] == prefix[w[1]]) {
        return Err(Error::DuplicateElements);
    }
    Ok(PermRank {
        value: lehmer_rank(&sigma),
        modulus: factorial(prefix.len()),
    })
}

/// Rank of a permutation of `0..k` in lexicographic order.
pub fn lehmer_rank(perm: &[usize]) -> BigUint {
    let k = perm.len();
    let mut r = BigUint::zero();
    for i in 0..k {
        let smaller_after = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        r = r * BigUint::from(k - i) + BigUint::from(smaller_after);
    }
    r
}

/// The permutation of `0..k` with lexicographic rank `rank`.
pub fn lehmer_unrank(mut rank: BigUint, k: usize) -> Result<Vec<usize>> {
    if rank >= factorial(k) {
        return Err(Error::InvalidParameter(format!("rank out of range for k = {k}")));
    }
    let mut digits = vec![0usize; k];
    for i in (0..k).rev() {
        let base = BigUint::from(k - i);
        let digit = &rank % &base;
        digits[i] = digit.iter_u64_digits().next().unwrap_or(0) as usize;
        rank /= base;
    }
    let mut pool: Vec<usize> = (0..k).collect();
    Ok(digits.into_iter().map(|c| pool.remove(c)).collect())
}

/// Big-endian concatenation of the elements, read as one integer.
pub fn encode_block(elems: &[BitVector]) -> BigUint {
    let mut all = BitVector::default();
    for e in elems {
        all.extend_from(e);
    }
    all.to_biguint()
}

pub fn decode_block(m: &BigUint, t: usize, d: usize) -> Result<Vec<BitVector>> {
    let capacity = (t * d) as u64;
    if m.bits() > capacity {
        return Err(Error::BlockOutOfRange {
            bits: m.bits(),
            capacity,
        });
    }
    let all = BitVector::from_biguint_low(m, t * d);
    Ok((0..t).map(|i| all.slice(i * d, (i + 1) * d)).collect())
}

/// Uniform draw from `0..modulus` by rejection on `modulus.bits()` bits.
pub fn uniform_below<R: Rng + ?Sized>(modulus: &BigUint, rng: &mut R) -> BigUint {
    let bits = modulus.bits() as usize;
    loop {
        let candidate = BitVector::random(bits, rng).to_biguint();
        if &candidate < modulus {
            return candidate;
        }
    }
}
