//! Fixed-length bit vectors stored most-significant-bit first.
//!
//! Bit `0` is the leftmost bit of the string. Words are packed so that the
//! derived ordering on two vectors of equal length matches the ordering of
//! the big-endian integers they spell.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            out.set(j, b);
        }
        out
    }

    /// The low `len` bits of `value`, big-endian. Requires `len <= 64`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits, got {len}");
        let mut out = Self::zeros(len);
        for j in 0..len {
            let shift = len - 1 - j;
            out.set(j, (value >> shift) & 1 == 1);
        }
        out
    }

    /// The low `len` bits of `value`, big-endian (higher bits are dropped).
    pub fn from_biguint_low(value: &BigUint, len: usize) -> Self {
        let mut out = Self::zeros(len);
        for j in 0..len {
            let shift = (len - 1 - j) as u64;
            out.set(j, value.bit(shift));
        }
        out
    }

    /// Uniform random vector. Draws exactly `ceil(len / 64)` words from `rng`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..word_count(len)).map(|_| rng.next_u64()).collect();
        let tail = len % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= !0u64 << (64 - tail);
            }
        }
        Self { len, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        (self.words[j / 64] >> (63 - j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, bit: bool) {
        assert!(j < self.len, "bit index {j} out of range for length {}", self.len);
        let mask = 1u64 << (63 - j % 64);
        if bit {
            self.words[j / 64] |= mask;
        } else {
            self.words[j / 64] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn extend_from(&mut self, other: &BitVector) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    /// Bits `start..end` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.len);
        let mut out = Self::zeros(end - start);
        for j in start..end {
            out.set(j - start, self.get(j));
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Self {
            len: self.len,
            words,
        })
    }

    pub fn hamming_distance(&self, other: &BitVector) -> Result<usize> {
        Ok(self.xor(other)?.count_ones())
    }

    /// Numeric value, for vectors of at most 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        if self.len == 0 {
            return Some(0);
        }
        Some(self.words[0] >> (64 - self.len))
    }

    pub fn to_biguint(&self) -> BigUint {
        let mut value = BigUint::default();
        for b in self.iter() {
            value <<= 1u32;
            if b {
                value |= BigUint::from(1u8);
            }
        }
        value
    }

    /// Bytes of the packed representation, used as hash input.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_be_bytes()).collect();
        bytes.truncate(self.len.div_ceil(8));
        bytes
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitVector({self})")
        } else {
            write!(f, "BitVector(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "'{other}' is not a binary digit"
                ))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(Self::from_bools(&bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ordering_is_numeric_for_equal_lengths() {
        let a = BitVector::from_biguint_low(&BigUint::from(5u8), 70);
        let b = BitVector::from_biguint_low(&BigUint::from(6u8), 70);
        assert!(a < b);
        let c: BitVector = "10".parse().unwrap();
        let d: BitVector = "01".parse().unwrap();
        assert!(d < c);
    }

    #[test]
    fn roundtrip_u64_and_display() {
        let v = BitVector::from_u64(0b1011, 6);
        assert_eq!(v.to_string(), "001011");
        assert_eq!(v.to_u64(), Some(11));
        assert_eq!(v.to_biguint(), BigUint::from(11u32));
    }

    #[test]
    fn random_clears_tail_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = BitVector::random(70, &mut rng);
        let mut w = BitVector::zeros(70);
        for j in 0..70 {
            w.set(j, v.get(j));
        }
        assert_eq!(v, w);
    }

    #[test]
    fn push_and_slice() {
        let mut v = BitVector::zeros(0);
        for j in 0..130 {
            v.push(j % 3 == 0);
        }
        assert_eq!(v.len(), 130);
        let s = v.slice(63, 67);
        assert_eq!(s.to_string(), "1001");
    }

    #[test]
    fn low_bits_of_big_integer() {
        let v = BitVector::from_biguint_low(&BigUint::from(0b110101u32), 4);
        assert_eq!(v.to_string(), "0101");
    }

    #[test]
    fn xor_rejects_length_mismatch() {
        assert!(BitVector::zeros(3).xor(&BitVector::zeros(4)).is_err());
    }
}
