//! Universe points, populations and datasets.
//!
//! Three universes appear in the games: item indices `0..N`, pairs
//! `(i, word)` where the word is a mask row or a generator seed, and
//! fixed-width bit strings. Points carry an explicit tag so a query built
//! for one universe refuses points from another.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::bits::BitVector;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum UniversePoint {
    Index(usize),
    Pair { index: usize, word: BitVector },
    Bits(BitVector),
}

impl UniversePoint {
    pub fn index(&self) -> Option<usize> {
        match self {
            UniversePoint::Index(i) | UniversePoint::Pair { index: i, .. } => Some(*i),
            UniversePoint::Bits(_) => None,
        }
    }

    pub fn bits(&self) -> Option<&BitVector> {
        match self {
            UniversePoint::Bits(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for UniversePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UniversePoint::Index(i) => write!(f, "#{i}"),
            UniversePoint::Pair { index, word } if word.len() <= 32 => {
                write!(f, "(#{index}, {word})")
            }
            UniversePoint::Pair { index, word } => write!(f, "(#{index}, <{} bits>)", word.len()),
            UniversePoint::Bits(b) => write!(f, "{b}"),
        }
    }
}

/// The support of a lifted population: one word per item plus the pad
/// bits that the lifted round queries XOR together.
///
/// For random masks the word is the mask row itself and the pad of an
/// arbitrary point is its own bit `j`. For generator masks the word is a
/// seed and pads come from expanding it.
pub trait PairSupport: Send + Sync + fmt::Debug {
    fn universe_size(&self) -> usize;

    /// Number of rounds the pads cover.
    fn rounds(&self) -> usize;

    /// Width in bits of the word attached to every point.
    fn word_len(&self) -> usize;

    /// The word carried by item `i` in the population support.
    fn support_word(&self, i: usize) -> &BitVector;

    /// Pad bit `j` of item `i` (the mask bit, or bit `j` of the expanded seed).
    fn mask_bit(&self, i: usize, j: usize) -> bool;

    /// Pad bit `j` read off an arbitrary point word.
    fn point_bit(&self, word: &BitVector, j: usize) -> bool;
}

#[derive(Clone, Debug)]
pub enum Population {
    UniformIndex { size: usize },
    UniformPairs(Arc<dyn PairSupport>),
    UniformBits { width: usize },
}

impl Population {
    pub fn kind(&self) -> &'static str {
        match self {
            Population::UniformIndex { .. } => "uniform-index",
            Population::UniformPairs(_) => "uniform-pairs",
            Population::UniformBits { .. } => "uniform-bits",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Population::UniformIndex { size: 0 } => Err(Error::InvalidParameter(
                "index population needs at least one item".into(),
            )),
            Population::UniformPairs(s) if s.universe_size() == 0 => Err(Error::InvalidParameter(
                "pair population needs at least one item".into(),
            )),
            Population::UniformBits { width: 0 } => Err(Error::InvalidParameter(
                "bit-string population needs a positive width".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, point: &UniversePoint) -> bool {
        match (self, point) {
            (Population::UniformIndex { size }, UniversePoint::Index(i)) => i < size,
            (Population::UniformPairs(s), UniversePoint::Pair { index, word }) => {
                *index < s.universe_size() && word.len() == s.word_len()
            }
            (Population::UniformBits { width }, UniversePoint::Bits(b)) => b.len() == *width,
            _ => false,
        }
    }

    /// One draw. Index and pair populations consume the same randomness,
    /// so a pair sample carries the indices of the matching index sample.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> UniversePoint {
        match self {
            Population::UniformIndex { size } => UniversePoint::Index(rng.random_range(0..*size)),
            Population::UniformPairs(s) => {
                let index = rng.random_range(0..s.universe_size());
                UniversePoint::Pair {
                    index,
                    word: s.support_word(index).clone(),
                }
            }
            Population::UniformBits { width } => UniversePoint::Bits(BitVector::random(*width, rng)),
        }
    }
}

/// An ordered sample of `n` points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    points: Vec<UniversePoint>,
}

impl Dataset {
    pub fn new(points: Vec<UniversePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { points })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| UniversePoint::Index(i)).collect())
    }

    pub fn from_bit_strings(rows: &[BitVector]) -> Result<Self> {
        Self::new(rows.iter().cloned().map(UniversePoint::Bits).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[UniversePoint] {
        &self.points
    }

    /// Item indices of index or pair points, in sample order.
    pub fn indices(&self) -> Vec<usize> {
        self.points.iter().filter_map(UniversePoint::index).collect()
    }

    /// Rows of a bit-string dataset, in sample order.
    pub fn bit_strings(&self) -> Vec<BitVector> {
        self.points
            .iter()
            .filter_map(|p| p.bits().cloned())
            .collect()
    }

    pub fn within(&self, population: &Population) -> bool {
        self.points.iter().all(|p| population.contains(p))
    }
}

/// Draws `n` iid points from `population`.
pub fn sample_dataset<R: Rng + ?Sized>(
    population: &Population,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    population.validate()?;
    Dataset::new((0..n).map(|_| population.sample_point(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn index_sample_in_range() {
        let pop = Population::UniformIndex { size: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = sample_dataset(&pop, 3, &mut rng).unwrap();
        assert_eq!(x.len(), 3);
        assert!(x.indices().iter().all(|&i| i < 4));
        assert!(x.within(&pop));
    }

    #[test]
    fn same_seed_same_dataset() {
        let pop = Population::UniformBits { width: 20 };
        let a = sample_dataset(&pop, 16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_dataset(&pop, 16, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wide_bit_samples_are_distinct_at_small_n() {
        // P(collision) <= n^2 / 2^(d+1) = 2^-13 per draw at d = 20, n = 16.
        let pop = Population::UniformBits { width: 20 };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut distinct = 0;
        for _ in 0..200 {
            let x = sample_dataset(&pop, 16, &mut rng).unwrap();
            let set: HashSet<_> = x.points().iter().collect();
            distinct += usize::from(set.len() == 16);
        }
        assert!(distinct >= 198, "distinct datasets: {distinct}/200");
    }

    #[test]
    fn zero_sample_size_rejected() {
        let pop = Population::UniformIndex { size: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_dataset(&pop, 0, &mut rng).is_err());
    }

    #[test]
    fn foreign_points_not_contained() {
        let pop = Population::UniformIndex { size: 4 };
        assert!(!pop.contains(&UniversePoint::Index(4)));
        assert!(!pop.contains(&UniversePoint::Bits(BitVector::zeros(3))));
    }
}
