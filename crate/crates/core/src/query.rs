//! Statistical queries `q: universe -> [-1, 1]` and the generalization gap.

use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::universe::{Dataset, PairSupport, Population, UniversePoint};

#[derive(Clone)]
pub enum QueryKind {
    Constant(f64),
    /// Values indexed by item over the index universe.
    Table(Arc<Vec<f64>>),
    /// `q(i, y) = pad(y)^j xor mask_i^j xor base(i)` over a pair universe.
    Masked {
        base: Arc<Vec<f64>>,
        support: Arc<dyn PairSupport>,
        round: usize,
    },
    /// `q(i, y) = values[i]`, ignoring the word.
    Projected(Arc<Vec<f64>>),
    /// `+1` on the set, `-1` elsewhere, over bit strings of a fixed width.
    Membership {
        set: Arc<HashSet<BitVector>>,
        width: usize,
    },
}

impl QueryKind {
    pub fn name(&self) -> &'static str {
        match self {
            QueryKind::Constant(_) => "constant",
            QueryKind::Table(_) => "table",
            QueryKind::Masked { .. } => "masked",
            QueryKind::Projected(_) => "projected",
            QueryKind::Membership { .. } => "membership",
        }
    }
}

struct Trap {
    allowed: HashSet<UniversePoint>,
    foreign: AtomicU64,
}

/// A query together with a count of the point evaluations made through
/// [`Query::eval`]. Population means are computed from the definition and
/// are not counted.
pub struct Query {
    kind: QueryKind,
    evaluations: AtomicU64,
    trap: Option<Trap>,
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Query")
            .field("kind", &self.kind.name())
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

fn check_range(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(-1.0..=1.0).contains(v)) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "query value {} at index {i} is outside [-1, 1]",
            values[i]
        ))),
        None => Ok(()),
    }
}

impl Query {
    fn from_kind(kind: QueryKind) -> Self {
        Self {
            kind,
            evaluations: AtomicU64::new(0),
            trap: None,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        check_range(&[c])?;
        Ok(Self::from_kind(QueryKind::Constant(c)))
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::shared_table(Arc::new(values))
    }

    pub fn shared_table(values: Arc<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        check_range(&values)?;
        Ok(Self::from_kind(QueryKind::Table(values)))
    }

    pub fn projected(values: Arc<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        check_range(&values)?;
        Ok(Self::from_kind(QueryKind::Projected(values)))
    }

    /// Lifted round query; `base` must hold bits and match the support size.
    pub fn masked(base: Arc<Vec<f64>>, support: Arc<dyn PairSupport>, round: usize) -> Result<Self> {
        if base.len() != support.universe_size() {
            return Err(Error::LengthMismatch {
                expected: support.universe_size(),
                actual: base.len(),
            });
        }
        if round >= support.rounds() {
            return Err(Error::InvalidParameter(format!(
                "round {round} beyond the {} rounds the masks cover",
                support.rounds()
            )));
        }
        if let Some(i) = base.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::NonBitQuery(base[i], i));
        }
        Ok(Self::from_kind(QueryKind::Masked {
            base,
            support,
            round,
        }))
    }

    pub fn membership(set: HashSet<BitVector>, width: usize) -> Result<Self> {
        if let Some(b) = set.iter().find(|b| b.len() != width) {
            return Err(Error::LengthMismatch {
                expected: width,
                actual: b.len(),
            });
        }
        Ok(Self::from_kind(QueryKind::Membership {
            set: Arc::new(set),
            width,
        }))
    }

    /// Records every evaluation at a point outside `allowed`.
    pub fn with_trap(mut self, allowed: impl IntoIterator<Item = UniversePoint>) -> Self {
        self.trap = Some(Trap {
            allowed: allowed.into_iter().collect(),
            foreign: AtomicU64::new(0),
        });
        self
    }

    pub fn kind(&self) -> &QueryKind {
        &self.kind
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn off_sample_evaluations(&self) -> u64 {
        self.trap
            .as_ref()
            .map_or(0, |t| t.foreign.load(Ordering::Relaxed))
    }

    /// Table values for `Table` and `Projected` queries.
    pub fn table_values(&self) -> Option<&Arc<Vec<f64>>> {
        match &self.kind {
            QueryKind::Table(v) | QueryKind::Projected(v) => Some(v),
            _ => None,
        }
    }

    pub fn eval(&self, point: &UniversePoint) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        if let Some(trap) = &self.trap {
            if !trap.allowed.contains(point) {
                trap.foreign.fetch_add(1, Ordering::Relaxed);
            }
        }
        let value = self.value_at(point)?;
        debug_assert!(
            (-1.0..=1.0).contains(&value),
            "query value {value} outside [-1, 1]"
        );
        Ok(value)
    }

    fn mismatch(&self, point: &UniversePoint) -> Error {
        Error::DomainMismatch {
            query: self.kind.name(),
            point: point.to_string(),
        }
    }

    fn value_at(&self, point: &UniversePoint) -> Result<f64> {
        match (&self.kind, point) {
            (QueryKind::Constant(c), _) => Ok(*c),
            (QueryKind::Table(v), UniversePoint::Index(i)) => {
                v.get(*i).copied().ok_or_else(|| self.mismatch(point))
            }
            (QueryKind::Projected(v), UniversePoint::Pair { index, .. }) => {
                v.get(*index).copied().ok_or_else(|| self.mismatch(point))
            }
            (
                QueryKind::Masked {
                    base,
                    support,
                    round,
                },
                UniversePoint::Pair { index, word },
            ) => {
                if *index >= base.len() || word.len() != support.word_len() {
                    return Err(self.mismatch(point));
                }
                let bit = support.point_bit(word, *round)
                    ^ support.mask_bit(*index, *round)
                    ^ (base[*index] == 1.0);
                Ok(if bit { 1.0 } else { 0.0 })
            }
            (QueryKind::Membership { set, width }, UniversePoint::Bits(b)) => {
                if b.len() != *width {
                    return Err(self.mismatch(point));
                }
                Ok(if set.contains(b) { 1.0 } else { -1.0 })
            }
            _ => Err(self.mismatch(point)),
        }
    }
}

/// `q(X)`: the average of `q` over the sample.
pub fn query_mean_sample(q: &Query, x: &Dataset) -> Result<f64> {
    let mut sum = 0.0;
    for p in x.points() {
        sum += q.eval(p)?;
    }
    Ok(sum / x.len() as f64)
}

fn table_mean(values: &[f64], size: usize) -> Result<f64> {
    if values.len() != size {
        return Err(Error::LengthMismatch {
            expected: size,
            actual: values.len(),
        });
    }
    Ok(values.iter().sum::<f64>() / size as f64)
}

/// `q(P)`: the exact expectation of `q` under `population`.
pub fn query_mean_population(q: &Query, population: &Population) -> Result<f64> {
    population.validate()?;
    let unsupported = || Error::UnsupportedMean {
        query: q.kind.name(),
        population: population.kind(),
    };
    match (&q.kind, population) {
        (QueryKind::Constant(c), _) => Ok(*c),
        (QueryKind::Table(v), Population::UniformIndex { size }) => table_mean(v, *size),
        (QueryKind::Projected(v), Population::UniformPairs(s)) => table_mean(v, s.universe_size()),
        (
            QueryKind::Masked {
                base,
                support,
                round,
            },
            Population::UniformPairs(s),
        ) => {
            if support.universe_size() != s.universe_size() || support.word_len() != s.word_len() {
                return Err(unsupported());
            }
            let size = s.universe_size();
            let same_support = std::ptr::eq(
                Arc::as_ptr(support) as *const (),
                Arc::as_ptr(s) as *const (),
            );
            let mut sum = 0.0;
            for (i, &b) in base.iter().enumerate() {
                // On its own support the point pad equals the item mask.
                let pad = if same_support {
                    support.mask_bit(i, *round)
                } else {
                    support.point_bit(s.support_word(i), *round)
                };
                if pad ^ support.mask_bit(i, *round) ^ (b == 1.0) {
                    sum += 1.0;
                }
            }
            Ok(sum / size as f64)
        }
        (QueryKind::Membership { set, width }, Population::UniformBits { width: d }) => {
            if width != d {
                return Err(unsupported());
            }
            let cells = 2f64.powi(*d as i32);
            Ok(-1.0 + 2.0 * set.len() as f64 / cells)
        }
        _ => Err(unsupported()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sample_mean: f64,
    pub population_mean: f64,
    /// `sample_mean - population_mean`.
    pub gap: f64,
}

pub fn phg_gap(q: &Query, x: &Dataset, population: &Population) -> Result<GapReport> {
    let sample_mean = query_mean_sample(q, x)?;
    let population_mean = query_mean_population(q, population)?;
    Ok(GapReport {
        sample_mean,
        population_mean,
        gap: sample_mean - population_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::sample_dataset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_query_means() {
        let q = Query::constant(1.0).unwrap();
        let x = Dataset::from_indices(&[0, 3, 3]).unwrap();
        assert_eq!(query_mean_sample(&q, &x).unwrap(), 1.0);
        let c = Query::constant(-0.3).unwrap();
        for pop in [
            Population::UniformIndex { size: 7 },
            Population::UniformBits { width: 9 },
        ] {
            assert_eq!(query_mean_population(&c, &pop).unwrap(), -0.3);
        }
        let gap = phg_gap(&q, &x, &Population::UniformIndex { size: 4 }).unwrap();
        assert_eq!(gap.gap, 0.0);
    }

    #[test]
    fn table_sample_mean() {
        // Items 1 and 2 in one-based terms are indices 0 and 1.
        let q = Query::table(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let x = Dataset::from_indices(&[0, 1]).unwrap();
        assert_eq!(query_mean_sample(&q, &x).unwrap(), 0.5);
        assert_eq!(q.evaluations(), 2);
    }

    #[test]
    fn table_population_mean_is_enumeration() {
        let values = vec![0.25, -1.0, 1.0, 0.5, 0.0];
        let q = Query::table(values.clone()).unwrap();
        let pop = Population::UniformIndex { size: 5 };
        let mut enumerated = 0.0;
        for i in 0..5 {
            enumerated += q.eval(&UniversePoint::Index(i)).unwrap() / 5.0;
        }
        let exact = query_mean_population(&q, &pop).unwrap();
        assert!((exact - enumerated).abs() < 1e-15);
        assert!((exact - 0.15).abs() < 1e-15);
    }

    #[test]
    fn membership_of_sample() {
        let pop = Population::UniformBits { width: 20 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sample_dataset(&pop, 16, &mut rng).unwrap();
        let set: HashSet<_> = x.bit_strings().into_iter().collect();
        assert_eq!(set.len(), 16);
        let q = Query::membership(set, 20).unwrap();
        let report = phg_gap(&q, &x, &pop).unwrap();
        assert_eq!(report.sample_mean, 1.0);
        assert_eq!(report.population_mean, -1.0 + 32.0 / 2f64.powi(20));
        assert_eq!(report.gap, 2.0 - 32.0 / 2f64.powi(20));
    }

    #[test]
    fn membership_closed_form_matches_enumeration() {
        let width = 6;
        let set: HashSet<_> = [3u64, 17, 40, 63]
            .iter()
            .map(|&v| BitVector::from_u64(v, width))
            .collect();
        let q = Query::membership(set, width).unwrap();
        let mut enumerated = 0.0;
        for v in 0..64u64 {
            enumerated += q
                .eval(&UniversePoint::Bits(BitVector::from_u64(v, width)))
                .unwrap();
        }
        enumerated /= 64.0;
        let closed = query_mean_population(&q, &Population::UniformBits { width }).unwrap();
        assert_eq!(closed, enumerated);
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let q = Query::table(vec![0.0, 1.0]).unwrap();
        assert!(q.eval(&UniversePoint::Bits(BitVector::zeros(2))).is_err());
        assert!(q.eval(&UniversePoint::Index(2)).is_err());
        let pop = Population::UniformBits { width: 3 };
        assert!(matches!(
            query_mean_population(&q, &pop),
            Err(Error::UnsupportedMean { .. })
        ));
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(Query::table(vec![0.0, 1.5]).is_err());
        assert!(Query::constant(-1.01).is_err());
    }

    #[test]
    fn trap_counts_foreign_points() {
        let q = Query::table(vec![0.0; 4])
            .unwrap()
            .with_trap([UniversePoint::Index(1)]);
        q.eval(&UniversePoint::Index(1)).unwrap();
        assert_eq!(q.off_sample_evaluations(), 0);
        q.eval(&UniversePoint::Index(2)).unwrap();
        assert_eq!(q.off_sample_evaluations(), 1);
    }

    #[test]
    fn gap_bounded_by_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pop = Population::UniformIndex { size: 10 };
        for _ in 0..50 {
            let values: Vec<f64> = (0..10).map(|_| rand::Rng::random_range(&mut rng, -1.0..=1.0)).collect();
            let q = Query::table(values).unwrap();
            let x = sample_dataset(&pop, 3, &mut rng).unwrap();
            assert!(phg_gap(&q, &x, &pop).unwrap().gap.abs() <= 2.0);
        }
    }
}
