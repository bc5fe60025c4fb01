//! Mask lifting from the index universe to pair universes.
//!
//! Round queries `q^j(i, y) = pad(y)^j xor pad(i)^j xor q_hat^j(i)`, where
//! the pads are mask rows ([`MaskInstance`]) or generator expansions of
//! per-item seeds ([`PrgInstance`]). On the population support every lifted
//! query agrees with its base query.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::mechanisms::{GeneralMechanism, NaturalMechanism};
use crate::prg::{check_seed, Expander, MIN_SEED_BITS};
use crate::query::{Query, QueryKind};
use crate::universe::{Dataset, PairSupport, Population, UniversePoint};

/// Uniform mask rows `m_1, ..., m_N` of `k` bits each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskInstance {
    masks: Vec<BitVector>,
    rounds: usize,
}

impl MaskInstance {
    pub fn from_masks(masks: Vec<BitVector>, rounds: usize) -> Result<Self> {
        if masks.is_empty() || rounds == 0 {
            return Err(Error::InvalidParameter(
                "mask instances need N >= 1 and k >= 1".into(),
            ));
        }
        if let Some(row) = masks.iter().find(|m| m.len() != rounds) {
            return Err(Error::LengthMismatch {
                expected: rounds,
                actual: row.len(),
            });
        }
        Ok(Self { masks, rounds })
    }

    pub fn masks(&self) -> &[BitVector] {
        &self.masks
    }
}

impl PairSupport for MaskInstance {
    fn universe_size(&self) -> usize {
        self.masks.len()
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn word_len(&self) -> usize {
        self.rounds
    }

    fn support_word(&self, i: usize) -> &BitVector {
        &self.masks[i]
    }

    fn mask_bit(&self, i: usize, j: usize) -> bool {
        self.masks[i].get(j)
    }

    fn point_bit(&self, word: &BitVector, j: usize) -> bool {
        word.get(j)
    }
}

pub fn build_masked_instance<R: Rng + ?Sized>(n_items: usize, k: usize, rng: &mut R) -> Result<Arc<MaskInstance>> {
    let masks = (0..n_items).map(|_| BitVector::random(k, rng)).collect();
    MaskInstance::from_masks(masks, k).map(Arc::new)
}

/// Uniform distribution over the `N` support pairs.
pub fn pair_population(support: &Arc<impl PairSupport + 'static>) -> Population {
    Population::UniformPairs(support.clone())
}

/// The pair dataset `((i, word_i))` matching an index sample.
pub fn lift_dataset(indices: &[usize], support: &dyn PairSupport) -> Result<Dataset> {
    let points = indices
        .iter()
        .map(|&i| {
            if i >= support.universe_size() {
                return Err(Error::InvalidParameter(format!(
                    "index {i} outside a universe of {} items",
                    support.universe_size()
                )));
            }
            Ok(UniversePoint::Pair {
                index: i,
                word: support.support_word(i).clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(points)
}

/// Lifts the bit-valued round query `q_hat` for round `j`.
pub fn lift_query(q_hat: &Query, support: Arc<dyn PairSupport>, j: usize) -> Result<Query> {
    match q_hat.kind() {
        QueryKind::Table(values) => Query::masked(values.clone(), support, j),
        other => Err(Error::InvalidParameter(format!(
            "only table queries can be lifted, got {}",
            other.name()
        ))),
    }
}

/// `(i, y) -> q_star(i)`.
pub fn lift_final_query(q_star: &Query) -> Result<Query> {
    match q_star.kind() {
        QueryKind::Table(values) => Query::projected(values.clone()),
        other => Err(Error::InvalidParameter(format!(
            "only table queries can be lifted, got {}",
            other.name()
        ))),
    }
}

/// Default seed length: `ceil(k^(1/4))` bytes.
pub fn default_seed_len(k: usize) -> usize {
    let mut root = (k as f64).powf(0.25).ceil() as usize;
    // Guard against the float fourth root landing just above an integer.
    while root > 1 && (root - 1).pow(4) >= k {
        root -= 1;
    }
    (root.max(1) * 16).max(MIN_SEED_BITS)
}

/// Per-item seeds with cached expansions `G(s_i)` of `k` bits.
pub struct PrgInstance {
    seeds: Vec<BitVector>,
    rows: Vec<BitVector>,
    rounds: usize,
    expander: Arc<dyn Expander>,
}

impl fmt::Debug for PrgInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrgInstance")
            .field("items", &self.seeds.len())
            .field("rounds", &self.rounds)
            .field("seed_len", &self.seed_len())
            .field("expander", &self.expander)
            .finish()
    }
}

impl PrgInstance {
    pub fn seeds(&self) -> &[BitVector] {
        &self.seeds
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn seed_len(&self) -> usize {
        self.seeds.first().map_or(0, BitVector::len)
    }

    pub fn expander(&self) -> &Arc<dyn Expander> {
        &self.expander
    }
}

impl PairSupport for PrgInstance {
    fn universe_size(&self) -> usize {
        self.seeds.len()
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn word_len(&self) -> usize {
        self.seed_len()
    }

    fn support_word(&self, i: usize) -> &BitVector {
        &self.seeds[i]
    }

    fn mask_bit(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    fn point_bit(&self, word: &BitVector, j: usize) -> bool {
        self.expander.bit(word, j)
    }
}

pub fn build_prg_instance<R: Rng + ?Sized>(
    n_items: usize,
    k: usize,
    ell: usize,
    expander: Arc<dyn Expander>,
    rng: &mut R,
) -> Result<Arc<PrgInstance>> {
    if n_items == 0 || k == 0 {
        return Err(Error::InvalidParameter(
            "generator instances need N >= 1 and k >= 1".into(),
        ));
    }
    let seeds: Vec<BitVector> = (0..n_items).map(|_| BitVector::random(ell, rng)).collect();
    check_seed(&seeds[0])?;
    let rows = seeds.iter().map(|s| expander.expand(s, k)).collect();
    Ok(Arc::new(PrgInstance {
        seeds,
        rows,
        rounds: k,
        expander,
    }))
}

pub fn lift_query_prg(q_hat: &Query, inst: &Arc<PrgInstance>, j: usize) -> Result<Query> {
    lift_query(q_hat, inst.clone(), j)
}

/// Builds the general mechanism once its pair sample and population exist.
pub type MechanismFactory = Box<dyn FnOnce(Dataset, Population) -> Result<Box<dyn GeneralMechanism>> + Send>;

/// A natural mechanism that runs a general mechanism on a simulated pair
/// game. It sees only the base query values on its index sample; off the
/// sample the simulated query is `y^j xor m_i^j xor 0`.
pub struct SimulatedNatural {
    inner: Box<dyn GeneralMechanism>,
    support: Arc<MaskInstance>,
    sample: Vec<usize>,
    round: usize,
}

impl SimulatedNatural {
    pub fn with_masks(factory: MechanismFactory, sample: &[usize], masks: Vec<BitVector>, k: usize) -> Result<Self> {
        let support = Arc::new(MaskInstance::from_masks(masks, k)?);
        let dataset = lift_dataset(sample, support.as_ref())?;
        let inner = factory(dataset, pair_population(&support))?;
        Ok(Self {
            inner,
            support,
            sample: sample.to_vec(),
            round: 0,
        })
    }

    pub fn support(&self) -> &Arc<MaskInstance> {
        &self.support
    }
}

pub fn simulate_natural<R: Rng + ?Sized>(
    factory: MechanismFactory,
    sample: &[usize],
    n_items: usize,
    k: usize,
    rng: &mut R,
) -> Result<SimulatedNatural> {
    let masks = (0..n_items).map(|_| BitVector::random(k, rng)).collect();
    SimulatedNatural::with_masks(factory, sample, masks, k)
}

impl NaturalMechanism for SimulatedNatural {
    fn answer(&mut self, values: &[f64]) -> Result<f64> {
        if values.len() != self.sample.len() {
            return Err(Error::LengthMismatch {
                expected: self.sample.len(),
                actual: values.len(),
            });
        }
        if self.round >= self.support.rounds() {
            return Err(Error::RoundsExhausted(self.support.rounds()));
        }
        let mut base = vec![0.0; self.support.universe_size()];
        for (&i, &v) in self.sample.iter().zip(values) {
            base[i] = v;
        }
        let query = Query::masked(Arc::new(base), self.support.clone(), self.round)?;
        self.round += 1;
        let a = self.inner.answer(&query)?;
        Ok(a.clamp(0.0, 1.0))
    }

    fn name(&self) -> String {
        format!("simulated-{}", self.inner.name())
    }
}
