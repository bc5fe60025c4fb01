//! Answering mechanisms.
//!
//! A [`NaturalMechanism`] sees only the vector `(q(X_1), ..., q(X_n))`; a
//! [`GeneralMechanism`] holds its dataset and may evaluate a query anywhere.
//! Every mechanism answer lies in `[0, 1]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::query::{query_mean_population, Query};
use crate::rng::SimRng;
use crate::universe::{Dataset, Population, UniversePoint};
use crate::bits::BitVector;

pub trait NaturalMechanism: Send {
    fn answer(&mut self, values: &[f64]) -> Result<f64>;

    fn name(&self) -> String;
}

pub trait GeneralMechanism: Send {
    fn answer(&mut self, query: &Query) -> Result<f64>;

    fn name(&self) -> String;
}

#[inline]
fn admissible(a: f64) -> f64 {
    a.clamp(0.0, 1.0)
}

pub fn empirical_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Nearest multiple of `precision`; exact half-way values round toward zero.
pub fn round_to_grid(x: f64, precision: f64) -> Result<f64> {
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rounding precision must be positive, got {precision}"
        )));
    }
    let scaled = x / precision;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let steps = if frac > 0.5 || (frac == 0.5 && scaled < 0.0) {
        floor + 1.0
    } else {
        floor
    };
    Ok(steps * precision)
}

pub fn rounded_empirical_mean(values: &[f64], precision: f64) -> Result<f64> {
    let mean = empirical_mean(values)?;
    round_to_grid(mean, precision)
}

/// Empirical mean plus `N(0, sigma^2)`, clamped to `[0, 1]`.
pub fn gaussian_answer<R: Rng + ?Sized>(values: &[f64], sigma: f64, rng: &mut R) -> Result<f64> {
    let mean = empirical_mean(values)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise scale must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(admissible(mean));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    Ok(admissible(mean + noise))
}

/// Noise scale keeping each of `k` Gaussian perturbations below `eps / 2`
/// except with total probability `delta`: `eps / (2 sqrt(2 ln(4k / delta)))`.
pub fn calibrate_sigma(eps: f64, delta: f64, k: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "calibration needs 0 < eps < 1, 0 < delta < 1, k >= 1 (got {eps}, {delta}, {k})"
        )));
    }
    Ok(eps / (2.0 * (2.0 * (4.0 * k as f64 / delta).ln()).sqrt()))
}

#[derive(Clone, Debug, Default)]
pub struct EmpiricalMean;

impl NaturalMechanism for EmpiricalMean {
    fn answer(&mut self, values: &[f64]) -> Result<f64> {
        empirical_mean(values).map(admissible)
    }

    fn name(&self) -> String {
        "empirical-mean".into()
    }
}

#[derive(Clone, Debug)]
pub struct RoundedMean {
    pub precision: f64,
}

impl NaturalMechanism for RoundedMean {
    fn answer(&mut self, values: &[f64]) -> Result<f64> {
        rounded_empirical_mean(values, self.precision).map(admissible)
    }

    fn name(&self) -> String {
        format!("rounded-mean({})", self.precision)
    }
}

#[derive(Clone, Debug)]
pub struct GaussianMechanism {
    sigma: f64,
    rng: SimRng,
}

impl GaussianMechanism {
    pub fn new(sigma: f64, rng: SimRng) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be non-negative, got {sigma}"
            )));
        }
        Ok(Self { sigma, rng })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl NaturalMechanism for GaussianMechanism {
    fn answer(&mut self, values: &[f64]) -> Result<f64> {
        gaussian_answer(values, self.sigma, &mut self.rng)
    }

    fn name(&self) -> String {
        format!("gaussian({:.6})", self.sigma)
    }
}

/// Answers each query from a fresh contiguous block of the sample. Blocks
/// have equal size and the last one absorbs the remainder.
#[derive(Clone, Debug)]
pub struct SampleSplit {
    chunks: usize,
    next: usize,
}

impl SampleSplit {
    pub fn new(chunks: usize) -> Result<Self> {
        if chunks == 0 {
            return Err(Error::InvalidParameter("sample split needs at least one chunk".into()));
        }
        Ok(Self { chunks, next: 0 })
    }

    /// Index range of chunk `c` within a sample of `n` points.
    pub fn chunk_range(&self, c: usize, n: usize) -> std::ops::Range<usize> {
        let size = n / self.chunks;
        let start = c * size;
        let end = if c + 1 == self.chunks { n } else { start + size };
        start..end
    }

    pub fn used(&self) -> usize {
        self.next
    }

    pub fn answer_next(&mut self, values: &[f64]) -> Result<f64> {
        if self.next >= self.chunks {
            return Err(Error::ChunksExhausted(self.chunks));
        }
        if values.len() < self.chunks {
            return Err(Error::InvalidParameter(format!(
                "{} chunks need at least as many sample points, got {}",
                self.chunks,
                values.len()
            )));
        }
        let range = self.chunk_range(self.next, values.len());
        self.next += 1;
        empirical_mean(&values[range]).map(admissible)
    }
}

pub fn sample_split_answer(state: &mut SampleSplit, values: &[f64]) -> Result<f64> {
    state.answer_next(values)
}

impl NaturalMechanism for SampleSplit {
    fn answer(&mut self, values: &[f64]) -> Result<f64> {
        self.answer_next(values)
    }

    fn name(&self) -> String {
        format!("sample-split({})", self.chunks)
    }
}

/// Ignores the data and answers uniformly at random.
#[derive(Clone, Debug)]
pub struct UniformRandom {
    rng: SimRng,
}

impl UniformRandom {
    pub fn new(rng: SimRng) -> Self {
        Self { rng }
    }
}

impl NaturalMechanism for UniformRandom {
    fn answer(&mut self, _values: &[f64]) -> Result<f64> {
        Ok(self.rng.random::<f64>())
    }

    fn name(&self) -> String {
        "uniform-random".into()
    }
}

/// The exact population mean, clamped to `[0, 1]`.
pub fn oracle_answer(q: &Query, population: &Population) -> Result<f64> {
    query_mean_population(q, population).map(admissible)
}

/// Test control that answers every query with its true population mean.
#[derive(Clone, Debug)]
pub struct PopulationOracle {
    population: Population,
}

impl PopulationOracle {
    pub fn new(population: Population) -> Self {
        Self { population }
    }
}

impl GeneralMechanism for PopulationOracle {
    fn answer(&mut self, query: &Query) -> Result<f64> {
        oracle_answer(query, &self.population)
    }

    fn name(&self) -> String {
        "oracle".into()
    }
}

/// A natural mechanism run as a general one: it evaluates each query on
/// its own sample points only and hands the vector on.
pub struct LiftedNatural {
    inner: Box<dyn NaturalMechanism>,
    dataset: Dataset,
    values: Vec<f64>,
}

pub fn lift_natural(mech: Box<dyn NaturalMechanism>, dataset: Dataset) -> LiftedNatural {
    let values = Vec::with_capacity(dataset.len());
    LiftedNatural {
        inner: mech,
        dataset,
        values,
    }
}

impl LiftedNatural {
    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }
}

impl GeneralMechanism for LiftedNatural {
    fn answer(&mut self, query: &Query) -> Result<f64> {
        self.values.clear();
        for p in self.dataset.points() {
            self.values.push(query.eval(p)?);
        }
        self.inner.answer(&self.values)
    }

    fn name(&self) -> String {
        format!("lifted-{}", self.inner.name())
    }
}

/// A general mechanism that also evaluates each query at random points of
/// the universe, keeps every probe value, and averages the probes of the
/// current query into its answer together with the sample.
pub struct ProbingMechanism {
    dataset: Dataset,
    population: Population,
    probes: usize,
    rng: SimRng,
    /// Item index and value of every probe.
    memory: Vec<(usize, f64)>,
}

impl ProbingMechanism {
    pub fn new(dataset: Dataset, population: Population, probes: usize, rng: SimRng) -> Self {
        Self {
            dataset,
            population,
            probes,
            rng,
            memory: Vec::new(),
        }
    }

    pub fn memorized(&self) -> &[(usize, f64)] {
        &self.memory
    }

    fn random_point(&mut self) -> UniversePoint {
        match &self.population {
            Population::UniformPairs(s) => UniversePoint::Pair {
                index: self.rng.random_range(0..s.universe_size()),
                word: BitVector::random(s.word_len(), &mut self.rng),
            },
            other => other.sample_point(&mut self.rng),
        }
    }
}

impl GeneralMechanism for ProbingMechanism {
    fn answer(&mut self, query: &Query) -> Result<f64> {
        let mut sum = 0.0;
        for p in self.dataset.points() {
            sum += query.eval(p)?;
        }
        for _ in 0..self.probes {
            let point = self.random_point();
            let v = query.eval(&point)?;
            sum += v;
            if let Some(i) = point.index() {
                self.memory.push((i, v));
            }
        }
        Ok(admissible(sum / (self.dataset.len() + self.probes) as f64))
    }

    fn name(&self) -> String {
        format!("probing({})", self.probes)
    }
}
