//! Monte-Carlo estimate of the fingerprinting expectation
//!
//! `E[(f(x) - p) * sum_i (x_i - p) + |f(x) - mean(x)|]` with `p ~ U[0, 1]`
//! and `x_i ~ Ber(p)` iid, which is at least `1/12` for every
//! `f: {0,1}^m -> [0, 1]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{bernoulli, bernoulli_threshold};

pub const LEMMA_LOWER_BOUND: f64 = 1.0 / 12.0;
pub const MIN_TRIALS: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

pub fn fp_lemma_estimate<R, F>(mut f: F, m: usize, trials: usize, rng: &mut R) -> Result<Estimate>
where
    R: Rng + ?Sized,
    F: FnMut(&[bool], &mut R) -> f64,
{
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one coordinate".into()));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let mut x = vec![false; m];
    // Welford running mean and variance.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..trials {
        let p = rng.random::<f64>();
        let threshold = bernoulli_threshold(p);
        let mut ones = 0usize;
        for xi in x.iter_mut() {
            *xi = bernoulli(rng, threshold);
            ones += usize::from(*xi);
        }
        let fx = f(&x, rng);
        if !(0.0..=1.0).contains(&fx) {
            return Err(Error::InvalidParameter(format!("f returned {fx} outside [0, 1]")));
        }
        let centered_sum = ones as f64 - m as f64 * p;
        let xbar = ones as f64 / m as f64;
        let value = (fx - p) * centered_sum + (fx - xbar).abs();
        let delta = value - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (value - mean);
    }
    let var = m2 / (trials - 1) as f64;
    Ok(Estimate {
        mean,
        std_err: (var / trials as f64).sqrt(),
        samples: trials,
    })
}

/// Test functions for the lemma check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaProbe {
    SampleMean,
    ConstantHalf,
    Median,
    /// Sample mean plus `N(0, sigma^2)`, clamped to `[0, 1]`.
    NoisyMean { sigma: f64 },
}

impl LemmaProbe {
    pub fn standard_set() -> [LemmaProbe; 4] {
        [
            LemmaProbe::SampleMean,
            LemmaProbe::ConstantHalf,
            LemmaProbe::Median,
            LemmaProbe::NoisyMean { sigma: 0.1 },
        ]
    }

    pub fn label(&self) -> String {
        match self {
            LemmaProbe::SampleMean => "sample-mean".into(),
            LemmaProbe::ConstantHalf => "constant-half".into(),
            LemmaProbe::Median => "median".into(),
            LemmaProbe::NoisyMean { sigma } => format!("noisy-mean({sigma})"),
        }
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, x: &[bool], rng: &mut R) -> f64 {
        let ones = x.iter().filter(|&&b| b).count();
        let mean = ones as f64 / x.len() as f64;
        match self {
            LemmaProbe::SampleMean => mean,
            LemmaProbe::ConstantHalf => 0.5,
            LemmaProbe::Median => match (2 * ones).cmp(&x.len()) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => 0.5,
            },
            LemmaProbe::NoisyMean { sigma } => {
                let noise = Normal::new(0.0, *sigma).map_or(0.0, |n| n.sample(rng));
                (mean + noise).clamp(0.0, 1.0)
            }
        }
    }

    pub fn estimate<R: Rng + ?Sized>(&self, m: usize, trials: usize, rng: &mut R) -> Result<Estimate> {
        fp_lemma_estimate(|x, r: &mut R| self.evaluate(x, r), m, trials, rng)
    }
}
