//! Chi-square goodness-of-fit and homogeneity tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn finish(statistic: f64, dof: usize) -> Result<ChiSquare> {
    if dof == 0 {
        return Err(Error::InvalidParameter("chi-square test needs at least two cells".into()));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Tests `counts` against the uniform distribution over its cells.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquare> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty);
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    finish(statistic, counts.len().saturating_sub(1))
}

/// Tests whether two count vectors come from the same distribution
/// (2 x K contingency table; cells empty in both samples are dropped).
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::Empty);
    }
    let total = (na + nb) as f64;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&ca, &cb) in a.iter().zip(b) {
        let col = (ca + cb) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (obs, row) in [(ca, na), (cb, nb)] {
            let expected = row as f64 * col / total;
            statistic += (obs as f64 - expected).powi(2) / expected;
        }
    }
    finish(statistic, cells.saturating_sub(1))
}
