//! PRG-Encrypermute: the low bits of the prefix rank seed a generator whose
//! output pads the whole remainder of the sample.

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::prg::{Expander, MIN_SEED_BITS};

use super::encrypermute::{
    all_distinct, default_width, membership_query, prefix_len, AttackFailure, CompositionAttack,
};
use super::perm::{factorial, perm_rank, uniform_below};

/// Smallest prefix with `k! >= 2^32`, so a 16-bit seed sits well inside the rank.
pub const MIN_PRG_PREFIX: usize = 13;

/// `floor((k / 8) log2 k)`.
pub fn prg_seed_len(k: usize) -> usize {
    if k < 2 {
        return 0;
    }
    (k as f64 / 8.0 * (k as f64).log2()).floor() as usize
}

fn seed_from_rank(rank: &BigUint, ell: usize) -> BitVector {
    BitVector::from_biguint_low(rank, ell)
}

fn concat(rows: &[BitVector]) -> BitVector {
    let mut all = BitVector::default();
    for r in rows {
        all.extend_from(r);
    }
    all
}

/// `c = (rows k..n) xor G(s)`, `s` the `ell` low bits of the prefix rank
/// (of a uniform draw from `0..k!` when the rows repeat).
pub fn prg_encrypermute<R: Rng + ?Sized>(
    rows: &[BitVector],
    k: usize,
    ell: usize,
    g: &dyn Expander,
    rng: &mut R,
) -> Result<BitVector> {
    if ell < MIN_SEED_BITS {
        return Err(Error::InvalidParameter(format!(
            "seed length {ell} below the {MIN_SEED_BITS}-bit minimum"
        )));
    }
    if k == 0 || k >= rows.len() {
        return Err(Error::InvalidParameter(format!(
            "prefix length {k} must lie in 1..{}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: r.len(),
        });
    }
    let rank = if all_distinct(rows) {
        perm_rank(&rows[..k])?.value
    } else {
        uniform_below(&factorial(k), rng)
    };
    let pad = g.expand(&seed_from_rank(&rank, ell), d * (rows.len() - k));
    concat(&rows[k..]).xor(&pad)
}

/// Inverts [`prg_encrypermute`] given the prefix in sample order.
pub fn prg_decrypt(
    c: &BitVector,
    known_prefix: &[BitVector],
    ell: usize,
    d: usize,
    g: &dyn Expander,
) -> Result<Vec<BitVector>> {
    if d == 0 || !c.len().is_multiple_of(d) {
        return Err(Error::InvalidParameter(format!(
            "ciphertext of {} bits is not a whole number of {d}-bit rows",
            c.len()
        )));
    }
    let rank = perm_rank(known_prefix)?.value;
    let pad = g.expand(&seed_from_rank(&rank, ell), c.len());
    let plain = c.xor(&pad)?;
    Ok((0..c.len() / d).map(|i| plain.slice(i * d, (i + 1) * d)).collect())
}

/// One prefix revealer plus one PRG-Encrypermute copy over the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrgCompositionPlan {
    pub n: usize,
    pub alpha: f64,
    pub d: usize,
    pub k: usize,
    pub ell: usize,
}

impl PrgCompositionPlan {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n <= MIN_PRG_PREFIX {
            return Err(Error::InvalidParameter(format!(
                "n must exceed {MIN_PRG_PREFIX}, got {n}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let k = prefix_len(n, alpha).max(MIN_PRG_PREFIX).min(n - 1);
        Ok(Self {
            n,
            alpha,
            d: default_width(n),
            k,
            ell: prg_seed_len(k).max(MIN_SEED_BITS),
        })
    }
}

pub fn run_prg_composition<R: Rng + ?Sized>(
    rows: &[BitVector],
    plan: &PrgCompositionPlan,
    g: &dyn Expander,
    rng: &mut R,
) -> Result<(Vec<BitVector>, BitVector)> {
    if rows.len() != plan.n {
        return Err(Error::LengthMismatch {
            expected: plan.n,
            actual: rows.len(),
        });
    }
    let c = prg_encrypermute(rows, plan.k, plan.ell, g, rng)?;
    Ok((rows[..plan.k].to_vec(), c))
}

pub fn prg_composition_attack(
    prefix: &[BitVector],
    c: &BitVector,
    plan: &PrgCompositionPlan,
    g: &dyn Expander,
) -> std::result::Result<CompositionAttack, AttackFailure> {
    let fail = |cause| AttackFailure { stage: 0, cause };
    let suffix = prg_decrypt(c, prefix, plan.ell, plan.d, g).map_err(fail)?;
    let mut rows = prefix.to_vec();
    rows.extend(suffix);
    if !all_distinct(&rows) {
        return Err(fail(Error::DuplicateElements));
    }
    let query = membership_query(&rows, plan.d).map_err(fail)?;
    Ok(CompositionAttack { rows, query })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::encrypermute::expected_membership_gap;
    use crate::prg::Sha256Expander;
    use crate::rng::stream;

    fn sample(n: usize, d: usize, seed: u64) -> Vec<BitVector> {
        let mut rng = stream(seed, "data");
        (0..n).map(|_| BitVector::random(d, &mut rng)).collect()
    }

    #[test]
    fn roundtrip_and_length() {
        let g = Sha256Expander;
        let mut rng = stream(0, "mech");
        for seed in 0..200 {
            let x = sample(20, 25, seed);
            let c = prg_encrypermute(&x, 13, 16, &g, &mut rng).unwrap();
            assert_eq!(c.len(), 25 * 7);
            assert_eq!(prg_decrypt(&c, &x[..13], 16, 25, &g).unwrap(), x[13..].to_vec());
        }
    }

    #[test]
    fn wrong_prefix_order_gives_garbage() {
        let g = Sha256Expander;
        let mut rng = stream(1, "mech");
        let x = sample(20, 25, 1);
        let c = prg_encrypermute(&x, 13, 16, &g, &mut rng).unwrap();
        let mut prefix = x[..13].to_vec();
        prefix.swap(0, 1);
        assert_ne!(prg_decrypt(&c, &prefix, 16, 25, &g).unwrap(), x[13..].to_vec());
    }

    #[test]
    fn short_seed_rejected() {
        let x = sample(20, 25, 2);
        let mut rng = stream(2, "mech");
        assert!(prg_encrypermute(&x, 13, 15, &Sha256Expander, &mut rng).is_err());
    }

    #[test]
    fn plan_parameters() {
        let p = PrgCompositionPlan::new(16, 0.5).unwrap();
        assert_eq!((p.k, p.ell, p.d), (13, 16, 20));
        let p = PrgCompositionPlan::new(1024, 0.9).unwrap();
        assert_eq!(p.k, 512);
        assert_eq!(p.ell, 576);
        assert_eq!(prg_seed_len(64), 48);
    }

    #[test]
    fn composition_recovers_sample() {
        let plan = PrgCompositionPlan::new(32, 0.5).unwrap();
        let g = Sha256Expander;
        let mut rng = stream(3, "mech");
        let x = sample(32, plan.d, 3);
        let (prefix, c) = run_prg_composition(&x, &plan, &g, &mut rng).unwrap();
        let out = prg_composition_attack(&prefix, &c, &plan, &g).unwrap();
        assert_eq!(out.rows, x);
        assert_eq!(out.gap(plan.d).unwrap().gap, expected_membership_gap(32, 25));
    }
}
