//! The fingerprinting analyst against natural mechanisms.
//!
//! Each round draws a bias `p ~ U[0, 1]` and an independent `Ber(p)` value
//! for every item, zeroes the values of accused items, and asks the
//! resulting table as a query. The answer feeds a correlation score
//! `trunc(a - p) * (q_i - p)` for every unaccused item; items whose running
//! score exceeds `tau - 1` in absolute value are accused and frozen. After
//! `k` rounds the normalized scores `z_i / tau` form the final query.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::Query;
use crate::rng::{bernoulli, bernoulli_threshold};
use crate::universe::Population;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub n: usize,
    pub eps: f64,
    pub rounds: usize,
    /// `N = ceil(8n / eps)`.
    pub universe_size: usize,
    /// `tau = 9 eps sqrt(2k ln(96 / eps)) + 1`.
    pub tau: f64,
}

/// Largest accuracy target for which every per-round score increment stays
/// within `[-1, 1]`.
pub const MAX_EPS: f64 = 1.0 / 3.0;

impl AttackConfig {
    pub fn new(n: usize, eps: f64, rounds: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= MAX_EPS) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0, 1/3], got {eps}"
            )));
        }
        if n == 0 || rounds == 0 {
            return Err(Error::InvalidParameter(
                "sample size and round count must be positive".into(),
            ));
        }
        Ok(Self {
            n,
            eps,
            rounds,
            universe_size: universe_size(n, eps),
            tau: threshold(eps, rounds),
        })
    }

    pub fn truncation(&self) -> f64 {
        3.0 * self.eps
    }

    pub fn population(&self) -> Population {
        Population::UniformIndex {
            size: self.universe_size,
        }
    }
}

pub fn universe_size(n: usize, eps: f64) -> usize {
    // Guard against 8n/eps landing a hair above an integer.
    let exact = 8.0 * n as f64 / eps;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 * exact {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

pub fn threshold(eps: f64, rounds: usize) -> f64 {
    9.0 * eps * (2.0 * rounds as f64 * (96.0 / eps).ln()).sqrt() + 1.0
}

/// Nearest point of `[-bound, bound]` to `x`.
#[inline]
pub fn trunc(x: f64, bound: f64) -> f64 {
    debug_assert!(bound > 0.0);
    x.clamp(-bound, bound)
}

#[derive(Clone, Debug)]
pub struct AttackState {
    config: AttackConfig,
    /// Rounds answered so far.
    answered: usize,
    pending: bool,
    bias: f64,
    accused: Vec<bool>,
    accused_count: usize,
    scores: Vec<f64>,
    /// Largest `|z_i|` reached at any point of the game.
    max_abs_score: f64,
    /// Current round's query table, shared with the issued query.
    table: Arc<Vec<f64>>,
}

pub fn attack_init(n: usize, eps: f64, k: usize) -> Result<AttackState> {
    AttackConfig::new(n, eps, k).map(AttackState::new)
}

impl AttackState {
    pub fn new(config: AttackConfig) -> Self {
        let size = config.universe_size;
        Self {
            config,
            answered: 0,
            pending: false,
            bias: 0.0,
            accused: vec![false; size],
            accused_count: 0,
            scores: vec![0.0; size],
            max_abs_score: 0.0,
            table: Arc::new(vec![0.0; size]),
        }
    }

    pub fn config(&self) -> &AttackConfig {
        &self.config
    }

    pub fn rounds_answered(&self) -> usize {
        self.answered
    }

    pub fn is_complete(&self) -> bool {
        self.answered == self.config.rounds && !self.pending
    }

    /// Bias of the current (or last) round.
    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn accused(&self) -> &[bool] {
        &self.accused
    }

    pub fn max_abs_score(&self) -> f64 {
        self.max_abs_score
    }

    pub fn accused_count(&self) -> usize {
        self.accused_count
    }

    /// Values of the current round's query.
    pub fn round_values(&self) -> &[f64] {
        &self.table
    }

    pub fn next_query<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Query> {
        self.check_can_issue()?;
        let bias = rng.random::<f64>();
        self.next_query_with_bias(bias, rng)
    }

    /// Issues the next round with a given bias instead of a uniform one.
    pub fn next_query_with_bias<R: Rng + ?Sized>(&mut self, bias: f64, rng: &mut R) -> Result<Query> {
        self.check_can_issue()?;
        if !(0.0..=1.0).contains(&bias) {
            return Err(Error::InvalidParameter(format!("bias {bias} outside [0, 1]")));
        }
        self.bias = bias;
        let threshold = bernoulli_threshold(bias);
        if Arc::get_mut(&mut self.table).is_none() {
            // The previous round's query is still alive somewhere.
            self.table = Arc::new(vec![0.0; self.config.universe_size]);
        }
        let table = Arc::get_mut(&mut self.table).expect("table uniquely owned");
        for (value, &accused) in table.iter_mut().zip(&self.accused) {
            // Every item gets a draw so the stream does not depend on A^j.
            let draw = bernoulli(rng, threshold);
            *value = if !accused && draw { 1.0 } else { 0.0 };
        }
        self.pending = true;
        Query::shared_table(Arc::clone(&self.table))
    }

    fn check_can_issue(&self) -> Result<()> {
        if self.pending {
            return Err(Error::AnswerPending);
        }
        if self.answered >= self.config.rounds {
            return Err(Error::RoundsExhausted(self.config.rounds));
        }
        Ok(())
    }

    pub fn process_answer(&mut self, answer: f64) -> Result<()> {
        if !self.pending {
            return Err(Error::NoPendingQuery);
        }
        if !(0.0..=1.0).contains(&answer) {
            return Err(Error::InvalidParameter(format!(
                "answer {answer} outside [0, 1]"
            )));
        }
        let weight = trunc(answer - self.bias, self.config.truncation());
        let cutoff = self.config.tau - 1.0;
        let bias = self.bias;
        let mut peak = self.max_abs_score;
        for ((score, accused), &value) in self
            .scores
            .iter_mut()
            .zip(self.accused.iter_mut())
            .zip(self.table.iter())
        {
            if *accused {
                continue;
            }
            *score += weight * (value - bias);
            peak = peak.max(score.abs());
            if score.abs() > cutoff {
                *accused = true;
                self.accused_count += 1;
            }
            debug_assert!(score.abs() <= self.config.tau);
        }
        self.max_abs_score = peak;
        self.pending = false;
        self.answered += 1;
        Ok(())
    }

    /// `q*(i) = z_i / tau`, available once every round is answered.
    pub fn final_query(&self) -> Result<Query> {
        if !self.is_complete() {
            return Err(Error::AttackIncomplete {
                done: self.answered,
                total: self.config.rounds,
            });
        }
        let tau = self.config.tau;
        let values: Vec<f64> = self
            .scores
            .iter()
            .map(|z| (z / tau).clamp(-1.0, 1.0))
            .collect();
        Query::table(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn init_parameters() {
        let state = attack_init(100, 0.25, 1000).unwrap();
        assert_eq!(state.config().universe_size, 3200);
        // Independent evaluation: 9 * 0.25 * sqrt(2000 * ln 384) + 1.
        let ln384 = 5.950_642_552_587_727_f64;
        let expected = 2.25 * (2000.0 * ln384).sqrt() + 1.0;
        assert!((state.config().tau - expected).abs() < 1e-9);
        assert!((state.config().tau - 246.4).abs() < 0.1);
        assert!(state.scores().iter().all(|&z| z == 0.0));
        assert_eq!(state.accused_count(), 0);
    }

    #[test]
    fn universe_size_rounds_up() {
        assert_eq!(universe_size(3, 0.3), 80);
        assert_eq!(universe_size(10, 0.33), 243);
        assert_eq!(universe_size(50, 0.25), 1600);
    }

    #[test]
    fn eps_out_of_range() {
        assert!(attack_init(10, 0.0, 5).is_err());
        assert!(attack_init(10, 0.5, 5).is_err());
        assert!(attack_init(10, 1.2, 5).is_err());
        assert!(attack_init(0, 0.2, 5).is_err());
    }

    #[test]
    fn trunc_examples() {
        assert_eq!(trunc(0.1, 0.3), 0.1);
        assert_eq!(trunc(0.5, 0.3), 0.3);
        assert_eq!(trunc(-1.0, 0.3), -0.3);
    }

    #[test]
    fn zero_bias_gives_zero_query() {
        let mut state = attack_init(4, 0.25, 3).unwrap();
        let mut rng = stream(1, "analyst");
        let q = state.next_query_with_bias(0.0, &mut rng).unwrap();
        assert!(q.table_values().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_accused_gives_zero_query() {
        let mut state = attack_init(2, 0.25, 3).unwrap();
        state.accused.iter_mut().for_each(|a| *a = true);
        let mut rng = stream(1, "analyst");
        let q = state.next_query_with_bias(1.0, &mut rng).unwrap();
        assert!(q.table_values().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_query_mean_tracks_bias() {
        // N = 10^4 at eps = 0.32 needs n = 400. Hoeffding with t = 0.03
        // fails with probability 2 e^-18.
        let mut state = attack_init(400, 0.32, 1).unwrap();
        assert_eq!(state.config().universe_size, 10_000);
        let mut rng = stream(6, "analyst");
        let q = state.next_query(&mut rng).unwrap();
        let mean = q.table_values().unwrap().iter().sum::<f64>() / 10_000.0;
        assert!((mean - state.bias()).abs() < 0.03);
    }

    #[test]
    fn answer_equal_to_bias_leaves_scores() {
        let mut state = attack_init(5, 0.25, 4).unwrap();
        let mut rng = stream(2, "analyst");
        let _q = state.next_query_with_bias(0.4, &mut rng).unwrap();
        state.process_answer(0.4).unwrap();
        assert!(state.scores().iter().all(|&z| z == 0.0));
    }

    #[test]
    fn increments_bounded_by_three_eps() {
        let mut state = attack_init(5, 0.2, 50).unwrap();
        let mut rng = stream(8, "analyst");
        for _ in 0..50 {
            let before = state.scores().to_vec();
            let q = state.next_query(&mut rng).unwrap();
            drop(q);
            state.process_answer(rng.random::<f64>()).unwrap();
            for (a, b) in before.iter().zip(state.scores()) {
                assert!((b - a).abs() <= 0.6 + 1e-12);
            }
        }
    }

    #[test]
    fn accused_scores_freeze_and_sets_nest() {
        // Answering with item 0's bit drifts its score by 1/6 per round in
        // expectation, against tau - 1 ~ 10.1 sqrt(k).
        let mut state = attack_init(2, 1.0 / 3.0, 6000).unwrap();
        let mut rng = stream(5, "analyst");
        let mut frozen: Vec<Option<f64>> = vec![None; state.config().universe_size];
        let mut prev = state.accused().to_vec();
        for _ in 0..6000 {
            let q = state.next_query(&mut rng).unwrap();
            let a = if q.table_values().unwrap()[0] == 1.0 { 1.0 } else { 0.0 };
            drop(q);
            state.process_answer(a).unwrap();
            for (i, (&was, &now)) in prev.iter().zip(state.accused()).enumerate() {
                assert!(!was || now, "accusation of {i} was withdrawn");
                if let Some(z) = frozen[i] {
                    assert_eq!(state.scores()[i], z);
                }
                if now && frozen[i].is_none() {
                    frozen[i] = Some(state.scores()[i]);
                }
            }
            assert!(state.scores().iter().all(|z| z.abs() <= state.config().tau));
            prev = state.accused().to_vec();
        }
        assert!(state.accused()[0], "item 0 should have been accused");
    }

    #[test]
    fn protocol_errors() {
        let mut state = attack_init(3, 0.25, 1).unwrap();
        let mut rng = stream(0, "analyst");
        assert_eq!(state.process_answer(0.5), Err(Error::NoPendingQuery));
        assert!(matches!(state.final_query(), Err(Error::AttackIncomplete { .. })));
        let _q = state.next_query(&mut rng).unwrap();
        assert_eq!(state.next_query(&mut rng).unwrap_err(), Error::AnswerPending);
        assert!(state.process_answer(1.5).is_err());
        state.process_answer(0.5).unwrap();
        assert_eq!(state.next_query(&mut rng).unwrap_err(), Error::RoundsExhausted(1));
        let q = state.final_query().unwrap();
        assert!(q.table_values().unwrap().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn zero_scores_give_zero_final_query() {
        let mut state = attack_init(3, 0.25, 2).unwrap();
        let mut rng = stream(0, "analyst");
        for _ in 0..2 {
            let _ = state.next_query(&mut rng).unwrap();
            let p = state.bias();
            state.process_answer(p).unwrap();
        }
        let q = state.final_query().unwrap();
        assert!(q.table_values().unwrap().iter().all(|&v| v == 0.0));
    }
}
