//! One attack game: the fingerprinting analyst against a mechanism, over
//! the index universe or a lifted pair universe.
//!
//! Randomness comes from named streams of the trial seed: `data` draws the
//! sample, `analyst` the round queries, `masks` the lift, and `mechanism`
//! the answering noise. The same seed therefore yields the same sample
//! indices and round queries in every game kind.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackConfig, AttackState};
use crate::error::{Error, Result};
use crate::lifting::{build_masked_instance, build_prg_instance, lift_final_query, lift_query};
use crate::mechanisms::{
    lift_natural, oracle_answer, EmpiricalMean, GaussianMechanism, GeneralMechanism,
    NaturalMechanism, PopulationOracle, ProbingMechanism, RoundedMean, SampleSplit, UniformRandom,
};
use crate::prg::Sha256Expander;
use crate::query::{phg_gap, query_mean_population, Query};
use crate::rng::stream;
use crate::universe::{sample_dataset, Dataset, PairSupport, Population, UniversePoint};

use super::config::{GameConfig, GameKind, MechanismKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub bias: f64,
    pub answer: f64,
    pub population_mean: f64,
    pub sample_mean: f64,
    pub population_error: f64,
    pub sample_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub game: GameKind,
    pub mechanism: String,
    pub n: usize,
    pub eps: f64,
    pub k: usize,
    pub universe_size: usize,
    /// Width of the word attached to each universe point (0 for indices).
    pub point_bits: usize,
    pub tau: f64,
    pub seed: u64,
    /// Per-round detail; empty unless requested.
    pub rounds: Vec<RoundRecord>,
    pub max_population_error: f64,
    pub max_sample_error: f64,
    pub final_sample_mean: f64,
    pub final_population_mean: f64,
    /// `q*(X) - q*(P)`.
    pub final_gap: f64,
    pub accused_in_sample: usize,
    pub accused_out_sample: usize,
    pub max_abs_score: f64,
    pub accuracy_violated: bool,
    pub phg_violated: bool,
    /// Query evaluations at points outside the sample.
    pub off_sample_evaluations: u64,
    pub wall_time_secs: f64,
}

impl GameResult {
    pub fn violated(&self) -> bool {
        self.accuracy_violated || self.phg_violated
    }

    /// Same outcome up to wall time.
    pub fn same_outcome(&self, other: &GameResult) -> bool {
        let strip = |r: &GameResult| GameResult {
            wall_time_secs: 0.0,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

/// Who answers in the natural game.
pub enum NaqPlayer {
    Natural(Box<dyn NaturalMechanism>),
    /// Control that answers with the exact population mean.
    Oracle,
}

impl NaqPlayer {
    fn name(&self) -> String {
        match self {
            NaqPlayer::Natural(m) => m.name(),
            NaqPlayer::Oracle => "oracle".into(),
        }
    }
}

/// How the pair universe of the general game is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lift {
    Masks,
    Prg { ell: usize },
}

struct Tracker {
    eps: f64,
    detail: bool,
    rounds: Vec<RoundRecord>,
    max_pop: f64,
    max_sample: f64,
    off_sample: u64,
}

impl Tracker {
    fn new(eps: f64, detail: bool) -> Self {
        Self {
            eps,
            detail,
            rounds: Vec::new(),
            max_pop: 0.0,
            max_sample: 0.0,
            off_sample: 0,
        }
    }

    fn record(&mut self, round: usize, bias: f64, answer: f64, population_mean: f64, sample_mean: f64) {
        let population_error = (answer - population_mean).abs();
        let sample_error = (answer - sample_mean).abs();
        self.max_pop = self.max_pop.max(population_error);
        self.max_sample = self.max_sample.max(sample_error);
        if self.detail {
            self.rounds.push(RoundRecord {
                round,
                bias,
                answer,
                population_mean,
                sample_mean,
                population_error,
                sample_error,
            });
        }
    }

    fn finish(
        self,
        game: GameKind,
        mechanism: String,
        state: &AttackState,
        final_query: &Query,
        x: &Dataset,
        population: &Population,
        seed: u64,
        point_bits: usize,
        started: Instant,
    ) -> Result<GameResult> {
        let cfg = state.config();
        let gap = phg_gap(final_query, x, population)?;
        let in_sample: HashSet<usize> = x.indices().into_iter().collect();
        let accused_in_sample = in_sample.iter().filter(|&&i| state.accused()[i]).count();
        Ok(GameResult {
            game,
            mechanism,
            n: cfg.n,
            eps: cfg.eps,
            k: cfg.rounds,
            universe_size: cfg.universe_size,
            point_bits,
            tau: cfg.tau,
            seed,
            rounds: self.rounds,
            max_population_error: self.max_pop,
            max_sample_error: self.max_sample,
            final_sample_mean: gap.sample_mean,
            final_population_mean: gap.population_mean,
            final_gap: gap.gap,
            accused_in_sample,
            accused_out_sample: state.accused_count() - accused_in_sample,
            max_abs_score: state.max_abs_score(),
            accuracy_violated: self.max_pop > self.eps,
            phg_violated: gap.gap > self.eps,
            off_sample_evaluations: self.off_sample,
            wall_time_secs: started.elapsed().as_secs_f64(),
        })
    }
}

/// The fingerprinting attack against a natural mechanism, which receives
/// only the query values on its sample.
pub fn run_naq_game(mut player: NaqPlayer, cfg: &AttackConfig, seed: u64, detail: bool) -> Result<GameResult> {
    let started = Instant::now();
    let population = cfg.population();
    let x = sample_dataset(&population, cfg.n, &mut stream(seed, "data"))?;
    let mut analyst = stream(seed, "analyst");
    let mut state = AttackState::new(*cfg);
    let mut tracker = Tracker::new(cfg.eps, detail);
    let mut values = Vec::with_capacity(cfg.n);
    for j in 0..cfg.rounds {
        let q = state.next_query(&mut analyst)?.with_trap(x.points().iter().cloned());
        values.clear();
        for p in x.points() {
            values.push(q.eval(p)?);
        }
        let sample_mean = values.iter().sum::<f64>() / cfg.n as f64;
        let population_mean = query_mean_population(&q, &population)?;
        let answer = match &mut player {
            NaqPlayer::Natural(m) => m.answer(&values)?,
            NaqPlayer::Oracle => oracle_answer(&q, &population)?,
        };
        tracker.off_sample += q.off_sample_evaluations();
        drop(q);
        tracker.record(j, state.bias(), answer, population_mean, sample_mean);
        state.process_answer(answer)?;
    }
    let q_star = state.final_query()?;
    let name = player.name();
    tracker.finish(GameKind::Naq, name, &state, &q_star, &x, &population, seed, 0, started)
}

/// Builds the general mechanism once the pair sample and population exist.
pub type GeneralFactory<'a> = dyn FnOnce(Dataset, Population) -> Result<Box<dyn GeneralMechanism>> + 'a;

/// The lifted attack against a general mechanism, which may evaluate each
/// round query anywhere in the pair universe.
pub fn run_aq_game(
    factory: Box<GeneralFactory<'_>>,
    cfg: &AttackConfig,
    lift: Lift,
    seed: u64,
    detail: bool,
) -> Result<GameResult> {
    let started = Instant::now();
    let mut masks_rng = stream(seed, "masks");
    let support: Arc<dyn PairSupport> = match lift {
        Lift::Masks => build_masked_instance(cfg.universe_size, cfg.rounds, &mut masks_rng)?,
        Lift::Prg { ell } => {
            build_prg_instance(cfg.universe_size, cfg.rounds, ell, Arc::new(Sha256Expander), &mut masks_rng)?
        }
    };
    let population = Population::UniformPairs(support.clone());
    let x = sample_dataset(&population, cfg.n, &mut stream(seed, "data"))?;
    let allowed: Vec<UniversePoint> = x.points().to_vec();
    let mut mech = factory(x.clone(), population.clone())?;
    let mut analyst = stream(seed, "analyst");
    let mut state = AttackState::new(*cfg);
    let mut tracker = Tracker::new(cfg.eps, detail);
    for j in 0..cfg.rounds {
        let base = state.next_query(&mut analyst)?;
        let q = lift_query(&base, support.clone(), j)?.with_trap(allowed.iter().cloned());
        drop(base);
        let answer = mech.answer(&q)?;
        // Harness-side evaluations come after the mechanism's and stay on the sample.
        let mut sum = 0.0;
        for p in x.points() {
            sum += q.eval(p)?;
        }
        let sample_mean = sum / cfg.n as f64;
        let population_mean = query_mean_population(&q, &population)?;
        tracker.off_sample += q.off_sample_evaluations();
        drop(q);
        tracker.record(j, state.bias(), answer, population_mean, sample_mean);
        state.process_answer(answer)?;
    }
    let q_star = lift_final_query(&state.final_query()?)?;
    let game = match lift {
        Lift::Masks => GameKind::Aq,
        Lift::Prg { .. } => GameKind::AqPrg,
    };
    let name = mech.name();
    tracker.finish(game, name, &state, &q_star, &x, &population, seed, support.word_len(), started)
}

/// The natural mechanism named by the configuration.
pub fn natural_mechanism(cfg: &GameConfig, seed: u64) -> Result<Box<dyn NaturalMechanism>> {
    let rng = stream(seed, "mechanism");
    Ok(match cfg.mechanism {
        MechanismKind::EmpiricalMean => Box::new(EmpiricalMean),
        MechanismKind::RoundedMean => Box::new(RoundedMean {
            precision: cfg.precision,
        }),
        MechanismKind::Gaussian => Box::new(GaussianMechanism::new(cfg.resolved_sigma()?, rng)?),
        MechanismKind::SampleSplit => Box::new(SampleSplit::new(cfg.resolved_chunks())?),
        MechanismKind::UniformRandom => Box::new(UniformRandom::new(rng)),
        other => {
            return Err(Error::Config(format!("{other} is not a natural mechanism")));
        }
    })
}

/// Plays one attack game of the configured kind.
pub fn play_game(cfg: &GameConfig, seed: u64, detail: bool) -> Result<GameResult> {
    let attack = AttackConfig::new(cfg.n, cfg.eps, cfg.k)?;
    match cfg.game {
        GameKind::Naq => {
            let player = match cfg.mechanism {
                MechanismKind::Oracle => NaqPlayer::Oracle,
                _ => NaqPlayer::Natural(natural_mechanism(cfg, seed)?),
            };
            run_naq_game(player, &attack, seed, detail)
        }
        GameKind::Aq | GameKind::AqPrg => {
            let lift = if cfg.game == GameKind::Aq {
                Lift::Masks
            } else {
                Lift::Prg { ell: cfg.resolved_ell() }
            };
            let cfg = cfg.clone();
            let factory = move |x: Dataset, pop: Population| -> Result<Box<dyn GeneralMechanism>> {
                Ok(match cfg.mechanism {
                    MechanismKind::Oracle => Box::new(PopulationOracle::new(pop)),
                    MechanismKind::Probing => {
                        Box::new(ProbingMechanism::new(x, pop, cfg.probes, stream(seed, "mechanism")))
                    }
                    _ => Box::new(lift_natural(natural_mechanism(&cfg, seed)?, x)),
                })
            };
            run_aq_game(Box::new(factory), &attack, lift, seed, detail)
        }
        other => Err(Error::Config(format!("{other} is not an attack game"))),
    }
}
