//! Independent trials, aggregates and sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::composition::computational::{prg_composition_attack, run_prg_composition, PrgCompositionPlan};
use crate::composition::encrypermute::{
    all_distinct, composition_attack, default_width, expected_membership_gap, run_composition,
    CompositionSchedule,
};
use crate::composition::sd::{sd_sweep, SdSweep};
use crate::error::{Error, Result};
use crate::fingerprint::{Estimate, LemmaProbe, LEMMA_LOWER_BOUND};
use crate::prg::Sha256Expander;
use crate::rng::{derive_seed, stream};

use super::config::{GameConfig, GameKind};
use super::game::{play_game, GameResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Worker threads; the global pool when absent.
    pub threads: Option<usize>,
    /// Keep per-round records.
    pub detail: bool,
}

/// Runs `f` on a pool of the requested size. Results never depend on it.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let len = values.len();
    if len == 0 {
        return f64::NAN;
    }
    values.sum::<f64>() / len as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialAggregate {
    pub config: GameConfig,
    pub universe_size: usize,
    pub mechanism: String,
    pub trials: usize,
    /// Fraction of trials with either violation.
    pub success_rate: f64,
    pub phg_rate: f64,
    pub accuracy_rate: f64,
    pub mean_final_gap: f64,
    pub p90_final_gap: f64,
    pub mean_max_pop_err: f64,
    pub mean_accused_out: f64,
    pub max_abs_score: f64,
    pub results: Vec<GameResult>,
}

impl TrialAggregate {
    pub fn from_results(config: GameConfig, results: Vec<GameResult>) -> Result<Self> {
        let first = results.first().ok_or(Error::Empty)?;
        let trials = results.len();
        let frac = |pred: fn(&GameResult) -> bool| {
            results.iter().filter(|r| pred(r)).count() as f64 / trials as f64
        };
        let gaps: Vec<f64> = results.iter().map(|r| r.final_gap).collect();
        Ok(Self {
            universe_size: first.universe_size,
            mechanism: first.mechanism.clone(),
            trials,
            success_rate: frac(GameResult::violated),
            phg_rate: frac(|r| r.phg_violated),
            accuracy_rate: frac(|r| r.accuracy_violated),
            mean_final_gap: mean(gaps.iter().copied()),
            p90_final_gap: percentile(&gaps, 90.0),
            mean_max_pop_err: mean(results.iter().map(|r| r.max_population_error)),
            mean_accused_out: mean(results.iter().map(|r| r.accused_out_sample as f64)),
            max_abs_score: results.iter().map(|r| r.max_abs_score).fold(0.0, f64::max),
            config,
            results,
        })
    }
}

/// Runs `cfg.trials` attack games with seeds derived from the master seed.
pub fn run_trials(cfg: &GameConfig, opts: RunOptions) -> Result<TrialAggregate> {
    cfg.validate()?;
    if !cfg.game.is_attack() {
        return Err(Error::Config(format!("{} is not an attack game", cfg.game)));
    }
    let results = with_threads(opts.threads, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| play_game(cfg, derive_seed(cfg.master_seed, t), opts.detail))
            .collect::<Result<Vec<_>>>()
    })??;
    TrialAggregate::from_results(cfg.clone(), results)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompositionVariant {
    It,
    Prg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub variant: CompositionVariant,
    pub n: usize,
    pub alpha: f64,
    pub d: usize,
    pub stages: usize,
    pub seed: u64,
    pub distinct: bool,
    pub reconstructed: bool,
    pub failure: Option<String>,
    pub sample_mean: Option<f64>,
    pub population_mean: Option<f64>,
    pub gap: Option<f64>,
    pub expected_gap: f64,
}

/// Samples `X` from `UniformBits(d)`, runs the prefix revealer plus the
/// scheduled copies, and attacks the transcript.
pub fn run_composition_demo(n: usize, alpha: f64, variant: CompositionVariant, seed: u64) -> Result<CompositionReport> {
    let d = default_width(n);
    let mut data = stream(seed, "data");
    let rows: Vec<BitVector> = (0..n).map(|_| BitVector::random(d, &mut data)).collect();
    let mut mech = stream(seed, "mechanism");
    let (stages, outcome) = match variant {
        CompositionVariant::It => {
            let schedule = CompositionSchedule::new(n, alpha)?;
            let transcript = run_composition(&rows, &schedule, &mut mech)?;
            let outcome = composition_attack(&transcript.prefix, &transcript.outputs, &schedule);
            (schedule.stages.len() + 1, outcome)
        }
        CompositionVariant::Prg => {
            let plan = PrgCompositionPlan::new(n, alpha)?;
            let (prefix, c) = run_prg_composition(&rows, &plan, &Sha256Expander, &mut mech)?;
            (2, prg_composition_attack(&prefix, &c, &plan, &Sha256Expander))
        }
    };
    let mut report = CompositionReport {
        variant,
        n,
        alpha,
        d,
        stages,
        seed,
        distinct: all_distinct(&rows),
        reconstructed: false,
        failure: None,
        sample_mean: None,
        population_mean: None,
        gap: None,
        expected_gap: expected_membership_gap(n, d),
    };
    match outcome {
        Ok(attack) => {
            let gap = attack.gap(d)?;
            report.reconstructed = attack.rows == rows;
            report.sample_mean = Some(gap.sample_mean);
            report.population_mean = Some(gap.population_mean);
            report.gap = Some(gap.gap);
        }
        Err(failure) => report.failure = Some(failure.to_string()),
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionAggregate {
    pub config: GameConfig,
    pub variant: CompositionVariant,
    pub d: usize,
    pub stages: usize,
    pub trials: usize,
    pub distinct_trials: usize,
    /// Fraction of all trials reconstructed exactly.
    pub success_rate: f64,
    /// Distinct-element trials whose reconstruction failed.
    pub distinct_failures: usize,
    /// Recovered trials whose gap differs from the closed form.
    pub gap_mismatches: usize,
    pub mean_gap: f64,
    pub p90_gap: f64,
    pub reports: Vec<CompositionReport>,
}

pub fn run_composition_trials(cfg: &GameConfig, opts: RunOptions) -> Result<CompositionAggregate> {
    cfg.validate()?;
    let variant = match cfg.game {
        GameKind::ComposeIt => CompositionVariant::It,
        GameKind::ComposePrg => CompositionVariant::Prg,
        other => return Err(Error::Config(format!("{other} is not a composition game"))),
    };
    let reports = with_threads(opts.threads, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_composition_demo(cfg.n, cfg.alpha, variant, derive_seed(cfg.master_seed, t)))
            .collect::<Result<Vec<_>>>()
    })??;
    let first = reports.first().ok_or(Error::Empty)?;
    let gaps: Vec<f64> = reports.iter().filter_map(|r| r.gap).collect();
    Ok(CompositionAggregate {
        variant,
        d: first.d,
        stages: first.stages,
        trials: reports.len(),
        distinct_trials: reports.iter().filter(|r| r.distinct).count(),
        success_rate: reports.iter().filter(|r| r.reconstructed).count() as f64 / reports.len() as f64,
        distinct_failures: reports.iter().filter(|r| r.distinct && !r.reconstructed).count(),
        gap_mismatches: reports
            .iter()
            .filter(|r| r.reconstructed && r.gap != Some(r.expected_gap))
            .count(),
        mean_gap: mean(gaps.iter().copied()),
        p90_gap: percentile(&gaps, 90.0),
        config: cfg.clone(),
        reports,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCell {
    pub probe: LemmaProbe,
    pub m: usize,
    pub estimate: Estimate,
    pub lower_bound: f64,
    /// `estimate >= 1/12 - 3 SE`.
    pub pass: bool,
}

pub fn run_lemma_grid(cfg: &GameConfig, opts: RunOptions) -> Result<Vec<LemmaCell>> {
    cfg.validate()?;
    let cells: Vec<(LemmaProbe, usize)> = LemmaProbe::standard_set()
        .into_iter()
        .flat_map(|p| cfg.lemma_m.iter().map(move |&m| (p, m)))
        .collect();
    with_threads(opts.threads, || {
        cells
            .par_iter()
            .enumerate()
            .map(|(idx, &(probe, m))| {
                let mut rng = stream(derive_seed(cfg.master_seed, idx as u64), "lemma");
                let estimate = probe.estimate(m, cfg.lemma_samples, &mut rng)?;
                Ok(LemmaCell {
                    probe,
                    m,
                    estimate,
                    lower_bound: LEMMA_LOWER_BOUND,
                    pass: estimate.mean >= LEMMA_LOWER_BOUND - 3.0 * estimate.std_err,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn run_sd_check(cfg: &GameConfig) -> Result<SdSweep> {
    cfg.validate()?;
    sd_sweep(cfg.sd_max_n)
}

/// The grid cells of a sweep: every `(n, k)` pair, `n` outermost.
pub fn sweep_cells(cfg: &GameConfig) -> Vec<GameConfig> {
    let ns = if cfg.sweep_n.is_empty() { vec![cfg.n] } else { cfg.sweep_n.clone() };
    let ks = if cfg.sweep_k.is_empty() || !cfg.game.is_attack() {
        vec![cfg.k]
    } else {
        cfg.sweep_k.clone()
    };
    let mut cells = Vec::with_capacity(ns.len() * ks.len());
    for &n in &ns {
        for &k in &ks {
            cells.push(GameConfig {
                n,
                k,
                sweep_n: Vec::new(),
                sweep_k: Vec::new(),
                ..cfg.clone()
            });
        }
    }
    cells
}
