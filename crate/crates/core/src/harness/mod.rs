//! Game loops, trial orchestration and output.

pub mod config;
pub mod game;
pub mod report;
pub mod trials;

pub use config::{GameConfig, GameKind, MechanismKind};
pub use game::{natural_mechanism, play_game, run_aq_game, run_naq_game, GameResult, Lift, NaqPlayer, RoundRecord};
pub use report::{check_writable, write_report, Report, CSV_COLUMNS};
pub use trials::{
    run_composition_demo, run_composition_trials, run_lemma_grid, run_sd_check, run_trials, sweep_cells,
    CompositionAggregate, CompositionReport, CompositionVariant, LemmaCell, RunOptions, TrialAggregate,
};

use crate::error::Result;

/// Runs every cell of the configuration (one unless sweep lists are set).
pub fn run_config(cfg: &GameConfig, opts: RunOptions) -> Result<Report> {
    cfg.validate()?;
    match cfg.game {
        g if g.is_attack() => sweep_cells(cfg)
            .iter()
            .map(|c| run_trials(c, opts))
            .collect::<Result<Vec<_>>>()
            .map(Report::Attack),
        g if g.is_composition() => sweep_cells(cfg)
            .iter()
            .map(|c| run_composition_trials(c, opts))
            .collect::<Result<Vec<_>>>()
            .map(Report::Composition),
        GameKind::VerifyLemma => run_lemma_grid(cfg, opts).map(Report::Lemma),
        _ => run_sd_check(cfg).map(Report::Sd),
    }
}
