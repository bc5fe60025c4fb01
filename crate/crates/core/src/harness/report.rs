//! CSV and JSON output.

use std::fs::OpenOptions;
use std::path::Path;

use serde::Serialize;

use crate::composition::sd::SdSweep;
use crate::error::{Error, Result};

use super::trials::{CompositionAggregate, CompositionVariant, LemmaCell, TrialAggregate};

/// Columns of the aggregate CSV shared by attack and composition runs.
pub const CSV_COLUMNS: [&str; 13] = [
    "game",
    "n",
    "eps",
    "k",
    "N",
    "mechanism",
    "trials",
    "success_rate",
    "mean_final_gap",
    "p90_final_gap",
    "mean_max_pop_err",
    "mean_accused_out",
    "seed",
];

pub const LEMMA_COLUMNS: [&str; 7] = ["probe", "m", "samples", "estimate", "std_err", "lower_bound", "pass"];

pub const SD_COLUMNS: [&str; 5] = ["max_n", "checked", "violations", "worst_ratio", "worst_n"];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Report {
    Attack(Vec<TrialAggregate>),
    Composition(Vec<CompositionAggregate>),
    Lemma(Vec<LemmaCell>),
    Sd(SdSweep),
}

fn attack_row(a: &TrialAggregate) -> Vec<String> {
    vec![
        a.config.game.to_string(),
        a.config.n.to_string(),
        a.config.eps.to_string(),
        a.config.k.to_string(),
        a.universe_size.to_string(),
        a.mechanism.clone(),
        a.trials.to_string(),
        a.success_rate.to_string(),
        a.mean_final_gap.to_string(),
        a.p90_final_gap.to_string(),
        a.mean_max_pop_err.to_string(),
        a.mean_accused_out.to_string(),
        a.config.master_seed.to_string(),
    ]
}

/// Composition rows reuse the columns: `eps` holds alpha, `k` the number of
/// composed mechanisms and `N` the universe size `2^d`.
fn composition_row(a: &CompositionAggregate) -> Vec<String> {
    let mechanism = match a.variant {
        CompositionVariant::It => "encrypermute",
        CompositionVariant::Prg => "prg-encrypermute",
    };
    vec![
        a.config.game.to_string(),
        a.config.n.to_string(),
        a.config.alpha.to_string(),
        a.stages.to_string(),
        (1u128 << a.d).to_string(),
        mechanism.to_string(),
        a.trials.to_string(),
        a.success_rate.to_string(),
        a.mean_gap.to_string(),
        a.p90_gap.to_string(),
        String::new(),
        String::new(),
        a.config.master_seed.to_string(),
    ]
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

impl Report {
    pub fn to_csv(&self) -> Result<String> {
        match self {
            Report::Attack(aggs) => csv_text(&CSV_COLUMNS, aggs.iter().map(attack_row)),
            Report::Composition(aggs) => csv_text(&CSV_COLUMNS, aggs.iter().map(composition_row)),
            Report::Lemma(cells) => csv_text(
                &LEMMA_COLUMNS,
                cells.iter().map(|c| {
                    vec![
                        c.probe.label(),
                        c.m.to_string(),
                        c.estimate.samples.to_string(),
                        c.estimate.mean.to_string(),
                        c.estimate.std_err.to_string(),
                        c.lower_bound.to_string(),
                        c.pass.to_string(),
                    ]
                }),
            ),
            Report::Sd(s) => csv_text(
                &SD_COLUMNS,
                [vec![
                    s.max_n.to_string(),
                    s.checked.to_string(),
                    s.violations.len().to_string(),
                    s.worst_ratio.to_string(),
                    s.worst_n.to_string(),
                ]],
            ),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// JSON for `.json` paths, CSV otherwise.
    pub fn render_for(&self, path: Option<&Path>) -> Result<String> {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => self.to_json(),
            _ => self.to_csv(),
        }
    }

    /// Whether every acceptance-relevant outcome in the report holds.
    pub fn all_pass(&self) -> bool {
        match self {
            Report::Lemma(cells) => cells.iter().all(|c| c.pass),
            Report::Sd(s) => s.violations.is_empty(),
            Report::Composition(aggs) => aggs.iter().all(|a| a.distinct_failures == 0 && a.gap_mismatches == 0),
            Report::Attack(_) => true,
        }
    }
}

/// Fails unless `path` can be opened for writing; leaves no file behind.
pub fn check_writable(path: &Path) -> Result<()> {
    let existed = path.exists();
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    if !existed {
        std::fs::remove_file(path)?;
    }
    Ok(())
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    let text = report.render_for(Some(path))?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sd_csv_shape() {
        let s = SdSweep {
            max_n: 4,
            checked: 4,
            violations: vec![],
            worst_ratio: 0.5,
            worst_n: 3,
        };
        let text = Report::Sd(s).to_csv().unwrap();
        assert_eq!(text, "max_n,checked,violations,worst_ratio,worst_n\n4,4,0,0.5,3\n");
    }

    #[test]
    fn unwritable_path_detected() {
        assert!(check_writable(Path::new("/nonexistent-dir/x.csv")).is_err());
    }
}
