//! Experiment configuration: a flat JSON object whose keys are the fields
//! of [`GameConfig`]. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attack::MAX_EPS;
use crate::composition::computational::MIN_PRG_PREFIX;
use crate::composition::sd::MAX_EXHAUSTIVE_N;
use crate::error::{Error, Result};
use crate::fingerprint::MIN_TRIALS;
use crate::lifting::default_seed_len;
use crate::mechanisms::calibrate_sigma;
use crate::prg::MIN_SEED_BITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Naq,
    Aq,
    AqPrg,
    ComposeIt,
    ComposePrg,
    VerifyLemma,
    VerifySd,
}

impl GameKind {
    pub const ALL: [GameKind; 7] = [
        GameKind::Naq,
        GameKind::Aq,
        GameKind::AqPrg,
        GameKind::ComposeIt,
        GameKind::ComposePrg,
        GameKind::VerifyLemma,
        GameKind::VerifySd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GameKind::Naq => "naq",
            GameKind::Aq => "aq",
            GameKind::AqPrg => "aq-prg",
            GameKind::ComposeIt => "compose-it",
            GameKind::ComposePrg => "compose-prg",
            GameKind::VerifyLemma => "verify-lemma",
            GameKind::VerifySd => "verify-sd",
        }
    }

    pub fn is_attack(&self) -> bool {
        matches!(self, GameKind::Naq | GameKind::Aq | GameKind::AqPrg)
    }

    pub fn is_composition(&self) -> bool {
        matches!(self, GameKind::ComposeIt | GameKind::ComposePrg)
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown game {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    EmpiricalMean,
    RoundedMean,
    Gaussian,
    SampleSplit,
    UniformRandom,
    Oracle,
    Probing,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 7] = [
        MechanismKind::EmpiricalMean,
        MechanismKind::RoundedMean,
        MechanismKind::Gaussian,
        MechanismKind::SampleSplit,
        MechanismKind::UniformRandom,
        MechanismKind::Oracle,
        MechanismKind::Probing,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MechanismKind::EmpiricalMean => "empirical-mean",
            MechanismKind::RoundedMean => "rounded-mean",
            MechanismKind::Gaussian => "gaussian",
            MechanismKind::SampleSplit => "sample-split",
            MechanismKind::UniformRandom => "uniform-random",
            MechanismKind::Oracle => "oracle",
            MechanismKind::Probing => "probing",
        }
    }

    /// Sees only the query values on its sample (the oracle is a control).
    pub fn is_natural(&self) -> bool {
        !matches!(self, MechanismKind::Oracle | MechanismKind::Probing)
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mechanism {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub game: GameKind,
    pub n: usize,
    pub eps: f64,
    pub k: usize,
    pub mechanism: MechanismKind,
    /// Gaussian noise scale; calibrated from `eps`, `delta` and `k` if absent.
    pub sigma: Option<f64>,
    pub delta: f64,
    /// Grid spacing of the rounded mean.
    pub precision: f64,
    /// Sample-split block count; `k` if absent.
    pub chunks: Option<usize>,
    /// Off-sample evaluations per query of the probing mechanism.
    pub probes: usize,
    pub alpha: f64,
    /// Seed length of the generator-lifted game.
    pub ell: Option<usize>,
    pub lemma_m: Vec<usize>,
    pub lemma_samples: usize,
    pub sd_max_n: u64,
    pub trials: usize,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub sweep_n: Vec<usize>,
    pub sweep_k: Vec<usize>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            game: GameKind::Naq,
            n: 32,
            eps: 0.25,
            k: 1000,
            mechanism: MechanismKind::EmpiricalMean,
            sigma: None,
            delta: 0.05,
            precision: 0.01,
            chunks: None,
            probes: 100,
            alpha: 0.5,
            ell: None,
            lemma_m: vec![1, 10, 100],
            lemma_samples: 100_000,
            sd_max_n: 1 << 16,
            trials: 100,
            master_seed: 0,
            out: None,
            sweep_n: Vec::new(),
            sweep_k: Vec::new(),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl GameConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GameConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolved_sigma(&self) -> Result<f64> {
        match self.sigma {
            Some(s) => Ok(s),
            None => calibrate_sigma(self.eps, self.delta, self.k),
        }
    }

    pub fn resolved_chunks(&self) -> usize {
        self.chunks.unwrap_or(self.k)
    }

    pub fn resolved_ell(&self) -> usize {
        self.ell.unwrap_or_else(|| default_seed_len(self.k))
    }

    /// Checks every constraint that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(bad("trials must be at least 1"));
        }
        if self.sweep_n.contains(&0) || self.sweep_k.contains(&0) {
            return Err(bad("sweep values must be positive"));
        }
        match self.game {
            g if g.is_attack() => self.validate_attack(),
            g if g.is_composition() => self.validate_composition(),
            GameKind::VerifyLemma => {
                if self.lemma_m.is_empty() || self.lemma_m.contains(&0) {
                    return Err(bad("lemma_m must list positive sample sizes"));
                }
                if self.lemma_samples < MIN_TRIALS {
                    return Err(bad(format!("lemma_samples must be at least {MIN_TRIALS}")));
                }
                Ok(())
            }
            GameKind::VerifySd => {
                if self.sd_max_n == 0 || self.sd_max_n > MAX_EXHAUSTIVE_N {
                    return Err(bad(format!("sd_max_n must lie in 1..={MAX_EXHAUSTIVE_N}")));
                }
                Ok(())
            }
            _ => unreachable!("every game kind is covered"),
        }
    }

    fn validate_attack(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= MAX_EPS) {
            return Err(bad(format!("eps must lie in (0, 1/3], got {}", self.eps)));
        }
        for &n in self.sweep_n.iter().chain(std::iter::once(&self.n)) {
            if n == 0 {
                return Err(bad("n must be at least 1"));
            }
        }
        if self.k == 0 {
            return Err(bad("k must be at least 1"));
        }
        if self.game == GameKind::Naq && self.mechanism == MechanismKind::Probing {
            return Err(bad("the probing mechanism needs the query as a function; use game aq or aq-prg"));
        }
        match self.mechanism {
            MechanismKind::Gaussian => {
                if !(self.delta > 0.0 && self.delta < 1.0) {
                    return Err(bad("delta must lie in (0, 1)"));
                }
                let sigma = self.resolved_sigma()?;
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(bad("sigma must be finite and non-negative"));
                }
            }
            MechanismKind::RoundedMean => {
                if !(self.precision > 0.0 && self.precision.is_finite()) {
                    return Err(bad("precision must be positive"));
                }
            }
            MechanismKind::SampleSplit => {
                let ks = if self.sweep_k.is_empty() { vec![self.k] } else { self.sweep_k.clone() };
                let ns = if self.sweep_n.is_empty() { vec![self.n] } else { self.sweep_n.clone() };
                for k in ks {
                    let chunks = self.chunks.unwrap_or(k);
                    if chunks < k {
                        return Err(bad(format!("{chunks} chunks cannot answer {k} queries")));
                    }
                    if let Some(n) = ns.iter().find(|&&n| n < chunks) {
                        return Err(bad(format!("n = {n} is smaller than the {chunks} chunks")));
                    }
                }
            }
            MechanismKind::Probing if self.probes == 0 => {
                return Err(bad("probes must be at least 1"));
            }
            _ => {}
        }
        if self.game == GameKind::AqPrg && self.resolved_ell() < MIN_SEED_BITS {
            return Err(bad(format!("ell must be at least {MIN_SEED_BITS}")));
        }
        Ok(())
    }

    fn validate_composition(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(bad(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let min_n = if self.game == GameKind::ComposePrg { MIN_PRG_PREFIX + 1 } else { 8 };
        for &n in self.sweep_n.iter().chain(std::iter::once(&self.n)) {
            if n < min_n {
                return Err(bad(format!("{} needs n >= {min_n}, got {n}", self.game)));
            }
            if n > 1 << 12 {
                return Err(bad(format!("n = {n} is beyond the supported 4096")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        GameConfig::default().validate().unwrap();
    }

    #[test]
    fn json_roundtrip_and_unknown_keys() {
        let cfg = GameConfig::from_json(r#"{"game": "aq-prg", "n": 10, "k": 64, "mechanism": "probing"}"#).unwrap();
        assert_eq!(cfg.game, GameKind::AqPrg);
        assert_eq!(cfg.eps, 0.25);
        assert_eq!(GameConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let err = GameConfig::from_json(r#"{"n": 10, "bogus": 1}"#).unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn probing_rejected_for_natural_game() {
        let cfg = GameConfig {
            mechanism: MechanismKind::Probing,
            ..GameConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = GameConfig { game: GameKind::Aq, ..cfg };
        cfg.validate().unwrap();
    }

    #[test]
    fn range_checks() {
        let base = GameConfig::default();
        for cfg in [
            GameConfig { eps: 0.5, ..base.clone() },
            GameConfig { trials: 0, ..base.clone() },
            GameConfig { k: 0, ..base.clone() },
            GameConfig { game: GameKind::ComposeIt, alpha: 1.0, ..base.clone() },
            GameConfig { game: GameKind::ComposePrg, n: 13, ..base.clone() },
            GameConfig { game: GameKind::AqPrg, ell: Some(8), ..base.clone() },
            GameConfig { mechanism: MechanismKind::SampleSplit, k: 40, n: 32, ..base.clone() },
            GameConfig { game: GameKind::VerifySd, sd_max_n: 0, ..base.clone() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn names_parse() {
        for g in GameKind::ALL {
            assert_eq!(g.as_str().parse::<GameKind>().unwrap(), g);
        }
        for m in MechanismKind::ALL {
            assert_eq!(m.as_str().parse::<MechanismKind>().unwrap(), m);
        }
        assert!("nope".parse::<MechanismKind>().is_err());
    }
}
