use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phg_core::harness::{check_writable, run_config, write_report, GameConfig, GameKind, MechanismKind, Report, RunOptions};
use phg_core::Error;

#[derive(Parser, Debug)]
#[command(name = "phg", version, about = "Adaptive statistical-query attack and composition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file (flat keys; unknown keys are errors)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output file; `.json` writes JSON, anything else CSV. Stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Keep per-round records in JSON output
    #[arg(long, global = true)]
    verbose: bool,

    #[arg(long, global = true)]
    n: Option<usize>,

    #[arg(long, global = true)]
    k: Option<usize>,

    #[arg(long, global = true)]
    eps: Option<f64>,

    #[arg(long, global = true)]
    alpha: Option<f64>,

    #[arg(long, global = true)]
    mechanism: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Fingerprinting attack against a natural mechanism
    AttackNatural,
    /// Mask-lifted attack against a general mechanism
    AttackLifted,
    /// Generator-lifted attack against a general mechanism
    AttackPrg,
    /// Prefix revealer composed with Encrypermute copies
    ComposeIt,
    /// Prefix revealer composed with one PRG-Encrypermute copy
    ComposePrg,
    /// Monte-Carlo check of the fingerprinting expectation bound
    VerifyLemma,
    /// Exhaustive statistical-distance check of low rank bits
    VerifySd,
    /// Grid over the config's sweep_n and sweep_k lists
    Sweep,
}

impl Command {
    fn game(self) -> Option<GameKind> {
        match self {
            Command::AttackNatural => Some(GameKind::Naq),
            Command::AttackLifted => Some(GameKind::Aq),
            Command::AttackPrg => Some(GameKind::AqPrg),
            Command::ComposeIt => Some(GameKind::ComposeIt),
            Command::ComposePrg => Some(GameKind::ComposePrg),
            Command::VerifyLemma => Some(GameKind::VerifyLemma),
            Command::VerifySd => Some(GameKind::VerifySd),
            Command::Sweep => None,
        }
    }
}

fn build_config(cli: &Cli) -> Result<GameConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => GameConfig::load(path)?,
        None => GameConfig::default(),
    };
    if let Some(game) = cli.command.game() {
        cfg.game = game;
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(eps) = cli.eps {
        cfg.eps = eps;
    }
    if let Some(alpha) = cli.alpha {
        cfg.alpha = alpha;
    }
    if let Some(m) = &cli.mechanism {
        cfg.mechanism = m.parse::<MechanismKind>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary(report: &Report) -> String {
    match report {
        Report::Attack(aggs) => aggs
            .iter()
            .map(|a| {
                format!(
                    "{} n={} k={} eps={} {}: success {:.3} (phg {:.3}, accuracy {:.3}) over {} trials",
                    a.config.game, a.config.n, a.config.k, a.config.eps, a.mechanism, a.success_rate,
                    a.phg_rate, a.accuracy_rate, a.trials
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Report::Composition(aggs) => aggs
            .iter()
            .map(|a| {
                format!(
                    "{} n={} alpha={}: reconstructed {}/{} ({} distinct), gap mismatches {}",
                    a.config.game,
                    a.config.n,
                    a.config.alpha,
                    (a.success_rate * a.trials as f64).round(),
                    a.trials,
                    a.distinct_trials,
                    a.gap_mismatches
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Report::Lemma(cells) => format!(
            "lemma grid: {}/{} cells at or above 1/12 - 3 SE",
            cells.iter().filter(|c| c.pass).count(),
            cells.len()
        ),
        Report::Sd(s) => format!(
            "statistical distance: {} of {} sizes violate the bound (worst sd*sqrt(N) = {} at N = {})",
            s.violations.len(),
            s.checked,
            s.worst_ratio,
            s.worst_n
        ),
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    if let Some(path) = &cfg.out {
        check_writable(path)?;
    }
    let opts = RunOptions {
        threads: cli.threads,
        detail: cli.verbose,
    };
    let report = run_config(&cfg, opts)?;
    match &cfg.out {
        Some(path) => {
            write_report(&report, path)?;
            println!("{}", summary(&report));
        }
        None => print!("{}", report.render_for(None)?),
    }
    if !report.all_pass() {
        eprintln!("warning: some checks did not hold; see the report");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
