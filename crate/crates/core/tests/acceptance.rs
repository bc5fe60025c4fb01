//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use phg_core::attack::AttackConfig;
use phg_core::bits::BitVector;
use phg_core::composition::encrypermute::{
    encrypermute_independence_test, encrypermute_uniformity_test, DatasetSource, EncrypermuteParams,
};
use phg_core::harness::{
    play_game, run_config, run_naq_game, run_trials, CompositionAggregate, GameConfig, GameKind, MechanismKind,
    NaqPlayer, Report, RunOptions, TrialAggregate,
};
use phg_core::mechanisms::NaturalMechanism;
use phg_core::rng::stream;

type Outcome = (bool, String);

fn config(name: &str) -> GameConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    GameConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn opts() -> RunOptions {
    RunOptions::default()
}

fn attack(cfg: &GameConfig) -> TrialAggregate {
    run_trials(cfg, opts()).expect("attack trials run")
}

fn csv_of(name: &str) -> String {
    run_config(&config(name), opts()).expect("config runs").to_csv().expect("csv renders")
}

/// Answers at the extremes of `[0, 1]`, whichever side the sample mean is on.
struct Extremal;

impl NaturalMechanism for Extremal {
    fn answer(&mut self, values: &[f64]) -> phg_core::Result<f64> {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(if mean >= 0.5 { 1.0 } else { 0.0 })
    }

    fn name(&self) -> String {
        "extremal".into()
    }
}

fn score_bound() -> Outcome {
    let base = config("score_bound.json");
    let mut checked = Vec::new();
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    let mut games = 0usize;
    let mut accusing = 0usize;
    let mut tally = |results: &[phg_core::harness::GameResult]| {
        for r in results {
            games += 1;
            accusing += usize::from(r.accused_in_sample + r.accused_out_sample > 0);
            worst = worst.max(r.max_abs_score / r.tau);
            if r.max_abs_score > r.tau {
                violations += 1;
            }
        }
    };
    for m in [
        MechanismKind::EmpiricalMean,
        MechanismKind::RoundedMean,
        MechanismKind::Gaussian,
        MechanismKind::UniformRandom,
        MechanismKind::Oracle,
    ] {
        let agg = attack(&GameConfig { mechanism: m, ..base.clone() });
        tally(&agg.results);
        checked.push(m.to_string());
    }
    let split = GameConfig {
        mechanism: MechanismKind::SampleSplit,
        n: 400,
        k: 400,
        eps: 0.25,
        ..base.clone()
    };
    tally(&attack(&split).results);
    checked.push("sample-split".into());
    let probing = GameConfig {
        game: GameKind::Aq,
        mechanism: MechanismKind::Probing,
        k: 300,
        ..base.clone()
    };
    tally(&attack(&probing).results);
    checked.push("probing(aq)".into());

    let cfg = AttackConfig::new(base.n, base.eps, base.k).unwrap();
    let extremal: Vec<_> = (0..base.trials as u64)
        .map(|t| run_naq_game(NaqPlayer::Natural(Box::new(Extremal)), &cfg, t, false).unwrap())
        .collect();
    tally(&extremal);
    checked.push("extremal".into());

    (
        violations == 0,
        format!(
            "{games} games over {} mechanisms ({}), {accusing} with accusations, {violations} with max|z| > tau, worst max|z|/tau = {worst:.4}",
            checked.len(),
            checked.join(", ")
        ),
    )
}

fn few_accusations() -> Outcome {
    let base = config("few_accusations.json");
    let limit = base.eps * AttackConfig::new(base.n, base.eps, base.k).unwrap().universe_size as f64 / 8.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [MechanismKind::EmpiricalMean, MechanismKind::UniformRandom] {
        let agg = attack(&GameConfig { mechanism: m, ..base.clone() });
        let within = agg.results.iter().filter(|r| r.accused_out_sample as f64 <= limit).count();
        let frac = within as f64 / agg.trials as f64;
        ok &= frac >= 0.95;
        parts.push(format!("{m} {within}/{} within (max {})", agg.trials, agg.results.iter().map(|r| r.accused_out_sample).max().unwrap_or(0)));
    }
    (ok, format!("|A \\ X| <= eps N / 8 = {limit}: {}", parts.join("; ")))
}

fn attack_success() -> Outcome {
    let cfg = config("attack_success.json");
    let agg = attack(&cfg);
    let ok = agg.trials >= 50 && agg.success_rate >= 2.0 / 3.0 && agg.phg_rate >= 2.0 / 3.0;
    (
        ok,
        format!(
            "n={} k={} over {} trials: success {:.3}, final-query gap > eps in {:.3}, mean gap {:.4}",
            cfg.n, cfg.k, agg.trials, agg.success_rate, agg.phg_rate, agg.mean_final_gap
        ),
    )
}

fn oracle_control() -> Outcome {
    let cfg = config("oracle_control.json");
    let agg = attack(&cfg);
    (
        agg.phg_rate <= 0.05 && agg.accuracy_rate <= 0.05,
        format!(
            "n={} k={} over {} trials: phg violated {:.3}, accuracy violated {:.3}, max final gap {:.4}",
            cfg.n,
            cfg.k,
            agg.trials,
            agg.phg_rate,
            agg.accuracy_rate,
            agg.results.iter().map(|r| r.final_gap).fold(f64::MIN, f64::max)
        ),
    )
}

fn gaussian_defense() -> Outcome {
    let cfg = config("gaussian_defense.json");
    let expected_n = (4.0 * (cfg.k as f64).sqrt() * (cfg.k as f64).ln() / (cfg.eps * cfg.eps)).ceil() as usize;
    let agg = attack(&cfg);
    let survived = 1.0 - agg.success_rate;
    (
        cfg.n == expected_n && agg.trials >= 100 && survived >= 0.8,
        format!(
            "n={} (formula {expected_n}) k={} sigma={:.6}: survived {:.3} of {} trials",
            cfg.n,
            cfg.k,
            cfg.resolved_sigma().unwrap(),
            survived,
            agg.trials
        ),
    )
}

fn lifting_equivalence() -> Outcome {
    let shapes = [(1usize, 1.0 / 3.0), (2, 1.0 / 3.0), (1, 0.25), (2, 0.25), (1, 0.3), (2, 0.3)];
    let ks = [1usize, 5, 16, 33, 48, 64];
    let mechs = [
        MechanismKind::EmpiricalMean,
        MechanismKind::RoundedMean,
        MechanismKind::Gaussian,
        MechanismKind::UniformRandom,
    ];
    let mut cases = 0;
    let mut equal_masks = 0;
    let mut equal_prg = 0;
    let mut max_universe = 0;
    for case in 0..100u64 {
        let (n, eps) = shapes[case as usize % shapes.len()];
        let k = ks[(case as usize / shapes.len()) % ks.len()];
        let m = mechs[case as usize % mechs.len()];
        let cfg = GameConfig {
            n,
            eps,
            k,
            mechanism: m,
            ..GameConfig::default()
        };
        let naq = play_game(&GameConfig { game: GameKind::Naq, ..cfg.clone() }, 1000 + case, true).unwrap();
        let aq = play_game(&GameConfig { game: GameKind::Aq, ..cfg.clone() }, 1000 + case, true).unwrap();
        let prg = play_game(&GameConfig { game: GameKind::AqPrg, ..cfg }, 1000 + case, true).unwrap();
        max_universe = max_universe.max(naq.universe_size);
        cases += 1;
        let same = |o: &phg_core::harness::GameResult| {
            o.rounds.len() == k && o.rounds == naq.rounds && o.final_gap == naq.final_gap && o.off_sample_evaluations == 0
        };
        equal_masks += usize::from(same(&aq));
        equal_prg += usize::from(same(&prg));
    }
    (
        max_universe <= 64 && equal_masks == cases && equal_prg == cases,
        format!("N <= {max_universe}, k <= 64: masks {equal_masks}/{cases}, generator {equal_prg}/{cases} identical transcripts"),
    )
}

fn lemma() -> Outcome {
    let cfg = config("lemma.json");
    let Report::Lemma(cells) = run_config(&cfg, opts()).unwrap() else {
        unreachable!()
    };
    let pass = cells.iter().filter(|c| c.pass).count();
    let worst = cells
        .iter()
        .map(|c| (c.estimate.mean - c.lower_bound) / c.estimate.std_err)
        .fold(f64::INFINITY, f64::min);
    let ok = cells.len() == 12
        && cells.iter().all(|c| c.estimate.samples >= 100_000 && c.estimate.mean >= 1.0 / 12.0 - 3.0 * c.estimate.std_err);
    (ok, format!("{pass}/{} cells at or above 1/12 - 3 SE (smallest margin {worst:.1} SE)", cells.len()))
}

fn encrypermute_laws() -> Outcome {
    let params = EncrypermuteParams::new(4, 1, 3, 5).unwrap();
    let rows = |v: &[u64]| v.iter().map(|&x| BitVector::from_u64(x, 3)).collect::<Vec<_>>();
    let a = rows(&[3, 0, 6, 5, 1]);
    let b = rows(&[7, 2, 4, 1, 6]);
    let mut rng = stream(808, "encrypermute");
    let fixed = encrypermute_uniformity_test(&params, &DatasetSource::Shuffled(a.clone()), 24_000, &mut rng).unwrap();
    let fresh = encrypermute_uniformity_test(&params, &DatasetSource::Fresh, 24_000, &mut rng).unwrap();
    let pair = encrypermute_independence_test(&params, &a, &b, 24_000, &mut rng).unwrap();
    let ok = fixed.counts.len() == 24
        && fixed.chi_square.p_value > 0.001
        && fresh.chi_square.p_value > 0.001
        && pair.chi_square.p_value > 0.001;
    (
        ok,
        format!(
            "k=4, 24000 trials: uniformity p = {:.4} (fixed dataset), {:.4} (fresh rows); two-sample p = {:.4}",
            fixed.chi_square.p_value, fresh.chi_square.p_value, pair.chi_square.p_value
        ),
    )
}

fn composition() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["compose_it.json", "compose_prg.json"] {
        let Report::Composition(aggs) = run_config(&config(name), opts()).unwrap() else {
            unreachable!()
        };
        ok &= aggs.len() == 3;
        for a in &aggs {
            ok &= composition_cell_ok(a);
            parts.push(format!(
                "{} n={} {}/{} distinct recovered",
                a.config.game,
                a.config.n,
                a.reports.iter().filter(|r| r.distinct && r.reconstructed).count(),
                a.distinct_trials
            ));
        }
    }
    (ok, format!("{}; every gap equal to 2 - 2n/2^d", parts.join(", ")))
}

fn composition_cell_ok(a: &CompositionAggregate) -> bool {
    let n = a.config.n;
    let d = 5 * (usize::BITS - (n - 1).leading_zeros()) as i32;
    let expected = 2.0 - 2.0 * n as f64 / 2f64.powi(d);
    a.trials >= 1000
        && a.d == d as usize
        && a.reports.iter().filter(|r| r.distinct).all(|r| r.reconstructed && r.gap == Some(expected))
}

fn statistical_distance() -> Outcome {
    let Report::Sd(s) = run_config(&config("sd.json"), opts()).unwrap() else {
        unreachable!()
    };
    (
        s.checked == 1 << 16 && s.violations.is_empty(),
        format!(
            "N = 1..={}: {} violations, worst sd*sqrt(N) = {:.4} at N = {}",
            s.max_n,
            s.violations.len(),
            s.worst_ratio,
            s.worst_n
        ),
    )
}

fn determinism() -> Outcome {
    let names = [
        "score_bound.json",
        "few_accusations.json",
        "gaussian_defense.json",
        "lemma.json",
        "compose_it.json",
        "compose_prg.json",
        "sd.json",
    ];
    let mut differing = Vec::new();
    for name in names {
        if csv_of(name) != csv_of(name) {
            differing.push(name);
        }
    }
    (
        differing.is_empty(),
        format!("{} configs rerun, byte-identical CSV for {}", names.len(), names.len() - differing.len()),
    )
}

fn main() -> ExitCode {
    // Accept and ignore libtest flags such as --nocapture.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("score boundedness", score_bound),
        ("few accusations", few_accusations),
        ("attack success", attack_success),
        ("control soundness", oracle_control),
        ("defense survival", gaussian_defense),
        ("lifting equivalence", lifting_equivalence),
        ("fingerprinting expectation", lemma),
        ("encrypermute uniformity and independence", encrypermute_laws),
        ("composition break", composition),
        ("statistical distance", statistical_distance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
