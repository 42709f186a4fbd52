//! Release gate: one test per guaranteed behavior, each printing a single
//! verdict line. Run with `cargo test --test acceptance -- --nocapture` to
//! see the verdicts; any failure fails the build.

use conex_core::executor::exhaustive_optimum;
use conex_core::PerformanceSource;
use conex_core::rng::{domain, StreamFactory};
use conex_core::sampler::evolve::{
    crossover_count, mutation_count, plan_generation, propose_child, random_valid,
};
use conex_core::sampler::{compare_samplers, run_on_landscape};
use conex_core::{
    break_even, compare, digest, gain, rules_from_toml, sensitivity, signature_from_trace,
    synthetic_grid_space, AcceptancePolicy, ConfigurationSpace, Direction, Executor,
    JournalHeader, JournalWriter, LandscapeKind, LandscapeOptions, RuleSet, SamplerError,
    SamplerKind, SamplerSettings, SimilarityBreakdown, SyntheticLandscape, TuneResult, Tuner,
    JOURNAL_VERSION,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::time::Instant;

fn verdict(name: &str, ok: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

/// Budget-bound EMCMC must land within 5% of the enumerated optimum on
/// every landscape shape, in at least 9 of 10 seeded runs, quickly.
#[test]
fn oracle_optimality() {
    let started = Instant::now();
    // 3^6 = 729 configurations; budget is 30% of the space.
    let space = synthetic_grid_space("oracle6", 6, 3).unwrap();
    let rules = RuleSet::empty(&space);
    let size = space.space_size_u64().unwrap();
    let budget = (0.30 * size as f64) as u64;
    let options = LandscapeOptions { seed: 42, noise: 0.5 };

    let mut per_kind = Vec::new();
    let mut all_ok = true;
    for kind in LandscapeKind::ALL {
        let source = SyntheticLandscape::new(kind, &space, options).unwrap();
        let (_, optimum) = exhaustive_optimum(&space, &source, 2_000).unwrap();
        let mut hits = 0;
        for seed in 1..=10 {
            let settings = SamplerSettings {
                seed,
                budget: Some(budget),
                min_improvement: 0.0,
                ..SamplerSettings::default()
            };
            let result =
                run_on_landscape(&space, &rules, SamplerKind::Emcmc, kind, options, &settings)
                    .unwrap();
            assert!(result.evaluations <= budget);
            if result.best.unwrap().performance <= optimum * 1.05 {
                hits += 1;
            }
        }
        all_ok &= hits >= 9;
        per_kind.push(format!("{kind} {hits}/10"));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = all_ok && elapsed < 60.0;
    verdict(
        "oracle-optimality",
        ok,
        &format!(
            "within 5% of optimum with a 30% budget ({}), {elapsed:.1}s",
            per_kind.join(", ")
        ),
    );
}

/// Paired-seed comparison: the Metropolis sampler must beat or match
/// random in at least 70% of pairs and greedy in at least 55%.
#[test]
fn sampler_ordering() {
    let space = synthetic_grid_space("order6", 6, 4).unwrap();
    let rules = RuleSet::empty(&space);
    let base = SamplerSettings { budget: Some(150), ..SamplerSettings::default() };

    let mut vs_random = (0usize, 0usize);
    let mut vs_ga = (0usize, 0usize);
    for kind in [LandscapeKind::TwoBasinDeceptive, LandscapeKind::PairwiseInteraction] {
        let report = compare_samplers(
            &space,
            &rules,
            &SamplerKind::ALL,
            kind,
            0.0,
            &base,
            100,
            20,
            0,
        )
        .unwrap();
        let (w, t) = report.wins_at_least(SamplerKind::Emcmc, SamplerKind::Random);
        vs_random = (vs_random.0 + w, vs_random.1 + t);
        let (w, t) = report.wins_at_least(SamplerKind::Emcmc, SamplerKind::Ga);
        vs_ga = (vs_ga.0 + w, vs_ga.1 + t);
    }
    let ok_random = vs_random.0 * 100 >= vs_random.1 * 70;
    let ok_ga = vs_ga.0 * 100 >= vs_ga.1 * 55;
    verdict(
        "sampler-ordering",
        ok_random && ok_ga,
        &format!(
            "emcmc <= random in {}/{} pairs (need 70%), <= ga in {}/{} (need 55%)",
            vs_random.0, vs_random.1, vs_ga.0, vs_ga.1
        ),
    );
}

/// The acceptance rule: certainty at zero, monotone in the improvement,
/// and empirically exp(-1) at a 2% regression with sigma 50.
#[test]
fn acceptance_law() {
    let policy = AcceptancePolicy::new(50.0, Direction::Minimize);
    let exact_at_zero = policy.acceptance_probability(0.0) == 1.0;

    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for i in -200..=200 {
        let p = policy.acceptance_probability(f64::from(i) * 0.001);
        monotone &= p >= prev;
        prev = p;
    }

    // best 100, candidate 102: delta is exactly -0.02.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut accepted = 0u32;
    for _ in 0..10_000 {
        if policy.accept(&mut rng, 100.0, 102.0).unwrap().accepted {
            accepted += 1;
        }
    }
    let rate = f64::from(accepted) / 10_000.0;
    let target = (-1.0f64).exp();
    let within = (rate - target).abs() <= 0.03;

    verdict(
        "acceptance-law",
        exact_at_zero && monotone && within,
        &format!(
            "p(0)={}, monotone={monotone}, rate at delta -0.02 = {rate:.4} (e^-1 = {target:.4})",
            policy.acceptance_probability(0.0)
        ),
    );
}

/// Subset sizing follows the ceiling rules, and crossover-only evolution
/// is a fixed point at the incumbent best.
#[test]
fn evolution_arithmetic() {
    let mut sizes_ok = true;
    for (n, want_c, want_m) in [(1usize, 1usize, 1usize), (10, 5, 1), (44, 22, 3), (100, 50, 6)] {
        sizes_ok &= crossover_count(n, 0.5) == want_c;
        sizes_ok &= mutation_count(n, 0.06) == want_m;
    }

    let mut fixed_point = true;
    for seed in 0..300u64 {
        let dims = 1 + (seed as usize % 8);
        let space = synthetic_grid_space("fp", dims, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let best = space.random_configuration(&mut rng);
        let parent = space.random_configuration(&mut rng);
        let plan = plan_generation(&mut rng, dims, 1.0, 0.0);
        let child =
            propose_child(&space, &rules, &best, &parent, &plan, &mut rng, 20, 100).unwrap();
        fixed_point &= child == best;
    }

    verdict(
        "evolution-arithmetic",
        sizes_ok && fixed_point,
        &format!(
            "subset sizes exact for N in {{1,10,44,100}}, crossover-only fixed point held in 300 fuzz runs (fixed_point={fixed_point})"
        ),
    );
}

/// With rules rejecting 10% of the space, no journaled configuration may
/// violate them, and the child-repair path must stay bounded.
#[test]
fn validity_filtering() {
    // 10^3 grid; p00 == 9 is forbidden: exactly 10% of the space.
    let space = synthetic_grid_space("fuzz3", 3, 10).unwrap();
    let rules = rules_from_toml(
        "[[rules]]\nid = \"cap\"\nkind = \"range\"\nsubjects = [\"p00\"]\nmax = 8\nmessage = \"p00 capped at 8\"\n",
        &space,
    )
    .unwrap();

    let mut raw_rejected = 0u32;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        if !rules.check(&space.random_configuration(&mut rng)).valid {
            raw_rejected += 1;
        }
    }
    let bite_ok = (800..=1200).contains(&raw_rejected);

    // 10,000 sampler proposal steps, half uniform draws, half evolved
    // children, every one of which must come out valid.
    let streams = StreamFactory::new(71);
    let mut all_valid = true;
    let mut incumbent = space.default_configuration();
    for m in 0..5_000u64 {
        let mut draw_rng = streams.stream(domain::SAMPLE, 1, m);
        let drawn = random_valid(&space, &rules, &mut draw_rng, 10_000).unwrap();
        all_valid &= rules.check(&drawn).valid;

        let mut child_rng = streams.stream(domain::CHILD, 2, m);
        let mut plan_rng = streams.stream(domain::SUBSET, 2, m);
        let plan = plan_generation(&mut plan_rng, space.dimensionality(), 0.5, 0.34);
        let child =
            propose_child(&space, &rules, &incumbent, &drawn, &plan, &mut child_rng, 20, 10_000)
                .unwrap();
        all_valid &= rules.check(&child).valid;
        incumbent = child;
    }

    // A full journaled run with the same rules: re-read and re-check.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fuzz.jsonl");
    let settings = SamplerSettings {
        seed: 9,
        budget: Some(400),
        min_improvement: 0.0,
        max_generations: 100,
        ..SamplerSettings::default()
    };
    run_journaled(&path, &space, &rules, &settings, SamplerKind::Emcmc, false).unwrap();
    let contents = conex_core::read_journal(&path).unwrap();
    let journal_valid = contents.evals.iter().all(|e| rules.check(&e.config).valid);
    let journal_nonempty = contents.evals.len() > 100;

    // Unsatisfiable rules must error out after the configured number of
    // draws instead of spinning.
    let impossible = rules_from_toml(
        "[[rules]]\nid = \"never\"\nkind = \"range\"\nsubjects = [\"p00\"]\nmax = -1\nmessage = \"unsatisfiable\"\n",
        &space,
    )
    .unwrap();
    let mut reject_rng = ChaCha8Rng::seed_from_u64(1);
    let bounded = matches!(
        random_valid(&space, &impossible, &mut reject_rng, 500),
        Err(SamplerError::ValidSampleExhausted { attempts: 500 })
    );

    verdict(
        "validity-filtering",
        bite_ok && all_valid && journal_valid && journal_nonempty && bounded,
        &format!(
            "rule rejects {raw_rejected}/10000 raw draws, 10000 proposals all valid, \
             {} journal entries all valid, fallback bounded at 500 draws",
            contents.evals.len()
        ),
    );
}

/// Signature arithmetic: identity, symmetry, the worked example's term
/// frequencies and numeric means, and the strict classification boundary.
#[test]
fn similarity_contract() {
    let example = "foo(1, \"b\")\nbar(\"b\", True)\nfoo(2, \"b\")\nfoo(3, \"c\")\n";
    let sig = signature_from_trace(example).unwrap();
    let tuple_ok = sig.term_frequency("foo", "b") == Some(2.0 / 3.0)
        && sig.term_frequency("foo", "c") == Some(1.0 / 3.0)
        && sig.numeric_mean("foo", 1) == Some(2.0);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut symmetric = true;
    let mut self_identical = true;
    for _ in 0..1_000 {
        let a = signature_from_trace(&random_trace(&mut rng)).unwrap();
        let b = signature_from_trace(&random_trace(&mut rng)).unwrap();
        symmetric &= compare(&a, &b) == compare(&b, &a);
        self_identical &= compare(&a, &a).overall == 1.0;
    }

    let at = |overall: f64| SimilarityBreakdown {
        sequence: overall,
        term_sets: overall,
        term_frequencies: overall,
        numeric_args: overall,
        overall,
    };
    let strict = !at(0.77).is_similar() && at(0.7700001).is_similar();

    verdict(
        "similarity-contract",
        tuple_ok && symmetric && self_identical && strict,
        &format!(
            "worked example exact (2/3, 1/3, mean 2.0), symmetry and self-identity over \
             1000 random pairs, boundary strictly above 0.77 (tuple={tuple_ok}, strict={strict})"
        ),
    );
}

/// Gain, per-parameter sensitivity, and break-even arithmetic against
/// closed-form oracles.
#[test]
fn analysis_formulas() {
    let gain_ok = gain(100.0, 87.5).unwrap().gain_pct == 12.5;

    let b = break_even(43_200.0, 900.0, 756.0).unwrap();
    let break_even_ok = b.overhead_equivalent_runs == 48.0 && b.additional_runs == Some(300);

    // On the additive landscape each parameter's sensitivity must equal its
    // own cost term divided by the baseline of 100.
    let space = synthetic_grid_space("sens5", 5, 5).unwrap();
    let rules = RuleSet::empty(&space);
    let source = SyntheticLandscape::new(
        LandscapeKind::SeparableQuadratic,
        &space,
        LandscapeOptions { seed: 9, noise: 0.0 },
    )
    .unwrap();
    let mut best = space.default_configuration();
    for (name, v) in [("p00", 0i64), ("p01", 4), ("p02", 3), ("p03", 0), ("p04", 1)] {
        best.values.insert(name.into(), conex_core::Value::Int(v));
    }
    let y = source.coordinates(&best).unwrap();
    let mut executor = Executor::new(source);
    let report = sensitivity(&space, &rules, &mut executor, &best, Direction::Minimize).unwrap();
    let mut sens_ok = report.baseline == 100.0 && report.entries.len() == 5;
    let source = executor.source();
    for entry in &report.entries {
        let axis: usize = entry.parameter[1..].parse().unwrap();
        let expected = -source.solo_term(axis, y[axis]) / 100.0;
        sens_ok &= (entry.sensitivity - expected).abs() < 1e-6;
    }
    let sorted = report.entries.windows(2).all(|w| w[0].sensitivity >= w[1].sensitivity);

    verdict(
        "analysis-formulas",
        gain_ok && break_even_ok && sens_ok && sorted,
        &format!(
            "gain(100, 87.5) = 12.5, break_even(43200, 900, 756) = 48 runs + 300 runs, \
             5 sensitivities match solo cost terms within 1e-6 (sens={sens_ok})"
        ),
    );
}

/// Killing a run at any byte and resuming must reproduce the uninterrupted
/// run's report and journal exactly.
#[test]
fn resume_equivalence() {
    let space = synthetic_grid_space("res4", 4, 4).unwrap();
    let rules = RuleSet::empty(&space);
    let settings = SamplerSettings {
        seed: 31,
        budget: Some(60),
        min_improvement: 0.0,
        max_generations: 50,
        ..SamplerSettings::default()
    };

    let dir = tempfile::tempdir().unwrap();
    let full_path = dir.path().join("full.jsonl");
    let full =
        run_journaled(&full_path, &space, &rules, &settings, SamplerKind::Emcmc, false).unwrap();
    let full_json = serde_json::to_string(&full).unwrap();
    let full_bytes = std::fs::read(&full_path).unwrap();

    // Kill points span the journal body: after the header, through the last
    // evaluation, including cuts in the middle of a line. The final line is
    // the end-of-run marker; a journal containing it is complete, not
    // resumable, so kill points stay strictly before it.
    let header_end = full_bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
    let end_start =
        full_bytes[..full_bytes.len() - 1].iter().rposition(|&b| b == b'\n').unwrap() + 1;
    let lo = header_end as u64;
    let hi = end_start as u64 - 1;
    let mut all_match = true;
    let mut details = Vec::new();
    for i in 1..=5u64 {
        let cut = (lo + (hi - lo) * i / 6) as usize;
        let partial_path = dir.path().join(format!("killed-{i}.jsonl"));
        std::fs::write(&partial_path, &full_bytes[..cut]).unwrap();

        let resumed =
            run_journaled(&partial_path, &space, &rules, &settings, SamplerKind::Emcmc, true)
                .unwrap();
        let report_same = serde_json::to_string(&resumed).unwrap() == full_json;
        let journal_same = std::fs::read(&partial_path).unwrap() == full_bytes;
        all_match &= report_same && journal_same;
        details.push(format!(
            "cut@{cut}:{}{}",
            if report_same { "=" } else { "r!" },
            if journal_same { "" } else { "j!" },
        ));
    }

    verdict(
        "resume-equivalence",
        all_match,
        &format!("5 kill points resumed to identical report and journal ({})", details.join(" ")),
    );
}

fn run_journaled(
    path: &Path,
    space: &ConfigurationSpace,
    rules: &RuleSet,
    settings: &SamplerSettings,
    kind: SamplerKind,
    resume: bool,
) -> Result<TuneResult, Box<dyn std::error::Error>> {
    let source = SyntheticLandscape::new(
        LandscapeKind::PairwiseInteraction,
        space,
        LandscapeOptions { seed: 7, noise: 0.0 },
    )?;
    let header = JournalHeader {
        version: JOURNAL_VERSION,
        space_name: space.name().to_string(),
        sampler: kind.to_string(),
        seed: settings.seed,
        space_hash: digest(space),
        rules_hash: digest(rules),
        settings_hash: digest(settings),
        source_hash: digest(&source.fingerprint()),
    };
    let mut executor = Executor::new(source);
    if resume {
        let (contents, writer) = conex_core::open_resume(path, &header)?;
        executor = executor.with_journal(writer);
        executor.preload(contents.evals)?;
    } else {
        executor = executor.with_journal(JournalWriter::create(path, &header)?);
    }
    let tuner = Tuner::new(space, rules, settings.clone())?;
    Ok(tuner.run(kind, &mut executor, &mut |_| {})?)
}

fn random_trace(rng: &mut ChaCha8Rng) -> String {
    use rand::Rng;
    let calls = ["read", "write", "open", "close", "poll", "seek"];
    let terms = ["alpha", "beta", "gamma", "delta"];
    let lines = rng.gen_range(0..12);
    let mut out = String::new();
    for _ in 0..lines {
        let name = calls[rng.gen_range(0..calls.len())];
        let mut args = Vec::new();
        for _ in 0..rng.gen_range(0..4usize) {
            match rng.gen_range(0..3u8) {
                0 => args.push(format!("{}", rng.gen_range(0..500))),
                1 => args.push(format!("\"{}\"", terms[rng.gen_range(0..terms.len())])),
                _ => args.push(if rng.gen() { "true".into() } else { "false".into() }),
            }
        }
        out.push_str(&format!("{name}({})\n", args.join(", ")));
    }
    out
}
