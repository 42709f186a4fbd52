//! Report rendering: human tables on stdout, or flat `kind key=value`
//! records under `--format records`. Both carry the same data.

use conex_core::{
    BreakEven, ComparisonReport, Configuration, ConfigurationSpace, Direction, SamplerKind,
    SensitivityReport, SimilarityBreakdown, TopkReport, TuneResult, ValidityReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Records,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(Format::Table),
            "records" => Ok(Format::Records),
            other => Err(format!("unknown format `{other}` (table, records)")),
        }
    }
}

/// A `key=value` list with shell-friendly quoting: values stay bare unless
/// they contain whitespace or quotes, in which case they are JSON-quoted.
pub fn record(kind: &str, fields: &[(&str, String)]) -> String {
    let mut out = String::from(kind);
    for (key, value) in fields {
        out.push(' ');
        out.push_str(key);
        out.push('=');
        let needs_quoting = value.is_empty() || value.chars().any(char::is_whitespace);
        if needs_quoting {
            out.push_str(&serde_json::to_string(value).expect("strings serialize"));
        } else {
            out.push_str(value);
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

/// Four decimals with trailing zeros trimmed; "-" for missing. Tables only,
/// records keep full precision.
fn compact(v: Option<f64>) -> String {
    let Some(v) = v else { return "-".into() };
    let mut s = format!("{v:.4}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Compact JSON of the assignments; the machine-readable form of a config.
pub fn config_json(config: &Configuration) -> String {
    serde_json::to_string(&config.values).expect("configurations serialize")
}

/// `name=value` pairs for parameters that differ from the space default;
/// "(default)" when none do. The readable form of a config.
pub fn config_diff(config: &Configuration, space: &ConfigurationSpace) -> String {
    let diffs = config.diff_from_default(space);
    if diffs.is_empty() {
        return "(default)".into();
    }
    diffs
        .iter()
        .map(|name| format!("{name}={}", config.get(name).expect("diff names are assigned")))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Signed percent improvement of `best` over `baseline`, positive when
/// better in `direction`.
pub fn signed_gain_pct(direction: Direction, baseline: f64, best: f64) -> f64 {
    match direction {
        Direction::Minimize => (baseline - best) / baseline * 100.0,
        Direction::Maximize => (best - baseline) / baseline * 100.0,
    }
}

pub fn print_tune(
    result: &TuneResult,
    space: &ConfigurationSpace,
    direction: Direction,
    format: Format,
) {
    let gain_pct = match (result.baseline, result.best.as_ref()) {
        (Some(b), Some(e)) => Some(signed_gain_pct(direction, b, e.performance)),
        _ => None,
    };
    match format {
        Format::Records => {
            let mut fields = vec![
                ("space", space.name().to_string()),
                ("sampler", result.sampler.to_string()),
                ("seed", result.seed.to_string()),
                ("direction", direction.to_string()),
                ("baseline", opt(result.baseline)),
                ("best", opt(result.best.as_ref().map(|e| e.performance))),
                ("gain_pct", opt(gain_pct)),
                ("evaluations", result.evaluations.to_string()),
                ("generations", result.generations.len().to_string()),
                ("termination", result.termination.to_string()),
            ];
            if let Some(best) = &result.best {
                fields.push(("best_config", config_json(&best.config)));
            }
            println!("{}", record("run", &fields));
            for (i, entry) in result.top.iter().enumerate() {
                println!(
                    "{}",
                    record(
                        "top",
                        &[
                            ("rank", (i + 1).to_string()),
                            ("performance", entry.performance.to_string()),
                            ("generation", entry.generation.to_string()),
                            ("config", config_json(&entry.config)),
                        ],
                    )
                );
            }
            for g in &result.generations {
                println!(
                    "{}",
                    record(
                        "gen",
                        &[
                            ("generation", g.generation.to_string()),
                            ("population", g.population.len().to_string()),
                            ("accepted", g.accepted.len().to_string()),
                            ("evaluated", g.evaluated.to_string()),
                            ("cache_hits", g.cache_hits.to_string()),
                            ("best", opt(g.best_performance)),
                            ("improvement", opt(g.improvement)),
                            ("improvement_vs_seed", opt(g.improvement_vs_seed)),
                        ],
                    )
                );
            }
        }
        Format::Table => {
            println!(
                "space {}: {} parameters, sampler {}, seed {}, direction {}",
                space.name(),
                space.dimensionality(),
                result.sampler,
                result.seed,
                direction,
            );
            match (result.baseline, result.best.as_ref()) {
                (baseline, Some(best)) => {
                    if let Some(b) = baseline {
                        println!("baseline {}", compact(Some(b)));
                    }
                    let perf = compact(Some(best.performance));
                    match gain_pct {
                        Some(g) => println!("best     {perf} (gain {g:.2}%)"),
                        None => println!("best     {perf}"),
                    }
                    println!("  {}", config_diff(&best.config, space));
                }
                _ => println!("no measurable configuration found"),
            }
            println!(
                "termination {}: {} generations, {} evaluator runs",
                result.termination,
                result.generations.len(),
                result.evaluations,
            );
            if !result.top.is_empty() {
                println!("\ntop {}", result.top.len());
                println!("  {:>4}  {:>14}  {:>8}  configuration", "rank", "performance", "gain%");
                for (i, entry) in result.top.iter().enumerate() {
                    let g = result
                        .baseline
                        .map(|b| signed_gain_pct(direction, b, entry.performance));
                    println!(
                        "  {:>4}  {:>14}  {:>8}  {}",
                        i + 1,
                        compact(Some(entry.performance)),
                        g.map(|g| format!("{g:.2}")).unwrap_or_else(|| "-".into()),
                        config_diff(&entry.config, space),
                    );
                }
            }
            if !result.generations.is_empty() {
                println!("\ngenerations");
                println!(
                    "  {:>4}  {:>9}  {:>6}  {:>8}  {:>14}  improvement",
                    "gen", "evaluated", "cached", "accepted", "best"
                );
                for g in &result.generations {
                    println!(
                        "  {:>4}  {:>9}  {:>6}  {:>8}  {:>14}  {}",
                        g.generation,
                        g.evaluated,
                        g.cache_hits,
                        g.accepted.len(),
                        compact(g.best_performance),
                        compact(g.improvement),
                    );
                }
            }
        }
    }
}

pub fn print_validity(report: &ValidityReport, format: Format) {
    match format {
        Format::Records => {
            println!("{}", record("validity", &[("valid", report.valid.to_string())]));
            for v in &report.violations {
                println!(
                    "{}",
                    record(
                        "violation",
                        &[("rule", v.rule_id.clone()), ("message", v.message.clone())],
                    )
                );
            }
        }
        Format::Table => {
            if report.valid {
                println!("valid");
            } else {
                println!("invalid: {} violation(s)", report.violations.len());
                for v in &report.violations {
                    println!("  {}: {}", v.rule_id, v.message);
                }
            }
        }
    }
}

pub fn print_space_info(space: &ConfigurationSpace, format: Format) {
    let fixed = space.parameters().iter().filter(|p| !p.relevant).count();
    match format {
        Format::Records => {
            println!(
                "{}",
                record(
                    "space",
                    &[
                        ("name", space.name().to_string()),
                        ("parameters", space.dimensionality().to_string()),
                        ("fixed", fixed.to_string()),
                        ("size", space.space_size().to_string()),
                    ],
                )
            );
            for p in space.parameters() {
                let candidates =
                    p.candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("|");
                println!(
                    "{}",
                    record(
                        "param",
                        &[
                            ("name", p.name.clone()),
                            ("kind", p.kind.to_string()),
                            ("default", p.default.to_string()),
                            ("candidates", candidates),
                            ("relevant", p.relevant.to_string()),
                        ],
                    )
                );
            }
        }
        Format::Table => {
            println!(
                "space {}: {} tunable parameters ({} fixed), {} configurations",
                space.name(),
                space.dimensionality(),
                fixed,
                space.space_size(),
            );
            let width =
                space.parameters().iter().map(|p| p.name.len()).max().unwrap_or(4).max(4);
            println!("  {:<width$}  {:<11}  {:<14}  candidates", "name", "kind", "default");
            for p in space.parameters() {
                let candidates =
                    p.candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
                let mark = if p.relevant { "" } else { " (fixed)" };
                println!(
                    "  {:<width$}  {:<11}  {:<14}  {}{}",
                    p.name,
                    p.kind.to_string(),
                    p.default.to_string(),
                    candidates,
                    mark,
                );
            }
        }
    }
}

pub fn print_topk(report: &TopkReport, space: &ConfigurationSpace, format: Format) {
    match format {
        Format::Records => {
            println!("{}", record("baseline", &[("performance", report.baseline.to_string())]));
            for row in &report.rows {
                println!(
                    "{}",
                    record(
                        "row",
                        &[
                            ("rank", row.rank.to_string()),
                            ("performance", opt(row.performance)),
                            ("gain_pct", opt(row.gain_pct)),
                            ("config", config_json(&row.config)),
                        ],
                    )
                );
            }
            for point in &report.prefix_curve {
                println!(
                    "{}",
                    record(
                        "prefix",
                        &[
                            ("k", point.k.to_string()),
                            ("best_gain_pct", point.best_gain_pct.to_string()),
                            ("best_rank", point.best_rank.to_string()),
                        ],
                    )
                );
            }
        }
        Format::Table => {
            println!(
                "baseline {} (default configuration on this evaluator)",
                compact(Some(report.baseline))
            );
            println!("  {:>4}  {:>14}  {:>8}  configuration", "rank", "performance", "gain%");
            for row in &report.rows {
                println!(
                    "  {:>4}  {:>14}  {:>8}  {}",
                    row.rank,
                    compact(row.performance),
                    row.gain_pct.map(|g| format!("{g:.2}")).unwrap_or_else(|| "-".into()),
                    config_diff(&row.config, space),
                );
            }
            println!("\nbest gain within first k ranks");
            println!("  {:>4}  {:>10}  at rank", "k", "gain%");
            for point in &report.prefix_curve {
                println!(
                    "  {:>4}  {:>10.2}  {}",
                    point.k, point.best_gain_pct, point.best_rank
                );
            }
        }
    }
}

pub fn print_sensitivity(report: &SensitivityReport, format: Format) {
    match format {
        Format::Records => {
            println!(
                "{}",
                record(
                    "summary",
                    &[
                        ("baseline", report.baseline.to_string()),
                        ("best", report.best_performance.to_string()),
                        ("best_delta", report.best_delta.to_string()),
                    ],
                )
            );
            for e in &report.entries {
                println!(
                    "{}",
                    record(
                        "sensitivity",
                        &[
                            ("parameter", e.parameter.clone()),
                            ("sensitivity", e.sensitivity.to_string()),
                            ("reset_performance", e.reset_performance.to_string()),
                        ],
                    )
                );
            }
            for s in &report.skipped {
                println!(
                    "{}",
                    record(
                        "skipped",
                        &[("parameter", s.parameter.clone()), ("reason", s.reason.clone())],
                    )
                );
            }
        }
        Format::Table => {
            println!(
                "baseline {}, best {} (delta {:.4})",
                compact(Some(report.baseline)),
                compact(Some(report.best_performance)),
                report.best_delta
            );
            let width =
                report.entries.iter().map(|e| e.parameter.len()).max().unwrap_or(9).max(9);
            println!("  {:<width$}  {:>12}  reset performance", "parameter", "sensitivity");
            for e in &report.entries {
                println!(
                    "  {:<width$}  {:>12.6}  {}",
                    e.parameter,
                    e.sensitivity,
                    compact(Some(e.reset_performance))
                );
            }
            for s in &report.skipped {
                println!("  {} skipped: {}", s.parameter, s.reason);
            }
        }
    }
}

pub fn print_break_even(
    report: &BreakEven,
    overhead: f64,
    default_runtime: f64,
    optimized_runtime: f64,
    format: Format,
) {
    let never = "never".to_string();
    match format {
        Format::Records => {
            println!(
                "{}",
                record(
                    "breakeven",
                    &[
                        ("overhead_secs", overhead.to_string()),
                        ("default_runtime_secs", default_runtime.to_string()),
                        ("optimized_runtime_secs", optimized_runtime.to_string()),
                        (
                            "overhead_equivalent_runs",
                            report.overhead_equivalent_runs.to_string(),
                        ),
                        (
                            "additional_runs",
                            report.additional_runs.map(|r| r.to_string()).unwrap_or(never),
                        ),
                        (
                            "total_runs",
                            report
                                .total_runs
                                .map(|r| r.to_string())
                                .unwrap_or_else(|| "never".into()),
                        ),
                    ],
                )
            );
        }
        Format::Table => {
            println!(
                "overhead {overhead} s, default run {default_runtime} s, optimized run {optimized_runtime} s \
                 ({} s saved per run)",
                default_runtime - optimized_runtime,
            );
            println!("overhead equivalent      {:.2} default runs", report.overhead_equivalent_runs);
            match (report.additional_runs, report.total_runs) {
                (Some(add), Some(total)) => {
                    println!("additional runs to amortize  {add}");
                    println!("total runs to break even     {total}");
                }
                _ => println!("never breaks even: the optimized run is not faster"),
            }
        }
    }
}

pub fn print_similarity(
    names: &[String],
    matrix: &[Vec<SimilarityBreakdown>],
    threshold: f64,
    format: Format,
) {
    match format {
        Format::Records => {
            for i in 0..names.len() {
                for j in (i + 1)..names.len() {
                    let b = &matrix[i][j];
                    println!(
                        "{}",
                        record(
                            "pair",
                            &[
                                ("a", names[i].clone()),
                                ("b", names[j].clone()),
                                ("sequence", b.sequence.to_string()),
                                ("term_sets", b.term_sets.to_string()),
                                ("term_frequencies", b.term_frequencies.to_string()),
                                ("numeric_args", b.numeric_args.to_string()),
                                ("overall", b.overall.to_string()),
                                ("similar", (b.overall > threshold).to_string()),
                            ],
                        )
                    );
                }
            }
        }
        Format::Table => {
            let width = names.iter().map(|n| n.len()).max().unwrap_or(1).max(3);
            println!("pairwise similarity ({} jobs, threshold {threshold})", names.len());
            let mut head = format!("  {:<width$} ", "");
            for j in 0..names.len() {
                head.push_str(&format!("  {:>6}", j + 1));
            }
            println!("{head}");
            for (i, name) in names.iter().enumerate() {
                let mut line = format!("  {name:<width$} ");
                for j in 0..names.len() {
                    line.push_str(&format!("  {:>6.3}", matrix[i][j].overall));
                }
                println!("{line} ({})", i + 1);
            }
            println!("\nsimilar sets (overall strictly above {threshold})");
            for (i, name) in names.iter().enumerate() {
                let similar: Vec<&str> = (0..names.len())
                    .filter(|&j| j != i && matrix[i][j].overall > threshold)
                    .map(|j| names[j].as_str())
                    .collect();
                if similar.is_empty() {
                    println!("  {name}: (none)");
                } else {
                    println!("  {name}: {}", similar.join(", "));
                }
            }
        }
    }
}

pub fn print_comparison(report: &ComparisonReport, format: Format) {
    let pairs = [
        (SamplerKind::Emcmc, SamplerKind::Random),
        (SamplerKind::Emcmc, SamplerKind::Ga),
        (SamplerKind::Ga, SamplerKind::Random),
    ];
    match format {
        Format::Records => {
            for score in &report.scores {
                println!(
                    "{}",
                    record(
                        "score",
                        &[
                            ("landscape", report.landscape.to_string()),
                            ("sampler", score.sampler.to_string()),
                            ("trials", score.best_per_seed.len().to_string()),
                            ("mean_best", opt(score.mean_best)),
                            ("mean_evaluations", score.mean_evaluations.to_string()),
                        ],
                    )
                );
                for (seed, best) in report.seeds.iter().zip(&score.best_per_seed) {
                    println!(
                        "{}",
                        record(
                            "trial",
                            &[
                                ("landscape", report.landscape.to_string()),
                                ("sampler", score.sampler.to_string()),
                                ("seed", seed.to_string()),
                                ("best", opt(*best)),
                            ],
                        )
                    );
                }
            }
            for (a, b) in pairs {
                let (wins, total) = report.wins_at_least(a, b);
                if total > 0 {
                    println!(
                        "{}",
                        record(
                            "wins",
                            &[
                                ("landscape", report.landscape.to_string()),
                                ("a", a.to_string()),
                                ("b", b.to_string()),
                                ("at_least_as_good", wins.to_string()),
                                ("total", total.to_string()),
                            ],
                        )
                    );
                }
            }
        }
        Format::Table => {
            println!(
                "landscape {} (noise {}, budget {}, {} trials, {})",
                report.landscape,
                report.noise,
                report.budget.map(|b| b.to_string()).unwrap_or_else(|| "unlimited".into()),
                report.seeds.len(),
                report.direction,
            );
            if let Some(opt_perf) = report.optimum {
                println!("  true optimum {opt_perf}");
            }
            println!("  {:<7}  {:>14}  mean evaluator runs", "sampler", "mean best");
            for score in &report.scores {
                println!(
                    "  {:<7}  {:>14}  {:.1}",
                    score.sampler.to_string(),
                    compact(score.mean_best),
                    score.mean_evaluations,
                );
            }
            for (a, b) in pairs {
                let (wins, total) = report.wins_at_least(a, b);
                if total > 0 {
                    println!("  {a} at least as good as {b} in {wins}/{total} trials");
                }
            }
        }
    }
}
