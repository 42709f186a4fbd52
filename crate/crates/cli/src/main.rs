//! conex: black-box configuration tuning from the command line.
//!
//! Exit codes: 0 success; 2 usage or input error; 3 evaluator abort;
//! 4 seed (default) configuration rejected by the rules. `validate` uses
//! 1 for "well-formed but invalid". Reports go to stdout, diagnostics and
//! progress to stderr.

mod report;
mod source;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use conex_core::{
    break_even, compare, compare_samplers, digest, evaluate_topk, load_rules, load_signature,
    load_space, open_resume, read_journal, sensitivity, Configuration, ConfigurationSpace,
    Direction, EvalStatus, Executor, JournalHeader, JournalWriter, LandscapeKind, PerformanceSource,
    RuleSet, SamplerError, SamplerKind, SamplerSettings, SimilarityBreakdown, Tuner,
    JOURNAL_VERSION,
};
use report::Format;
use source::EvaluatorArgs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Default journal directory when `--journal` is not given.
const JOURNAL_DIR_VAR: &str = "CONEX_JOURNAL_DIR";

#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

/// Bad flags, unreadable inputs, mismatched journals: exit 2.
pub fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

/// The evaluator itself failed: exit 3.
pub fn evaluator_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: e.into() }
}

fn sampler_failure(e: SamplerError) -> Failure {
    let code = match &e {
        SamplerError::Settings(_) | SamplerError::ValidSampleExhausted { .. } => 2,
        SamplerError::NonPositivePerformance { .. } | SamplerError::Executor(_) => 3,
    };
    Failure { code, error: e.into() }
}

type CliResult = Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "conex", version, about = "Black-box configuration auto-tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search a configuration space for better-performing settings.
    Tune(TuneArgs),
    /// Check one configuration against a rules file.
    Validate(ValidateArgs),
    /// Describe a configuration space.
    SpaceInfo(SpaceInfoArgs),
    /// Re-score a past run's best configurations on another evaluator.
    EvalTopk(EvalTopkArgs),
    /// Measure each tuned parameter's share of the improvement.
    Sensitivity(SensitivityArgs),
    /// Compare workload traces for tuning-reuse decisions.
    Similar(SimilarArgs),
    /// Runs needed before tuning overhead pays for itself.
    Breakeven(BreakevenArgs),
    /// Paired sampler comparison on the built-in landscapes.
    BenchSynth(BenchSynthArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Seed for every random decision; equal seeds reproduce runs bit for
    /// bit.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generation cap.
    #[arg(long, default_value_t = 30)]
    generations: u64,
    /// Proposals per generation; default 4x the space dimensionality.
    #[arg(long)]
    population: Option<usize>,
    /// Cap on evaluator runs past the seed (cache hits are free).
    #[arg(long)]
    budget: Option<u64>,
    /// minimize or maximize the measured number.
    #[arg(long, default_value = "minimize")]
    direction: Direction,
    /// Steepness of the acceptance law (emcmc).
    #[arg(long, default_value_t = 50.0)]
    sigma: f64,
    /// Relative improvement a generation must reach; two consecutive misses
    /// stop the run. 0 disables stalling.
    #[arg(long, default_value_t = 0.001)]
    min_improvement: f64,
    /// Fraction of parameters crossed over from the incumbent.
    #[arg(long, default_value_t = 0.5)]
    crossover_fraction: f64,
    /// Fraction of parameters re-randomized per child.
    #[arg(long, default_value_t = 0.06)]
    mutation_fraction: f64,
    /// Best configurations kept in the report.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

impl SearchArgs {
    fn settings(&self) -> SamplerSettings {
        SamplerSettings {
            seed: self.seed,
            population: self.population,
            max_generations: self.generations,
            min_improvement: self.min_improvement,
            crossover_fraction: self.crossover_fraction,
            mutation_fraction: self.mutation_fraction,
            sigma: self.sigma,
            direction: self.direction,
            budget: self.budget,
            top_k: self.top_k,
            ..SamplerSettings::default()
        }
    }
}

#[derive(Args)]
struct TuneArgs {
    /// Space definition (TOML).
    #[arg(long)]
    space: PathBuf,
    /// Validity rules (TOML).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// emcmc, ga or random.
    #[arg(long)]
    sampler: SamplerKind,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    evaluator: EvaluatorArgs,
    /// Journal file; an existing one is resumed. Defaults to
    /// $CONEX_JOURNAL_DIR/<space>-<sampler>-seed<seed>.jsonl when that
    /// variable is set, otherwise no journal is written.
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Parallel evaluator invocations.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// table or records.
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    rules: PathBuf,
    /// Configuration to check: properties (name=value lines) or flat JSON,
    /// chosen by extension.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct SpaceInfoArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct EvalTopkArgs {
    #[arg(long)]
    space: PathBuf,
    /// Journal of the tuning run whose ranking is re-scored.
    #[arg(long)]
    journal: PathBuf,
    /// Ranks to carry over.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value = "minimize")]
    direction: Direction,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    evaluator: EvaluatorArgs,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Tuned configuration file (properties or JSON).
    #[arg(long, conflicts_with = "journal", required_unless_present = "journal")]
    config: Option<PathBuf>,
    /// Take the tuned configuration from this journal's best entry.
    #[arg(long)]
    journal: Option<PathBuf>,
    #[arg(long, default_value = "minimize")]
    direction: Direction,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    evaluator: EvaluatorArgs,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct SimilarArgs {
    /// Two or more trace files, one call per line.
    #[arg(required = true, num_args = 2..)]
    traces: Vec<PathBuf>,
    /// Jobs scoring strictly above this are similar.
    #[arg(long, default_value_t = conex_core::SIMILARITY_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BreakevenArgs {
    /// Total tuning overhead in seconds.
    #[arg(long)]
    overhead: f64,
    /// Runtime of the default configuration in seconds.
    #[arg(long)]
    default_runtime: f64,
    /// Runtime of the tuned configuration in seconds.
    #[arg(long)]
    optimized_runtime: f64,
    #[arg(long, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct BenchSynthArgs {
    /// Landscapes to bench; default all four.
    #[arg(long)]
    landscape: Vec<LandscapeKind>,
    /// Synthetic grid dimensionality.
    #[arg(long, default_value_t = 6)]
    dims: usize,
    /// Candidates per grid parameter.
    #[arg(long, default_value_t = 4)]
    candidates: usize,
    /// Space definition to bench on instead of the synthetic grid.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, default_value_t = 150)]
    budget: u64,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    /// Trial t uses seed seed-base + t.
    #[arg(long, default_value_t = 100)]
    seed_base: u64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 30)]
    generations: u64,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value = "minimize")]
    direction: Direction,
    #[arg(long, default_value = "table")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Tune(args) => tune(args),
        Command::Validate(args) => validate(args),
        Command::SpaceInfo(args) => space_info(args),
        Command::EvalTopk(args) => eval_topk(args),
        Command::Sensitivity(args) => run_sensitivity(args),
        Command::Similar(args) => similar(args),
        Command::Breakeven(args) => breakeven(args),
        Command::BenchSynth(args) => bench_synth(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_space_and_rules(
    space_path: &Path,
    rules_path: Option<&Path>,
) -> Result<(ConfigurationSpace, RuleSet), Failure> {
    let space = load_space(space_path).map_err(usage)?;
    let rules = match rules_path {
        Some(path) => load_rules(path, &space).map_err(usage)?,
        None => RuleSet::empty(&space),
    };
    Ok((space, rules))
}

/// Reads a configuration file, choosing the parser by extension.
fn load_config(path: &Path, space: &ConfigurationSpace) -> Result<Configuration, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        conex_core::executor::parse_json(&text, space)
    } else {
        conex_core::executor::parse_properties(&text, space)
    };
    parsed.map_err(usage)
}

fn journal_path(args: &TuneArgs, space: &ConfigurationSpace) -> Result<Option<PathBuf>, Failure> {
    if let Some(path) = &args.journal {
        return Ok(Some(path.clone()));
    }
    match std::env::var_os(JOURNAL_DIR_VAR) {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            std::fs::create_dir_all(&dir)
                .map_err(|e| usage(anyhow!("creating {}: {e}", dir.display())))?;
            let name = format!(
                "{}-{}-seed{}.jsonl",
                space.name(),
                args.sampler,
                args.search.seed
            );
            Ok(Some(dir.join(name)))
        }
        None => Ok(None),
    }
}

fn tune(args: TuneArgs) -> CliResult {
    let (space, rules) = load_space_and_rules(&args.space, args.rules.as_deref())?;
    let settings = args.search.settings();

    // The search grows from the default configuration; rules that reject it
    // would make every journal start from an unusable seed.
    let seed_report = rules.check(&space.default_configuration());
    if !seed_report.valid {
        for v in &seed_report.violations {
            eprintln!("seed configuration violates {}: {}", v.rule_id, v.message);
        }
        return Err(Failure {
            code: 4,
            error: anyhow!("the space's default configuration fails the rules"),
        });
    }

    let source = args.evaluator.build(&space, settings.seed)?;
    let header = JournalHeader {
        version: JOURNAL_VERSION,
        space_name: space.name().to_string(),
        sampler: args.sampler.to_string(),
        seed: settings.seed,
        space_hash: digest(&space),
        rules_hash: digest(&rules),
        settings_hash: digest(&settings),
        source_hash: digest(&source.fingerprint()),
    };

    let mut executor = Executor::new(source)
        .with_policy(args.evaluator.failure_policy()?)
        .with_jobs(args.jobs);

    if let Some(path) = journal_path(&args, &space)? {
        if path.exists() {
            let contents = read_journal(&path).map_err(usage)?;
            if contents.completed() {
                if contents.header != header {
                    return Err(usage(anyhow!(
                        "{} belongs to a different run; refusing to report it",
                        path.display()
                    )));
                }
                let end = contents.end.expect("completed journal has an end line");
                println!(
                    "{} is already complete: best {}, {} evaluator runs, termination {}",
                    path.display(),
                    end.best_performance.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
                    end.evaluations,
                    end.termination,
                );
                return Ok(0);
            }
            let (contents, writer) = open_resume(&path, &header).map_err(usage)?;
            eprintln!(
                "resuming {}: replaying {} recorded evaluations",
                path.display(),
                contents.evals.len()
            );
            executor = executor.with_journal(writer);
            executor.preload(contents.evals).map_err(evaluator_failure)?;
        } else {
            executor = executor.with_journal(JournalWriter::create(&path, &header).map_err(usage)?);
            eprintln!("journaling to {}", path.display());
        }
    }

    let tuner = Tuner::new(&space, &rules, settings).map_err(sampler_failure)?;
    let mut progress = |g: &conex_core::GenerationSummary| {
        eprintln!(
            "gen {}: {} proposed, {} new runs, {} cached, {} accepted, best {}",
            g.generation,
            g.population.len(),
            g.evaluated,
            g.cache_hits,
            g.accepted.len(),
            g.best_performance.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
        );
    };
    let result = tuner.run(args.sampler, &mut executor, &mut progress).map_err(sampler_failure)?;

    report::print_tune(&result, &space, args.search.direction, args.format);
    Ok(0)
}

fn validate(args: ValidateArgs) -> CliResult {
    let (space, rules) = load_space_and_rules(&args.space, Some(&args.rules))?;
    let config = load_config(&args.config, &space)?;
    let report = rules.check(&config);
    report::print_validity(&report, args.format);
    Ok(if report.valid { 0 } else { 1 })
}

fn space_info(args: SpaceInfoArgs) -> CliResult {
    let space = load_space(&args.space).map_err(usage)?;
    report::print_space_info(&space, args.format);
    Ok(0)
}

/// Distinct successfully measured journal configurations, best first.
fn ranking_from_journal(
    path: &Path,
    space: &ConfigurationSpace,
    direction: Direction,
) -> Result<Vec<(Configuration, f64)>, Failure> {
    let contents = read_journal(path).map_err(usage)?;
    if contents.header.space_hash != digest(space) {
        return Err(usage(anyhow!(
            "journal {} was recorded on a different space than `{}`",
            path.display(),
            space.name()
        )));
    }
    let mut ranked: Vec<(Configuration, f64)> = contents
        .evals
        .into_iter()
        .filter(|r| r.status == EvalStatus::Ok)
        .filter_map(|r| r.performance.map(|p| (r.config, p)))
        .collect();
    ranked.sort_by(|a, b| match direction {
        Direction::Minimize => a.1.total_cmp(&b.1),
        Direction::Maximize => b.1.total_cmp(&a.1),
    });
    let mut seen = std::collections::HashSet::new();
    ranked.retain(|(c, _)| seen.insert(c.canonical_key()));
    if ranked.is_empty() {
        return Err(usage(anyhow!("journal {} holds no measured configurations", path.display())));
    }
    Ok(ranked)
}

fn eval_topk(args: EvalTopkArgs) -> CliResult {
    let space = load_space(&args.space).map_err(usage)?;
    let ranked = ranking_from_journal(&args.journal, &space, args.direction)?;
    let configs: Vec<Configuration> =
        ranked.into_iter().take(args.top_k).map(|(c, _)| c).collect();

    let source = args.evaluator.build(&space, args.seed)?;
    let mut executor = Executor::new(source)
        .with_policy(args.evaluator.failure_policy()?)
        .with_jobs(args.jobs);
    let report = evaluate_topk(&mut executor, &space.default_configuration(), &configs, args.direction)
        .map_err(evaluator_failure)?;
    report::print_topk(&report, &space, args.format);
    Ok(0)
}

fn run_sensitivity(args: SensitivityArgs) -> CliResult {
    let (space, rules) = load_space_and_rules(&args.space, args.rules.as_deref())?;
    let best = match (&args.config, &args.journal) {
        (Some(path), _) => load_config(path, &space)?,
        (None, Some(path)) => {
            ranking_from_journal(path, &space, args.direction)?.remove(0).0
        }
        (None, None) => unreachable!("clap requires config or journal"),
    };
    let source = args.evaluator.build(&space, args.seed)?;
    let mut executor = Executor::new(source)
        .with_policy(args.evaluator.failure_policy()?)
        .with_jobs(args.jobs);
    let report = sensitivity(&space, &rules, &mut executor, &best, args.direction)
        .map_err(evaluator_failure)?;
    report::print_sensitivity(&report, args.format);
    Ok(0)
}

fn similar(args: SimilarArgs) -> CliResult {
    let mut names = Vec::with_capacity(args.traces.len());
    let mut signatures = Vec::with_capacity(args.traces.len());
    for path in &args.traces {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        names.push(name);
        signatures.push(load_signature(path).map_err(usage)?);
    }
    let n = signatures.len();
    let mut matrix: Vec<Vec<SimilarityBreakdown>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(compare(&signatures[i], &signatures[j]));
        }
        matrix.push(row);
    }
    report::print_similarity(&names, &matrix, args.threshold, args.format);
    Ok(0)
}

fn breakeven(args: BreakevenArgs) -> CliResult {
    let report = break_even(args.overhead, args.default_runtime, args.optimized_runtime)
        .map_err(usage)?;
    report::print_break_even(
        &report,
        args.overhead,
        args.default_runtime,
        args.optimized_runtime,
        args.format,
    );
    Ok(0)
}

fn bench_synth(args: BenchSynthArgs) -> CliResult {
    let space = match &args.space {
        Some(path) => load_space(path).map_err(usage)?,
        None => conex_core::synthetic_grid_space("bench-grid", args.dims, args.candidates)
            .map_err(usage)?,
    };
    let rules = RuleSet::empty(&space);
    let landscapes = if args.landscape.is_empty() {
        LandscapeKind::ALL.to_vec()
    } else {
        args.landscape.clone()
    };
    let base = SamplerSettings {
        population: args.population,
        max_generations: args.generations,
        budget: Some(args.budget),
        direction: args.direction,
        ..SamplerSettings::default()
    };
    for (i, landscape) in landscapes.iter().enumerate() {
        let report = compare_samplers(
            &space,
            &rules,
            &SamplerKind::ALL,
            *landscape,
            args.noise,
            &base,
            args.seed_base,
            args.trials,
            if args.trials == 1 { 1_000_000 } else { 0 },
        )
        .map_err(sampler_failure)?;
        if i > 0 && args.format == Format::Table {
            println!();
        }
        report::print_comparison(&report, args.format);
    }
    Ok(0)
}
