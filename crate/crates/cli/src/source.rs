//! Evaluator construction shared by the measuring subcommands.

use crate::{usage, Failure};
use anyhow::anyhow;
use clap::Args;
use conex_core::{
    CommandEvaluator, CommandSettings, ConfigurationSpace, ExecutorError, FailurePolicy,
    LandscapeKind, LandscapeOptions, PerformanceSource, RenderMode, SourceOutcome,
    SyntheticLandscape,
};
use std::time::Duration;

/// Flags selecting and configuring the performance source. Exactly one of
/// `--command` and `--synthetic` must be given.
#[derive(Debug, Args)]
pub struct EvaluatorArgs {
    /// Shell command template that measures one configuration; performance
    /// is read from stdout. File render modes substitute {config_file}.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub command: Option<String>,

    /// Built-in landscape: separable_quadratic, pairwise_interaction,
    /// two_basin_deceptive or plateau_noise.
    #[arg(long)]
    pub synthetic: Option<LandscapeKind>,

    /// How the configuration reaches the command: env, properties or json.
    #[arg(long, default_value = "properties")]
    pub render: RenderMode,

    /// Regex whose first capture group is the performance number. Default:
    /// last float on the last non-empty stdout line.
    #[arg(long)]
    pub perf_pattern: Option<String>,

    /// Command invocations per configuration; the mean is recorded.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,

    /// Per-invocation timeout in seconds.
    #[arg(long)]
    pub timeout_secs: Option<f64>,

    /// Noise amplitude (plateau_noise landscape only).
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,

    /// Landscape instance seed; defaults to --seed.
    #[arg(long)]
    pub landscape_seed: Option<u64>,

    /// What a failed or timed-out run means: skip, abort or penalize.
    #[arg(long, default_value = "skip")]
    pub on_failure: String,

    /// Performance charged to failed runs under --on-failure penalize.
    #[arg(long)]
    pub penalty: Option<f64>,
}

/// Either kind of evaluator behind one type, so the tuner glue is written
/// once.
pub enum Source {
    Command(CommandEvaluator),
    Landscape(SyntheticLandscape),
}

impl PerformanceSource for Source {
    fn run(
        &self,
        config: &conex_core::Configuration,
    ) -> Result<SourceOutcome, ExecutorError> {
        match self {
            Source::Command(c) => c.run(config),
            Source::Landscape(l) => l.run(config),
        }
    }

    fn fingerprint(&self) -> String {
        match self {
            Source::Command(c) => c.fingerprint(),
            Source::Landscape(l) => l.fingerprint(),
        }
    }
}

impl EvaluatorArgs {
    pub fn build(&self, space: &ConfigurationSpace, seed: u64) -> Result<Source, Failure> {
        if let Some(kind) = self.synthetic {
            let options = LandscapeOptions {
                seed: self.landscape_seed.unwrap_or(seed),
                noise: self.noise,
            };
            return Ok(Source::Landscape(
                SyntheticLandscape::new(kind, space, options).map_err(usage)?,
            ));
        }
        let template = self.command.clone().expect("clap enforces command xor synthetic");
        let mut settings = CommandSettings::new(template);
        settings.render = self.render;
        settings.repeats = self.repeats;
        settings.timeout = self.timeout_secs.map(Duration::from_secs_f64);
        if let Some(pattern) = &self.perf_pattern {
            settings.perf_pattern =
                Some(regex::Regex::new(pattern).map_err(|e| usage(anyhow!("{e}")))?);
        }
        Ok(Source::Command(CommandEvaluator::new(settings).map_err(usage)?))
    }

    pub fn failure_policy(&self) -> Result<FailurePolicy, Failure> {
        match self.on_failure.as_str() {
            "skip" => Ok(FailurePolicy::Skip),
            "abort" => Ok(FailurePolicy::Abort),
            "penalize" => {
                let p = self.penalty.ok_or_else(|| {
                    usage(anyhow!("--on-failure penalize needs --penalty <PERFORMANCE>"))
                })?;
                Ok(FailurePolicy::Penalize(p))
            }
            other => Err(usage(anyhow!("unknown failure policy `{other}` (skip, abort, penalize)"))),
        }
    }
}
