//! Measurement of configurations.
//!
//! A [`PerformanceSource`] produces one performance number per configuration
//! (an external command, or a synthetic landscape for calibration). The
//! [`Executor`] wraps a source with the pieces the sampler relies on:
//! a cache keyed by canonical configuration identity, failure-policy
//! handling, journaling, and bounded parallel batch evaluation.
//!
//! Budget accounting lives here: `budget_used` counts evaluator runs that
//! actually happened (cache hits are free) for generations past the seed.
//! Preloaded journal entries count as spent budget so a resumed run and an
//! uninterrupted run agree at every step.

pub mod command;
pub mod landscape;
pub mod render;

pub use command::{CommandEvaluator, CommandSettings};
pub use landscape::{exhaustive_optimum, LandscapeKind, LandscapeOptions, SyntheticLandscape};
pub use render::{
    env_var_name, parse_env, parse_json, parse_properties, render_env, render_json,
    render_properties, RenderMode, ENV_PREFIX,
};

use crate::persistence::{JournalWriter, PersistenceError, RunSummary};
use crate::space::{Configuration, SpaceError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExecutorError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("render error: {0}")]
    Render(String),
    #[error("failed to launch `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("evaluation aborted for {config}: {detail}")]
    Aborted { config: String, detail: String },
    #[error("landscape error: {0}")]
    Landscape(String),
    #[error("cache is disabled; {0}")]
    CacheDisabled(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    Failed,
    Invalid,
    Timeout,
}

/// One measured configuration, as written to the journal.
///
/// `performance` is the arithmetic mean of `repeats` and present exactly
/// when `status` is `Ok`. Pure sources report zero wall clock and no
/// timestamp so journals stay byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub config: Configuration,
    pub generation: u64,
    pub status: EvalStatus,
    pub repeats: Vec<f64>,
    pub performance: Option<f64>,
    pub wall_clock_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp_epoch_secs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<String>,
}

/// Raw result of running a source once (including its internal repeats).
#[derive(Debug, Clone)]
pub struct SourceOutcome {
    pub status: EvalStatus,
    pub repeats: Vec<f64>,
    pub performance: Option<f64>,
    pub wall_clock_secs: f64,
    pub timestamp_epoch_secs: Option<u64>,
    pub stderr: Option<String>,
}

impl SourceOutcome {
    pub fn pure(performance: f64) -> SourceOutcome {
        SourceOutcome {
            status: EvalStatus::Ok,
            repeats: vec![performance],
            performance: Some(performance),
            wall_clock_secs: 0.0,
            timestamp_epoch_secs: None,
            stderr: None,
        }
    }
}

/// Anything that can measure a configuration.
pub trait PerformanceSource: Send + Sync {
    fn run(&self, config: &Configuration) -> Result<SourceOutcome, ExecutorError>;

    /// Stable identity string folded into journal headers. Resume refuses a
    /// journal produced by a different source.
    fn fingerprint(&self) -> String;
}

impl<T: PerformanceSource + ?Sized> PerformanceSource for Box<T> {
    fn run(&self, config: &Configuration) -> Result<SourceOutcome, ExecutorError> {
        (**self).run(config)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

/// What to do when a run fails or times out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Stop the whole tuning run. The failed record is not journaled, so a
    /// resume retries it.
    Abort,
    /// Pretend the run produced this (bad) performance; the journal still
    /// records the failure truthfully.
    Penalize(f64),
    /// Treat the configuration as rejected and move on.
    Skip,
}

impl Default for FailurePolicy {
    fn default() -> Self {
        FailurePolicy::Skip
    }
}

/// Result of one `evaluate` call: the journal-level record plus the
/// performance the sampler should act on (`None` means "reject").
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub record: EvaluationRecord,
    pub perf: Option<f64>,
    pub cache_hit: bool,
}

pub struct Executor<S: PerformanceSource> {
    source: S,
    policy: FailurePolicy,
    cache: Option<HashMap<String, EvaluationRecord>>,
    journal: Option<JournalWriter>,
    jobs: usize,
    budget_spent: u64,
}

impl<S: PerformanceSource> Executor<S> {
    pub fn new(source: S) -> Self {
        Executor {
            source,
            policy: FailurePolicy::default(),
            cache: Some(HashMap::new()),
            journal: None,
            jobs: 1,
            budget_spent: 0,
        }
    }

    pub fn with_policy(mut self, policy: FailurePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_cache(mut self, enabled: bool) -> Self {
        self.cache = if enabled { Some(HashMap::new()) } else { None };
        self
    }

    pub fn with_journal(mut self, journal: JournalWriter) -> Self {
        self.journal = Some(journal);
        self
    }

    /// Parallelism cap for batch evaluation. 1 means strictly sequential.
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn policy(&self) -> FailurePolicy {
        self.policy
    }

    pub fn cache_enabled(&self) -> bool {
        self.cache.is_some()
    }

    /// Evaluator runs spent so far, excluding the seed (generation 0) and
    /// cache hits. Includes preloaded journal entries.
    pub fn budget_used(&self) -> u64 {
        self.budget_spent
    }

    /// Number of distinct configurations with a record, seed included.
    /// `None` when the cache is disabled.
    pub fn distinct_evaluated(&self) -> Option<u64> {
        self.cache.as_ref().map(|c| c.len() as u64)
    }

    /// Whether evaluating `config` would be a cache hit (and therefore free).
    pub fn is_cached(&self, config: &Configuration) -> bool {
        self.cache
            .as_ref()
            .map(|c| c.contains_key(&config.canonical_key()))
            .unwrap_or(false)
    }

    /// Seeds the cache from journal entries so a resumed run replays its
    /// past as hits. Budget accounting matches the original run.
    pub fn preload(&mut self, records: Vec<EvaluationRecord>) -> Result<(), ExecutorError> {
        let cache = self.cache.as_mut().ok_or_else(|| {
            ExecutorError::CacheDisabled("resume requires the evaluation cache".into())
        })?;
        for rec in records {
            if rec.generation > 0 {
                self.budget_spent += 1;
            }
            cache.insert(rec.config.canonical_key(), rec);
        }
        Ok(())
    }

    pub fn append_end(&mut self, summary: &RunSummary) -> Result<(), ExecutorError> {
        if let Some(j) = &mut self.journal {
            j.append_end(summary)?;
        }
        Ok(())
    }

    fn effective_perf(&self, record: &EvaluationRecord) -> Result<Option<f64>, ExecutorError> {
        match record.status {
            EvalStatus::Ok => Ok(record.performance),
            EvalStatus::Invalid => Ok(None),
            EvalStatus::Failed | EvalStatus::Timeout => match self.policy {
                FailurePolicy::Abort => Err(ExecutorError::Aborted {
                    config: record.config.canonical_key(),
                    detail: record
                        .stderr
                        .clone()
                        .unwrap_or_else(|| format!("status {:?}", record.status)),
                }),
                FailurePolicy::Penalize(p) => Ok(Some(p)),
                FailurePolicy::Skip => Ok(None),
            },
        }
    }

    fn admit(
        &mut self,
        config: &Configuration,
        generation: u64,
        outcome: SourceOutcome,
    ) -> Result<Evaluated, ExecutorError> {
        let record = EvaluationRecord {
            config: config.clone(),
            generation,
            status: outcome.status,
            repeats: outcome.repeats,
            performance: outcome.performance,
            wall_clock_secs: outcome.wall_clock_secs,
            timestamp_epoch_secs: outcome.timestamp_epoch_secs,
            stderr: outcome.stderr,
        };
        // Abort failures are not journaled or cached: after the operator
        // fixes the environment, resume retries the configuration.
        if matches!(record.status, EvalStatus::Failed | EvalStatus::Timeout)
            && matches!(self.policy, FailurePolicy::Abort)
        {
            return Err(self.effective_perf(&record).unwrap_err());
        }
        if let Some(j) = &mut self.journal {
            j.append_eval(&record)?;
        }
        if generation > 0 {
            self.budget_spent += 1;
        }
        if let Some(cache) = &mut self.cache {
            cache.insert(record.config.canonical_key(), record.clone());
        }
        let perf = self.effective_perf(&record)?;
        Ok(Evaluated { record, perf, cache_hit: false })
    }

    pub fn evaluate(
        &mut self,
        config: &Configuration,
        generation: u64,
    ) -> Result<Evaluated, ExecutorError> {
        if let Some(cache) = &self.cache {
            if let Some(rec) = cache.get(&config.canonical_key()) {
                let record = rec.clone();
                let perf = self.effective_perf(&record)?;
                return Ok(Evaluated { record, perf, cache_hit: true });
            }
        }
        let outcome = self.source.run(config)?;
        self.admit(config, generation, outcome)
    }

    /// Evaluates a slice of configurations, running cache misses on up to
    /// `jobs` threads. Records are admitted (journaled, cached, counted) in
    /// slice order regardless of completion order, so journals do not depend
    /// on scheduling.
    pub fn evaluate_batch(
        &mut self,
        configs: &[Configuration],
        generation: u64,
    ) -> Result<Vec<Evaluated>, ExecutorError> {
        if self.jobs <= 1 || configs.len() <= 1 {
            return configs
                .iter()
                .map(|c| self.evaluate(c, generation))
                .collect();
        }

        // First occurrence of every key that needs a real run. With the
        // cache disabled every occurrence runs separately.
        let mut pending: Vec<usize> = Vec::new();
        let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
        for (i, c) in configs.iter().enumerate() {
            let key = c.canonical_key();
            let cached = self
                .cache
                .as_ref()
                .map(|m| m.contains_key(&key))
                .unwrap_or(false);
            if cached {
                continue;
            }
            if self.cache.is_some() && !seen.insert(key) {
                continue;
            }
            pending.push(i);
        }

        let outcomes: Vec<Mutex<Option<Result<SourceOutcome, ExecutorError>>>> =
            pending.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.jobs.min(pending.len());
        let source = &self.source;
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let slot = next.fetch_add(1, Ordering::Relaxed);
                    if slot >= pending.len() {
                        break;
                    }
                    let result = source.run(&configs[pending[slot]]);
                    *outcomes[slot].lock().expect("outcome slot") = Some(result);
                });
            }
        });

        let mut by_slot: HashMap<usize, Result<SourceOutcome, ExecutorError>> = pending
            .iter()
            .zip(outcomes)
            .map(|(&i, m)| (i, m.into_inner().expect("outcome slot").expect("worker filled slot")))
            .collect();

        let mut out = Vec::with_capacity(configs.len());
        for (i, config) in configs.iter().enumerate() {
            if let Some(outcome) = by_slot.remove(&i) {
                out.push(self.admit(config, generation, outcome?)?);
            } else {
                // Either cached before the batch or a duplicate of an
                // earlier slot admitted above.
                out.push(self.evaluate(config, generation)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{synthetic_grid_space, ConfigurationSpace};
    use std::sync::atomic::AtomicU64;

    struct Counting {
        calls: AtomicU64,
        fail_on: Option<i64>,
    }

    impl PerformanceSource for Counting {
        fn run(&self, config: &Configuration) -> Result<SourceOutcome, ExecutorError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let v = config.get("p00").and_then(|v| v.as_i64()).unwrap_or(0);
            if self.fail_on == Some(v) {
                return Ok(SourceOutcome {
                    status: EvalStatus::Failed,
                    repeats: vec![],
                    performance: None,
                    wall_clock_secs: 0.0,
                    timestamp_epoch_secs: None,
                    stderr: Some("simulated failure".into()),
                });
            }
            Ok(SourceOutcome::pure(10.0 + v as f64))
        }

        fn fingerprint(&self) -> String {
            "counting".into()
        }
    }

    fn grid() -> ConfigurationSpace {
        synthetic_grid_space("g", 2, 3).unwrap()
    }

    #[test]
    fn cache_hit_returns_stored_record_without_rerun() {
        let space = grid();
        let cfg = space.default_configuration();
        let source = Counting { calls: AtomicU64::new(0), fail_on: None };
        let mut ex = Executor::new(source);
        let first = ex.evaluate(&cfg, 1).unwrap();
        let second = ex.evaluate(&cfg, 2).unwrap();
        assert!(!first.cache_hit);
        assert!(second.cache_hit);
        assert_eq!(second.record, first.record);
        assert_eq!(ex.source().calls.load(Ordering::SeqCst), 1);
        assert_eq!(ex.budget_used(), 1);
        assert_eq!(ex.distinct_evaluated(), Some(1));
    }

    #[test]
    fn disabled_cache_reruns_every_call() {
        let space = grid();
        let cfg = space.default_configuration();
        let source = Counting { calls: AtomicU64::new(0), fail_on: None };
        let mut ex = Executor::new(source).with_cache(false);
        ex.evaluate(&cfg, 1).unwrap();
        ex.evaluate(&cfg, 1).unwrap();
        assert_eq!(ex.source().calls.load(Ordering::SeqCst), 2);
        assert_eq!(ex.budget_used(), 2);
        assert_eq!(ex.distinct_evaluated(), None);
    }

    #[test]
    fn seed_generation_is_not_budget() {
        let space = grid();
        let cfg = space.default_configuration();
        let source = Counting { calls: AtomicU64::new(0), fail_on: None };
        let mut ex = Executor::new(source);
        ex.evaluate(&cfg, 0).unwrap();
        assert_eq!(ex.budget_used(), 0);
    }

    #[test]
    fn failure_policies_shape_effective_perf() {
        let space = grid();
        let bad = space
            .configuration_from_values([("p00".to_string(), crate::value::Value::Int(0))].into())
            .unwrap();

        let mk = || Counting { calls: AtomicU64::new(0), fail_on: Some(0) };

        let mut skip = Executor::new(mk()).with_policy(FailurePolicy::Skip);
        let e = skip.evaluate(&bad, 1).unwrap();
        assert_eq!(e.record.status, EvalStatus::Failed);
        assert_eq!(e.perf, None);
        assert_eq!(e.record.performance, None);

        let mut pen = Executor::new(mk()).with_policy(FailurePolicy::Penalize(9999.0));
        let e = pen.evaluate(&bad, 1).unwrap();
        assert_eq!(e.perf, Some(9999.0));
        assert_eq!(e.record.performance, None, "journal keeps the truth");

        let mut abort = Executor::new(mk()).with_policy(FailurePolicy::Abort);
        let err = abort.evaluate(&bad, 1).unwrap_err();
        assert!(matches!(err, ExecutorError::Aborted { .. }));
        assert_eq!(abort.distinct_evaluated(), Some(0), "aborted run is not cached");
    }

    #[test]
    fn batch_parallel_matches_sequential_order() {
        let space = synthetic_grid_space("g", 2, 5).unwrap();
        let configs: Vec<Configuration> = space.enumerate().take(12).collect();

        let mut seq = Executor::new(Counting { calls: AtomicU64::new(0), fail_on: None });
        let a = seq.evaluate_batch(&configs, 1).unwrap();

        let mut par = Executor::new(Counting { calls: AtomicU64::new(0), fail_on: None })
            .with_jobs(4);
        let b = par.evaluate_batch(&configs, 1).unwrap();

        let perfs_a: Vec<_> = a.iter().map(|e| e.perf).collect();
        let perfs_b: Vec<_> = b.iter().map(|e| e.perf).collect();
        assert_eq!(perfs_a, perfs_b);
        assert_eq!(seq.budget_used(), par.budget_used());
    }

    #[test]
    fn batch_deduplicates_repeated_configs() {
        let space = grid();
        let cfg = space.default_configuration();
        let configs = vec![cfg.clone(), cfg.clone(), cfg];
        let mut ex = Executor::new(Counting { calls: AtomicU64::new(0), fail_on: None })
            .with_jobs(3);
        let out = ex.evaluate_batch(&configs, 1).unwrap();
        assert_eq!(ex.source().calls.load(Ordering::SeqCst), 1);
        assert!(!out[0].cache_hit);
        assert!(out[1].cache_hit && out[2].cache_hit);
    }
}
