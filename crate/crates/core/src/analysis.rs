//! Post-tuning arithmetic: how much was gained, which parameters carried
//! the gain, and when the tuning effort pays for itself.

use crate::executor::{Executor, ExecutorError, PerformanceSource};
use crate::sampler::Direction;
use crate::space::{Configuration, ConfigurationSpace};
use crate::validity::RuleSet;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },
    #[error("{0} produced no performance number")]
    Unmeasurable(String),
    #[error("the ranked configuration list is empty")]
    EmptyRanking,
    #[error(transparent)]
    Executor(#[from] ExecutorError),
}

/// Relative gain of `best` over `default`, in percent:
/// `|default - best| / default * 100`.
pub fn improvement_percent(default_perf: f64, best_perf: f64) -> Result<f64, AnalysisError> {
    if !(default_perf > 0.0) || !default_perf.is_finite() {
        return Err(AnalysisError::NonPositive {
            what: "default performance",
            value: default_perf,
        });
    }
    Ok((default_perf - best_perf).abs() / default_perf * 100.0)
}

/// The gain formula packaged with its inputs for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    pub perf_default: f64,
    pub perf_best: f64,
    pub gain_pct: f64,
}

pub fn gain(perf_default: f64, perf_best: f64) -> Result<GainReport, AnalysisError> {
    let gain_pct = improvement_percent(perf_default, perf_best)?;
    Ok(GainReport { perf_default, perf_best, gain_pct })
}

/// Direction-adjusted relative improvement of `perf` over `default_perf`;
/// positive when `perf` is better.
fn relative_delta(direction: Direction, default_perf: f64, perf: f64) -> f64 {
    match direction {
        Direction::Minimize => (default_perf - perf) / default_perf,
        Direction::Maximize => (perf - default_perf) / default_perf,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TopkRow {
    pub rank: usize,
    pub config: Configuration,
    pub performance: Option<f64>,
    /// Signed percent improvement over the default on *this* evaluator;
    /// negative when the configuration is worse here.
    pub gain_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefixPoint {
    pub k: usize,
    pub best_gain_pct: f64,
    pub best_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopkReport {
    pub baseline: f64,
    pub rows: Vec<TopkRow>,
    /// Best gain among the first k rows, at k = 1, 3, 5, 10, 25, 50 (and the
    /// full list length). Monotone nondecreasing by construction.
    pub prefix_curve: Vec<PrefixPoint>,
}

/// Re-scores a ranked configuration list on a fresh evaluator, typically a
/// larger workload than the one that produced the ranking. Reports per-rank
/// gain over the default plus the best-of-prefix curve.
pub fn evaluate_topk<S: PerformanceSource>(
    executor: &mut Executor<S>,
    default: &Configuration,
    ranked: &[Configuration],
    direction: Direction,
) -> Result<TopkReport, AnalysisError> {
    if ranked.is_empty() {
        return Err(AnalysisError::EmptyRanking);
    }
    let base = executor.evaluate(default, 0)?;
    let baseline = base
        .perf
        .ok_or_else(|| AnalysisError::Unmeasurable("the default configuration".into()))?;
    if !(baseline > 0.0) || !baseline.is_finite() {
        return Err(AnalysisError::NonPositive { what: "default performance", value: baseline });
    }

    let mut rows = Vec::with_capacity(ranked.len());
    for (i, config) in ranked.iter().enumerate() {
        let ev = executor.evaluate(config, 0)?;
        let gain_pct = ev.perf.map(|p| relative_delta(direction, baseline, p) * 100.0);
        rows.push(TopkRow { rank: i + 1, config: config.clone(), performance: ev.perf, gain_pct });
    }

    let mut prefix_curve = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    let mut marks = [1usize, 3, 5, 10, 25, 50].iter().copied().peekable();
    for row in &rows {
        if let Some(g) = row.gain_pct {
            if best.map_or(true, |(b, _)| g > b) {
                best = Some((g, row.rank));
            }
        }
        let at_mark = marks.peek() == Some(&row.rank);
        if at_mark {
            marks.next();
        }
        if at_mark || row.rank == rows.len() {
            if let Some((g, r)) = best {
                prefix_curve.push(PrefixPoint { k: row.rank, best_gain_pct: g, best_rank: r });
            }
        }
    }
    Ok(TopkReport { baseline, rows, prefix_curve })
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityEntry {
    pub parameter: String,
    /// Share of the best configuration's improvement lost when this
    /// parameter is reset to its default while the others stay tuned.
    pub sensitivity: f64,
    pub reset_performance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedReset {
    pub parameter: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub baseline: f64,
    pub best_performance: f64,
    /// Relative improvement of the best configuration over the default.
    pub best_delta: f64,
    /// Descending by sensitivity: the parameters that matter most first.
    pub entries: Vec<SensitivityEntry>,
    /// Resets that could not be measured (rule violations or failed runs).
    pub skipped: Vec<SkippedReset>,
}

/// Measures each tuned parameter's contribution by resetting it to its
/// default, one at a time, and re-evaluating. Parameters the best
/// configuration leaves at default contribute nothing and are not listed.
pub fn sensitivity<S: PerformanceSource>(
    space: &ConfigurationSpace,
    rules: &RuleSet,
    executor: &mut Executor<S>,
    best: &Configuration,
    direction: Direction,
) -> Result<SensitivityReport, AnalysisError> {
    let default = space.default_configuration();
    let base = executor.evaluate(&default, 0)?;
    let baseline = base
        .perf
        .ok_or_else(|| AnalysisError::Unmeasurable("the default configuration".into()))?;
    if !(baseline > 0.0) || !baseline.is_finite() {
        return Err(AnalysisError::NonPositive { what: "default performance", value: baseline });
    }
    let best_eval = executor.evaluate(best, 0)?;
    let best_perf = best_eval
        .perf
        .ok_or_else(|| AnalysisError::Unmeasurable("the tuned configuration".into()))?;
    let best_delta = relative_delta(direction, baseline, best_perf);

    let changed: Vec<String> =
        best.diff_from_default(space).into_iter().map(str::to_string).collect();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for name in changed {
        let spec = match space.get(&name) {
            Some(s) => s,
            None => continue,
        };
        let mut reset = best.clone();
        reset.values.insert(name.clone(), spec.default.clone());
        let report = rules.check(&reset);
        if !report.valid {
            skipped.push(SkippedReset {
                parameter: name,
                reason: report.violations[0].message.clone(),
            });
            continue;
        }
        let ev = executor.evaluate(&reset, 0)?;
        match ev.perf {
            Some(p) => {
                let delta = relative_delta(direction, baseline, p);
                entries.push(SensitivityEntry {
                    parameter: name,
                    sensitivity: best_delta - delta,
                    reset_performance: p,
                });
            }
            None => skipped.push(SkippedReset {
                parameter: name,
                reason: "evaluation produced no performance number".into(),
            }),
        }
    }
    entries.sort_by(|a, b| {
        b.sensitivity
            .partial_cmp(&a.sensitivity)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.parameter.cmp(&b.parameter))
    });
    Ok(SensitivityReport { baseline, best_performance: best_perf, best_delta, entries, skipped })
}

/// When a tuning run's cost is repaid by the faster configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakEven {
    /// Tuning overhead expressed in default-configuration runs.
    pub overhead_equivalent_runs: f64,
    /// Runs of the *tuned* configuration needed before the accumulated
    /// per-run saving covers the overhead; `None` when the tuned
    /// configuration is not faster.
    pub additional_runs: Option<u64>,
    /// Whole runs until tuning has paid off:
    /// `ceil(overhead_equivalent_runs) + additional_runs`.
    pub total_runs: Option<u64>,
}

/// All times in the same unit (conventionally seconds). Only meaningful for
/// run-time-like measures where smaller is better.
pub fn break_even(
    tuning_overhead: f64,
    default_run_time: f64,
    optimized_run_time: f64,
) -> Result<BreakEven, AnalysisError> {
    for (what, value) in [
        ("default run time", default_run_time),
        ("optimized run time", optimized_run_time),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(AnalysisError::NonPositive { what, value });
        }
    }
    if !(tuning_overhead >= 0.0) || !tuning_overhead.is_finite() {
        return Err(AnalysisError::NonPositive {
            what: "tuning overhead",
            value: tuning_overhead,
        });
    }

    let overhead_equivalent_runs = tuning_overhead / default_run_time;
    let saving = default_run_time - optimized_run_time;
    let additional_runs = if saving > 0.0 {
        Some((tuning_overhead / saving).ceil() as u64)
    } else {
        None
    };
    let total_runs = additional_runs.map(|a| overhead_equivalent_runs.ceil() as u64 + a);
    Ok(BreakEven { overhead_equivalent_runs, additional_runs, total_runs })
}
