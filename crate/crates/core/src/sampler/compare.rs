//! Head-to-head sampler comparisons on synthetic landscapes.
//!
//! Comparisons are paired: for each trial seed, every sampler faces the
//! same landscape instance with the same evaluation budget and the same
//! sampler seed, so per-seed differences reflect search strategy rather
//! than luck of the objective.

use super::{Direction, SamplerError, SamplerKind, SamplerSettings, TuneResult, Tuner};
use crate::executor::{
    exhaustive_optimum, Executor, LandscapeKind, LandscapeOptions, SyntheticLandscape,
};
use crate::space::ConfigurationSpace;
use crate::validity::RuleSet;
use serde::Serialize;

/// Runs one sampler once against one synthetic landscape instance.
pub fn run_on_landscape(
    space: &ConfigurationSpace,
    rules: &RuleSet,
    kind: SamplerKind,
    landscape: LandscapeKind,
    options: LandscapeOptions,
    settings: &SamplerSettings,
) -> Result<TuneResult, SamplerError> {
    let source = SyntheticLandscape::new(landscape, space, options)?;
    let mut executor = Executor::new(source);
    let tuner = Tuner::new(space, rules, settings.clone())?;
    tuner.run(kind, &mut executor, &mut |_| {})
}

/// One sampler's results across all trial seeds.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerScore {
    pub sampler: SamplerKind,
    /// Best performance per trial; `None` when nothing was measurable.
    pub best_per_seed: Vec<Option<f64>>,
    pub mean_best: Option<f64>,
    pub mean_evaluations: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub landscape: LandscapeKind,
    pub noise: f64,
    pub budget: Option<u64>,
    pub direction: Direction,
    pub seeds: Vec<u64>,
    pub scores: Vec<SamplerScore>,
    /// True global optimum, when the space is small enough to enumerate.
    pub optimum: Option<f64>,
}

impl ComparisonReport {
    /// Trials where sampler `a` did at least as well as sampler `b`.
    /// Unmeasurable trials on either side are skipped.
    pub fn wins_at_least(&self, a: SamplerKind, b: SamplerKind) -> (usize, usize) {
        let find = |kind| {
            self.scores
                .iter()
                .find(|s| s.sampler == kind)
                .map(|s| s.best_per_seed.as_slice())
                .unwrap_or(&[])
        };
        let (xs, ys) = (find(a), find(b));
        let mut wins = 0;
        let mut total = 0;
        for (x, y) in xs.iter().zip(ys) {
            if let (Some(x), Some(y)) = (x, y) {
                total += 1;
                let at_least = match self.direction {
                    Direction::Minimize => x <= y,
                    Direction::Maximize => x >= y,
                };
                if at_least {
                    wins += 1;
                }
            }
        }
        (wins, total)
    }
}

/// Runs every sampler in `samplers` over `trials` landscape instances.
/// Trial `t` uses landscape seed `seed_base + t` and the same value as the
/// sampler seed. Stalling is disabled so every sampler gets the same
/// evaluation allowance; the generation cap comes from `base` and bounds
/// runs whose proposals repeat (repeat measurements are cached and free).
pub fn compare_samplers(
    space: &ConfigurationSpace,
    rules: &RuleSet,
    samplers: &[SamplerKind],
    landscape: LandscapeKind,
    noise: f64,
    base: &SamplerSettings,
    seed_base: u64,
    trials: u64,
    enumeration_limit: u64,
) -> Result<ComparisonReport, SamplerError> {
    let seeds: Vec<u64> = (0..trials).map(|t| seed_base + t).collect();
    let mut scores = Vec::with_capacity(samplers.len());
    for &kind in samplers {
        let mut best_per_seed = Vec::with_capacity(seeds.len());
        let mut eval_total = 0u64;
        for &seed in &seeds {
            let settings = SamplerSettings { seed, min_improvement: 0.0, ..base.clone() };
            let options = LandscapeOptions { seed, noise };
            let result = run_on_landscape(space, rules, kind, landscape, options, &settings)?;
            best_per_seed.push(result.best.map(|b| b.performance));
            eval_total += result.evaluations;
        }
        let measured: Vec<f64> = best_per_seed.iter().flatten().copied().collect();
        let mean_best = if measured.is_empty() {
            None
        } else {
            Some(measured.iter().sum::<f64>() / measured.len() as f64)
        };
        scores.push(SamplerScore {
            sampler: kind,
            best_per_seed,
            mean_best,
            mean_evaluations: eval_total as f64 / seeds.len().max(1) as f64,
        });
    }

    // The optimum shifts with the landscape seed, so it is only well defined
    // for a single trial.
    let optimum = if trials == 1 {
        let options = LandscapeOptions { seed: seeds[0], noise };
        let source = SyntheticLandscape::new(landscape, space, options)?;
        exhaustive_optimum(space, &source, enumeration_limit)
            .ok()
            .map(|(_, perf)| perf)
    } else {
        None
    };

    Ok(ComparisonReport {
        landscape,
        noise,
        budget: base.budget,
        direction: base.direction,
        seeds,
        scores,
        optimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::synthetic_grid_space;

    #[test]
    fn paired_samplers_share_budget_and_objective() {
        let space = synthetic_grid_space("g", 3, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let base = SamplerSettings { budget: Some(20), ..SamplerSettings::default() };
        let report = compare_samplers(
            &space,
            &rules,
            &[SamplerKind::Emcmc, SamplerKind::Random],
            LandscapeKind::SeparableQuadratic,
            0.0,
            &base,
            100,
            3,
            100_000,
        )
        .unwrap();

        assert_eq!(report.scores.len(), 2);
        for score in &report.scores {
            assert_eq!(score.best_per_seed.len(), 3);
            assert!(
                (score.mean_evaluations - 20.0).abs() < 1e-9,
                "every trial spends the full budget, got {}",
                score.mean_evaluations
            );
        }
        let (wins, total) = report.wins_at_least(SamplerKind::Emcmc, SamplerKind::Random);
        assert_eq!(total, 3);
        assert!(wins <= 3);
    }

    #[test]
    fn single_trial_reports_the_enumerated_optimum() {
        let space = synthetic_grid_space("g", 2, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let base = SamplerSettings { budget: Some(8), ..SamplerSettings::default() };
        let report = compare_samplers(
            &space,
            &rules,
            &[SamplerKind::Random],
            LandscapeKind::SeparableQuadratic,
            0.0,
            &base,
            7,
            1,
            100_000,
        )
        .unwrap();
        let optimum = report.optimum.unwrap();
        let best = report.scores[0].best_per_seed[0].unwrap();
        assert!(best >= optimum - 1e-9);
    }
}
