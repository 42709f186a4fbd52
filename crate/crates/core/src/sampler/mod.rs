//! Search drivers over a configuration space.
//!
//! Three samplers share one driver skeleton. The evolutionary MCMC sampler
//! proposes children by crossover toward the incumbent best plus random
//! mutation and gates them through Metropolis acceptance, so mild
//! regressions survive and the walk can cross barriers. The greedy genetic
//! sampler uses the same proposals but admits only strict improvements. The
//! random sampler draws valid configurations uniformly.
//!
//! Every run starts by measuring the space's default configuration as
//! generation 0. That seed run is the baseline for reporting and the
//! initial best for the evolutionary samplers, and it never counts against
//! the evaluation budget. Generation 1 is always valid random draws;
//! generations 2+ evolve (or keep drawing, for random search).
//!
//! All randomness comes from per-purpose streams keyed by (seed, purpose,
//! generation, member), so a resumed run replays the interrupted trajectory
//! exactly and two runs with one seed agree byte-for-byte in the journal.

pub mod accept;
pub mod compare;
pub mod evolve;

pub use accept::{AcceptDecision, AcceptancePolicy, Direction};
pub use compare::{compare_samplers, run_on_landscape, ComparisonReport, SamplerScore};

use crate::executor::{Executor, ExecutorError, PerformanceSource};
use crate::persistence::RunSummary;
use crate::rng::{domain, StreamFactory};
use crate::space::{Configuration, ConfigurationSpace};
use crate::validity::RuleSet;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler settings: {0}")]
    Settings(String),
    #[error(
        "no valid configuration found after {attempts} random draws; \
         the rules may be unsatisfiable"
    )]
    ValidSampleExhausted { attempts: u64 },
    #[error("acceptance needs positive finite performance (best {best}, proposal {proposal})")]
    NonPositivePerformance { best: f64, proposal: f64 },
    #[error(transparent)]
    Executor(#[from] ExecutorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Emcmc,
    Ga,
    Random,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Emcmc, SamplerKind::Ga, SamplerKind::Random];
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Emcmc => "emcmc",
            SamplerKind::Ga => "ga",
            SamplerKind::Random => "random",
        })
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "emcmc" => Ok(SamplerKind::Emcmc),
            "ga" => Ok(SamplerKind::Ga),
            "random" => Ok(SamplerKind::Random),
            other => Err(format!("unknown sampler `{other}` (expected emcmc, ga, or random)")),
        }
    }
}

/// Everything that shapes a tuning run. Serialized into the journal header
/// fingerprint, so resume refuses to continue under different settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSettings {
    pub seed: u64,
    /// Proposals per generation; `None` means 4x the dimensionality.
    pub population: Option<usize>,
    pub max_generations: u64,
    /// Relative best-performance improvement a generation must reach;
    /// two consecutive misses stop the run. Zero disables stalling.
    pub min_improvement: f64,
    pub crossover_fraction: f64,
    pub mutation_fraction: f64,
    pub sigma: f64,
    pub direction: Direction,
    /// Extra child rebuilds after an invalid child before falling back to a
    /// fresh random draw.
    pub invalid_retry_limit: u32,
    /// Uniform draws allowed per valid-sample request before giving up.
    pub random_rejection_limit: u64,
    /// Cap on evaluator runs past the seed; `None` means unlimited.
    pub budget: Option<u64>,
    /// How many best-so-far configurations to keep in the final report.
    pub top_k: usize,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            seed: 0,
            population: None,
            max_generations: 30,
            min_improvement: 1e-3,
            crossover_fraction: 0.5,
            mutation_fraction: 0.06,
            sigma: 50.0,
            direction: Direction::Minimize,
            invalid_retry_limit: 20,
            random_rejection_limit: 10_000,
            budget: None,
            top_k: 50,
        }
    }
}

impl SamplerSettings {
    pub fn effective_population(&self, dimensionality: usize) -> usize {
        self.population.unwrap_or(4 * dimensionality.max(1))
    }

    pub fn policy(&self) -> AcceptancePolicy {
        AcceptancePolicy::new(self.sigma, self.direction)
    }

    fn validate(&self) -> Result<(), SamplerError> {
        let err = |reason: &str| Err(SamplerError::Settings(reason.to_string()));
        if self.population == Some(0) {
            return err("population must be at least 1");
        }
        // max_generations 0 is legal: the run measures the seed and stops.
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return err("crossover_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_fraction) {
            return err("mutation_fraction must lie in [0, 1]");
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return err("sigma must be positive and finite");
        }
        if !self.min_improvement.is_finite() || self.min_improvement < 0.0 {
            return err("min_improvement must be non-negative and finite");
        }
        if self.random_rejection_limit == 0 {
            return err("random_rejection_limit must be at least 1");
        }
        if self.budget == Some(0) {
            return err("budget must be at least 1 when set");
        }
        if self.top_k == 0 {
            return err("top_k must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    MaxGenerations,
    Stalled,
    BudgetExhausted,
    SpaceExhausted,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::MaxGenerations => "max_generations",
            TerminationReason::Stalled => "stalled",
            TerminationReason::BudgetExhausted => "budget_exhausted",
            TerminationReason::SpaceExhausted => "space_exhausted",
        })
    }
}

/// A measured configuration in the final ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub config: Configuration,
    pub performance: f64,
    pub generation: u64,
}

/// Per-generation progress record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: u64,
    /// Configurations measured this generation, in member order.
    pub population: Vec<Configuration>,
    /// Members that passed the acceptance gate. Always a subset of
    /// `population`.
    pub accepted: Vec<Configuration>,
    pub best_config: Option<Configuration>,
    pub best_performance: Option<f64>,
    /// Relative improvement of the best over the previous generation.
    pub improvement: Option<f64>,
    /// Relative improvement of the best over the generation-0 seed run.
    pub improvement_vs_seed: Option<f64>,
    /// Evaluator runs charged to this generation's budget. Replayed
    /// journal entries count where the original run spent them.
    pub evaluated: u64,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneResult {
    pub sampler: SamplerKind,
    pub seed: u64,
    /// Performance of the default configuration (the generation-0 seed run).
    pub baseline: Option<f64>,
    pub best: Option<RankedEntry>,
    pub top: Vec<RankedEntry>,
    pub generations: Vec<GenerationSummary>,
    /// Evaluator runs spent past the seed.
    pub evaluations: u64,
    pub termination: TerminationReason,
}

/// Keeps the k best distinct configurations seen so far.
#[derive(Default)]
struct TopTracker {
    entries: HashMap<String, RankedEntry>,
}

impl TopTracker {
    fn offer(&mut self, policy: &AcceptancePolicy, entry: RankedEntry) {
        match self.entries.entry(entry.config.canonical_key()) {
            std::collections::hash_map::Entry::Occupied(mut o) => {
                if policy.better(entry.performance, o.get().performance) {
                    o.insert(entry);
                }
            }
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(entry);
            }
        }
    }

    /// Ranked by performance, ties broken by canonical key so the order is
    /// deterministic.
    fn finish(self, policy: &AcceptancePolicy, k: usize) -> Vec<RankedEntry> {
        let mut all: Vec<(String, RankedEntry)> = self.entries.into_iter().collect();
        all.sort_by(|(ka, a), (kb, b)| {
            let ord = match policy.direction {
                Direction::Minimize => a.performance.partial_cmp(&b.performance),
                Direction::Maximize => b.performance.partial_cmp(&a.performance),
            };
            ord.unwrap_or(std::cmp::Ordering::Equal).then_with(|| ka.cmp(kb))
        });
        all.truncate(k);
        all.into_iter().map(|(_, e)| e).collect()
    }
}

pub struct Tuner<'a> {
    space: &'a ConfigurationSpace,
    rules: &'a RuleSet,
    settings: SamplerSettings,
    policy: AcceptancePolicy,
}

impl<'a> Tuner<'a> {
    pub fn new(
        space: &'a ConfigurationSpace,
        rules: &'a RuleSet,
        settings: SamplerSettings,
    ) -> Result<Tuner<'a>, SamplerError> {
        settings.validate()?;
        let policy = settings.policy();
        Ok(Tuner { space, rules, settings, policy })
    }

    pub fn settings(&self) -> &SamplerSettings {
        &self.settings
    }

    /// Drops proposals once the remaining budget cannot pay for another
    /// evaluator run. Cache hits are free and duplicates within the batch
    /// cost once, mirroring the executor's accounting exactly.
    fn trim_to_budget<S: PerformanceSource>(
        &self,
        executor: &Executor<S>,
        proposals: Vec<Configuration>,
    ) -> Vec<Configuration> {
        let Some(budget) = self.settings.budget else { return proposals };
        let remaining = budget.saturating_sub(executor.budget_used());
        let dedup = executor.cache_enabled();
        let mut seen: HashSet<String> = HashSet::new();
        let mut new_runs = 0u64;
        let mut out = Vec::with_capacity(proposals.len());
        for config in proposals {
            let costs_budget =
                !executor.is_cached(&config) && (!dedup || seen.insert(config.canonical_key()));
            if costs_budget {
                if new_runs == remaining {
                    break;
                }
                new_runs += 1;
            }
            out.push(config);
        }
        out
    }

    pub fn run<S: PerformanceSource>(
        &self,
        kind: SamplerKind,
        executor: &mut Executor<S>,
        progress: &mut dyn FnMut(&GenerationSummary),
    ) -> Result<TuneResult, SamplerError> {
        let dim = self.space.dimensionality();
        let n = self.settings.effective_population(dim);
        let streams = StreamFactory::new(self.settings.seed);
        let evolutionary = !matches!(kind, SamplerKind::Random);

        let seed_config = self.space.default_configuration();
        let seed_eval = executor.evaluate(&seed_config, 0)?;
        let baseline = seed_eval.perf;

        let mut top = TopTracker::default();
        let mut best: Option<RankedEntry> = None;
        // The ranking mirrors the journal, so the seed always joins it.
        // `best` is the search incumbent: the evolutionary samplers start
        // from the default, random search reports its best *draw*.
        if let Some(p) = baseline {
            let entry = RankedEntry { config: seed_config.clone(), performance: p, generation: 0 };
            top.offer(&self.policy, entry.clone());
            if evolutionary {
                best = Some(entry);
            }
        }

        let mut population: Vec<Configuration> = Vec::new();
        let mut generations: Vec<GenerationSummary> = Vec::new();
        let mut stall = 0u32;
        let mut termination = TerminationReason::MaxGenerations;

        for g in 1..=self.settings.max_generations {
            if let (Some(size), Some(distinct)) =
                (self.space.space_size_u64(), executor.distinct_evaluated())
            {
                if distinct >= size {
                    termination = TerminationReason::SpaceExhausted;
                    break;
                }
            }
            if let Some(budget) = self.settings.budget {
                if executor.budget_used() >= budget {
                    termination = TerminationReason::BudgetExhausted;
                    break;
                }
            }

            let proposals = if !evolutionary || g == 1 {
                let mut out = Vec::with_capacity(n);
                for m in 0..n {
                    let mut rng = streams.stream(domain::SAMPLE, g, m as u64);
                    out.push(evolve::random_valid(
                        self.space,
                        self.rules,
                        &mut rng,
                        self.settings.random_rejection_limit,
                    )?);
                }
                out
            } else {
                let mut subset_rng = streams.stream(domain::SUBSET, g, 0);
                let plan = evolve::plan_generation(
                    &mut subset_rng,
                    dim,
                    self.settings.crossover_fraction,
                    self.settings.mutation_fraction,
                );
                let best_config = best.as_ref().map(|b| b.config.clone());
                let mut out = Vec::with_capacity(n);
                for m in 0..n {
                    let parent = &population[m % population.len()];
                    // With no measured best yet, crossover toward the parent
                    // is a no-op and only mutation acts.
                    let target = best_config.as_ref().unwrap_or(parent);
                    let mut child_rng = streams.stream(domain::CHILD, g, m as u64);
                    out.push(evolve::propose_child(
                        self.space,
                        self.rules,
                        target,
                        parent,
                        &plan,
                        &mut child_rng,
                        self.settings.invalid_retry_limit,
                        self.settings.random_rejection_limit,
                    )?);
                }
                out
            };

            let trimmed = self.trim_to_budget(executor, proposals);
            if trimmed.is_empty() {
                termination = TerminationReason::BudgetExhausted;
                break;
            }

            let results = executor.evaluate_batch(&trimmed, g)?;
            // Counters come from the records, not this process's cache
            // state: a record minted at this generation is budget charged
            // here whether it was measured now or preloaded from a journal,
            // so a resumed run reports the trajectory it replays.
            let (evaluated, cache_hits) = if executor.cache_enabled() {
                let fresh: HashSet<String> = results
                    .iter()
                    .filter(|e| e.record.generation == g)
                    .map(|e| e.record.config.canonical_key())
                    .collect();
                (fresh.len() as u64, results.len() - fresh.len())
            } else {
                (results.len() as u64, 0)
            };

            let prev_best = best.as_ref().map(|b| b.performance);
            let mut accepted_children: Vec<Configuration> = Vec::new();
            for (m, ev) in results.iter().enumerate() {
                let Some(perf) = ev.perf else { continue };
                let entry = RankedEntry {
                    config: ev.record.config.clone(),
                    performance: perf,
                    generation: g,
                };
                // Every measurement joins the ranking, accepted or not,
                // keeping the top list consistent with the journal.
                top.offer(&self.policy, entry.clone());
                let accepted = match &best {
                    // The initial population is admitted wholesale, and any
                    // measurement beats having no incumbent at all.
                    _ if g == 1 => true,
                    None => true,
                    Some(b) => match kind {
                        SamplerKind::Random => true,
                        SamplerKind::Ga => self.policy.better(perf, b.performance),
                        SamplerKind::Emcmc => {
                            let mut rng = streams.stream(domain::ACCEPT, g, m as u64);
                            self.policy.accept(&mut rng, b.performance, perf)?.accepted
                        }
                    },
                };
                if !accepted {
                    continue;
                }
                accepted_children.push(ev.record.config.clone());
                if best.as_ref().map_or(true, |b| self.policy.better(perf, b.performance)) {
                    best = Some(entry);
                }
            }

            if evolutionary {
                if g == 1 {
                    population = results.iter().map(|e| e.record.config.clone()).collect();
                } else if !accepted_children.is_empty() {
                    // Accepted children become the parents, cycled round-robin
                    // to keep the population size constant. A generation with
                    // no acceptances evolves the previous population again.
                    let k = accepted_children.len();
                    population = (0..n).map(|i| accepted_children[i % k].clone()).collect();
                }
            }

            let new_best = best.as_ref().map(|b| b.performance);
            let improvement = match (prev_best, new_best) {
                (Some(p), Some(q)) => Some(self.policy.relative_improvement(p, q)),
                _ => None,
            };
            let improvement_vs_seed = match (baseline, new_best) {
                (Some(p), Some(q)) => Some(self.policy.relative_improvement(p, q)),
                _ => None,
            };
            let summary = GenerationSummary {
                generation: g,
                population: results.iter().map(|e| e.record.config.clone()).collect(),
                accepted: accepted_children.clone(),
                best_config: best.as_ref().map(|b| b.config.clone()),
                best_performance: new_best,
                improvement,
                improvement_vs_seed,
                evaluated,
                cache_hits,
            };
            progress(&summary);
            generations.push(summary);

            if evolutionary && g >= 2 && self.settings.min_improvement > 0.0 {
                match improvement {
                    Some(imp) if imp < self.settings.min_improvement => {
                        stall += 1;
                        if stall >= 2 {
                            termination = TerminationReason::Stalled;
                            break;
                        }
                    }
                    Some(_) => stall = 0,
                    None => {}
                }
            }
        }

        let result = TuneResult {
            sampler: kind,
            seed: self.settings.seed,
            baseline,
            best: best.clone(),
            top: top.finish(&self.policy, self.settings.top_k),
            generations,
            evaluations: executor.budget_used(),
            termination,
        };
        executor.append_end(&RunSummary {
            best_performance: best.map(|b| b.performance),
            evaluations: result.evaluations,
            termination: termination.to_string(),
        })?;
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{
        EvalStatus, LandscapeKind, LandscapeOptions, SourceOutcome, SyntheticLandscape,
    };
    use crate::space::synthetic_grid_space;

    struct Constant(f64);

    impl PerformanceSource for Constant {
        fn run(&self, _: &Configuration) -> Result<SourceOutcome, ExecutorError> {
            Ok(SourceOutcome::pure(self.0))
        }

        fn fingerprint(&self) -> String {
            format!("constant:{}", self.0)
        }
    }

    fn landscape_executor(
        space: &ConfigurationSpace,
        seed: u64,
    ) -> Executor<SyntheticLandscape> {
        let source = SyntheticLandscape::new(
            LandscapeKind::SeparableQuadratic,
            space,
            LandscapeOptions { seed, noise: 0.0 },
        )
        .unwrap();
        Executor::new(source)
    }

    #[test]
    fn emcmc_improves_on_the_default() {
        let space = synthetic_grid_space("g", 4, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 3,
            budget: Some(80),
            min_improvement: 0.0,
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = landscape_executor(&space, 3);
        let result = tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap();

        let baseline = result.baseline.unwrap();
        let best = result.best.as_ref().unwrap();
        assert!(best.performance <= baseline, "{} vs {baseline}", best.performance);
        assert!(result.evaluations <= 80);
        assert_eq!(result.top.first().map(|e| e.config.canonical_key()),
                   result.best.as_ref().map(|e| e.config.canonical_key()));
    }

    #[test]
    fn budget_is_spent_exactly() {
        let space = synthetic_grid_space("g", 4, 6).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 5,
            budget: Some(17),
            min_improvement: 0.0,
            max_generations: 10_000,
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = landscape_executor(&space, 5);
        let result = tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap();
        assert_eq!(result.termination, TerminationReason::BudgetExhausted);
        assert_eq!(result.evaluations, 17);
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let space = synthetic_grid_space("g", 3, 5).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 11,
            budget: Some(40),
            min_improvement: 0.0,
            ..SamplerSettings::default()
        };
        let run = || {
            let tuner = Tuner::new(&space, &rules, settings.clone()).unwrap();
            let mut executor = landscape_executor(&space, 11);
            tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(
            a.best.as_ref().map(|e| e.config.canonical_key()),
            b.best.as_ref().map(|e| e.config.canonical_key())
        );
        assert_eq!(a.generations, b.generations);
    }

    #[test]
    fn random_with_budget_one_reports_that_draw() {
        let space = synthetic_grid_space("g", 4, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 9,
            budget: Some(1),
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = landscape_executor(&space, 9);
        let result = tuner.run(SamplerKind::Random, &mut executor, &mut |_| {}).unwrap();
        assert_eq!(result.evaluations, 1);
        assert!(result.baseline.is_some(), "seed still measured as the baseline");
        let best = result.best.unwrap();
        assert_eq!(best.generation, 1, "best is the single drawn configuration");
    }

    #[test]
    fn tiny_space_terminates_as_exhausted() {
        let space = synthetic_grid_space("g", 1, 3).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 2,
            budget: Some(1_000),
            max_generations: 1_000,
            min_improvement: 0.0,
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = landscape_executor(&space, 2);
        let result = tuner.run(SamplerKind::Random, &mut executor, &mut |_| {}).unwrap();
        assert_eq!(result.termination, TerminationReason::SpaceExhausted);
        assert_eq!(executor.distinct_evaluated(), Some(3));
    }

    #[test]
    fn full_budget_random_search_finds_the_optimum() {
        // Budget equal to the space size: caching makes repeat draws free,
        // so the search measures every configuration and the reported best
        // is the true optimum.
        let space = synthetic_grid_space("g", 3, 3).unwrap();
        let rules = RuleSet::empty(&space);
        for seed in 1..=10u64 {
            let settings = SamplerSettings {
                seed,
                budget: Some(27),
                min_improvement: 0.0,
                ..SamplerSettings::default()
            };
            let tuner = Tuner::new(&space, &rules, settings).unwrap();
            let mut executor = landscape_executor(&space, seed);
            let (_, optimum) =
                crate::executor::exhaustive_optimum(&space, executor.source(), 27).unwrap();
            let result = tuner.run(SamplerKind::Random, &mut executor, &mut |_| {}).unwrap();
            assert_eq!(result.best.map(|b| b.performance), Some(optimum), "seed {seed}");
            assert_eq!(result.termination, TerminationReason::SpaceExhausted);
        }
    }

    #[test]
    fn greedy_search_masters_a_convex_landscape_quickly() {
        // Separable quadratic has no local traps, so ten generations of
        // greedy crossover toward the incumbent reach the exact optimum.
        let space = synthetic_grid_space("g", 3, 3).unwrap();
        let rules = RuleSet::empty(&space);
        for seed in 1..=10u64 {
            let settings = SamplerSettings {
                seed,
                max_generations: 10,
                min_improvement: 0.0,
                ..SamplerSettings::default()
            };
            let tuner = Tuner::new(&space, &rules, settings).unwrap();
            let mut executor = landscape_executor(&space, seed);
            let (_, optimum) =
                crate::executor::exhaustive_optimum(&space, executor.source(), 27).unwrap();
            let result = tuner.run(SamplerKind::Ga, &mut executor, &mut |_| {}).unwrap();
            assert_eq!(result.best.map(|b| b.performance), Some(optimum), "seed {seed}");
        }
    }

    #[test]
    fn flat_performance_stalls_after_two_generations() {
        let space = synthetic_grid_space("g", 3, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings { seed: 7, ..SamplerSettings::default() };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = Executor::new(Constant(100.0));
        let result = tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap();
        assert_eq!(result.termination, TerminationReason::Stalled);
        assert_eq!(result.generations.len(), 3, "baseline generation plus two flat ones");
    }

    #[test]
    fn greedy_sampler_rejects_non_improvements() {
        let space = synthetic_grid_space("g", 3, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings { seed: 7, ..SamplerSettings::default() };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = Executor::new(Constant(100.0));
        let result = tuner.run(SamplerKind::Ga, &mut executor, &mut |_| {}).unwrap();
        let accepted: Vec<usize> = result.generations.iter().map(|s| s.accepted.len()).collect();
        assert!(accepted[0] > 0, "initial population is admitted");
        assert!(accepted[1..].iter().all(|&a| a == 0), "flat children never accepted: {accepted:?}");
    }

    #[test]
    fn zero_generations_returns_the_seed() {
        let space = synthetic_grid_space("g", 3, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let settings =
            SamplerSettings { seed: 1, max_generations: 0, ..SamplerSettings::default() };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = landscape_executor(&space, 1);
        let result = tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap();
        let best = result.best.unwrap();
        assert_eq!(best.config, space.default_configuration());
        assert_eq!(best.generation, 0);
        assert_eq!(result.evaluations, 0, "the seed run is free");
        assert_eq!(result.termination, TerminationReason::MaxGenerations);
        assert!(result.generations.is_empty());
    }

    #[test]
    fn ranking_covers_every_measured_configuration() {
        let space = synthetic_grid_space("g", 3, 4).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 13,
            budget: Some(40),
            min_improvement: 0.0,
            top_k: 1_000,
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = landscape_executor(&space, 13);
        // Greedy acceptance rejects most children; they must still rank.
        let result = tuner.run(SamplerKind::Ga, &mut executor, &mut |_| {}).unwrap();
        assert_eq!(Some(result.top.len() as u64), executor.distinct_evaluated());
        for pair in result.top.windows(2) {
            assert!(pair[0].performance <= pair[1].performance, "ranking is sorted");
        }
        assert_eq!(
            result.top.first().map(|e| e.config.canonical_key()),
            result.best.as_ref().map(|e| e.config.canonical_key())
        );
    }

    #[test]
    fn settings_validation_catches_bad_fractions() {
        let space = synthetic_grid_space("g", 2, 3).unwrap();
        let rules = RuleSet::empty(&space);
        for bad in [
            SamplerSettings { crossover_fraction: 1.5, ..SamplerSettings::default() },
            SamplerSettings { mutation_fraction: -0.1, ..SamplerSettings::default() },
            SamplerSettings { sigma: 0.0, ..SamplerSettings::default() },
            SamplerSettings { population: Some(0), ..SamplerSettings::default() },
            SamplerSettings { budget: Some(0), ..SamplerSettings::default() },
            SamplerSettings { top_k: 0, ..SamplerSettings::default() },
        ] {
            assert!(Tuner::new(&space, &rules, bad).is_err());
        }
    }

    #[test]
    fn maximize_direction_prefers_larger_performance() {
        let space = synthetic_grid_space("g", 3, 4).unwrap();
        let rules = RuleSet::empty(&space);

        struct Inverted(SyntheticLandscape);
        impl PerformanceSource for Inverted {
            fn run(&self, c: &Configuration) -> Result<SourceOutcome, ExecutorError> {
                let out = self.0.run(c)?;
                Ok(SourceOutcome::pure(1000.0 - out.performance.unwrap()))
            }
            fn fingerprint(&self) -> String {
                format!("inverted:{}", self.0.fingerprint())
            }
        }

        let settings = SamplerSettings {
            seed: 4,
            budget: Some(60),
            min_improvement: 0.0,
            direction: Direction::Maximize,
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let source = Inverted(
            SyntheticLandscape::new(
                LandscapeKind::SeparableQuadratic,
                &space,
                LandscapeOptions { seed: 4, noise: 0.0 },
            )
            .unwrap(),
        );
        let mut executor = Executor::new(source);
        let result = tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap();
        let best = result.best.unwrap();
        assert!(best.performance >= result.baseline.unwrap());
    }

    #[test]
    fn failed_seed_still_produces_a_best() {
        struct FailDefault { space: ConfigurationSpace }
        impl PerformanceSource for FailDefault {
            fn run(&self, c: &Configuration) -> Result<SourceOutcome, ExecutorError> {
                if *c == self.space.default_configuration() {
                    return Ok(SourceOutcome {
                        status: EvalStatus::Failed,
                        repeats: vec![],
                        performance: None,
                        wall_clock_secs: 0.0,
                        timestamp_epoch_secs: None,
                        stderr: Some("default crashes".into()),
                    });
                }
                let x = c.get("p00").and_then(|v| v.as_i64()).unwrap_or(0) as f64;
                Ok(SourceOutcome::pure(50.0 + x))
            }
            fn fingerprint(&self) -> String {
                "fail-default".into()
            }
        }

        let space = synthetic_grid_space("g", 2, 5).unwrap();
        let rules = RuleSet::empty(&space);
        let settings = SamplerSettings {
            seed: 6,
            budget: Some(30),
            min_improvement: 0.0,
            ..SamplerSettings::default()
        };
        let tuner = Tuner::new(&space, &rules, settings).unwrap();
        let mut executor = Executor::new(FailDefault { space: space.clone() });
        let result = tuner.run(SamplerKind::Emcmc, &mut executor, &mut |_| {}).unwrap();
        assert_eq!(result.baseline, None);
        assert!(result.best.is_some(), "search recovers from an unmeasurable default");
    }
}
