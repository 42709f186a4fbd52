//! Evolutionary proposal construction: crossover toward the incumbent best
//! plus random mutation, with validity-aware retries.

use super::SamplerError;
use crate::space::{Configuration, ConfigurationSpace, ParameterSpec};
use crate::validity::RuleSet;
use rand::Rng;

/// Parameters overwritten with the best configuration's values:
/// `ceil(fraction * dimensionality)`.
pub fn crossover_count(dimensionality: usize, fraction: f64) -> usize {
    ((fraction * dimensionality as f64).ceil() as usize).min(dimensionality)
}

/// Parameters re-randomized: `ceil(fraction * dimensionality)`, floored at
/// one so any positive fraction perturbs something. Zero fraction means no
/// mutation at all.
pub fn mutation_count(dimensionality: usize, fraction: f64) -> usize {
    if fraction <= 0.0 {
        return 0;
    }
    ((fraction * dimensionality as f64).ceil() as usize)
        .max(1)
        .min(dimensionality)
}

/// Index subsets shared by every child of one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionPlan {
    pub crossover: Vec<usize>,
    pub mutation: Vec<usize>,
}

/// Draws the crossover subset, then the mutation subset, from `rng`.
/// The subsets are independent and may overlap; mutation wins overlaps
/// because it is applied second.
pub fn plan_generation<R: Rng + ?Sized>(
    rng: &mut R,
    dimensionality: usize,
    crossover_fraction: f64,
    mutation_fraction: f64,
) -> EvolutionPlan {
    let crossover = draw_subset(rng, dimensionality, crossover_count(dimensionality, crossover_fraction));
    let mutation = draw_subset(rng, dimensionality, mutation_count(dimensionality, mutation_fraction));
    EvolutionPlan { crossover, mutation }
}

fn draw_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut indices = rand::seq::index::sample(rng, n, k.min(n)).into_vec();
    indices.sort_unstable();
    indices
}

fn build_child<R: Rng + ?Sized>(
    relevant: &[&ParameterSpec],
    best: &Configuration,
    parent: &Configuration,
    plan: &EvolutionPlan,
    rng: &mut R,
) -> Configuration {
    let mut child = parent.clone();
    for &i in &plan.crossover {
        let name = &relevant[i].name;
        if let Some(v) = best.values.get(name) {
            child.values.insert(name.clone(), v.clone());
        }
    }
    for &i in &plan.mutation {
        let spec = relevant[i];
        let pick = rng.gen_range(0..spec.candidates.len());
        child.values.insert(spec.name.clone(), spec.candidates[pick].clone());
    }
    child
}

/// Draws uniform random configurations until one passes the rules, erroring
/// after `rejection_limit` draws so over-constrained spaces fail loudly
/// instead of hanging.
pub fn random_valid<R: Rng + ?Sized>(
    space: &ConfigurationSpace,
    rules: &RuleSet,
    rng: &mut R,
    rejection_limit: u64,
) -> Result<Configuration, SamplerError> {
    for _ in 0..rejection_limit {
        let config = space.random_configuration(rng);
        if rules.check(&config).valid {
            return Ok(config);
        }
    }
    Err(SamplerError::ValidSampleExhausted { attempts: rejection_limit })
}

/// Produces one valid child of `parent`.
///
/// The crossover part is deterministic, so retries re-draw only the mutation
/// values. After `invalid_retry_limit` extra attempts the child is abandoned
/// for a fresh bounded random draw: progress is guaranteed whenever the
/// space has any reachable valid point.
pub fn propose_child<R: Rng + ?Sized>(
    space: &ConfigurationSpace,
    rules: &RuleSet,
    best: &Configuration,
    parent: &Configuration,
    plan: &EvolutionPlan,
    rng: &mut R,
    invalid_retry_limit: u32,
    rejection_limit: u64,
) -> Result<Configuration, SamplerError> {
    let relevant: Vec<&ParameterSpec> = space.relevant().collect();
    for _ in 0..=u64::from(invalid_retry_limit) {
        let child = build_child(&relevant, best, parent, plan, rng);
        if rules.check(&child).valid {
            return Ok(child);
        }
    }
    random_valid(space, rules, rng, rejection_limit)
}
