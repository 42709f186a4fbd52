//! Synthetic performance landscapes.
//!
//! These are pure functions over a space's candidate grid, used to calibrate
//! and regression-test the samplers against brute-force enumeration. Each
//! relevant parameter maps to a coordinate
//!
//! ```text
//! u = candidate_index / (candidates - 1)          in [0, 1]
//! y = (u - u_default) / max(u_default, 1 - u_default)
//! ```
//!
//! so y is 0 at the default and reaches +-1 at the grid edge farthest from
//! it. Costs are in arbitrary positive units around a base of 100; lower is
//! better.
//!
//! Closed forms, with `s = mean_i max(0, y_i)`:
//!
//! * `separable_quadratic`:   `100 + sum_i w_i * ((y_i - t_i)^2 - t_i^2)`.
//!   Cost at the all-default point is exactly 100. Weights `w_i` are seeded
//!   uniform in [1, 3]; each target `t_i` is the coordinate of a seeded
//!   random candidate, so the optimum `y = t` is on the grid.
//! * `pairwise_interaction`:  the separable form plus `sum_k J_k * y_a * y_b`
//!   over the disjoint pairs (0,1), (2,3), ...; couplings `J_k` are seeded
//!   with |J_k| in [1, 2]. Parameters left unpaired (odd tail) stay purely
//!   separable: resetting one changes cost by its solo term alone.
//! * `two_basin_deceptive`:   `100 - 12 * exp(-|y|^2 / 2) - 42 * s^2`.
//!   A wide shallow basin sits at the default; the global optimum is the
//!   all-max corner. Leaving the wide basin costs a few percent before the
//!   narrow funnel pays off, which defeats strictly greedy acceptance.
//! * `plateau_noise`:         `100 + noise * eta(config) - 35 * g(s)` with
//!   `g(s) = ((s - 0.3) / 0.7)^3` for `s > 0.3`, else 0. Most of the space
//!   is a flat plateau carrying seeded per-configuration noise `eta` in
//!   [-1, 1]; the funnel to the optimum opens past s = 0.3.
//!
//! All four scale their terms so costs stay strictly positive.

use crate::executor::{ExecutorError, PerformanceSource, SourceOutcome};
use crate::rng::{domain, splitmix64, StreamFactory};
use crate::space::{Configuration, ConfigurationSpace};
use crate::value::Value;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandscapeKind {
    SeparableQuadratic,
    PairwiseInteraction,
    TwoBasinDeceptive,
    PlateauNoise,
}

impl LandscapeKind {
    pub const ALL: [LandscapeKind; 4] = [
        LandscapeKind::SeparableQuadratic,
        LandscapeKind::PairwiseInteraction,
        LandscapeKind::TwoBasinDeceptive,
        LandscapeKind::PlateauNoise,
    ];
}

impl fmt::Display for LandscapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LandscapeKind::SeparableQuadratic => "separable_quadratic",
            LandscapeKind::PairwiseInteraction => "pairwise_interaction",
            LandscapeKind::TwoBasinDeceptive => "two_basin_deceptive",
            LandscapeKind::PlateauNoise => "plateau_noise",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for LandscapeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "separable_quadratic" => Ok(LandscapeKind::SeparableQuadratic),
            "pairwise_interaction" => Ok(LandscapeKind::PairwiseInteraction),
            "two_basin_deceptive" => Ok(LandscapeKind::TwoBasinDeceptive),
            "plateau_noise" => Ok(LandscapeKind::PlateauNoise),
            other => Err(format!(
                "unknown landscape `{other}` (separable_quadratic, pairwise_interaction, \
                 two_basin_deceptive, plateau_noise)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeOptions {
    /// Seed for the landscape's own shape and noise; independent of the
    /// sampler seed so paired sampler runs share one objective.
    pub seed: u64,
    /// Amplitude of the plateau noise term; 0 turns it off. Ignored by the
    /// other kinds.
    pub noise: f64,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        LandscapeOptions { seed: 0, noise: 0.5 }
    }
}

struct Axis {
    name: String,
    candidates: Vec<Value>,
    scale: f64,  // 1 / (candidates - 1); 0 for single-candidate axes
    u_default: f64,
    span: f64,   // max(u_default, 1 - u_default); 0 for single-candidate axes
}

impl Axis {
    fn coordinate(&self, index: usize) -> f64 {
        if self.span == 0.0 {
            return 0.0;
        }
        (index as f64 * self.scale - self.u_default) / self.span
    }
}

pub struct SyntheticLandscape {
    kind: LandscapeKind,
    options: LandscapeOptions,
    axes: Vec<Axis>,
    weights: Vec<f64>,
    targets: Vec<f64>,
    /// (first axis, second axis, coupling strength)
    couplings: Vec<(usize, usize, f64)>,
}

impl SyntheticLandscape {
    pub fn new(
        kind: LandscapeKind,
        space: &ConfigurationSpace,
        options: LandscapeOptions,
    ) -> Result<Self, ExecutorError> {
        if !options.noise.is_finite() || options.noise < 0.0 {
            return Err(ExecutorError::Landscape(
                "noise amplitude must be finite and non-negative".into(),
            ));
        }
        let axes: Vec<Axis> = space
            .relevant()
            .map(|p| {
                let m = p.candidates.len();
                let scale = if m > 1 { 1.0 / (m - 1) as f64 } else { 0.0 };
                let u_default = p.default_index() as f64 * scale;
                let span = if m > 1 { u_default.max(1.0 - u_default) } else { 0.0 };
                Axis {
                    name: p.name.clone(),
                    candidates: p.candidates.clone(),
                    scale,
                    u_default,
                    span,
                }
            })
            .collect();

        let streams = StreamFactory::new(options.seed);
        let n = axes.len();
        let mut weights: Vec<f64> = Vec::new();
        let mut targets: Vec<f64> = Vec::new();
        let mut couplings: Vec<(usize, usize, f64)> = Vec::new();

        if matches!(
            kind,
            LandscapeKind::SeparableQuadratic | LandscapeKind::PairwiseInteraction
        ) {
            for (i, axis) in axes.iter().enumerate() {
                let mut wr = streams.stream(domain::LANDSCAPE, 0, i as u64);
                weights.push(wr.gen_range(1.0..3.0));
                let mut tr = streams.stream(domain::LANDSCAPE, 1, i as u64);
                let t = if axis.candidates.len() > 1 {
                    axis.coordinate(tr.gen_range(0..axis.candidates.len()))
                } else {
                    0.0
                };
                targets.push(t);
            }
            if kind == LandscapeKind::PairwiseInteraction {
                for k in 0..n / 2 {
                    let mut jr = streams.stream(domain::LANDSCAPE, 2, k as u64);
                    let magnitude = jr.gen_range(1.0..2.0);
                    let sign = if jr.gen::<bool>() { 1.0 } else { -1.0 };
                    couplings.push((2 * k, 2 * k + 1, sign * magnitude));
                }
            }
            // Keep the global minimum comfortably positive.
            let pull: f64 = weights.iter().zip(&targets).map(|(w, t)| w * t * t).sum();
            let coupling_pull: f64 = couplings.iter().map(|(_, _, j)| j.abs()).sum();
            let worst = pull + coupling_pull;
            if worst > 80.0 {
                let shrink = 80.0 / worst;
                for w in &mut weights {
                    *w *= shrink;
                }
                for c in &mut couplings {
                    c.2 *= shrink;
                }
            }
        }

        Ok(SyntheticLandscape { kind, options, axes, weights, targets, couplings })
    }

    pub fn kind(&self) -> LandscapeKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    /// Solo cost contribution of axis `i` at coordinate `y`, for the
    /// separable and pairwise forms.
    pub fn solo_term(&self, i: usize, y: f64) -> f64 {
        let (w, t) = (self.weights[i], self.targets[i]);
        w * ((y - t) * (y - t) - t * t)
    }

    fn indices(&self, config: &Configuration) -> Result<Vec<usize>, ExecutorError> {
        self.axes
            .iter()
            .map(|axis| {
                let value = config.get(&axis.name).ok_or_else(|| {
                    ExecutorError::Landscape(format!("configuration misses `{}`", axis.name))
                })?;
                axis.candidates
                    .iter()
                    .position(|c| c == value)
                    .ok_or_else(|| {
                        ExecutorError::Landscape(format!(
                            "value {value} for `{}` is off the grid",
                            axis.name
                        ))
                    })
            })
            .collect()
    }

    /// Grid coordinates of a configuration, one per relevant parameter in
    /// space order.
    pub fn coordinates(&self, config: &Configuration) -> Result<Vec<f64>, ExecutorError> {
        Ok(self
            .indices(config)?
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis.coordinate(i))
            .collect())
    }

    fn noise_at(&self, indices: &[usize]) -> f64 {
        if self.options.noise == 0.0 {
            return 0.0;
        }
        // Fold the candidate indices into a per-configuration stream key.
        let mut key = splitmix64(self.options.seed ^ domain::NOISE ^ indices.len() as u64);
        for &i in indices {
            key = splitmix64(key ^ (i as u64).wrapping_add(0x9E37_79B9));
        }
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(key);
        self.options.noise * (rng.gen::<f64>() * 2.0 - 1.0)
    }

    /// The documented closed form. Pure: equal configurations always get
    /// equal costs, noise included.
    pub fn cost(&self, config: &Configuration) -> Result<f64, ExecutorError> {
        let indices = self.indices(config)?;
        let y: Vec<f64> = indices
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis.coordinate(i))
            .collect();
        let cost = match self.kind {
            LandscapeKind::SeparableQuadratic => {
                100.0
                    + y.iter()
                        .enumerate()
                        .map(|(i, &yi)| self.solo_term(i, yi))
                        .sum::<f64>()
            }
            LandscapeKind::PairwiseInteraction => {
                100.0
                    + y.iter()
                        .enumerate()
                        .map(|(i, &yi)| self.solo_term(i, yi))
                        .sum::<f64>()
                    + self
                        .couplings
                        .iter()
                        .map(|&(a, b, j)| j * y[a] * y[b])
                        .sum::<f64>()
            }
            LandscapeKind::TwoBasinDeceptive => {
                let norm2: f64 = y.iter().map(|v| v * v).sum();
                let s = positive_mean(&y);
                100.0 - 12.0 * (-norm2 / 2.0).exp() - 42.0 * s * s
            }
            LandscapeKind::PlateauNoise => {
                let s = positive_mean(&y);
                let g = if s > 0.3 {
                    let r = (s - 0.3) / 0.7;
                    r * r * r
                } else {
                    0.0
                };
                100.0 - 35.0 * g + self.noise_at(&indices)
            }
        };
        debug_assert!(cost > 0.0, "landscape costs stay positive");
        Ok(cost)
    }
}

fn positive_mean(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.iter().map(|v| v.max(0.0)).sum::<f64>() / y.len() as f64
}

impl PerformanceSource for SyntheticLandscape {
    fn run(&self, config: &Configuration) -> Result<SourceOutcome, ExecutorError> {
        Ok(SourceOutcome::pure(self.cost(config)?))
    }

    fn fingerprint(&self) -> String {
        format!(
            "landscape:{}:seed={}:noise={}",
            self.kind, self.options.seed, self.options.noise
        )
    }
}

/// Brute-force optimum by full enumeration. Refuses spaces above
/// `limit` configurations; ties break toward the first in enumeration
/// order, which is deterministic.
pub fn exhaustive_optimum<S: PerformanceSource>(
    space: &ConfigurationSpace,
    source: &S,
    limit: u64,
) -> Result<(Configuration, f64), ExecutorError> {
    let size = space.space_size_u64().filter(|&s| s <= limit).ok_or_else(|| {
        ExecutorError::Landscape(format!("space too large to enumerate (limit {limit})"))
    })?;
    let mut best: Option<(Configuration, f64)> = None;
    for config in space.enumerate() {
        let outcome = source.run(&config)?;
        let perf = outcome.performance.ok_or_else(|| {
            ExecutorError::Landscape("enumeration hit a failed evaluation".into())
        })?;
        if best.as_ref().map(|(_, b)| perf < *b).unwrap_or(true) {
            best = Some((config, perf));
        }
    }
    debug_assert!(size > 0);
    best.ok_or_else(|| ExecutorError::Landscape("empty space".into()))
}
