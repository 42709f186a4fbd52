//! Metropolis acceptance over relative performance.

use super::SamplerError;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Whether smaller or larger performance numbers win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Default for Direction {
    fn default() -> Self {
        Direction::Minimize
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minimize" | "min" => Ok(Direction::Minimize),
            "maximize" | "max" => Ok(Direction::Maximize),
            other => Err(format!("unknown direction `{other}` (minimize, maximize)")),
        }
    }
}

/// Probabilistic acceptance of a proposal against the current best.
///
/// The relative gap `delta = (best - proposal) / best` (sign flipped when
/// maximizing) is positive when the proposal improves on the best, and the
/// acceptance probability is `exp(sigma * delta)`: 1 at delta == 0, above 1
/// (certain acceptance) for improvements, decaying exponentially for
/// regressions. `sigma` sets how steep the decay is; at the default 50 a 2%
/// regression survives with probability `e^-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptancePolicy {
    pub sigma: f64,
    pub direction: Direction,
}

impl Default for AcceptancePolicy {
    fn default() -> Self {
        AcceptancePolicy { sigma: 50.0, direction: Direction::Minimize }
    }
}

/// Outcome of one acceptance test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptDecision {
    pub accepted: bool,
    pub delta: f64,
    pub probability: f64,
    pub draw: f64,
}

impl AcceptancePolicy {
    pub fn new(sigma: f64, direction: Direction) -> AcceptancePolicy {
        AcceptancePolicy { sigma, direction }
    }

    /// True when `a` is strictly better than `b` in this direction.
    pub fn better(&self, a: f64, b: f64) -> bool {
        match self.direction {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }

    /// Relative gap of `proposal` against `best`; positive is an
    /// improvement regardless of direction.
    pub fn delta(&self, best: f64, proposal: f64) -> Result<f64, SamplerError> {
        if !(best > 0.0) || !(proposal > 0.0) || !best.is_finite() || !proposal.is_finite() {
            return Err(SamplerError::NonPositivePerformance { best, proposal });
        }
        let d = (best - proposal) / best;
        Ok(match self.direction {
            Direction::Minimize => d,
            Direction::Maximize => -d,
        })
    }

    /// `exp(sigma * delta)`, deliberately uncapped: any value >= 1 means
    /// certain acceptance, and the monotone shape is what tests probe.
    pub fn acceptance_probability(&self, delta: f64) -> f64 {
        (self.sigma * delta).exp()
    }

    /// Runs the acceptance test, always consuming exactly one draw from
    /// `rng` so the stream position never depends on the outcome.
    pub fn accept<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        best: f64,
        proposal: f64,
    ) -> Result<AcceptDecision, SamplerError> {
        let delta = self.delta(best, proposal)?;
        let probability = self.acceptance_probability(delta);
        let draw: f64 = rng.gen();
        Ok(AcceptDecision { accepted: draw < probability, delta, probability, draw })
    }

    /// Relative improvement of `new` over `prev`, positive when `new` wins.
    /// Used for stall detection.
    pub fn relative_improvement(&self, prev: f64, new: f64) -> f64 {
        match self.direction {
            Direction::Minimize => (prev - new) / prev,
            Direction::Maximize => (new - prev) / prev,
        }
    }
}
