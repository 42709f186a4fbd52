//! Discretized configuration spaces.
//!
//! A space is an ordered list of typed parameters, each with a finite
//! candidate list that always contains the parameter's default. Search only
//! sees parameters flagged relevant; irrelevant ones stay in the space (rules
//! may still reference them through their defaults) but contribute nothing to
//! dimensionality or size.

use crate::value::{ParamKind, Value};
use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("failed to read space file: {0}")]
    Io(#[from] std::io::Error),
    #[error("space file is not valid TOML: {0}")]
    Parse(String),
    #[error("space schema error: {0}")]
    Schema(String),
    #[error("parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },
    #[error("parameter `{name}`: discretization collapsed to a single value")]
    DegenerateRange { name: String },
    #[error("unknown parameter `{name}`")]
    UnknownParameter { name: String },
}

/// One tunable parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub kind: ParamKind,
    pub default: Value,
    /// Finite candidate list; contains `default`, no duplicates.
    pub candidates: Vec<Value>,
    /// Irrelevant parameters are excluded from sampling and sizing.
    pub relevant: bool,
    pub unit: Option<String>,
}

impl ParameterSpec {
    /// Index of `value` in the candidate list, by exact equality.
    pub fn candidate_index(&self, value: &Value) -> Option<usize> {
        self.candidates.iter().position(|c| c == value)
    }

    pub fn default_index(&self) -> usize {
        // Invariant: default is always a candidate.
        self.candidate_index(&self.default).expect("default must be a candidate")
    }
}

/// A full assignment of the space's relevant parameters.
///
/// Assignments are kept sorted by name so that serialized forms, cache keys,
/// and journal lines are canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Name of the space this configuration belongs to.
    pub space: String,
    pub values: BTreeMap<String, Value>,
}

impl Configuration {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    /// Canonical identity string: space name plus the sorted assignment map.
    /// Two configurations are the same point iff their keys are equal.
    pub fn canonical_key(&self) -> String {
        let body = serde_json::to_string(&self.values).expect("value maps always serialize");
        format!("{}|{}", self.space, body)
    }

    /// Parameter names where this configuration differs from the space default.
    pub fn diff_from_default<'a>(&'a self, space: &'a ConfigurationSpace) -> Vec<&'a str> {
        self.values
            .iter()
            .filter(|(name, value)| {
                space.get(name).map(|p| &p.default != *value).unwrap_or(false)
            })
            .map(|(name, _)| name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc", into = "SpaceDoc")]
pub struct ConfigurationSpace {
    name: String,
    parameters: Vec<ParameterSpec>,
}

impl ConfigurationSpace {
    /// Validates the schema invariants: unique names, non-empty candidate
    /// lists containing the default, kind-consistent finite values, and at
    /// least one relevant parameter.
    pub fn new(name: String, parameters: Vec<ParameterSpec>) -> Result<Self, SpaceError> {
        if name.is_empty() {
            return Err(SpaceError::Schema("space name must be non-empty".into()));
        }
        if parameters.is_empty() {
            return Err(SpaceError::Schema("space declares no parameters".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &parameters {
            if p.name.is_empty() || p.name.contains(['=', '\n']) || p.name.contains(char::is_whitespace) {
                return Err(SpaceError::Schema(format!(
                    "parameter name {:?} must be non-empty and free of whitespace and '='",
                    p.name
                )));
            }
            if !seen.insert(p.name.clone()) {
                return Err(SpaceError::Schema(format!("duplicate parameter `{}`", p.name)));
            }
            if p.candidates.is_empty() {
                return Err(SpaceError::Parameter {
                    name: p.name.clone(),
                    reason: "candidate list is empty".into(),
                });
            }
            for v in p.candidates.iter().chain(std::iter::once(&p.default)) {
                if !v.matches_kind(p.kind) {
                    return Err(SpaceError::Parameter {
                        name: p.name.clone(),
                        reason: format!("value {v} does not match declared kind {}", p.kind),
                    });
                }
                if !v.is_finite() {
                    return Err(SpaceError::Parameter {
                        name: p.name.clone(),
                        reason: "non-finite value".into(),
                    });
                }
                if let Value::Str(s) = v {
                    if s.contains('\n') {
                        return Err(SpaceError::Parameter {
                            name: p.name.clone(),
                            reason: "string values must not contain newlines".into(),
                        });
                    }
                }
            }
            for (i, v) in p.candidates.iter().enumerate() {
                if p.candidates[..i].contains(v) {
                    return Err(SpaceError::Parameter {
                        name: p.name.clone(),
                        reason: format!("duplicate candidate {v}"),
                    });
                }
            }
            if p.candidate_index(&p.default).is_none() {
                return Err(SpaceError::Parameter {
                    name: p.name.clone(),
                    reason: format!("default {} is not among the candidates", p.default),
                });
            }
        }
        let space = ConfigurationSpace { name, parameters };
        if space.dimensionality() == 0 {
            return Err(SpaceError::Schema("space has no relevant parameters".into()));
        }
        Ok(space)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &[ParameterSpec] {
        &self.parameters
    }

    pub fn get(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Relevant parameters in declaration order.
    pub fn relevant(&self) -> impl Iterator<Item = &ParameterSpec> {
        self.parameters.iter().filter(|p| p.relevant)
    }

    /// Number of relevant parameters. Always at least 1.
    pub fn dimensionality(&self) -> usize {
        self.relevant().count()
    }

    /// Exact number of distinct configurations: the product of candidate
    /// counts over relevant parameters.
    pub fn space_size(&self) -> BigUint {
        let mut size = BigUint::from(1u32);
        for p in self.relevant() {
            size *= BigUint::from(p.candidates.len());
        }
        size
    }

    /// `space_size()` when it fits in a machine word; spaces of real systems
    /// rarely do, synthetic test spaces always do.
    pub fn space_size_u64(&self) -> Option<u64> {
        u64::try_from(self.space_size()).ok()
    }

    pub fn default_configuration(&self) -> Configuration {
        let values = self
            .relevant()
            .map(|p| (p.name.clone(), p.default.clone()))
            .collect();
        Configuration { space: self.name.clone(), values }
    }

    /// Uniform draw: each relevant parameter gets an independently uniform
    /// candidate.
    pub fn random_configuration<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let values = self
            .relevant()
            .map(|p| {
                let idx = rng.gen_range(0..p.candidates.len());
                (p.name.clone(), p.candidates[idx].clone())
            })
            .collect();
        Configuration { space: self.name.clone(), values }
    }

    /// All configurations in mixed-radix order. Intended for spaces small
    /// enough to enumerate; the iterator is lazy so callers set the limit.
    pub fn enumerate(&self) -> SpaceEnumerator<'_> {
        SpaceEnumerator {
            space: self,
            relevant: self.relevant().collect(),
            counters: vec![0; self.dimensionality()],
            done: false,
        }
    }

    /// Builds a configuration from explicit assignments, filling every
    /// unassigned relevant parameter with its default. Unknown names,
    /// assignments to irrelevant parameters, kind mismatches, and values
    /// outside the candidate list are all rejected.
    pub fn configuration_from_values(
        &self,
        assignments: BTreeMap<String, Value>,
    ) -> Result<Configuration, SpaceError> {
        let mut values = BTreeMap::new();
        for (name, raw) in assignments {
            let spec = self
                .get(&name)
                .ok_or(SpaceError::UnknownParameter { name: name.clone() })?;
            if !spec.relevant {
                return Err(SpaceError::Parameter {
                    name,
                    reason: "parameter is not relevant in this space".into(),
                });
            }
            let value = raw.canonicalize(spec.kind);
            if spec.candidate_index(&value).is_none() {
                return Err(SpaceError::Parameter {
                    name,
                    reason: format!("value {value} is not among the candidates"),
                });
            }
            values.insert(spec.name.clone(), value);
        }
        for p in self.relevant() {
            values
                .entry(p.name.clone())
                .or_insert_with(|| p.default.clone());
        }
        Ok(Configuration { space: self.name.clone(), values })
    }
}

/// Lazy mixed-radix enumeration of a space.
pub struct SpaceEnumerator<'a> {
    space: &'a ConfigurationSpace,
    relevant: Vec<&'a ParameterSpec>,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for SpaceEnumerator<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let values = self
            .relevant
            .iter()
            .zip(&self.counters)
            .map(|(p, &i)| (p.name.clone(), p.candidates[i].clone()))
            .collect();
        // Advance the least-significant position; carry leftward.
        let mut pos = self.counters.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.counters[pos] += 1;
            if self.counters[pos] < self.relevant[pos].candidates.len() {
                break;
            }
            self.counters[pos] = 0;
        }
        Some(Configuration { space: self.space.name.clone(), values })
    }
}

/// Evenly spaced candidates over `[default*(1-percent), default*(1+percent)]`.
///
/// The grid always contains the exact default: the grid point nearest to it
/// is replaced, which also covers even counts where the midpoint is off-grid.
/// Integer grids are rounded half away from zero and deduplicated; a grid
/// that collapses to a single value (for `count >= 2`) is an error because
/// the parameter would no longer be tunable.
pub fn discretize_numeric(
    name: &str,
    kind: ParamKind,
    default: &Value,
    percent: f64,
    count: usize,
) -> Result<Vec<Value>, SpaceError> {
    if !matches!(kind, ParamKind::Integer | ParamKind::Float) {
        return Err(SpaceError::Parameter {
            name: name.into(),
            reason: format!("range discretization applies to numeric kinds, not {kind}"),
        });
    }
    if !(percent > 0.0 && percent.is_finite()) {
        return Err(SpaceError::Parameter {
            name: name.into(),
            reason: "range percent must be positive and finite".into(),
        });
    }
    if count == 0 {
        return Err(SpaceError::Parameter {
            name: name.into(),
            reason: "range count must be at least 1".into(),
        });
    }
    let d = default.as_f64().ok_or_else(|| SpaceError::Parameter {
        name: name.into(),
        reason: "range discretization needs a numeric default".into(),
    })?;
    let (lo, hi) = {
        let a = d * (1.0 - percent);
        let b = d * (1.0 + percent);
        if a <= b { (a, b) } else { (b, a) }
    };
    let mut grid: Vec<f64> = if count == 1 {
        vec![d]
    } else {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    };
    // Force the exact default onto the grid.
    let nearest = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - d).abs().partial_cmp(&(*b - d).abs()).expect("finite grid")
        })
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    grid[nearest] = d;

    let values = match kind {
        ParamKind::Integer => {
            let mut ints: Vec<i64> = grid.iter().map(|v| v.round() as i64).collect();
            ints.sort_unstable();
            ints.dedup();
            ints.into_iter().map(Value::Int).collect::<Vec<_>>()
        }
        ParamKind::Float => {
            let mut floats = grid;
            floats.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
            floats.dedup();
            floats.into_iter().map(Value::Float).collect::<Vec<_>>()
        }
        _ => unreachable!(),
    };
    if count >= 2 && values.len() < 2 {
        return Err(SpaceError::DegenerateRange { name: name.into() });
    }
    Ok(values)
}

/// Builds an all-integer grid space: `params` relevant parameters, each with
/// candidates `0..levels` and the middle candidate as default. This is the
/// shape the synthetic landscapes and the sampler comparisons run on.
pub fn synthetic_grid_space(
    name: &str,
    params: usize,
    levels: usize,
) -> Result<ConfigurationSpace, SpaceError> {
    let parameters = (0..params)
        .map(|i| ParameterSpec {
            name: format!("p{i:02}"),
            kind: ParamKind::Integer,
            default: Value::Int((levels / 2) as i64),
            candidates: (0..levels).map(|v| Value::Int(v as i64)).collect(),
            relevant: true,
            unit: None,
        })
        .collect();
    ConfigurationSpace::new(name.into(), parameters)
}

// Wire format. `range` expands through `discretize_numeric`; saving always
// writes explicit candidates.

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpaceDoc {
    name: String,
    parameters: Vec<ParamDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamDoc {
    name: String,
    kind: ParamKind,
    default: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    range: Option<RangeSugar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relevant: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RangeSugar {
    percent: f64,
    count: usize,
}

impl TryFrom<SpaceDoc> for ConfigurationSpace {
    type Error = SpaceError;

    fn try_from(doc: SpaceDoc) -> Result<Self, SpaceError> {
        let mut parameters = Vec::with_capacity(doc.parameters.len());
        for p in doc.parameters {
            let default = p.default.canonicalize(p.kind);
            let candidates = match (p.candidates, p.range) {
                (Some(_), Some(_)) => {
                    return Err(SpaceError::Parameter {
                        name: p.name,
                        reason: "give either candidates or range, not both".into(),
                    })
                }
                (None, None) => {
                    return Err(SpaceError::Parameter {
                        name: p.name,
                        reason: "needs candidates or range".into(),
                    })
                }
                (Some(c), None) => c.into_iter().map(|v| v.canonicalize(p.kind)).collect(),
                (None, Some(r)) => {
                    discretize_numeric(&p.name, p.kind, &default, r.percent, r.count)?
                }
            };
            parameters.push(ParameterSpec {
                name: p.name,
                kind: p.kind,
                default,
                candidates,
                relevant: p.relevant.unwrap_or(true),
                unit: p.unit,
            });
        }
        ConfigurationSpace::new(doc.name, parameters)
    }
}

impl From<ConfigurationSpace> for SpaceDoc {
    fn from(space: ConfigurationSpace) -> SpaceDoc {
        SpaceDoc {
            name: space.name,
            parameters: space
                .parameters
                .into_iter()
                .map(|p| ParamDoc {
                    name: p.name,
                    kind: p.kind,
                    default: p.default,
                    candidates: Some(p.candidates),
                    range: None,
                    relevant: Some(p.relevant),
                    unit: p.unit,
                })
                .collect(),
        }
    }
}

pub fn load_space(path: &Path) -> Result<ConfigurationSpace, SpaceError> {
    let text = std::fs::read_to_string(path)?;
    space_from_toml(&text)
}

pub fn space_from_toml(text: &str) -> Result<ConfigurationSpace, SpaceError> {
    let doc: SpaceDoc = toml::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
    ConfigurationSpace::try_from(doc)
}

pub fn space_to_toml(space: &ConfigurationSpace) -> String {
    toml::to_string_pretty(&SpaceDoc::from(space.clone()))
        .expect("a validated space always serializes")
}
