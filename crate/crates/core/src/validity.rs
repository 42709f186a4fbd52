//! Declarative validity rules.
//!
//! Rules are compiled against a space at load time: subjects must exist,
//! operand kinds must fit the rule, and `${NAME}` placeholders are resolved
//! to numbers from the rule file's `[externals]` table or, failing that, the
//! process environment. Checking never short-circuits; a report lists every
//! violated rule so a caller can fix a configuration in one pass.
//!
//! Subjects may reference irrelevant parameters. Configurations only assign
//! relevant ones, so the compiled set carries each subject's default as a
//! fallback; a rule over an irrelevant parameter evaluates against the value
//! the deployed system would actually see.

use crate::space::{ConfigurationSpace, Configuration, SpaceError};
use crate::value::{ParamKind, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidityError {
    #[error("failed to read rules file: {0}")]
    Io(#[from] std::io::Error),
    #[error("rules file is not valid TOML: {0}")]
    Parse(String),
    #[error("rule `{id}`: {reason}")]
    Malformed { id: String, reason: String },
    #[error("rule `{id}`: unknown parameter `{name}`")]
    UnknownSubject { id: String, name: String },
    #[error("external value `{name}` is not defined in the rules file or the environment")]
    UnresolvedExternal { name: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Predicate forms a rule can take. Operand fields written as `${NAME}` in
/// the rules file are already resolved to numbers here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RulePredicate {
    /// Numeric subject must satisfy `min <= v <= max` (either bound optional).
    Range { min: Option<f64>, max: Option<f64> },
    /// Integer subject must be divisible by `modulus`.
    MultipleOf { modulus: i64 },
    /// Subject must be one of `allowed`.
    EnumMember { allowed: Vec<Value> },
    /// `sum(coeffs[i] * subject[i]) <= bound`.
    LinearInequality { coeffs: Vec<f64>, bound: f64 },
    /// `subject[0] <= factor * subject[1]`.
    RatioBound { factor: f64 },
    /// When `subjects[0] == when`, `subjects[1]` must be in `one_of`.
    Requires { when: Value, one_of: Vec<Value> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRule {
    pub id: String,
    pub subjects: Vec<String>,
    pub message: String,
    #[serde(flatten)]
    pub predicate: RulePredicate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule_id: String,
    pub message: String,
}

/// Outcome of checking one configuration. `valid` holds exactly when
/// `violations` is empty.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Rules compiled against one space.
#[derive(Debug, Clone, Serialize)]
pub struct RuleSet {
    space: String,
    rules: Vec<ConstraintRule>,
    /// Defaults of every referenced subject; used when a configuration does
    /// not assign it (irrelevant parameters).
    fallbacks: BTreeMap<String, Value>,
}

impl RuleSet {
    /// A set with no rules: everything is valid.
    pub fn empty(space: &ConfigurationSpace) -> RuleSet {
        RuleSet { space: space.name().to_string(), rules: Vec::new(), fallbacks: BTreeMap::new() }
    }

    pub fn rules(&self) -> &[ConstraintRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn space_name(&self) -> &str {
        &self.space
    }

    fn value_of<'a>(&'a self, config: &'a Configuration, name: &str) -> &'a Value {
        config
            .get(name)
            .or_else(|| self.fallbacks.get(name))
            .expect("subjects are checked at compile time")
    }

    /// Evaluates every rule against `config`. Pure; no short-circuit.
    pub fn check(&self, config: &Configuration) -> ValidityReport {
        let mut violations = Vec::new();
        for rule in &self.rules {
            if let Some(detail) = self.violation_detail(rule, config) {
                violations.push(Violation {
                    rule_id: rule.id.clone(),
                    message: format!("{detail}: {}", rule.message),
                });
            }
        }
        ValidityReport { valid: violations.is_empty(), violations }
    }

    /// `Some(detail)` when `rule` is violated.
    fn violation_detail(&self, rule: &ConstraintRule, config: &Configuration) -> Option<String> {
        match &rule.predicate {
            RulePredicate::Range { min, max } => {
                let name = &rule.subjects[0];
                let v = self.value_of(config, name).as_f64().expect("checked numeric");
                if min.map(|m| v < m).unwrap_or(false) || max.map(|m| v > m).unwrap_or(false) {
                    let lo = min.map(|m| m.to_string()).unwrap_or_else(|| "-inf".into());
                    let hi = max.map(|m| m.to_string()).unwrap_or_else(|| "+inf".into());
                    Some(format!("{name}={v} outside [{lo}, {hi}]"))
                } else {
                    None
                }
            }
            RulePredicate::MultipleOf { modulus } => {
                let name = &rule.subjects[0];
                let v = self.value_of(config, name).as_i64().expect("checked integer");
                if v % modulus != 0 {
                    Some(format!("{name}={v} is not a multiple of {modulus}"))
                } else {
                    None
                }
            }
            RulePredicate::EnumMember { allowed } => {
                let name = &rule.subjects[0];
                let v = self.value_of(config, name);
                if allowed.contains(v) {
                    None
                } else {
                    Some(format!("{name}={v} is not an allowed value"))
                }
            }
            RulePredicate::LinearInequality { coeffs, bound } => {
                let sum: f64 = rule
                    .subjects
                    .iter()
                    .zip(coeffs)
                    .map(|(name, c)| {
                        c * self.value_of(config, name).as_f64().expect("checked numeric")
                    })
                    .sum();
                if sum > *bound {
                    Some(format!("weighted sum {sum} exceeds bound {bound}"))
                } else {
                    None
                }
            }
            RulePredicate::RatioBound { factor } => {
                let a = self.value_of(config, &rule.subjects[0]).as_f64().expect("numeric");
                let b = self.value_of(config, &rule.subjects[1]).as_f64().expect("numeric");
                if a > factor * b {
                    Some(format!(
                        "{}={a} exceeds {factor} * {}={b}",
                        rule.subjects[0], rule.subjects[1]
                    ))
                } else {
                    None
                }
            }
            RulePredicate::Requires { when, one_of } => {
                let a = self.value_of(config, &rule.subjects[0]);
                if a == when && !one_of.contains(self.value_of(config, &rule.subjects[1])) {
                    Some(format!(
                        "{}={} requires {} in {:?}",
                        rule.subjects[0],
                        when,
                        rule.subjects[1],
                        one_of.iter().map(|v| v.to_string()).collect::<Vec<_>>()
                    ))
                } else {
                    None
                }
            }
        }
    }
}

// Wire format. Operand positions that take a number also accept "${NAME}".

#[derive(Debug, Deserialize)]
struct RulesDoc {
    #[serde(default)]
    externals: BTreeMap<String, f64>,
    #[serde(default)]
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Deserialize)]
struct RuleDoc {
    id: String,
    kind: String,
    subjects: Vec<String>,
    message: Option<String>,
    min: Option<NumOrExternal>,
    max: Option<NumOrExternal>,
    modulus: Option<NumOrExternal>,
    coeffs: Option<Vec<NumOrExternal>>,
    bound: Option<NumOrExternal>,
    factor: Option<NumOrExternal>,
    allowed: Option<Vec<Value>>,
    when: Option<Value>,
    one_of: Option<Vec<Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NumOrExternal {
    Num(f64),
    External(String),
}

impl NumOrExternal {
    fn resolve(&self, externals: &BTreeMap<String, f64>) -> Result<f64, ValidityError> {
        match self {
            NumOrExternal::Num(n) => Ok(*n),
            NumOrExternal::External(raw) => {
                let name = raw
                    .strip_prefix("${")
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| ValidityError::UnresolvedExternal { name: raw.clone() })?;
                if let Some(v) = externals.get(name) {
                    return Ok(*v);
                }
                std::env::var(name)
                    .ok()
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| ValidityError::UnresolvedExternal { name: name.to_string() })
            }
        }
    }
}

pub fn load_rules(path: &Path, space: &ConfigurationSpace) -> Result<RuleSet, ValidityError> {
    let text = std::fs::read_to_string(path)?;
    rules_from_toml(&text, space)
}

pub fn rules_from_toml(text: &str, space: &ConfigurationSpace) -> Result<RuleSet, ValidityError> {
    let doc: RulesDoc = toml::from_str(text).map_err(|e| ValidityError::Parse(e.to_string()))?;
    compile(doc, space)
}

fn compile(doc: RulesDoc, space: &ConfigurationSpace) -> Result<RuleSet, ValidityError> {
    let mut rules = Vec::with_capacity(doc.rules.len());
    let mut fallbacks = BTreeMap::new();
    let mut ids = std::collections::HashSet::new();

    for rd in doc.rules {
        let id = rd.id.clone();
        if !ids.insert(id.clone()) {
            return Err(ValidityError::Malformed { id, reason: "duplicate rule id".into() });
        }
        let malformed = |reason: &str| ValidityError::Malformed {
            id: id.clone(),
            reason: reason.to_string(),
        };
        if rd.subjects.is_empty() {
            return Err(malformed("needs at least one subject"));
        }
        let mut kinds = Vec::with_capacity(rd.subjects.len());
        for name in &rd.subjects {
            let spec = space.get(name).ok_or_else(|| ValidityError::UnknownSubject {
                id: id.clone(),
                name: name.clone(),
            })?;
            fallbacks.insert(spec.name.clone(), spec.default.clone());
            kinds.push(spec.kind);
        }
        let numeric = |k: &ParamKind| matches!(k, ParamKind::Integer | ParamKind::Float);
        let arity = |n: usize| -> Result<(), ValidityError> {
            if rd.subjects.len() == n {
                Ok(())
            } else {
                Err(malformed(&format!("takes exactly {n} subject(s)")))
            }
        };

        let predicate = match rd.kind.as_str() {
            "range" => {
                arity(1)?;
                if !numeric(&kinds[0]) {
                    return Err(malformed("range applies to numeric parameters"));
                }
                let min = rd.min.as_ref().map(|m| m.resolve(&doc.externals)).transpose()?;
                let max = rd.max.as_ref().map(|m| m.resolve(&doc.externals)).transpose()?;
                if min.is_none() && max.is_none() {
                    return Err(malformed("range needs min or max"));
                }
                RulePredicate::Range { min, max }
            }
            "multiple_of" => {
                arity(1)?;
                if kinds[0] != ParamKind::Integer {
                    return Err(malformed("multiple_of applies to integer parameters"));
                }
                let m = rd
                    .modulus
                    .as_ref()
                    .ok_or_else(|| malformed("multiple_of needs modulus"))?
                    .resolve(&doc.externals)?;
                if m <= 0.0 || m.fract() != 0.0 {
                    return Err(malformed("modulus must be a positive integer"));
                }
                RulePredicate::MultipleOf { modulus: m as i64 }
            }
            "enum_member" => {
                arity(1)?;
                let allowed = rd.allowed.ok_or_else(|| malformed("enum_member needs allowed"))?;
                if allowed.is_empty() {
                    return Err(malformed("allowed list is empty"));
                }
                RulePredicate::EnumMember {
                    allowed: allowed.into_iter().map(|v| v.canonicalize(kinds[0])).collect(),
                }
            }
            "linear_inequality" => {
                if !kinds.iter().all(numeric) {
                    return Err(malformed("linear_inequality applies to numeric parameters"));
                }
                let coeffs = rd
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| malformed("linear_inequality needs coeffs"))?
                    .iter()
                    .map(|c| c.resolve(&doc.externals))
                    .collect::<Result<Vec<_>, _>>()?;
                if coeffs.len() != rd.subjects.len() {
                    return Err(malformed("one coefficient per subject"));
                }
                let bound = rd
                    .bound
                    .as_ref()
                    .ok_or_else(|| malformed("linear_inequality needs bound"))?
                    .resolve(&doc.externals)?;
                RulePredicate::LinearInequality { coeffs, bound }
            }
            "ratio_bound" => {
                arity(2)?;
                if !kinds.iter().all(numeric) {
                    return Err(malformed("ratio_bound applies to numeric parameters"));
                }
                let factor = rd
                    .factor
                    .as_ref()
                    .ok_or_else(|| malformed("ratio_bound needs factor"))?
                    .resolve(&doc.externals)?;
                RulePredicate::RatioBound { factor }
            }
            "requires" => {
                arity(2)?;
                let when = rd
                    .when
                    .ok_or_else(|| malformed("requires needs when"))?
                    .canonicalize(kinds[0]);
                let one_of = rd
                    .one_of
                    .ok_or_else(|| malformed("requires needs one_of"))?
                    .into_iter()
                    .map(|v| v.canonicalize(kinds[1]))
                    .collect::<Vec<_>>();
                if one_of.is_empty() {
                    return Err(malformed("one_of list is empty"));
                }
                RulePredicate::Requires { when, one_of }
            }
            other => return Err(malformed(&format!("unknown rule kind `{other}`"))),
        };

        rules.push(ConstraintRule {
            id,
            subjects: rd.subjects,
            message: rd.message.unwrap_or_default(),
            predicate,
        });
    }

    Ok(RuleSet { space: space.name().to_string(), rules, fallbacks })
}
