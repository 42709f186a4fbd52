//! Configuration rendering for handoff to the system under test.
//!
//! Three modes: environment variables, a Java-style properties file, and a
//! flat JSON object. Each mode has a parser so a rendered configuration can
//! be read back; on a given space, parse(render(c)) returns c exactly.

use crate::executor::ExecutorError;
use crate::space::{Configuration, ConfigurationSpace};
use crate::value::{ParamKind, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Prefix for environment-variable rendering. Fixed; benchmark scripts key
/// off it.
pub const ENV_PREFIX: &str = "CONEX_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    Env,
    PropertiesFile,
    JsonFile,
}

impl std::str::FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "env" => Ok(RenderMode::Env),
            "properties" | "properties_file" => Ok(RenderMode::PropertiesFile),
            "json" | "json_file" => Ok(RenderMode::JsonFile),
            other => Err(format!("unknown render mode `{other}` (env, properties, json)")),
        }
    }
}

/// `dfs.blocksize` becomes `CONEX_DFS_BLOCKSIZE`: uppercase, with every
/// character that cannot appear in a variable name mapped to `_`.
pub fn env_var_name(param: &str) -> String {
    let mut out = String::with_capacity(ENV_PREFIX.len() + param.len());
    out.push_str(ENV_PREFIX);
    for c in param.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_uppercase());
        } else {
            out.push('_');
        }
    }
    out
}

/// Environment rendering. Errors when two parameter names collapse to the
/// same variable, since the mapping must stay reversible.
pub fn render_env(config: &Configuration) -> Result<BTreeMap<String, String>, ExecutorError> {
    let mut out = BTreeMap::new();
    for (name, value) in &config.values {
        let var = env_var_name(name);
        if out.insert(var.clone(), value.to_string()).is_some() {
            return Err(ExecutorError::Render(format!(
                "parameters collide on environment variable {var}"
            )));
        }
    }
    Ok(out)
}

/// Sorted `name=value` lines, one per parameter, trailing newline.
pub fn render_properties(config: &Configuration) -> String {
    let mut out = String::new();
    for (name, value) in &config.values {
        out.push_str(name);
        out.push('=');
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out
}

/// Flat JSON object, keys sorted.
pub fn render_json(config: &Configuration) -> String {
    serde_json::to_string_pretty(&config.values).expect("value maps always serialize")
}

fn typed_value(space: &ConfigurationSpace, name: &str, raw: &str) -> Result<Value, ExecutorError> {
    let spec = space
        .get(name)
        .ok_or_else(|| ExecutorError::Render(format!("unknown parameter `{name}`")))?;
    let parsed = match spec.kind {
        ParamKind::Boolean => raw
            .parse::<bool>()
            .map(Value::Bool)
            .map_err(|_| ExecutorError::Render(format!("`{raw}` is not a boolean for {name}")))?,
        ParamKind::Integer => raw
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| ExecutorError::Render(format!("`{raw}` is not an integer for {name}")))?,
        ParamKind::Float => raw
            .parse::<f64>()
            .map(Value::Float)
            .map_err(|_| ExecutorError::Render(format!("`{raw}` is not a float for {name}")))?,
        ParamKind::Categorical | ParamKind::String => Value::Str(raw.to_string()),
    };
    Ok(parsed)
}

/// Reverses [`render_env`] against a known space: each relevant parameter's
/// variable is looked up by recomputing its name.
pub fn parse_env(
    vars: &BTreeMap<String, String>,
    space: &ConfigurationSpace,
) -> Result<Configuration, ExecutorError> {
    let mut assignments = BTreeMap::new();
    for p in space.relevant() {
        if let Some(raw) = vars.get(&env_var_name(&p.name)) {
            assignments.insert(p.name.clone(), typed_value(space, &p.name, raw)?);
        }
    }
    Ok(space.configuration_from_values(assignments)?)
}

/// Parses `name=value` lines; `#` comments and blank lines are skipped.
/// Values are typed by the parameter's kind; missing relevant parameters
/// fall back to their defaults.
pub fn parse_properties(
    text: &str,
    space: &ConfigurationSpace,
) -> Result<Configuration, ExecutorError> {
    let mut assignments = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, raw) = trimmed.split_once('=').ok_or_else(|| {
            ExecutorError::Render(format!("line {}: expected name=value", lineno + 1))
        })?;
        assignments.insert(name.to_string(), typed_value(space, name, raw)?);
    }
    Ok(space.configuration_from_values(assignments)?)
}

pub fn parse_json(text: &str, space: &ConfigurationSpace) -> Result<Configuration, ExecutorError> {
    let values: BTreeMap<String, Value> = serde_json::from_str(text)
        .map_err(|e| ExecutorError::Render(format!("not a flat JSON object: {e}")))?;
    Ok(space.configuration_from_values(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::space_from_toml;

    fn space() -> ConfigurationSpace {
        space_from_toml(
            r#"
name = "demo"

[[parameters]]
name = "dfs.blocksize"
kind = "integer"
default = 128
candidates = [64, 128, 256]

[[parameters]]
name = "merge.percent"
kind = "float"
default = 0.66
candidates = [0.594, 0.66, 0.726]

[[parameters]]
name = "ubertask.enable"
kind = "boolean"
default = false
candidates = [false, true]

[[parameters]]
name = "java.opts"
kind = "string"
default = "-Xmx1024m"
candidates = ["-Xmx1024m", "-Xmx2048m"]
"#,
        )
        .unwrap()
    }

    #[test]
    fn env_names_are_uppercased_with_dots_mapped() {
        assert_eq!(env_var_name("dfs.blocksize"), "CONEX_DFS_BLOCKSIZE");
        assert_eq!(env_var_name("a-b_c.d"), "CONEX_A_B_C_D");
    }

    #[test]
    fn env_round_trip() {
        let s = space();
        let cfg = s.default_configuration();
        let vars = render_env(&cfg).unwrap();
        assert_eq!(vars.get("CONEX_JAVA_OPTS").map(String::as_str), Some("-Xmx1024m"));
        assert_eq!(parse_env(&vars, &s).unwrap(), cfg);
    }

    #[test]
    fn properties_round_trip_and_ordering() {
        let s = space();
        let cfg = s
            .configuration_from_values(
                [
                    ("dfs.blocksize".to_string(), Value::Int(256)),
                    ("merge.percent".to_string(), Value::Float(0.594)),
                    ("ubertask.enable".to_string(), Value::Bool(true)),
                ]
                .into(),
            )
            .unwrap();
        let text = render_properties(&cfg);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            vec![
                "dfs.blocksize=256",
                "java.opts=-Xmx1024m",
                "merge.percent=0.594",
                "ubertask.enable=true",
            ]
        );
        assert_eq!(parse_properties(&text, &s).unwrap(), cfg);
    }

    #[test]
    fn json_round_trip() {
        let s = space();
        let cfg = s.default_configuration();
        let text = render_json(&cfg);
        assert_eq!(parse_json(&text, &s).unwrap(), cfg);
    }

    #[test]
    fn unknown_property_is_rejected() {
        let s = space();
        let err = parse_properties("nope=1\n", &s).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
