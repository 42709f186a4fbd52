//! Workload similarity from call traces.
//!
//! A trace is a text file with one call per line, `name(arg, arg, ...)`,
//! where each argument is a number, a quoted string, or a boolean. Two
//! workloads are compared through a four-part signature:
//!
//! 1. the call sequence, compared by 3-gram multiset overlap;
//! 2. per call name, the set of string arguments ever passed;
//! 3. per call name, the frequency distribution over those strings;
//! 4. per (call name, argument position), the mean of numeric arguments.
//!
//! Booleans contribute to none of the four parts. The overall score is the
//! mean of the four part scores, and two workloads count as similar only
//! when it exceeds [`SIMILARITY_THRESHOLD`] strictly. Tuning results are
//! considered portable between similar workloads; dissimilar ones warrant a
//! fresh run.

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Overall scores above this count as "similar".
pub const SIMILARITY_THRESHOLD: f64 = 0.77;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Num(f64),
    Term(String),
    Bool(bool),
}

/// Signature of one workload trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadSignature {
    sequence: Vec<String>,
    term_sets: BTreeMap<String, BTreeSet<String>>,
    term_frequencies: BTreeMap<String, BTreeMap<String, f64>>,
    numeric_means: BTreeMap<String, BTreeMap<usize, f64>>,
}

impl WorkloadSignature {
    pub fn sequence(&self) -> &[String] {
        &self.sequence
    }

    pub fn terms(&self, call: &str) -> Option<&BTreeSet<String>> {
        self.term_sets.get(call)
    }

    pub fn term_frequency(&self, call: &str, term: &str) -> Option<f64> {
        self.term_frequencies.get(call)?.get(term).copied()
    }

    /// Mean numeric argument at 1-based `position`.
    pub fn numeric_mean(&self, call: &str, position: usize) -> Option<f64> {
        self.numeric_means.get(call)?.get(&position).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// Per-part and overall similarity scores, all in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityBreakdown {
    pub sequence: f64,
    pub term_sets: f64,
    pub term_frequencies: f64,
    pub numeric_args: f64,
    pub overall: f64,
}

impl SimilarityBreakdown {
    pub fn is_similar(&self) -> bool {
        self.overall > SIMILARITY_THRESHOLD
    }
}

pub fn load_signature(path: &Path) -> Result<WorkloadSignature, SimilarityError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SimilarityError::Io { path: path.to_path_buf(), source })?;
    signature_from_trace(&text)
}

pub fn signature_from_trace(text: &str) -> Result<WorkloadSignature, SimilarityError> {
    let mut sequence = Vec::new();
    let mut term_counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut numeric_sums: BTreeMap<String, BTreeMap<usize, (f64, u64)>> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, args) = parse_call(line).map_err(|reason| SimilarityError::Parse {
            line: idx + 1,
            reason,
        })?;
        sequence.push(name.clone());
        for (pos, arg) in args.into_iter().enumerate() {
            match arg {
                Arg::Term(t) => {
                    *term_counts.entry(name.clone()).or_default().entry(t).or_insert(0) += 1;
                }
                Arg::Num(v) => {
                    let slot = numeric_sums
                        .entry(name.clone())
                        .or_default()
                        .entry(pos + 1)
                        .or_insert((0.0, 0));
                    slot.0 += v;
                    slot.1 += 1;
                }
                Arg::Bool(_) => {}
            }
        }
    }

    let term_sets = term_counts
        .iter()
        .map(|(call, counts)| (call.clone(), counts.keys().cloned().collect()))
        .collect();
    let term_frequencies = term_counts
        .into_iter()
        .map(|(call, counts)| {
            let total: u64 = counts.values().sum();
            let freqs = counts
                .into_iter()
                .map(|(term, n)| (term, n as f64 / total as f64))
                .collect();
            (call, freqs)
        })
        .collect();
    let numeric_means = numeric_sums
        .into_iter()
        .map(|(call, positions)| {
            let means = positions
                .into_iter()
                .map(|(pos, (sum, n))| (pos, sum / n as f64))
                .collect();
            (call, means)
        })
        .collect();

    Ok(WorkloadSignature { sequence, term_sets, term_frequencies, numeric_means })
}

fn parse_call(line: &str) -> Result<(String, Vec<Arg>), String> {
    let open = line.find('(').ok_or("expected `name(args)`")?;
    if !line.ends_with(')') {
        return Err("missing closing parenthesis".into());
    }
    let name = line[..open].trim();
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    {
        return Err(format!("bad call name `{name}`"));
    }
    let body = &line[open + 1..line.len() - 1];
    let mut args = Vec::new();
    for piece in split_args(body)? {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err("empty argument".into());
        }
        args.push(parse_arg(piece)?);
    }
    Ok((name.to_string(), args))
}

/// Splits on commas that are not inside quotes.
fn split_args(body: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in body.char_indices() {
        match (quote, c) {
            (Some(q), _) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"') | (None, '\'') => quote = Some(c),
            (None, ',') => {
                out.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if quote.is_some() {
        return Err("unterminated quote".into());
    }
    // `foo()` has no arguments; a trailing comma pushes an empty tail that
    // fails later with a clear message.
    let tail = &body[start..];
    if !tail.trim().is_empty() || !out.is_empty() {
        out.push(tail);
    }
    Ok(out)
}

fn parse_arg(piece: &str) -> Result<Arg, String> {
    if (piece.starts_with('"') && piece.ends_with('"') && piece.len() >= 2)
        || (piece.starts_with('\'') && piece.ends_with('\'') && piece.len() >= 2)
    {
        return Ok(Arg::Term(piece[1..piece.len() - 1].to_string()));
    }
    match piece {
        "true" | "True" => return Ok(Arg::Bool(true)),
        "false" | "False" => return Ok(Arg::Bool(false)),
        _ => {}
    }
    piece
        .parse::<f64>()
        .map(Arg::Num)
        .map_err(|_| format!("cannot parse argument `{piece}`"))
}

/// Multiset Jaccard over the 3-grams of the call sequences. Two traces too
/// short to have any 3-grams compare as identical.
fn sequence_similarity(a: &[String], b: &[String]) -> f64 {
    let grams_a = trigram_counts(a);
    let grams_b = trigram_counts(b);
    if grams_a.is_empty() && grams_b.is_empty() {
        return 1.0;
    }
    let keys: BTreeSet<&(String, String, String)> = grams_a.keys().chain(grams_b.keys()).collect();
    let mut inter = 0u64;
    let mut union = 0u64;
    for k in keys {
        let x = grams_a.get(k).copied().unwrap_or(0);
        let y = grams_b.get(k).copied().unwrap_or(0);
        inter += x.min(y);
        union += x.max(y);
    }
    inter as f64 / union as f64
}

fn trigram_counts(seq: &[String]) -> HashMap<(String, String, String), u64> {
    let mut out = HashMap::new();
    for w in seq.windows(3) {
        *out.entry((w[0].clone(), w[1].clone(), w[2].clone())).or_insert(0) += 1;
    }
    out
}

fn set_jaccard(a: Option<&BTreeSet<String>>, b: Option<&BTreeSet<String>>) -> f64 {
    let empty = BTreeSet::new();
    let a = a.unwrap_or(&empty);
    let b = b.unwrap_or(&empty);
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Mean over every call name either side knows. A call name only one side
/// uses scores zero for that side of the mean.
fn term_set_similarity(a: &WorkloadSignature, b: &WorkloadSignature) -> f64 {
    let calls: BTreeSet<&String> = a.term_sets.keys().chain(b.term_sets.keys()).collect();
    if calls.is_empty() {
        return 1.0;
    }
    let total: f64 = calls
        .iter()
        .map(|c| set_jaccard(a.term_sets.get(*c), b.term_sets.get(*c)))
        .sum();
    total / calls.len() as f64
}

/// Per call name, one minus the mean absolute difference of term
/// frequencies over the union of terms; missing distributions count as all
/// zeros. Averaged over the union of call names.
fn term_frequency_similarity(a: &WorkloadSignature, b: &WorkloadSignature) -> f64 {
    let calls: BTreeSet<&String> =
        a.term_frequencies.keys().chain(b.term_frequencies.keys()).collect();
    if calls.is_empty() {
        return 1.0;
    }
    let empty = BTreeMap::new();
    let mut total = 0.0;
    for call in &calls {
        let fa = a.term_frequencies.get(*call).unwrap_or(&empty);
        let fb = b.term_frequencies.get(*call).unwrap_or(&empty);
        let terms: BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
        let diff: f64 = terms
            .iter()
            .map(|t| {
                let x = fa.get(*t).copied().unwrap_or(0.0);
                let y = fb.get(*t).copied().unwrap_or(0.0);
                (x - y).abs()
            })
            .sum();
        total += 1.0 - diff / terms.len().max(1) as f64;
    }
    total / calls.len() as f64
}

/// Relative closeness of mean numeric arguments, per (call, position) key.
/// Keys present on one side only score zero; equal means (including both
/// zero) score one.
fn numeric_similarity(a: &WorkloadSignature, b: &WorkloadSignature) -> f64 {
    let mut keys: BTreeSet<(&String, usize)> = BTreeSet::new();
    for (call, positions) in a.numeric_means.iter().chain(b.numeric_means.iter()) {
        for &pos in positions.keys() {
            keys.insert((call, pos));
        }
    }
    if keys.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for (call, pos) in &keys {
        let x = a.numeric_means.get(*call).and_then(|m| m.get(pos));
        let y = b.numeric_means.get(*call).and_then(|m| m.get(pos));
        total += match (x, y) {
            (Some(&x), Some(&y)) => {
                let scale = x.abs().max(y.abs());
                if scale == 0.0 {
                    1.0
                } else {
                    (1.0 - (x - y).abs() / scale).max(0.0)
                }
            }
            _ => 0.0,
        };
    }
    total / keys.len() as f64
}

/// Compares two signatures part by part. Symmetric in its arguments.
pub fn compare(a: &WorkloadSignature, b: &WorkloadSignature) -> SimilarityBreakdown {
    let sequence = sequence_similarity(&a.sequence, &b.sequence);
    let term_sets = term_set_similarity(a, b);
    let term_frequencies = term_frequency_similarity(a, b);
    let numeric_args = numeric_similarity(a, b);
    let overall =
        ((sequence + term_sets + term_frequencies + numeric_args) / 4.0).clamp(0.0, 1.0);
    SimilarityBreakdown { sequence, term_sets, term_frequencies, numeric_args, overall }
}
